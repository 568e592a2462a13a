/** Pure projections from server payloads into view models.
 *
 * The client never derives graph content on its own: nodes, edges and
 * annotations are all computed from the last session payload, so the views
 * stay an exact mirror of the server state.
 */

import type {
  LiteralPayload,
  MentionPayload,
  ObjectPayload,
  RefPayload,
  SessionPayload,
  TriplePayload,
} from "./types.js";
import { isLiteralObject } from "./types.js";

export interface GraphNode {
  key: string;
  label: string;
  description: string;
  /** "entity" for IRI or blank nodes, "literal" for literal values. */
  kind: "entity" | "literal";
  iri: string | null;
  blank: string | null;
  literal: LiteralPayload | null;
}

export interface GraphEdge {
  key: string;
  sourceKey: string;
  targetKey: string;
  label: string;
  description: string;
  propertyIri: string;
  triple: TriplePayload;
}

export interface Annotation {
  mention: MentionPayload;
  span: [number, number];
  /** Key of the graph node this mention resolves to, if it is in the graph. */
  nodeKey: string | null;
  badge: "linked" | "literal" | "unlinked";
}

export function refKey(ref: RefPayload): string {
  if (ref.iri) return `iri:${ref.iri}`;
  return `blank:${ref.blank ?? ""}`;
}

export function literalKey(literal: LiteralPayload): string {
  return `lit:${literal.lexical}|${literal.datatype}`;
}

export function objectKey(obj: ObjectPayload): string {
  return isLiteralObject(obj) ? literalKey(obj.literal) : refKey(obj);
}

export function tripleKey(triple: TriplePayload): string {
  const predicate = triple.predicate.iri ?? triple.predicate.label;
  return `${refKey(triple.subject)} ${predicate} ${objectKey(triple.object)}`;
}

/** The wire form delete-relation expects for a subject or object term. */
export function refWireId(ref: RefPayload): string {
  if (ref.iri) return ref.iri;
  return `_:${ref.blank ?? ""}`;
}

function nodeFromRef(ref: RefPayload): GraphNode {
  return {
    key: refKey(ref),
    label: ref.label,
    description: ref.description,
    kind: "entity",
    iri: ref.iri ?? null,
    blank: ref.blank ?? null,
    literal: null,
  };
}

function nodeFromLiteral(literal: LiteralPayload): GraphNode {
  return {
    key: literalKey(literal),
    label: literal.lexical,
    description: literal.datatype,
    kind: "literal",
    iri: null,
    blank: null,
    literal,
  };
}

/** Node set of the current graph: exactly the entities and literals that
 * occur in its triples. */
export function projectNodes(session: SessionPayload): GraphNode[] {
  const nodes = new Map<string, GraphNode>();
  for (const triple of session.graph.triples) {
    const subject = nodeFromRef(triple.subject);
    if (!nodes.has(subject.key)) nodes.set(subject.key, subject);
    const object = isLiteralObject(triple.object)
      ? nodeFromLiteral(triple.object.literal)
      : nodeFromRef(triple.object);
    if (!nodes.has(object.key)) nodes.set(object.key, object);
  }
  return [...nodes.values()];
}

export function projectEdges(session: SessionPayload): GraphEdge[] {
  return session.graph.triples.map((triple) => ({
    key: tripleKey(triple),
    sourceKey: refKey(triple.subject),
    targetKey: objectKey(triple.object),
    label: triple.predicate.label,
    description: triple.predicate.description,
    propertyIri: triple.predicate.iri ?? "",
    triple,
  }));
}

function sameSpan(a: [number, number], b: [number, number]): boolean {
  return a[0] === b[0] && a[1] === b[1];
}

/** Blank-node label for an unlinked mention, recovered from the triples that
 * carry the mention's span. */
function blankFor(
  session: SessionPayload,
  span: [number, number],
): string | null {
  for (const triple of session.graph.triples) {
    const subject = triple.subject;
    if (subject.blank && subject.span && sameSpan(subject.span, span)) {
      return subject.blank;
    }
    const obj = triple.object;
    if (!isLiteralObject(obj) && obj.blank && obj.span &&
        sameSpan(obj.span, span)) {
      return obj.blank;
    }
  }
  return null;
}

function mentionNodeKey(
  session: SessionPayload,
  mention: MentionPayload,
  nodeKeys: Set<string>,
): string | null {
  let key: string | null = null;
  if (mention.kind === "linked") {
    const selected = mention.candidates[mention.selected];
    if (selected) key = `iri:${selected.iri}`;
  } else if (mention.kind === "literal" && mention.literal) {
    key = literalKey(mention.literal);
  } else if (mention.kind === "unlinked") {
    const blank = blankFor(session, [mention.start, mention.end]);
    if (blank !== null) key = `blank:${blank}`;
  }
  return key !== null && nodeKeys.has(key) ? key : null;
}

/** One annotation per mention in the payload, in text order. */
export function projectAnnotations(session: SessionPayload): Annotation[] {
  const nodeKeys = new Set(projectNodes(session).map((n) => n.key));
  return session.mentions.map((mention) => ({
    mention,
    span: [mention.start, mention.end],
    nodeKey: mentionNodeKey(session, mention, nodeKeys),
    badge: mention.kind,
  }));
}

/** All text occurrences of a node: the spans of the mentions resolving to it. */
export function annotationsOf(
  session: SessionPayload,
  nodeKey: string,
): Annotation[] {
  return projectAnnotations(session).filter((a) => a.nodeKey === nodeKey);
}
