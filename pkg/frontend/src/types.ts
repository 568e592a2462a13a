/** Wire types for the kgforge JSON API. */

export interface CandidatePayload {
  iri: string;
  label: string;
  description: string;
  relevance: number;
  score: number;
}

export interface LiteralPayload {
  kind: string;
  lexical: string;
  datatype: string;
}

export type MentionKind = "linked" | "literal" | "unlinked";

export interface MentionPayload {
  start: number;
  end: number;
  surface: string;
  etype: string;
  source: string;
  kind: MentionKind;
  selected: number;
  candidates: CandidatePayload[];
  literal: LiteralPayload | null;
}

/** Entity or property reference inside a triple. */
export interface RefPayload {
  label: string;
  description: string;
  iri?: string;
  blank?: string;
  span?: [number, number];
}

export type ObjectPayload = RefPayload | { literal: LiteralPayload };

export interface TriplePayload {
  subject: RefPayload;
  predicate: RefPayload;
  object: ObjectPayload;
  provenance: { subject: [number, number]; object: [number, number] } | null;
}

export interface SessionPayload {
  sessionId: string;
  revision: number;
  createdAt: string;
  updatedAt: string;
  text: string;
  mentions: MentionPayload[];
  graph: { triples: TriplePayload[] };
}

export interface SearchResponse {
  candidates: CandidatePayload[];
}

/** Edit actions accepted by PUT /api/graph/{id}. */
export type EditRequest =
  | {
      action: "relink-mention";
      revision: number;
      span: [number, number];
      iri: string | null;
      label?: string;
      description?: string;
    }
  | { action: "delete-entity"; revision: number; iri: string }
  | { action: "delete-entity"; revision: number; span: [number, number] }
  | {
      action: "delete-relation";
      revision: number;
      subject: string;
      predicate: string;
      object: string | { literal: LiteralPayload };
    }
  | {
      action: "add-entity";
      revision: number;
      span: [number, number];
      iri: string | null;
      label?: string;
      description?: string;
    }
  | {
      action: "add-relation";
      revision: number;
      subject_span: [number, number];
      object_span: [number, number];
      property: string;
      label?: string;
      description?: string;
    };

export function isLiteralObject(
  obj: ObjectPayload,
): obj is { literal: LiteralPayload } {
  return "literal" in obj;
}
