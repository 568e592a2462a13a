/** Session fixture mirroring a real construction payload from the API. */

import type { SessionPayload } from "../src/types.js";

export const FIXTURE_TEXT =
  "Weimar is a city in Germany. Bauhaus University was founded in 1860.";

export const WEIMAR = "http://www.wikidata.org/entity/Q1729";
export const CITY = "http://www.wikidata.org/entity/Q515";
export const GERMANY = "http://www.wikidata.org/entity/Q183";
export const GHOST_TOWN = "http://www.wikidata.org/entity/Q7936";
export const BAUHAUS = "http://www.wikidata.org/entity/Q573975";
export const UNIVERSITY = "http://www.wikidata.org/entity/Q3918";
export const COUNTRY = "http://www.wikidata.org/prop/direct/P17";
export const INCEPTION = "http://www.wikidata.org/prop/direct/P571";
export const LOCATED_IN = "http://www.wikidata.org/prop/direct/P131";

const XSD_DATE = "http://www.w3.org/2001/XMLSchema#date";

const BASE: SessionPayload = {
  sessionId: "f1e2d3c4b5a6978897a6b5c4d3e2f101",
  revision: 1,
  createdAt: "2026-08-17T00:00:00+00:00",
  updatedAt: "2026-08-17T00:00:00+00:00",
  text: FIXTURE_TEXT,
  mentions: [
    {
      start: 0,
      end: 6,
      surface: "Weimar",
      etype: "GPE",
      source: "gazetteer",
      kind: "linked",
      selected: 0,
      candidates: [
        {
          iri: WEIMAR,
          label: "Weimar",
          description: "city in Thuringia, Germany",
          relevance: 6.8805636082845405,
          score: 0.8169824462375661,
        },
      ],
      literal: null,
    },
    {
      start: 12,
      end: 16,
      surface: "city",
      etype: "CONCEPT",
      source: "concepts",
      kind: "linked",
      selected: 0,
      candidates: [
        {
          iri: CITY,
          label: "city",
          description: "large permanent human settlement",
          relevance: 6.8805636082845405,
          score: 0.4403855060505443,
        },
      ],
      literal: null,
    },
    {
      start: 20,
      end: 27,
      surface: "Germany",
      etype: "GPE",
      source: "gazetteer",
      kind: "linked",
      selected: 0,
      candidates: [
        {
          iri: GERMANY,
          label: "Germany",
          description: "country in Central Europe",
          relevance: 5.252967482906003,
          score: 0.49074772881118195,
        },
        {
          iri: GHOST_TOWN,
          label: "Germany",
          description: "ghost town in Pennsylvania",
          relevance: 5.252967482906003,
          score: 0.3801772990081341,
        },
      ],
      literal: null,
    },
    {
      start: 29,
      end: 47,
      surface: "Bauhaus University",
      etype: "ORG",
      source: "gazetteer",
      kind: "linked",
      selected: 0,
      candidates: [
        {
          iri: BAUHAUS,
          label: "Bauhaus University",
          description: "public art and design university in Weimar, Germany",
          relevance: 8.841015116696628,
          score: 0.4418727010251683,
        },
        {
          iri: UNIVERSITY,
          label: "university",
          description: "institution of tertiary education and research",
          relevance: 5.252967482906003,
          score: 0.1881405511973194,
        },
      ],
      literal: null,
    },
    {
      start: 63,
      end: 67,
      surface: "1860",
      etype: "DATE",
      source: "gazetteer",
      kind: "literal",
      selected: 0,
      candidates: [],
      literal: { kind: "temporal", lexical: "1860", datatype: XSD_DATE },
    },
  ],
  graph: {
    triples: [
      {
        subject: {
          label: "Weimar",
          description: "city in Thuringia, Germany",
          iri: WEIMAR,
        },
        predicate: {
          label: "country",
          description: "sovereign state that this item is in",
          iri: COUNTRY,
        },
        object: {
          label: "Germany",
          description: "country in Central Europe",
          iri: GERMANY,
        },
        provenance: { subject: [0, 6], object: [20, 27] },
      },
      {
        subject: {
          label: "Bauhaus University",
          description: "public art and design university in Weimar, Germany",
          iri: BAUHAUS,
        },
        predicate: {
          label: "inception",
          description: "time when an entity begins to exist",
          iri: INCEPTION,
        },
        object: {
          literal: { kind: "temporal", lexical: "1860", datatype: XSD_DATE },
        },
        provenance: { subject: [29, 47], object: [63, 67] },
      },
    ],
  },
};

export function fixturePayload(): SessionPayload {
  return structuredClone(BASE);
}

/** Canned knowledge-base search results served by the mock API. */
export const ENTITY_SEARCH: Record<
  string,
  Array<{ iri: string; label: string; description: string }>
> = {
  berlin: [
    {
      iri: "http://www.wikidata.org/entity/Q64",
      label: "Berlin",
      description: "capital of Germany",
    },
  ],
  thuringia: [
    {
      iri: "http://www.wikidata.org/entity/Q1205",
      label: "Thuringia",
      description: "state in central Germany",
    },
  ],
  crowded: Array.from({ length: 25 }, (_, i) => ({
    iri: `http://www.wikidata.org/entity/Q90${String(i).padStart(2, "0")}`,
    label: `Crowded ${i}`,
    description: "one of many near-duplicates",
  })),
};

export const PROPERTY_SEARCH: Record<
  string,
  Array<{ iri: string; label: string; description: string }>
> = {
  "located in": [
    {
      iri: LOCATED_IN,
      label: "located in the administrative territorial entity",
      description: "the item is located on the territory of this entity",
    },
  ],
  country: [
    {
      iri: COUNTRY,
      label: "country",
      description: "sovereign state that this item is in",
    },
  ],
};
