// Builds the pinned model snapshot served by this sidecar.
//
// The snapshot is a miniature distributional model: every topical word
// gets a unit vector near its topic center, and each fill-mask
// candidate is additionally pulled toward the words it co-occurs with
// in a small pinned association list, the way contrastive training
// shapes real embeddings. The script verifies the reference behaviors
// (fill-mask golden document, POS nouns, piece pooling) against the
// actual scoring code before writing anything, then writes
// model/snapshot.json. Rerunning writes byte-identical output.

import { writeFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { maskTopk, posTags, pieces, tokenVector } from "../src/model.js";
import { Snapshot, UNK } from "../src/snapshot.js";

const DIM = 16;
const SEED = 1;
const PARTNER_WEIGHT = 1.2;

// topic-head words sit close to their topic centroid; specific
// entities scatter further out, like frequency effects in real
// distributional spaces
const NOISE = 0.35;
const NOISE_OVERRIDES: Record<string, number> = {
  tennis: 0.1,
  market: 0.1,
  technology: 0.1,
  health: 0.1,
  government: 0.1,
};

// per-word association strength for words whose identity is almost
// entirely their company, tournament names above all
const PARTNER_WEIGHTS: Record<string, number> = {
  wimbledon: 2.0,
};

// --- deterministic PRNG ----------------------------------------------------

const fnv1a = (s: string): number => {
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
};

const mulberry32 = (seed: number) => () => {
  seed = (seed + 0x6d2b79f5) | 0;
  let t = Math.imul(seed ^ (seed >>> 15), 1 | seed);
  t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
  return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
};

const randVec = (tag: string): number[] => {
  const next = mulberry32(fnv1a(`${SEED}:${tag}`));
  // Box-Muller, two uniforms per normal draw
  const out: number[] = [];
  while (out.length < DIM) {
    const u = Math.max(next(), 1e-12);
    const v = next();
    out.push(Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v));
  }
  return out;
};

const scale = (v: number[], a: number) => v.map((x) => x * a);
const add = (u: number[], v: number[]) => u.map((x, i) => x + v[i]);
const unit = (v: number[]) => {
  const n = Math.sqrt(v.reduce((s, x) => s + x * x, 0));
  return v.map((x) => x / n);
};
const meanOf = (rows: number[][]) =>
  unit(rows.reduce((acc, r) => add(acc, r), new Array(DIM).fill(0)));

// --- the pinned vocabulary -------------------------------------------------

const TOPICS: Record<string, string[]> = {
  sports: [
    "tennis", "wimbledon", "federer", "roddick", "thailand", "seeds",
    "players", "semifinals", "open", "match", "championship", "tournament",
    "soccer", "basketball", "baseball", "olympics", "cup", "goal",
    "racket", "court", "game", "play",
  ],
  business: [
    "market", "stocks", "economy", "shares", "profit", "trade",
    "company", "bank", "investors", "earnings", "oil", "prices",
    "dollar", "deal", "merger", "sales",
  ],
  technology: [
    "circuits", "computers", "electronics", "computing", "graphs",
    "software", "internet", "research", "science", "technology",
    "chips", "data", "robots", "space", "physics", "energy",
  ],
  health: [
    "suicide", "genetics", "cancer", "hiv", "health", "disease",
    "doctors", "patients", "drug", "vaccine", "virus", "hospital",
    "medicine", "genes", "therapy", "suicides",
  ],
  politics: [
    "government", "election", "war", "president", "minister", "police",
    "country", "treaty", "protest", "parliament", "senate", "diplomat",
    "border", "refugees", "peace", "congress",
  ],
};

// 16 fill-mask candidates per topic; clients overfetch up to 3x their
// keep rate, so the list must stay comfortably larger than typical k
const CANDIDATES: string[] = [
  ...TOPICS.sports.slice(0, 16),
  ...TOPICS.business,
  ...TOPICS.technology,
  ...TOPICS.health,
  ...TOPICS.politics,
];

// pinned co-occurrence partners; a candidate's vector is pulled toward
// its partners, which is what makes mask filling topical
const PARTNERS: Record<string, string[]> = {
  tennis: ["federer", "players", "semifinals", "open", "match"],
  wimbledon: ["federer", "players", "semifinals", "open"],
  thailand: ["open", "federer", "players"],
  seeds: ["players", "semifinals", "match"],
  federer: ["tennis", "wimbledon", "roddick"],
  roddick: ["federer", "semifinals"],
  players: ["tennis", "match", "game"],
  semifinals: ["tennis", "tournament", "championship"],
  open: ["tennis", "championship", "thailand"],
  match: ["tennis", "players"],
  soccer: ["cup", "goal"],
  basketball: ["court", "game"],
  baseball: ["game"],
  championship: ["tournament"],
  stocks: ["market", "shares", "investors"],
  economy: ["market", "trade", "prices"],
  earnings: ["profit", "company", "sales"],
  circuits: ["electronics", "computers"],
  computing: ["computers", "software", "chips"],
  graphs: ["data", "research"],
  genetics: ["genes", "research"],
  suicide: ["suicides", "health"],
  cancer: ["disease", "patients", "therapy"],
  election: ["government", "president", "parliament"],
  treaty: ["peace", "border"],
};

const COMMON_WORDS = [
  "the", "a", "an", "and", "of", "in", "at", "on", "to", "for", "with",
  "is", "are", "was", "were", "has", "have", "had", "it", "its", "s",
  "this", "that", "these", "those", "article", "talking", "about",
  "world", "top", "two", "reached", "friday", "roger", "andy", "most",
  "also", "books", "project", "abound", "electronic", "led", "indicators",
  "scientists", "discover", "genetic", "indicator", "could", "help",
  "prevent", "new", "report", "week", "group", "people", "today", "said",
];

const PIECES = ["##s", "##ing", "##ers", "##ground", "##er"];

const LEXICON: Record<string, string> = {
  // topical nouns
  tennis: "NN", wimbledon: "NNP", federer: "NNP", roddick: "NNP",
  thailand: "NNP", seeds: "NNS", players: "NNS", semifinals: "NNS",
  open: "NNP", match: "NN", championship: "NN", tournament: "NN",
  soccer: "NN", basketball: "NN", baseball: "NN", olympics: "NNPS",
  cup: "NN", goal: "NN", racket: "NN", court: "NN", game: "NN",
  play: "VB",
  market: "NN", stocks: "NNS", economy: "NN", shares: "NNS",
  profit: "NN", trade: "NN", company: "NN", bank: "NN",
  investors: "NNS", earnings: "NNS", oil: "NN", prices: "NNS",
  dollar: "NN", deal: "NN", merger: "NN", sales: "NNS",
  circuits: "NNS", computers: "NNS", electronics: "NNS",
  computing: "NN", graphs: "NNS", software: "NN", internet: "NN",
  research: "NN", science: "NN", technology: "NN", chips: "NNS",
  data: "NNS", robots: "NNS", space: "NN", physics: "NN", energy: "NN",
  suicide: "NN", suicides: "NNS", genetics: "NN", cancer: "NN",
  hiv: "NNP", health: "NN", disease: "NN", doctors: "NNS",
  patients: "NNS", drug: "NN", vaccine: "NN", virus: "NN",
  hospital: "NN", medicine: "NN", genes: "NNS", therapy: "NN",
  government: "NN", election: "NN", war: "NN", president: "NN",
  minister: "NN", police: "NN", country: "NN", treaty: "NN",
  protest: "NN", parliament: "NN", senate: "NNP", diplomat: "NN",
  border: "NN", refugees: "NNS", peace: "NN", congress: "NNP",
  // function and reference-sentence words
  the: "DT", a: "DT", an: "DT", and: "CC", of: "IN", in: "IN",
  at: "IN", on: "IN", to: "TO", for: "IN", with: "IN",
  is: "VBZ", are: "VBP", was: "VBD", were: "VBD", has: "VBZ",
  have: "VBP", had: "VBD", it: "PRP", its: "PRP$", s: "POS",
  this: "DT", that: "WDT", these: "DT", those: "DT",
  article: "NN", talking: "VBG", about: "IN",
  world: "NN", top: "JJ", two: "CD", reached: "VBD", friday: "NNP",
  roger: "NNP", andy: "NNP", most: "JJS", also: "RB", books: "NNS",
  project: "NN", abound: "VBP", electronic: "JJ", led: "NNP",
  indicators: "NNS", scientists: "NNS", discover: "VBP",
  genetic: "JJ", indicator: "NN", could: "MD", help: "VB",
  prevent: "VB", new: "JJ", report: "NN", week: "NN", group: "NN",
  people: "NNS", today: "NN", said: "VBD",
};

// --- assembly --------------------------------------------------------------

function buildVocab(): Record<string, number[]> {
  const base: Record<string, number[]> = {};
  for (const [topic, words] of Object.entries(TOPICS)) {
    const center = unit(randVec(`center:${topic}`));
    for (const w of words) {
      const spread = NOISE_OVERRIDES[w] ?? NOISE;
      base[w] = unit(add(center, scale(unit(randVec(`noise:${w}`)), spread)));
    }
  }
  const vocab: Record<string, number[]> = {};
  for (const [w, v] of Object.entries(base)) {
    const partners = PARTNERS[w];
    const weight = PARTNER_WEIGHTS[w] ?? PARTNER_WEIGHT;
    vocab[w] = partners
      ? unit(add(v, scale(meanOf(partners.map((p) => base[p])), weight)))
      : v;
  }
  for (const w of COMMON_WORDS) {
    vocab[w] = scale(unit(randVec(`common:${w}`)), 0.12);
  }
  for (const p of PIECES) {
    vocab[p] = scale(unit(randVec(`piece:${p}`)), 0.12);
  }
  vocab[UNK] = scale(unit(randVec("special:unk")), 0.05);
  const rounded: Record<string, number[]> = {};
  for (const w of Object.keys(vocab).sort()) {
    rounded[w] = vocab[w].map((x) => Number(x.toFixed(6)));
  }
  return rounded;
}

function verify(snap: Snapshot): void {
  const goldenPrompt =
    "The world 's top two players roger federer and andy roddick " +
    "reached the semifinals friday at the thailand open. " +
    "This article is talking about [MASK].";
  const top5 = maskTopk(snap, goldenPrompt, 5).map((p) => p.token);
  for (const want of ["tennis", "wimbledon"]) {
    if (!top5.includes(want)) {
      const ranked = maskTopk(snap, goldenPrompt, 12)
        .map((p) => `${p.token}=${p.score.toFixed(4)}`)
        .join(" ");
      throw new Error(`golden check failed: "${want}" not in top 5 (${ranked})`);
    }
  }
  console.log(`golden top-5: ${top5.join(", ")}`);

  const tags = posTags(snap, "Scientists discover a genetic indicator");
  for (const t of tags) {
    const noun = snap.noun_tags.includes(t.pos);
    if ((t.token === "Scientists" || t.token === "indicator") && !noun) {
      throw new Error(`POS check failed: ${t.token} tagged ${t.pos}`);
    }
  }

  if (pieces(snap, "playgrounds") === null) {
    throw new Error("piece check failed: playgrounds should decompose");
  }
  if (tokenVector(snap, "zzzqx") !== null) {
    throw new Error("piece check failed: zzzqx should be unknown");
  }
}

const snapshot: Snapshot = {
  model: "mini-topical-uncased-v1",
  cased: false,
  dim: DIM,
  layer: "avg_last4",
  input_budget: 128,
  noun_tags: ["NN", "NNS", "NNP", "NNPS"],
  vocab: buildVocab(),
  candidates: CANDIDATES,
  lexicon: LEXICON,
};

verify(snapshot);

const here = dirname(fileURLToPath(import.meta.url));
const out = join(here, "..", "..", "model", "snapshot.json");
writeFileSync(out, JSON.stringify(snapshot, null, 2) + "\n");
console.log(
  `wrote ${out}: ${Object.keys(snapshot.vocab).length} vocab entries, ` +
    `${snapshot.candidates.length} candidates`,
);
