// Deterministic inference over a pinned snapshot: fill-mask scoring,
// word embeddings with sub-word piece pooling, and lexicon POS tagging.
// No dropout, no sampling; identical requests always produce identical
// responses.

import { Snapshot, UNK } from "./snapshot.js";

export const MASK = "[MASK]";

// softmax temperature for mask filling; below 1 it sharpens
const TEMPERATURE = 0.125;

export class RequestError extends Error {
  status: number;
  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

export const splitWords = (text: string): string[] =>
  text.split(/\s+/).filter((w) => w.length > 0);

// surface punctuation is not part of any vocab entry
const stripPunct = (word: string): string =>
  word.replace(/^[^\p{L}\p{N}#[]+|[^\p{L}\p{N}\]]+$/gu, "");

export const normalizeWord = (snap: Snapshot, word: string): string => {
  const bare = stripPunct(word);
  return snap.cased ? bare : bare.toLowerCase();
};

export function checkBudget(snap: Snapshot, text: string): void {
  const n = splitWords(text).length;
  if (n > snap.input_budget) {
    throw new RequestError(
      400,
      `text has ${n} words, over the ${snap.input_budget}-word budget`,
    );
  }
}

const dot = (u: number[], v: number[]): number => {
  let s = 0;
  for (let i = 0; i < u.length; i++) s += u[i] * v[i];
  return s;
};

const mean = (rows: number[][]): number[] => {
  const out = new Array<number>(rows[0].length).fill(0);
  for (const r of rows) for (let i = 0; i < r.length; i++) out[i] += r[i];
  return out.map((x) => x / rows.length);
};

/** Greedy longest-match decomposition into vocab pieces, or null. */
export function pieces(snap: Snapshot, word: string): string[] | null {
  if (word.length === 0) return null;
  const out: string[] = [];
  let rest = word;
  let first = true;
  while (rest.length > 0) {
    let match: string | null = null;
    for (let end = rest.length; end > 0; end--) {
      const piece = first ? rest.slice(0, end) : "##" + rest.slice(0, end);
      if (piece in snap.vocab) {
        match = piece;
        rest = rest.slice(end);
        break;
      }
    }
    if (match === null) return null;
    out.push(match);
    first = false;
  }
  return out;
}

/** Context-free embedding: vocab hit, else mean of pieces, else null. */
export function tokenVector(snap: Snapshot, word: string): number[] | null {
  const w = normalizeWord(snap, word);
  if (w in snap.vocab) return snap.vocab[w];
  const parts = pieces(snap, w);
  if (parts === null) return null;
  return mean(parts.map((p) => snap.vocab[p]));
}

// the contextual route always answers; unknowns share the [UNK] vector
const contextVector = (snap: Snapshot, word: string): number[] =>
  tokenVector(snap, word) ?? snap.vocab[UNK];

export interface Embedded {
  tokens: string[];
  vectors: number[][];
}

export function embedText(snap: Snapshot, text: string): Embedded {
  checkBudget(snap, text);
  const tokens: string[] = [];
  const vectors: number[][] = [];
  for (const raw of splitWords(text)) {
    const surface = stripPunct(raw);
    if (surface.length === 0) continue;
    tokens.push(surface);
    vectors.push(contextVector(snap, surface));
  }
  if (tokens.length === 0) {
    throw new RequestError(400, "text contains no words");
  }
  return { tokens, vectors };
}

export interface Prediction {
  token: string;
  score: number;
}

/**
 * Top-k fill-mask predictions.
 *
 * The prompt context (every word except the mask) is mean-pooled and
 * scored against each candidate; scores are softmax-normalized over the
 * full candidate vocabulary, so they are probabilities and any k-prefix
 * sums to at most 1. Wrapper tokens around the prompt are this side's
 * concern and carry no weight in the miniature model.
 */
export function maskTopk(snap: Snapshot, text: string, k: number): Prediction[] {
  const masks = text.match(/\[MASK\]/g) ?? [];
  if (masks.length !== 1) {
    throw new RequestError(
      400,
      `text must contain exactly one ${MASK} placeholder, found ${masks.length}`,
    );
  }
  checkBudget(snap, text);
  if (k > snap.candidates.length) {
    throw new RequestError(
      400,
      `k=${k} exceeds the ${snap.candidates.length}-word candidate vocabulary`,
    );
  }
  const context = splitWords(text)
    .map((w) => stripPunct(w))
    .filter((w) => w.length > 0 && w !== MASK)
    .map((w) => contextVector(snap, w));
  if (context.length === 0) {
    throw new RequestError(400, "no context words around the mask");
  }
  const ctx = mean(context);
  // mean pooling shrinks dot products well below logit scale; the
  // inverse temperature restores a usefully peaked distribution
  const scores = snap.candidates.map((c) => dot(snap.vocab[c], ctx) / TEMPERATURE);
  const m = Math.max(...scores);
  const exp = scores.map((s) => Math.exp(s - m));
  const z = exp.reduce((a, b) => a + b, 0);
  const ranked = snap.candidates
    .map((token, i) => ({ token, score: exp[i] / z }))
    .sort((a, b) => b.score - a.score || a.token.localeCompare(b.token));
  return ranked.slice(0, k);
}

export interface TaggedToken {
  token: string;
  pos: string;
}

const NOUN_SUFFIXES = ["tion", "ment", "ness", "ity", "ism", "ogy", "ics"];

export function posTags(snap: Snapshot, text: string): TaggedToken[] {
  if (text.trim().length === 0) {
    throw new RequestError(400, "cannot tag empty text");
  }
  const out: TaggedToken[] = [];
  for (const raw of splitWords(text)) {
    const surface = stripPunct(raw);
    if (surface.length === 0) continue;
    out.push({ token: surface, pos: tagOf(snap, surface) });
  }
  return out;
}

function tagOf(snap: Snapshot, surface: string): string {
  const lower = surface.toLowerCase();
  const fromLexicon = snap.lexicon[lower];
  if (fromLexicon !== undefined) return fromLexicon;
  if (/^\p{Lu}/u.test(surface)) return "NNP";
  if (NOUN_SUFFIXES.some((s) => lower.endsWith(s))) return "NN";
  if (lower.endsWith("s") && snap.lexicon[lower.slice(0, -1)] === "NN") {
    return "NNS";
  }
  return "XX";
}
