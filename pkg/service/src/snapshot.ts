import { readFileSync } from "node:fs";
import { z } from "zod";

const snapshotSchema = z.object({
  model: z.string().min(1),
  cased: z.boolean(),
  dim: z.number().int().positive(),
  layer: z.string().min(1),
  input_budget: z.number().int().positive(),
  noun_tags: z.array(z.string()).nonempty(),
  vocab: z.record(z.string(), z.array(z.number())),
  candidates: z.array(z.string()).nonempty(),
  lexicon: z.record(z.string(), z.string()),
});

export type Snapshot = z.infer<typeof snapshotSchema>;

export const UNK = "[UNK]";

/** Load and validate a model snapshot; throws on any inconsistency. */
export function loadSnapshot(path: string): Snapshot {
  const snap = snapshotSchema.parse(JSON.parse(readFileSync(path, "utf-8")));
  for (const [word, vec] of Object.entries(snap.vocab)) {
    if (vec.length !== snap.dim) {
      throw new Error(
        `snapshot ${path}: vocab entry "${word}" has length ${vec.length}, dim is ${snap.dim}`,
      );
    }
  }
  for (const c of snap.candidates) {
    if (!(c in snap.vocab)) {
      throw new Error(`snapshot ${path}: candidate "${c}" missing from vocab`);
    }
  }
  if (!(UNK in snap.vocab)) {
    throw new Error(`snapshot ${path}: vocab must contain the ${UNK} entry`);
  }
  return snap;
}
