import { readFileSync } from "node:fs";
import { Server } from "node:http";
import { AddressInfo } from "node:net";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { makeServer } from "../src/app.js";
import { loadSnapshot } from "../src/snapshot.js";

const here = dirname(fileURLToPath(import.meta.url));
const snap = loadSnapshot(join(here, "..", "model", "snapshot.json"));

// first reference document, wrapped in the cloze template the
// classifier sends
const FIRST_DOC =
  "The world 's top two players roger federer and andy roddick " +
  "reached the semifinals friday at the thailand open.";
const PROMPT = `${FIRST_DOC} This article is talking about [MASK].`;

let server: Server;
let base: string;

beforeAll(async () => {
  server = makeServer(snap);
  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  const { port } = server.address() as AddressInfo;
  base = `http://127.0.0.1:${port}`;
});

afterAll(() => {
  server.close();
});

async function post(path: string, body: unknown) {
  const res = await fetch(`${base}${path}`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  return { status: res.status, body: await res.json() };
}

describe("/v1/info", () => {
  it("describes the pinned snapshot", async () => {
    const res = await fetch(`${base}/v1/info`);
    expect(res.status).toBe(200);
    const info = await res.json();
    expect(info.model).toBe(snap.model);
    expect(info.cased).toBe(false);
    expect(info.dim).toBe(snap.dim);
    expect(info.layer).toBe(snap.layer);
    expect(info.input_budget).toBeGreaterThan(0);
    expect(info.noun_tags.length).toBeGreaterThan(0);
  });
});

describe("/v1/topk", () => {
  it.each([1, 3, 5, 20, snap.candidates.length])(
    "returns exactly k non-increasing predictions (k=%i)",
    async (k) => {
      const { status, body } = await post("/v1/topk", { text: PROMPT, k });
      expect(status).toBe(200);
      expect(body.predictions).toHaveLength(k);
      for (let i = 1; i < body.predictions.length; i++) {
        expect(body.predictions[i].score).toBeLessThanOrEqual(
          body.predictions[i - 1].score,
        );
      }
    },
  );

  it("normalizes scores over the full candidate vocabulary", async () => {
    const k = snap.candidates.length;
    const { body } = await post("/v1/topk", { text: PROMPT, k });
    const total = body.predictions.reduce(
      (s: number, p: { score: number }) => s + p.score,
      0,
    );
    expect(total).toBeCloseTo(1.0, 9);
    for (const p of body.predictions) {
      expect(p.score).toBeGreaterThan(0);
      expect(p.score).toBeLessThanOrEqual(1);
    }
  });

  it("matches the golden response for the first reference document", async () => {
    const started = performance.now();
    const golden = JSON.parse(
      readFileSync(join(here, "golden", "topk_first_doc.json"), "utf-8"),
    );
    const { status, body } = await post("/v1/topk", { text: PROMPT, k: 5 });
    expect(status).toBe(200);
    expect(body.predictions.map((p: { token: string }) => p.token)).toEqual(
      golden.predictions.map((p: { token: string }) => p.token),
    );
    body.predictions.forEach((p: { score: number }, i: number) => {
      expect(p.score).toBeCloseTo(golden.predictions[i].score, 12);
    });
    const tokens = body.predictions.map((p: { token: string }) => p.token);
    expect(tokens).toContain("tennis");
    expect(tokens).toContain("wimbledon");
    expect(performance.now() - started).toBeLessThan(120_000);
  });

  it("is deterministic across identical requests", async () => {
    const a = await post("/v1/topk", { text: PROMPT, k: 10 });
    const b = await post("/v1/topk", { text: PROMPT, k: 10 });
    expect(a.body).toEqual(b.body);
  });

  it("rejects text without a mask", async () => {
    const { status, body } = await post("/v1/topk", {
      text: "no placeholder anywhere here",
      k: 5,
    });
    expect(status).toBe(400);
    expect(body.error).toMatch(/exactly one \[MASK\]/);
  });

  it("rejects text with two masks", async () => {
    const { status } = await post("/v1/topk", {
      text: "first [MASK] then another [MASK] here",
      k: 5,
    });
    expect(status).toBe(400);
  });

  it("rejects a mask with no context words", async () => {
    const { status, body } = await post("/v1/topk", { text: "[MASK].", k: 5 });
    expect(status).toBe(400);
    expect(body.error).toMatch(/no context/);
  });

  it("rejects k=0, fractional k, and k beyond the vocabulary", async () => {
    for (const k of [0, 2.5, snap.candidates.length + 1]) {
      const { status } = await post("/v1/topk", { text: PROMPT, k });
      expect(status).toBe(400);
    }
  });

  it("rejects prompts over the word budget", async () => {
    const long = Array(snap.input_budget + 1).fill("word").join(" ");
    const { status, body } = await post("/v1/topk", {
      text: `${long} [MASK].`,
      k: 5,
    });
    expect(status).toBe(400);
    expect(body.error).toMatch(/budget/);
  });
});

describe("/v1/embed", () => {
  it("returns one vector of the advertised width per token", async () => {
    const { status, body } = await post("/v1/embed", { text: FIRST_DOC });
    expect(status).toBe(200);
    expect(body.vectors).toHaveLength(body.tokens.length);
    for (const v of body.vectors) {
      expect(v).toHaveLength(snap.dim);
    }
    expect(body.tokens).toContain("federer");
    expect(body.tokens).toContain("semifinals");
  });

  it("is deterministic", async () => {
    const a = await post("/v1/embed", { text: FIRST_DOC });
    const b = await post("/v1/embed", { text: FIRST_DOC });
    expect(a.body).toEqual(b.body);
  });

  it("agrees with the token route on a single-word text", async () => {
    const embed = await post("/v1/embed", { text: "tennis" });
    const token = await post("/v1/token_embed", { word: "tennis" });
    expect(embed.body.tokens).toEqual(["tennis"]);
    expect(embed.body.vectors[0]).toEqual(token.body.vector);
  });

  it("rejects text with no words", async () => {
    const { status } = await post("/v1/embed", { text: " ... " });
    expect(status).toBe(400);
  });
});

describe("/v1/token_embed", () => {
  it("serves vocabulary words directly", async () => {
    const { status, body } = await post("/v1/token_embed", { word: "tennis" });
    expect(status).toBe(200);
    expect(body.vector).toHaveLength(snap.dim);
    expect(body.vector).toEqual(snap.vocab["tennis"]);
  });

  it("pools piece vectors for decomposable words", async () => {
    const word = await post("/v1/token_embed", { word: "playgrounds" });
    expect(word.status).toBe(200);
    const parts = await post("/v1/pieces", { word: "playgrounds" });
    expect(parts.status).toBe(200);
    const n = parts.body.pieces.length;
    expect(n).toBeGreaterThan(1);
    for (let d = 0; d < snap.dim; d++) {
      const pooled =
        parts.body.pieces.reduce(
          (s: number, p: { vector: number[] }) => s + p.vector[d],
          0,
        ) / n;
      expect(word.body.vector[d]).toBeCloseTo(pooled, 12);
    }
  });

  it("404s on words outside the model", async () => {
    const { status, body } = await post("/v1/token_embed", { word: "zzzqx" });
    expect(status).toBe(404);
    expect(body.error).toContain("zzzqx");
  });

  it("rejects an empty word", async () => {
    const { status } = await post("/v1/token_embed", { word: "" });
    expect(status).toBe(400);
  });
});

describe("/v1/pos", () => {
  it("tags the reference sentence", async () => {
    const { status, body } = await post("/v1/pos", {
      text: "Scientists discover a genetic indicator that could help prevent suicides.",
    });
    expect(status).toBe(200);
    const tags = Object.fromEntries(
      body.tokens.map((t: { token: string; pos: string }) => [t.token, t.pos]),
    );
    expect(snap.noun_tags).toContain(tags["Scientists"]);
    expect(snap.noun_tags).toContain(tags["indicator"]);
    expect(snap.noun_tags).toContain(tags["suicides"]);
    expect(snap.noun_tags).not.toContain(tags["discover"]);
    expect(snap.noun_tags).not.toContain(tags["genetic"]);
    expect(snap.noun_tags).not.toContain(tags["could"]);
  });

  it("emits one tag per word", async () => {
    const { body } = await post("/v1/pos", { text: "the market reached a peak" });
    expect(body.tokens).toHaveLength(5);
  });

  it("rejects empty text", async () => {
    const { status } = await post("/v1/pos", { text: "   " });
    expect(status).toBe(400);
  });
});

describe("protocol", () => {
  it("404s unknown routes", async () => {
    const { status } = await post("/v1/nothing", {});
    expect(status).toBe(404);
  });

  it("400s malformed JSON bodies", async () => {
    const res = await fetch(`${base}/v1/topk`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: "{not json",
    });
    expect(res.status).toBe(400);
  });

  it("400s missing fields", async () => {
    const { status, body } = await post("/v1/topk", { text: PROMPT });
    expect(status).toBe(400);
    expect(body.error).toContain("k");
  });
});
