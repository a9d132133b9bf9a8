import { IncomingMessage, Server, ServerResponse, createServer } from "node:http";
import { z } from "zod";

import {
  RequestError,
  embedText,
  maskTopk,
  pieces,
  posTags,
  tokenVector,
} from "./model.js";
import { Snapshot } from "./snapshot.js";

const topkBody = z.object({
  text: z.string().min(1),
  k: z.number().int().min(1),
});
const textBody = z.object({ text: z.string() });
const wordBody = z.object({ word: z.string().min(1) });

// generous cap; documents are word-budgeted anyway
const BODY_LIMIT = 2 * 1024 * 1024;

async function readBody(req: IncomingMessage): Promise<unknown> {
  const chunks: Buffer[] = [];
  let size = 0;
  for await (const chunk of req) {
    size += (chunk as Buffer).length;
    if (size > BODY_LIMIT) {
      throw new RequestError(413, "request body too large");
    }
    chunks.push(chunk as Buffer);
  }
  const raw = Buffer.concat(chunks).toString("utf-8");
  if (raw.length === 0) {
    throw new RequestError(400, "request body is empty");
  }
  try {
    return JSON.parse(raw);
  } catch {
    throw new RequestError(400, "request body is not valid JSON");
  }
}

function parseBody<T>(schema: z.ZodType<T>, body: unknown): T {
  const result = schema.safeParse(body);
  if (!result.success) {
    const issue = result.error.issues[0];
    throw new RequestError(400, `${issue.path.join(".")}: ${issue.message}`);
  }
  return result.data;
}

function send(res: ServerResponse, status: number, payload: unknown): void {
  const data = JSON.stringify(payload);
  res.writeHead(status, {
    "content-type": "application/json; charset=utf-8",
    "content-length": Buffer.byteLength(data),
  });
  res.end(data);
}

/**
 * HTTP front for one loaded snapshot. All routes speak JSON; invalid
 * input comes back as 400 with an {error} body, unknown words on the
 * token route as 404, so callers can tell "bad request" from "not in
 * vocabulary".
 */
export function makeServer(snap: Snapshot): Server {
  const routes: Record<string, (body: unknown) => unknown> = {
    "POST /v1/topk": (b) => {
      const { text, k } = parseBody(topkBody, b);
      return { predictions: maskTopk(snap, text, k) };
    },
    "POST /v1/embed": (b) => {
      const { text } = parseBody(textBody, b);
      return embedText(snap, text);
    },
    "POST /v1/token_embed": (b) => {
      const { word } = parseBody(wordBody, b);
      const vector = tokenVector(snap, word);
      if (vector === null) {
        throw new RequestError(404, `no token embedding for "${word}"`);
      }
      return { vector };
    },
    // diagnostic route backing the piece-pooling oracle in the tests
    "POST /v1/pieces": (b) => {
      const { word } = parseBody(wordBody, b);
      const parts = pieces(snap, word.toLowerCase());
      if (parts === null) {
        throw new RequestError(404, `"${word}" has no piece decomposition`);
      }
      return { pieces: parts.map((p) => ({ piece: p, vector: snap.vocab[p] })) };
    },
    "POST /v1/pos": (b) => {
      const { text } = parseBody(textBody, b);
      return { tokens: posTags(snap, text) };
    },
  };

  return createServer(async (req, res) => {
    try {
      const path = (req.url ?? "/").split("?")[0];
      if (req.method === "GET" && path === "/v1/info") {
        send(res, 200, {
          model: snap.model,
          cased: snap.cased,
          dim: snap.dim,
          layer: snap.layer,
          input_budget: snap.input_budget,
          noun_tags: snap.noun_tags,
        });
        return;
      }
      const handler = routes[`${req.method} ${path}`];
      if (handler === undefined) {
        throw new RequestError(404, `no route for ${req.method} ${path}`);
      }
      send(res, 200, handler(await readBody(req)));
    } catch (err) {
      if (err instanceof RequestError) {
        send(res, err.status, { error: err.message });
      } else {
        send(res, 500, { error: String(err) });
      }
    }
  });
}
