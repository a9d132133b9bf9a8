import { parseArgs } from "node:util";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { makeServer } from "./app.js";
import { loadSnapshot } from "./snapshot.js";

const here = dirname(fileURLToPath(import.meta.url));
const DEFAULT_SNAPSHOT = join(here, "..", "..", "model", "snapshot.json");

const { values } = parseArgs({
  options: {
    snapshot: { type: "string", default: DEFAULT_SNAPSHOT },
    port: { type: "string", default: "8400" },
    host: { type: "string", default: "127.0.0.1" },
    "input-budget": { type: "string" },
  },
});

const snap = loadSnapshot(values.snapshot!);
// the word budget is the one safe per-deployment override; model id,
// cased flag, dim, and layer travel with the snapshot
if (values["input-budget"] !== undefined) {
  snap.input_budget = Number(values["input-budget"]);
}

const port = Number(values.port);
makeServer(snap).listen(port, values.host!, () => {
  console.log(
    `serving ${snap.model} (dim ${snap.dim}, ${snap.cased ? "cased" : "uncased"}) ` +
      `on http://${values.host}:${port}`,
  );
});
