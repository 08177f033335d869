// @vitest-environment node
// End-to-end check against a live demo server: one full labeling
// iteration through the HTTP API, plus the stale-batch 422 path.

import { spawn, type ChildProcess } from "node:child_process";
import { fileURLToPath } from "node:url";
import path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { DraftState } from "../src/state.js";

const PORT = 8899;
const BASE = `http://127.0.0.1:${PORT}`;
const PKG_ROOT = path.resolve(
  path.dirname(fileURLToPath(import.meta.url)),
  "..",
  "..",
);

let server: ChildProcess;
const api = new ApiClient(BASE);

async function waitForServer(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      await api.listDatasets();
      return;
    } catch {
      await new Promise((resolve) => setTimeout(resolve, 250));
    }
  }
  throw new Error("demo server did not come up");
}

beforeAll(async () => {
  server = spawn(
    "python3",
    [
      "-m",
      "chainsift",
      "serve",
      "--demo",
      "--port",
      String(PORT),
      "--baseline-f1",
      "0.83",
    ],
    { cwd: PKG_ROOT, stdio: "ignore" },
  );
  await waitForServer();
}, 40_000);

afterAll(() => {
  server?.kill();
});

describe("live demo server", () => {
  it("lists the demo dataset with the baseline reference", async () => {
    const body = await api.listDatasets();
    expect(body.datasets).toHaveLength(1);
    expect(body.datasets[0]!.name).toBe("demo");
    expect(body.datasets[0]!.baseline_f1).toBe(0.83);
  });

  it("completes one labeling iteration and gains a curve point", async () => {
    const session = await api.createSession("demo", {
      stop_at: 200,
      batch_size: 50,
      classifier: "LR",
      seed: 1,
    });
    expect(session.status).toBe("AwaitingLabels");

    const before = await api.getMetrics(session.session_id);
    expect(before.series.points).toHaveLength(0);

    const batch = await api.getBatch(session.session_id);
    expect(batch.items).toHaveLength(50);

    const drafts = new DraftState();
    drafts.setBatch(batch.items.map((i) => i.tx_id));
    for (const item of batch.items) {
      // arbitrary but deterministic labels; the server owns correctness
      drafts.setDraft(item.tx_id, item.tx_id % 7 === 0 ? 1 : 0);
    }
    expect(drafts.complete).toBe(true);

    const result = await api.submitLabels(session.session_id, drafts.payload());
    expect(result.labeled_pool_size).toBe(50);

    const after = await api.getMetrics(session.session_id);
    expect(after.series.points).toHaveLength(1);
    expect(after.series.points[0]!.x).toBe(50);
    expect(after.baseline_f1).toBe(0.83);
  });

  it("stale submission returns 422 with the missing ids", async () => {
    const session = await api.createSession("demo", {
      stop_at: 100,
      batch_size: 50,
      classifier: "LR",
      seed: 2,
    });
    const batch = await api.getBatch(session.session_id);
    const ids = batch.items.map((i) => i.tx_id);
    const partial: Record<string, number> = {};
    for (const txId of ids.slice(2)) {
      partial[String(txId)] = 0;
    }
    let caught: ApiError | null = null;
    try {
      await api.submitLabels(session.session_id, partial);
    } catch (error) {
      caught = error as ApiError;
    }
    expect(caught).toBeInstanceOf(ApiError);
    expect(caught!.status).toBe(422);
    expect(caught!.code).toBe("batch_mismatch");
    expect(caught!.details.missing).toEqual(ids.slice(0, 2).sort((a, b) => a - b));
  });

  it("invalid configuration surfaces the server 400", async () => {
    await expect(
      api.createSession("demo", { stop_at: 10, batch_size: 50 }),
    ).rejects.toMatchObject({ status: 400, code: "invalid_config" });
  });
});
