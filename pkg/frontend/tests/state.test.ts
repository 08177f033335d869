import { describe, expect, it } from "vitest";

import { DraftState } from "../src/state.js";

describe("DraftState", () => {
  it("tracks progress toward a complete batch", () => {
    const state = new DraftState();
    state.setBatch([1, 2, 3]);
    expect(state.progress).toEqual({ done: 0, total: 3 });
    expect(state.complete).toBe(false);
    state.setDraft(1, 1);
    state.setDraft(2, 0);
    expect(state.progress).toEqual({ done: 2, total: 3 });
    expect(state.complete).toBe(false);
    state.setDraft(3, 0);
    expect(state.complete).toBe(true);
  });

  it("rejects drafts for ids outside the pending batch", () => {
    const state = new DraftState();
    state.setBatch([1, 2]);
    expect(() => state.setDraft(99, 1)).toThrow(/not in the pending batch/);
  });

  it("drops stale drafts when a new batch arrives", () => {
    const state = new DraftState();
    state.setBatch([1, 2]);
    state.setDraft(1, 1);
    state.setDraft(2, 0);
    state.setBatch([2, 3]);
    expect(state.getDraft(1)).toBeUndefined();
    expect(state.getDraft(2)).toBe(0); // survives: still pending
    expect(state.complete).toBe(false);
  });

  it("an empty batch is never complete", () => {
    const state = new DraftState();
    state.setBatch([]);
    expect(state.complete).toBe(false);
  });

  it("payload covers exactly the pending batch", () => {
    const state = new DraftState();
    state.setBatch([7, 8]);
    state.setDraft(7, 1);
    expect(() => state.payload()).toThrow(/not fully labeled/);
    state.setDraft(8, 0);
    expect(state.payload()).toEqual({ "7": 1, "8": 0 });
  });

  it("clearDraft reopens the batch", () => {
    const state = new DraftState();
    state.setBatch([1]);
    state.setDraft(1, 1);
    expect(state.complete).toBe(true);
    state.clearDraft(1);
    expect(state.complete).toBe(false);
  });
});
