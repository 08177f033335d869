// Client-side draft labels for the current pending batch.
//
// Invariants, enforced here and unit-tested:
//   - drafts exist only for ids in the current pending batch
//   - submission is allowed only when every pending id has a draft

export type DraftLabel = 0 | 1;

export class DraftState {
  private pendingIds: number[] = [];
  private drafts = new Map<number, DraftLabel>();

  setBatch(ids: number[]): void {
    this.pendingIds = [...ids];
    const keep = new Set(ids);
    for (const txId of [...this.drafts.keys()]) {
      if (!keep.has(txId)) {
        this.drafts.delete(txId);
      }
    }
  }

  get batch(): number[] {
    return [...this.pendingIds];
  }

  setDraft(txId: number, label: DraftLabel): void {
    if (!this.pendingIds.includes(txId)) {
      throw new Error(`tx ${txId} is not in the pending batch`);
    }
    this.drafts.set(txId, label);
  }

  clearDraft(txId: number): void {
    this.drafts.delete(txId);
  }

  getDraft(txId: number): DraftLabel | undefined {
    return this.drafts.get(txId);
  }

  get complete(): boolean {
    return (
      this.pendingIds.length > 0 &&
      this.pendingIds.every((txId) => this.drafts.has(txId))
    );
  }

  get progress(): { done: number; total: number } {
    return { done: this.drafts.size, total: this.pendingIds.length };
  }

  payload(): Record<string, number> {
    if (!this.complete) {
      throw new Error("cannot submit: batch is not fully labeled");
    }
    const body: Record<string, number> = {};
    for (const txId of this.pendingIds) {
      body[String(txId)] = this.drafts.get(txId)!;
    }
    return body;
  }
}
