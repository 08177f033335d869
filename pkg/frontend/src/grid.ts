// Labeling grid: one row per pending transaction with raw feature
// magnitudes, draft-label buttons, keyboard shortcuts, and the 422
// missing-id highlight.

import type { BatchItem } from "./api.js";
import type { DraftState } from "./state.js";

export interface GridCallbacks {
  onChange: () => void;
}

function formatScore(item: BatchItem): string {
  if (item.model_score !== null) {
    return `model ${item.model_score.toFixed(3)}`;
  }
  if (item.anomaly_score !== null) {
    return `anomaly ${item.anomaly_score.toFixed(3)}`;
  }
  return "—";
}

function featureCell(doc: Document, item: BatchItem): HTMLElement {
  const cell = doc.createElement("td");
  cell.className = "features";
  const maxAbs = Math.max(
    ...item.feature_summary.map((f) => Math.abs(f.value)),
    1e-9,
  );
  for (const entry of item.feature_summary) {
    const wrap = doc.createElement("span");
    wrap.className = "feature";
    wrap.title = `feature ${entry.feature}`;
    const bar = doc.createElement("span");
    bar.className = "bar " + (entry.value < 0 ? "neg" : "pos");
    bar.style.width = `${(40 * Math.abs(entry.value)) / maxAbs}px`;
    const text = doc.createElement("span");
    text.textContent = `f${entry.feature} ${entry.value.toFixed(2)}`;
    wrap.append(bar, text);
    cell.append(wrap);
  }
  return cell;
}

export class LabelingGrid {
  readonly element: HTMLTableElement;
  private focusIndex = 0;
  private items: BatchItem[] = [];

  constructor(
    private readonly doc: Document,
    private readonly drafts: DraftState,
    private readonly callbacks: GridCallbacks,
  ) {
    this.element = doc.createElement("table");
    this.element.className = "labeling-grid";
    this.element.tabIndex = 0;
    this.element.addEventListener("keydown", (event) =>
      this.handleKey(event as KeyboardEvent),
    );
  }

  setItems(items: BatchItem[]): void {
    this.items = items;
    this.drafts.setBatch(items.map((i) => i.tx_id));
    this.focusIndex = 0;
    this.render();
  }

  // Highlight rows the server reported as missing from a submission.
  markMissing(txIds: number[]): void {
    const missing = new Set(txIds);
    for (const row of this.element.querySelectorAll("tr[data-tx-id]")) {
      const txId = Number((row as HTMLElement).dataset.txId);
      row.classList.toggle("missing", missing.has(txId));
    }
  }

  handleKey(event: KeyboardEvent): void {
    const item = this.items[this.focusIndex];
    if (!item) {
      return;
    }
    switch (event.key) {
      case "i":
        this.setLabel(item.tx_id, 1);
        this.move(1);
        break;
      case "l":
        this.setLabel(item.tx_id, 0);
        this.move(1);
        break;
      case "ArrowDown":
        this.move(1);
        break;
      case "ArrowUp":
        this.move(-1);
        break;
      default:
        return;
    }
    event.preventDefault();
  }

  private move(delta: number): void {
    const next = this.focusIndex + delta;
    this.focusIndex = Math.min(Math.max(next, 0), this.items.length - 1);
    this.render();
  }

  private setLabel(txId: number, label: 0 | 1): void {
    this.drafts.setDraft(txId, label);
    this.render();
    this.callbacks.onChange();
  }

  private render(): void {
    const doc = this.doc;
    this.element.textContent = "";
    const head = doc.createElement("tr");
    for (const title of ["tx", "step", "score", "features", "label"]) {
      const th = doc.createElement("th");
      th.textContent = title;
      head.append(th);
    }
    this.element.append(head);

    this.items.forEach((item, index) => {
      const row = doc.createElement("tr");
      row.dataset.txId = String(item.tx_id);
      row.classList.toggle("focused", index === this.focusIndex);
      const draft = this.drafts.getDraft(item.tx_id);
      if (draft !== undefined) {
        row.classList.add(draft === 1 ? "draft-illicit" : "draft-licit");
      }

      const tx = doc.createElement("td");
      tx.textContent = String(item.tx_id);
      const step = doc.createElement("td");
      step.textContent = item.time_step === null ? "—" : String(item.time_step);
      const score = doc.createElement("td");
      score.textContent = formatScore(item);

      const label = doc.createElement("td");
      for (const [value, text] of [
        [1, "illicit"],
        [0, "licit"],
      ] as const) {
        const button = doc.createElement("button");
        button.textContent = text;
        button.classList.toggle("selected", draft === value);
        button.addEventListener("click", () => {
          this.focusIndex = index;
          this.setLabel(item.tx_id, value);
        });
        label.append(button);
      }

      row.append(tx, step, score, featureCell(doc, item), label);
      row.addEventListener("click", () => {
        this.focusIndex = index;
        this.render();
      });
      this.element.append(row);
    });
  }
}

export function progressText(drafts: DraftState): string {
  const { done, total } = drafts.progress;
  return `${done}/${total}`;
}
