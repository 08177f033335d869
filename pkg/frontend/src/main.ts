// Console wiring: setup form -> labeling view -> metrics polling.

import { ApiClient, ApiError } from "./api.js";
import type { DatasetInfo, SessionConfig, SessionInfo } from "./api.js";
import { renderCurve } from "./curve.js";
import { LabelingGrid, progressText } from "./grid.js";
import {
  CLASSIFIERS,
  DEFAULT_CONFIG,
  HOTS,
  WARMUPS,
  validateConfig,
} from "./setup.js";
import { DraftState } from "./state.js";

const POLL_MS = 2000;

class Console {
  private readonly api = new ApiClient();
  private readonly drafts = new DraftState();
  private grid: LabelingGrid;
  private session: SessionInfo | null = null;
  private datasets: DatasetInfo[] = [];
  private pollTimer: number | null = null;

  constructor(private readonly root: HTMLElement) {
    this.grid = new LabelingGrid(document, this.drafts, {
      onChange: () => this.refreshSubmitState(),
    });
  }

  async start(): Promise<void> {
    const body = await this.api.listDatasets();
    this.datasets = body.datasets;
    this.renderSetup();
  }

  private el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className?: string,
    text?: string,
  ): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
  }

  private banner(message: string): void {
    const existing = this.root.querySelector(".banner");
    existing?.remove();
    const node = this.el("div", "banner", message);
    this.root.prepend(node);
  }

  // --- setup view -----------------------------------------------------------

  private renderSetup(): void {
    this.root.textContent = "";
    const form = this.el("form", "setup");
    const title = this.el("h1", "", "chainsift annotation console");
    this.root.append(title, form);

    const dataset = this.el("select");
    dataset.id = "dataset";
    for (const d of this.datasets) {
      const option = this.el("option", "", `${d.name} (${d.train_size} train)`);
      option.value = d.name;
      dataset.append(option);
    }

    const fields: Array<[keyof SessionConfig, string]> = [
      ["stop_at", "stop at"],
      ["batch_size", "batch size"],
      ["seed", "seed"],
      ["eval_every", "eval every"],
    ];
    const inputs = new Map<string, HTMLInputElement>();
    form.append(this.labeled("dataset", dataset));
    for (const [key, label] of fields) {
      const input = this.el("input");
      input.type = "number";
      input.id = key;
      input.value = String(DEFAULT_CONFIG[key] ?? "");
      inputs.set(key, input);
      form.append(this.labeled(label, input));
    }
    const selects: Array<[keyof SessionConfig, readonly string[]]> = [
      ["classifier", CLASSIFIERS],
      ["warmup", WARMUPS],
      ["hot", HOTS],
    ];
    const choices = new Map<string, HTMLSelectElement>();
    for (const [key, values] of selects) {
      const select = this.el("select");
      select.id = key;
      for (const v of values) {
        const option = this.el("option", "", v);
        option.value = v;
        select.append(option);
      }
      select.value = String(DEFAULT_CONFIG[key]);
      choices.set(key, select);
      form.append(this.labeled(key, select));
    }

    const errors = this.el("ul", "errors");
    const submit = this.el("button", "", "start session");
    submit.type = "submit";
    form.append(errors, submit);

    form.addEventListener("submit", async (event) => {
      event.preventDefault();
      const config: SessionConfig = {
        stop_at: Number(inputs.get("stop_at")!.value),
        batch_size: Number(inputs.get("batch_size")!.value),
        seed: Number(inputs.get("seed")!.value),
        eval_every: Number(inputs.get("eval_every")!.value),
        classifier: choices.get("classifier")!.value,
        warmup: choices.get("warmup")!.value,
        hot: choices.get("hot")!.value,
      };
      const entry = this.datasets.find((d) => d.name === dataset.value);
      const found = validateConfig(config, entry?.train_size ?? 0);
      errors.textContent = "";
      if (Object.keys(found).length > 0) {
        for (const message of Object.values(found)) {
          errors.append(this.el("li", "", message));
        }
        return; // invalid: no request leaves the browser
      }
      try {
        this.session = await this.api.createSession(dataset.value, config);
        await this.renderLabeling();
      } catch (error) {
        if (error instanceof ApiError) {
          errors.append(this.el("li", "", `${error.code}: ${error.message}`));
        } else {
          throw error;
        }
      }
    });
  }

  private labeled(text: string, control: HTMLElement): HTMLElement {
    const wrap = this.el("label");
    wrap.append(this.el("span", "", text), control);
    return wrap;
  }

  // --- labeling view --------------------------------------------------------

  private async renderLabeling(): Promise<void> {
    this.root.textContent = "";
    const header = this.el("div", "status-bar");
    header.id = "status";
    const progress = this.el("span", "progress");
    progress.id = "progress";
    const submit = this.el("button", "submit-labels", "submit labels");
    submit.id = "submit";
    submit.disabled = true;
    const curveBox = this.el("div", "curve-box");
    curveBox.id = "curve";
    this.root.append(header, this.grid.element, progress, submit, curveBox);

    submit.addEventListener("click", () => void this.submit());
    await this.loadBatch();
    await this.refreshMetrics();
    this.schedulePoll();
  }

  private refreshSubmitState(): void {
    const submit = this.root.querySelector<HTMLButtonElement>("#submit");
    const progress = this.root.querySelector("#progress");
    if (submit) submit.disabled = !this.drafts.complete;
    if (progress) progress.textContent = progressText(this.drafts);
  }

  private async loadBatch(): Promise<void> {
    if (!this.session) return;
    try {
      const batch = await this.api.getBatch(this.session.session_id);
      this.grid.setItems(batch.items);
      this.setStatus(`phase ${batch.phase} — label the batch below`);
    } catch (error) {
      if (error instanceof ApiError && error.code === "finished") {
        this.setStatus("session finished");
      } else if (error instanceof ApiError && error.code === "training") {
        this.setStatus("training…");
      } else {
        throw error;
      }
    }
    this.refreshSubmitState();
  }

  private async submit(): Promise<void> {
    if (!this.session || !this.drafts.complete) return;
    try {
      const result = await this.api.submitLabels(
        this.session.session_id,
        this.drafts.payload(),
      );
      this.setStatus(
        `labeled ${result.labeled_pool_size}, phase ${result.phase}`,
      );
      if (result.status === "Finished") {
        this.setStatus("session finished");
        this.grid.setItems([]);
      } else {
        await this.loadBatch();
      }
      await this.refreshMetrics();
    } catch (error) {
      if (!(error instanceof ApiError)) throw error;
      if (error.status === 422 && error.details.missing) {
        this.grid.markMissing(error.details.missing);
        this.banner(`submission rejected: ${error.message}`);
      } else if (error.status === 409 || error.status === 422) {
        // stale batch (another client moved the session): offer a reload
        this.banner("batch is stale — reloading the current batch");
        await this.loadBatch();
      } else {
        throw error;
      }
    }
  }

  private async refreshMetrics(): Promise<void> {
    if (!this.session) return;
    const metrics = await this.api.getMetrics(this.session.session_id);
    const box = this.root.querySelector("#curve");
    if (box) {
      box.textContent = "";
      box.append(renderCurve(document, metrics));
    }
  }

  private setStatus(text: string): void {
    const node = this.root.querySelector("#status");
    if (node) node.textContent = text;
  }

  private schedulePoll(): void {
    if (this.pollTimer !== null) return;
    this.pollTimer = window.setInterval(() => {
      void this.refreshMetrics();
    }, POLL_MS);
  }
}

const root = document.getElementById("app");
if (root) {
  void new Console(root).start();
}

export { Console };
