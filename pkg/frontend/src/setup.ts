// Session setup form validation. Mirrors the server's 400 rules so a
// bad configuration never leaves the browser.

import type { SessionConfig } from "./api.js";

export const CLASSIFIERS = ["RF", "LR", "GBT"] as const;
export const WARMUPS = ["random", "iforest", "elliptic"] as const;
export const HOTS = ["uncertainty", "expected_model_change", "none"] as const;

export const DEFAULT_CONFIG: SessionConfig = {
  stop_at: 1500,
  batch_size: 50,
  warmup: "random",
  hot: "uncertainty",
  classifier: "RF",
  seed: 1,
  eval_every: 1,
};

export type ValidationErrors = Partial<Record<keyof SessionConfig, string>>;

export function validateConfig(
  config: SessionConfig,
  trainSize: number,
): ValidationErrors {
  const errors: ValidationErrors = {};
  const batch = config.batch_size ?? 50;
  if (!Number.isInteger(batch) || batch < 1) {
    errors.batch_size = "batch size must be a positive integer";
  }
  if (!Number.isInteger(config.stop_at) || config.stop_at < 1) {
    errors.stop_at = "stop size must be a positive integer";
  } else if (config.stop_at < batch) {
    errors.stop_at = `stop size must be at least the batch size (${batch})`;
  } else if (config.stop_at > trainSize) {
    errors.stop_at = `stop size exceeds the train pool (${trainSize})`;
  }
  const evalEvery = config.eval_every ?? 1;
  if (!Number.isInteger(evalEvery) || evalEvery < 1) {
    errors.eval_every = "evaluation cadence must be a positive integer";
  }
  if (
    config.classifier !== undefined &&
    !CLASSIFIERS.includes(config.classifier as (typeof CLASSIFIERS)[number])
  ) {
    errors.classifier = `classifier must be one of ${CLASSIFIERS.join(", ")}`;
  }
  if (
    config.warmup !== undefined &&
    !WARMUPS.includes(config.warmup as (typeof WARMUPS)[number])
  ) {
    errors.warmup = `warm-up must be one of ${WARMUPS.join(", ")}`;
  }
  if (
    config.hot !== undefined &&
    !HOTS.includes(config.hot as (typeof HOTS)[number])
  ) {
    errors.hot = `hot strategy must be one of ${HOTS.join(", ")}`;
  }
  return errors;
}
