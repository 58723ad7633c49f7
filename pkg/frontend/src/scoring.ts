/** Scoring semantics for the points scale, kept in lockstep with the
 * producer of the scale document:
 *
 *  - every item must be answered 0 or 1;
 *  - the score is the sum of points over yes answers, accumulated in
 *    item order (points are half-integer, so sums are exact doubles);
 *  - band boundaries belong to the lower band (score <= low_max is Low,
 *    and so on), anything above high_max is VeryHigh.
 *
 * The golden-vector tests assert strict equality of scores and bands
 * against reference sheets produced alongside the scale. */

import type { AnswerSheet, BandThresholds, ScaleDocument } from "./documents.js";

export const BANDS = ["Low", "Average", "High", "VeryHigh"] as const;
export type Band = (typeof BANDS)[number];

export class MissingAnswerError extends Error {
  constructor(public readonly features: readonly string[]) {
    super(`unanswered items: ${features.join(", ")}`);
    this.name = "MissingAnswerError";
  }
}

export class BadAnswerError extends Error {
  constructor(feature: string, value: unknown) {
    super(`answer for ${feature} must be 0 or 1, got ${JSON.stringify(value)}`);
    this.name = "BadAnswerError";
  }
}

export function scoreAnswers(scale: ScaleDocument, answers: AnswerSheet): number {
  const missing = scale.items
    .filter((item) => !(item.feature in answers))
    .map((item) => item.feature);
  if (missing.length > 0) {
    throw new MissingAnswerError(missing);
  }
  let total = 0.0;
  for (const item of scale.items) {
    const answer = answers[item.feature];
    if (answer !== 0 && answer !== 1) {
      throw new BadAnswerError(item.feature, answer);
    }
    if (answer === 1) {
      total += item.points;
    }
  }
  return total;
}

export function assignBand(score: number, thresholds: BandThresholds): Band {
  if (!Number.isFinite(score)) {
    throw new RangeError(`score must be finite, got ${score}`);
  }
  if (score <= thresholds.low_max) {
    return "Low";
  }
  if (score <= thresholds.average_max) {
    return "Average";
  }
  if (score <= thresholds.high_max) {
    return "High";
  }
  return "VeryHigh";
}

/** Largest reachable score: sum of positive points. */
export function maxScore(scale: ScaleDocument): number {
  let total = 0.0;
  for (const item of scale.items) {
    if (item.points > 0) {
      total += item.points;
    }
  }
  return total;
}

/** Smallest reachable score: sum of negative points. */
export function minScore(scale: ScaleDocument): number {
  let total = 0.0;
  for (const item of scale.items) {
    if (item.points < 0) {
      total += item.points;
    }
  }
  return total;
}
