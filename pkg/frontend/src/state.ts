/** Questionnaire session state.
 *
 * Baseline answers and what-if overrides live in separate maps: the
 * what-if view substitutes hypothetical values for *modifiable* items
 * when computing its score, but never writes into the baseline sheet.
 * Clearing the overrides therefore restores the baseline exactly. */

import type { Answer, AnswerSheet, ScaleDocument } from "./documents.js";
import { assignBand, scoreAnswers, type Band } from "./scoring.js";

export interface ScoreView {
  readonly score: number;
  readonly band: Band;
}

export class QuestionnaireState {
  private readonly answers = new Map<string, Answer>();
  private readonly overrides = new Map<string, Answer>();
  private readonly modifiable: ReadonlySet<string>;

  constructor(public readonly scale: ScaleDocument) {
    this.modifiable = new Set(
      scale.items.filter((item) => item.modifiable).map((item) => item.feature),
    );
  }

  private requireFeature(feature: string): void {
    if (!this.scale.items.some((item) => item.feature === feature)) {
      throw new RangeError(`unknown scale feature ${JSON.stringify(feature)}`);
    }
  }

  /** Record (or with null, clear) a baseline answer. */
  setAnswer(feature: string, value: Answer | null): void {
    this.requireFeature(feature);
    if (value === null) {
      this.answers.delete(feature);
    } else {
      this.answers.set(feature, value);
    }
  }

  answerFor(feature: string): Answer | null {
    return this.answers.get(feature) ?? null;
  }

  /** Hypothesize a value for a modifiable item (null reverts to baseline). */
  setOverride(feature: string, value: Answer | null): void {
    this.requireFeature(feature);
    if (!this.modifiable.has(feature)) {
      throw new RangeError(`feature ${JSON.stringify(feature)} is not modifiable`);
    }
    if (value === null) {
      this.overrides.delete(feature);
    } else {
      this.overrides.set(feature, value);
    }
  }

  overrideFor(feature: string): Answer | null {
    return this.overrides.get(feature) ?? null;
  }

  clearOverrides(): void {
    this.overrides.clear();
  }

  hasOverrides(): boolean {
    return this.overrides.size > 0;
  }

  modifiableFeatures(): string[] {
    return this.scale.items
      .filter((item) => item.modifiable)
      .map((item) => item.feature);
  }

  answeredCount(): number {
    return this.answers.size;
  }

  isComplete(): boolean {
    return this.scale.items.every((item) => this.answers.has(item.feature));
  }

  /** The baseline sheet as a plain object (a copy; mutating it is inert). */
  baselineAnswers(): Record<string, Answer> {
    const sheet: Record<string, Answer> = {};
    for (const [feature, value] of this.answers) {
      sheet[feature] = value;
    }
    return sheet;
  }

  /** Baseline with what-if overrides substituted (a copy). */
  effectiveAnswers(): Record<string, Answer> {
    const sheet = this.baselineAnswers();
    for (const [feature, value] of this.overrides) {
      sheet[feature] = value;
    }
    return sheet;
  }

  private view(sheet: AnswerSheet): ScoreView {
    const score = scoreAnswers(this.scale, sheet);
    return { score, band: assignBand(score, this.scale.band_thresholds) };
  }

  /** Score of the answers as given, or null while any item is unanswered. */
  baselineView(): ScoreView | null {
    return this.isComplete() ? this.view(this.baselineAnswers()) : null;
  }

  /** Score with overrides applied, or null while any item is unanswered. */
  whatIfView(): ScoreView | null {
    return this.isComplete() ? this.view(this.effectiveAnswers()) : null;
  }
}
