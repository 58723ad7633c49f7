import { describe, expect, it } from "vitest";

import { parseScaleDocument } from "../src/documents.js";
import { PRESET_SCALE, PRESET_SCALE_RAW } from "../src/preset.js";
import { QuestionnaireState } from "../src/state.js";
import { readFixture } from "./helpers.js";

function answerEverything(state: QuestionnaireState, value: 0 | 1 = 0): void {
  for (const item of state.scale.items) {
    state.setAnswer(item.feature, value);
  }
}

describe("QuestionnaireState", () => {
  it("tracks completeness and score progressively", () => {
    const state = new QuestionnaireState(PRESET_SCALE);
    expect(state.isComplete()).toBe(false);
    expect(state.baselineView()).toBeNull();
    expect(state.whatIfView()).toBeNull();

    answerEverything(state, 0);
    expect(state.isComplete()).toBe(true);
    expect(state.baselineView()).toEqual({ score: 0, band: "Average" });

    state.setAnswer("diabetes", 1); // +4
    expect(state.baselineView()).toEqual({ score: 4, band: "High" });

    state.setAnswer("diabetes", null);
    expect(state.isComplete()).toBe(false);
    expect(state.baselineView()).toBeNull();
  });

  it("rejects unknown features and non-modifiable overrides", () => {
    const state = new QuestionnaireState(PRESET_SCALE);
    expect(() => state.setAnswer("no_such_item", 1)).toThrow(RangeError);
    expect(() => state.setOverride("diabetes", 1)).toThrow(/not modifiable/);
    expect(() => state.setOverride("no_pulse_reducing", 1)).not.toThrow();
  });

  it("keeps what-if overrides apart from the baseline sheet", () => {
    const state = new QuestionnaireState(PRESET_SCALE);
    answerEverything(state, 0);
    state.setAnswer("diabetes", 1);
    const before = state.baselineAnswers();
    const baselineView = state.baselineView();

    // pile on overrides: none of this may touch the baseline
    state.setOverride("no_pulse_reducing", 1); // +2
    state.setOverride("DTST_gt_40", 1); // +2
    expect(state.baselineAnswers()).toEqual(before);
    expect(state.baselineView()).toEqual(baselineView);
    expect(state.whatIfView()).toEqual({ score: 8, band: "VeryHigh" });
    expect(state.effectiveAnswers()["no_pulse_reducing"]).toBe(1);
    expect(state.baselineAnswers()["no_pulse_reducing"]).toBe(0);

    // reverting one override restores that item's baseline value
    state.setOverride("DTST_gt_40", null);
    expect(state.whatIfView()).toEqual({ score: 6, band: "VeryHigh" });

    // clearing all overrides makes the views coincide again
    state.clearOverrides();
    expect(state.hasOverrides()).toBe(false);
    expect(state.whatIfView()).toEqual(baselineView);
    expect(state.effectiveAnswers()).toEqual(before);
  });

  it("hands out defensive copies of the sheets", () => {
    const state = new QuestionnaireState(PRESET_SCALE);
    answerEverything(state, 0);
    const sheet = state.baselineAnswers();
    sheet["diabetes"] = 1;
    expect(state.answerFor("diabetes")).toBe(0);
    expect(state.baselineView()).toEqual({ score: 0, band: "Average" });
  });

  it("lists modifiable features in item order", () => {
    const state = new QuestionnaireState(PRESET_SCALE);
    expect(state.modifiableFeatures()).toEqual([
      "thyroidectomy_thyrostatic",
      "no_pulse_reducing",
      "DTST_gt_40",
      "TTRTP_lt_77",
    ]);
  });
});

describe("embedded preset", () => {
  it("matches the packaged preset document byte for byte", () => {
    expect(PRESET_SCALE_RAW).toEqual(readFixture("preset_scale.json"));
    expect(PRESET_SCALE).toEqual(parseScaleDocument(readFixture("preset_scale.json")));
  });
});
