/** Built-in default scale so the page works before any file is loaded.
 *
 * This mirrors the illustrative preset document shipped with the Python
 * package (fixtures/preset_scale.json); a test keeps the two in sync.
 * Its points are literature-style round values, not fitted to data —
 * the metadata says so. */

import { parseScaleDocument, type ScaleDocument } from "./documents.js";

export const PRESET_SCALE_RAW = {
  format: "tafrisk-scale",
  version: 1,
  band_thresholds: { low_max: -5.0, average_max: 1.0, high_max: 5.5 },
  bands: [
    { name: "Low", range: "<= -5" },
    { name: "Average", range: "(-5, 1]" },
    { name: "High", range: "(1, 5.5]" },
    { name: "VeryHigh", range: "> 5.5" },
  ],
  items: [
    {
      feature: "SVE_during_TT",
      question: "Supraventricular extrasystole appeared during thyrotoxicosis?",
      points: -4.0,
      source_coefficient: -4.0,
      group: "CardioDuringTT",
      modifiable: false,
    },
    {
      feature: "DTT_lt_6mo",
      question: "Duration of thyrotoxicosis under 6 months?",
      points: -4.0,
      source_coefficient: -4.0,
      group: "TTCharacteristics",
      modifiable: false,
    },
    {
      feature: "pacemaker_migration",
      question: "Atrial pacemaker migration present?",
      points: -3.0,
      source_coefficient: -3.0,
      group: "CardioDuringTT",
      modifiable: false,
    },
    {
      feature: "ophthalmopathy_myxedema",
      question: "Infiltrative ophthalmopathy or pretibial myxedema present?",
      points: -3.0,
      source_coefficient: -3.0,
      group: "TTCharacteristics",
      modifiable: false,
    },
    {
      feature: "DTT_6_12mo",
      question: "Duration of thyrotoxicosis between 6 and 12 months?",
      points: -3.0,
      source_coefficient: -3.0,
      group: "TTCharacteristics",
      modifiable: false,
    },
    {
      feature: "no_AH_during_TT",
      question: "No arterial hypertension while thyrotoxic?",
      points: -2.0,
      source_coefficient: -2.0,
      group: "CardioDuringTT",
      modifiable: false,
    },
    {
      feature: "AH_target_BP",
      question: "Hypertension with target blood pressure reached on treatment?",
      points: -2.0,
      source_coefficient: -2.0,
      group: "CardioDuringTT",
      modifiable: false,
    },
    {
      feature: "HB_120_132",
      question: "Hemoglobin between 120 and 132 g/l?",
      points: -2.0,
      source_coefficient: -2.0,
      group: "Physiological",
      modifiable: false,
    },
    {
      feature: "diabetes",
      question: "Diabetes mellitus?",
      points: 4.0,
      source_coefficient: 4.0,
      group: "Physiological",
      modifiable: false,
    },
    {
      feature: "HR_TT_89_95",
      question: "Heart rate during thyrotoxicosis between 89 and 95?",
      points: 3.0,
      source_coefficient: 3.0,
      group: "CardioDuringTT",
      modifiable: false,
    },
    {
      feature: "thyroidectomy_thyrostatic",
      question: "Thyrotoxicosis treated by thyroidectomy with thyrostatic therapy?",
      points: 2.0,
      source_coefficient: 2.0,
      group: "TTCharacteristics",
      modifiable: true,
    },
    {
      feature: "male",
      question: "Male?",
      points: 2.0,
      source_coefficient: 2.0,
      group: "Physiological",
      modifiable: false,
    },
    {
      feature: "no_pulse_reducing",
      question: "No pulse-reducing therapy during thyrotoxicosis?",
      points: 2.0,
      source_coefficient: 2.0,
      group: "CardioDuringTT",
      modifiable: true,
    },
    {
      feature: "impaired_glucose_tolerance",
      question: "Impaired glucose tolerance?",
      points: 2.0,
      source_coefficient: 2.0,
      group: "Physiological",
      modifiable: false,
    },
    {
      feature: "VE_during_TT",
      question: "Ventricular extrasystole appeared during thyrotoxicosis?",
      points: 2.0,
      source_coefficient: 2.0,
      group: "CardioDuringTT",
      modifiable: false,
    },
    {
      feature: "DTST_gt_40",
      question: "Thyrostatic therapy lasting over 40 months?",
      points: 2.0,
      source_coefficient: 2.0,
      group: "TTCharacteristics",
      modifiable: true,
    },
    {
      feature: "TTRTP_lt_77",
      question: "Radical treatment within 77 months of thyrotoxicosis onset?",
      points: 2.0,
      source_coefficient: 2.0,
      group: "TTCharacteristics",
      modifiable: true,
    },
  ],
  metadata: {
    feature_count: 17,
    fit_date: null,
    fitted: false,
    source: "illustrative literature-derived preset; points are not fitted to any dataset",
    source_config: null,
  },
};

export const PRESET_SCALE: ScaleDocument = parseScaleDocument(PRESET_SCALE_RAW);
