/** Readers for the two documents the questionnaire consumes: the scale
 * definition ("tafrisk-scale") and the golden answer vectors
 * ("tafrisk-scale-vectors") used to prove scoring parity. */

export const SCALE_FORMAT = "tafrisk-scale";
export const VECTORS_FORMAT = "tafrisk-scale-vectors";
export const SUPPORTED_VERSION = 1;

export interface BandThresholds {
  readonly low_max: number;
  readonly average_max: number;
  readonly high_max: number;
}

export interface BandInfo {
  readonly name: string;
  readonly range: string;
}

export interface ScaleItem {
  readonly feature: string;
  readonly question: string;
  readonly points: number;
  readonly source_coefficient: number;
  readonly group: string | null;
  readonly modifiable: boolean;
}

export interface ScaleDocument {
  readonly format: typeof SCALE_FORMAT;
  readonly version: typeof SUPPORTED_VERSION;
  readonly band_thresholds: BandThresholds;
  readonly bands: readonly BandInfo[];
  readonly items: readonly ScaleItem[];
  readonly metadata: Readonly<Record<string, unknown>>;
}

export type Answer = 0 | 1;
export type AnswerSheet = Readonly<Record<string, Answer>>;

export interface GoldenVector {
  readonly answers: AnswerSheet;
  readonly score: number;
  readonly band: string;
}

export interface VectorsDocument {
  readonly format: typeof VECTORS_FORMAT;
  readonly version: typeof SUPPORTED_VERSION;
  readonly seed: number;
  readonly n_items: number;
  readonly vectors: readonly GoldenVector[];
}

export class DocumentError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "DocumentError";
  }
}

function asRecord(raw: unknown, what: string): Record<string, unknown> {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new DocumentError(`${what} must be a JSON object`);
  }
  return raw as Record<string, unknown>;
}

function requireNumber(value: unknown, what: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new DocumentError(`${what} must be a finite number, got ${JSON.stringify(value)}`);
  }
  return value;
}

function requireString(value: unknown, what: string): string {
  if (typeof value !== "string" || value.length === 0) {
    throw new DocumentError(`${what} must be a non-empty string`);
  }
  return value;
}

function checkEnvelope(doc: Record<string, unknown>, format: string): void {
  if (doc.format !== format) {
    throw new DocumentError(`not a ${format} document (format = ${JSON.stringify(doc.format)})`);
  }
  if (doc.version !== SUPPORTED_VERSION) {
    throw new DocumentError(`unsupported ${format} version ${JSON.stringify(doc.version)}`);
  }
}

function parseThresholds(raw: unknown): BandThresholds {
  const rec = asRecord(raw, "band_thresholds");
  const low = requireNumber(rec.low_max, "band_thresholds.low_max");
  const average = requireNumber(rec.average_max, "band_thresholds.average_max");
  const high = requireNumber(rec.high_max, "band_thresholds.high_max");
  if (!(low < average && average < high)) {
    throw new DocumentError(`band thresholds must increase: ${low}, ${average}, ${high}`);
  }
  return { low_max: low, average_max: average, high_max: high };
}

function parseItem(raw: unknown, index: number): ScaleItem {
  const rec = asRecord(raw, `items[${index}]`);
  const group = rec.group ?? null;
  if (group !== null && typeof group !== "string") {
    throw new DocumentError(`items[${index}].group must be a string or null`);
  }
  return {
    feature: requireString(rec.feature, `items[${index}].feature`),
    question: requireString(rec.question, `items[${index}].question`),
    points: requireNumber(rec.points, `items[${index}].points`),
    source_coefficient: requireNumber(
      rec.source_coefficient,
      `items[${index}].source_coefficient`,
    ),
    group,
    modifiable: rec.modifiable === true,
  };
}

export function parseScaleDocument(raw: unknown): ScaleDocument {
  const doc = asRecord(raw, "scale document");
  checkEnvelope(doc, SCALE_FORMAT);
  if (!Array.isArray(doc.items) || doc.items.length === 0) {
    throw new DocumentError("scale document needs a non-empty items array");
  }
  const items = doc.items.map(parseItem);
  const seen = new Set<string>();
  for (const item of items) {
    if (seen.has(item.feature)) {
      throw new DocumentError(`duplicate scale feature ${JSON.stringify(item.feature)}`);
    }
    seen.add(item.feature);
  }
  const bandsRaw = Array.isArray(doc.bands) ? doc.bands : [];
  const bands = bandsRaw.map((b, i) => {
    const rec = asRecord(b, `bands[${i}]`);
    return {
      name: requireString(rec.name, `bands[${i}].name`),
      range: requireString(rec.range, `bands[${i}].range`),
    };
  });
  return {
    format: SCALE_FORMAT,
    version: SUPPORTED_VERSION,
    band_thresholds: parseThresholds(doc.band_thresholds),
    bands,
    items,
    metadata: asRecord(doc.metadata ?? {}, "metadata"),
  };
}

function parseVector(raw: unknown, index: number): GoldenVector {
  const rec = asRecord(raw, `vectors[${index}]`);
  const answersRec = asRecord(rec.answers, `vectors[${index}].answers`);
  const answers: Record<string, Answer> = {};
  for (const [feature, value] of Object.entries(answersRec)) {
    if (value !== 0 && value !== 1) {
      throw new DocumentError(
        `vectors[${index}].answers[${JSON.stringify(feature)}] must be 0 or 1`,
      );
    }
    answers[feature] = value;
  }
  return {
    answers,
    score: requireNumber(rec.score, `vectors[${index}].score`),
    band: requireString(rec.band, `vectors[${index}].band`),
  };
}

export function parseVectorsDocument(raw: unknown): VectorsDocument {
  const doc = asRecord(raw, "vectors document");
  checkEnvelope(doc, VECTORS_FORMAT);
  if (!Array.isArray(doc.vectors)) {
    throw new DocumentError("vectors document needs a vectors array");
  }
  return {
    format: VECTORS_FORMAT,
    version: SUPPORTED_VERSION,
    seed: requireNumber(doc.seed, "seed"),
    n_items: requireNumber(doc.n_items, "n_items"),
    vectors: doc.vectors.map(parseVector),
  };
}
