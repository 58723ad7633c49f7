/** DOM wiring: question list, live score panel, and the what-if view.
 *
 * The page starts on the built-in preset scale; any scale document
 * produced by the workbench can be loaded from disk. What-if overrides
 * are kept apart from the baseline sheet (see state.ts), so exploring
 * hypotheticals never alters the answers as given. */

import type { Answer, ScaleDocument, ScaleItem } from "./documents.js";
import { DocumentError, parseScaleDocument } from "./documents.js";
import { PRESET_SCALE } from "./preset.js";
import { minScore, maxScore, type Band } from "./scoring.js";
import { QuestionnaireState, type ScoreView } from "./state.js";

const BAND_CLASS: Record<Band, string> = {
  Low: "band-low",
  Average: "band-average",
  High: "band-high",
  VeryHigh: "band-veryhigh",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function formatPoints(points: number): string {
  return points > 0 ? `+${points}` : `${points}`;
}

function formatScore(score: number): string {
  return Object.is(score, -0) ? "0" : `${score}`;
}

/** Three-state control: yes / no / unanswered (or inherit, for what-if). */
function choiceGroup(
  labels: [string, string, string],
  current: Answer | null,
  onPick: (value: Answer | null) => void,
): HTMLElement {
  const group = el("div", "choice-group");
  const values: (Answer | null)[] = [1, 0, null];
  const buttons: HTMLButtonElement[] = [];
  values.forEach((value, i) => {
    const button = el("button", "choice", labels[i] as string);
    button.type = "button";
    if (value === current) {
      button.classList.add("active");
    }
    button.addEventListener("click", () => {
      buttons.forEach((b) => b.classList.remove("active"));
      button.classList.add("active");
      onPick(value);
    });
    buttons.push(button);
    group.appendChild(button);
  });
  return group;
}

function groupedItems(scale: ScaleDocument): Map<string, ScaleItem[]> {
  const groups = new Map<string, ScaleItem[]>();
  for (const item of scale.items) {
    const key = item.group ?? "Other";
    const bucket = groups.get(key);
    if (bucket) {
      bucket.push(item);
    } else {
      groups.set(key, [item]);
    }
  }
  return groups;
}

class App {
  private state: QuestionnaireState;
  private readonly root: HTMLElement;

  constructor(root: HTMLElement, scale: ScaleDocument) {
    this.root = root;
    this.state = new QuestionnaireState(scale);
    this.render();
  }

  loadScale(scale: ScaleDocument): void {
    this.state = new QuestionnaireState(scale);
    this.render();
  }

  private render(): void {
    this.root.replaceChildren(
      this.renderHeader(),
      this.renderColumns(),
    );
    this.refreshScores();
  }

  private renderHeader(): HTMLElement {
    const scale = this.state.scale;
    const header = el("header", "app-header");
    header.appendChild(el("h1", undefined, "Atrial-fibrillation risk questionnaire"));

    const fitted = scale.metadata.fitted === true;
    const sourceBits = [
      `${scale.items.length} items`,
      fitted ? "fitted scale" : "illustrative preset (not fitted)",
    ];
    const config = scale.metadata.source_config;
    if (typeof config === "string" && config) {
      sourceBits.push(`pipeline ${config}`);
    }
    sourceBits.push(`score range ${formatScore(minScore(scale))} to ${formatScore(maxScore(scale))}`);
    header.appendChild(el("p", "scale-source", sourceBits.join(" · ")));

    const controls = el("div", "header-controls");
    const presetButton = el("button", "secondary", "Use preset scale");
    presetButton.type = "button";
    presetButton.addEventListener("click", () => this.loadScale(PRESET_SCALE));
    controls.appendChild(presetButton);

    const fileLabel = el("label", "file-label", "Load scale JSON…");
    const fileInput = el("input");
    fileInput.type = "file";
    fileInput.accept = "application/json,.json";
    fileInput.addEventListener("change", () => {
      const file = fileInput.files?.[0];
      if (file) {
        void this.loadScaleFile(file);
      }
    });
    fileLabel.appendChild(fileInput);
    controls.appendChild(fileLabel);

    const error = el("p", "load-error");
    error.id = "load-error";
    error.hidden = true;
    controls.appendChild(error);

    header.appendChild(controls);
    return header;
  }

  private async loadScaleFile(file: File): Promise<void> {
    const errorNode = this.root.querySelector<HTMLElement>("#load-error");
    try {
      const scale = parseScaleDocument(JSON.parse(await file.text()));
      this.loadScale(scale);
    } catch (err) {
      if (errorNode) {
        errorNode.hidden = false;
        errorNode.textContent =
          err instanceof DocumentError || err instanceof SyntaxError
            ? `Could not load ${file.name}: ${err.message}`
            : `Could not load ${file.name}`;
      }
    }
  }

  private renderColumns(): HTMLElement {
    const columns = el("div", "columns");
    columns.appendChild(this.renderForm());
    const aside = el("aside", "panel-column");
    aside.appendChild(this.renderScorePanel());
    const whatIf = this.renderWhatIfPanel();
    if (whatIf) {
      aside.appendChild(whatIf);
    }
    columns.appendChild(aside);
    return columns;
  }

  private renderForm(): HTMLElement {
    const form = el("section", "question-list");
    for (const [group, items] of groupedItems(this.state.scale)) {
      const section = el("section", "question-group");
      section.appendChild(el("h2", undefined, group));
      for (const item of items) {
        section.appendChild(this.renderQuestion(item));
      }
      form.appendChild(section);
    }
    return form;
  }

  private renderQuestion(item: ScaleItem): HTMLElement {
    const row = el("div", "question");
    const label = el("div", "question-text");
    label.appendChild(el("span", undefined, item.question));
    const badge = el("span", `points ${item.points < 0 ? "protective" : "risk"}`);
    badge.textContent = formatPoints(item.points);
    badge.title = "points added for a yes answer";
    label.appendChild(badge);
    if (item.modifiable) {
      const flag = el("span", "modifiable-flag", "what-if");
      flag.title = "treatment-related: can be explored in the what-if panel";
      label.appendChild(flag);
    }
    row.appendChild(label);
    row.appendChild(
      choiceGroup(["Yes", "No", "–"], this.state.answerFor(item.feature), (value) => {
        this.state.setAnswer(item.feature, value);
        this.refreshScores();
        this.refreshWhatIfBaselines();
      }),
    );
    return row;
  }

  private renderScorePanel(): HTMLElement {
    const panel = el("section", "panel score-panel");
    panel.appendChild(el("h2", undefined, "Score"));
    const progress = el("p", "progress");
    progress.id = "progress";
    panel.appendChild(progress);
    const value = el("p", "score-value");
    value.id = "score-value";
    panel.appendChild(value);
    const band = el("p", "band-chip");
    band.id = "score-band";
    panel.appendChild(band);

    const legend = el("dl", "band-legend");
    for (const info of this.state.scale.bands) {
      legend.appendChild(el("dt", undefined, info.name));
      legend.appendChild(el("dd", undefined, info.range));
    }
    panel.appendChild(legend);
    return panel;
  }

  private renderWhatIfPanel(): HTMLElement | null {
    const features = this.state.modifiableFeatures();
    if (features.length === 0) {
      return null;
    }
    const panel = el("section", "panel whatif-panel");
    panel.appendChild(el("h2", undefined, "What if…"));
    panel.appendChild(
      el(
        "p",
        "hint",
        "Explore changes to treatment-related items. The answers above stay untouched.",
      ),
    );

    const byFeature = new Map(this.state.scale.items.map((i) => [i.feature, i]));
    for (const feature of features) {
      const item = byFeature.get(feature);
      if (!item) {
        continue;
      }
      const row = el("div", "question whatif-row");
      const label = el("div", "question-text");
      label.appendChild(el("span", undefined, item.question));
      const baseline = el("span", "baseline-answer");
      baseline.dataset.baselineFor = feature;
      label.appendChild(baseline);
      row.appendChild(label);
      row.appendChild(
        choiceGroup(["Yes", "No", "As answered"], this.state.overrideFor(feature), (value) => {
          this.state.setOverride(feature, value);
          this.refreshScores();
        }),
      );
      panel.appendChild(row);
    }

    const value = el("p", "score-value");
    value.id = "whatif-value";
    panel.appendChild(value);
    const band = el("p", "band-chip");
    band.id = "whatif-band";
    panel.appendChild(band);
    const delta = el("p", "whatif-delta");
    delta.id = "whatif-delta";
    panel.appendChild(delta);

    const reset = el("button", "secondary", "Reset what-if");
    reset.type = "button";
    reset.addEventListener("click", () => {
      this.state.clearOverrides();
      this.render();
    });
    panel.appendChild(reset);
    this.refreshWhatIfBaselines();
    return panel;
  }

  private setBandChip(id: string, view: ScoreView | null): void {
    const chip = this.root.querySelector<HTMLElement>(`#${id}`);
    if (!chip) {
      return;
    }
    chip.classList.remove(...Object.values(BAND_CLASS));
    if (view === null) {
      chip.textContent = "—";
    } else {
      chip.textContent = view.band;
      chip.classList.add(BAND_CLASS[view.band]);
    }
  }

  private refreshScores(): void {
    const total = this.state.scale.items.length;
    const answered = this.state.answeredCount();
    const progress = this.root.querySelector<HTMLElement>("#progress");
    if (progress) {
      progress.textContent =
        answered === total ? "All items answered" : `${answered} of ${total} items answered`;
    }

    const baseline = this.state.baselineView();
    const scoreNode = this.root.querySelector<HTMLElement>("#score-value");
    if (scoreNode) {
      scoreNode.textContent = baseline === null ? "–" : formatScore(baseline.score);
    }
    this.setBandChip("score-band", baseline);

    const whatIf = this.state.whatIfView();
    const whatIfNode = this.root.querySelector<HTMLElement>("#whatif-value");
    if (whatIfNode) {
      whatIfNode.textContent = whatIf === null ? "–" : formatScore(whatIf.score);
    }
    this.setBandChip("whatif-band", whatIf);

    const deltaNode = this.root.querySelector<HTMLElement>("#whatif-delta");
    if (deltaNode) {
      if (baseline !== null && whatIf !== null && this.state.hasOverrides()) {
        const delta = whatIf.score - baseline.score;
        deltaNode.textContent =
          delta === 0 ? "no change from the answers as given" : `${formatPoints(delta)} vs. answers as given`;
      } else {
        deltaNode.textContent = "";
      }
    }
  }

  private refreshWhatIfBaselines(): void {
    for (const node of this.root.querySelectorAll<HTMLElement>("[data-baseline-for]")) {
      const feature = node.dataset.baselineFor;
      if (!feature) {
        continue;
      }
      const answer = this.state.answerFor(feature);
      node.textContent =
        answer === null ? "unanswered" : answer === 1 ? "answered yes" : "answered no";
    }
  }
}

export function mount(root: HTMLElement, scale: ScaleDocument = PRESET_SCALE): App {
  return new App(root, scale);
}

const container = typeof document !== "undefined" ? document.getElementById("app") : null;
if (container) {
  mount(container);
}
