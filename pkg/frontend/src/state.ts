// Central studio state. The create flow cannot reach the generate action
// without a server-confirmed prompt, and toggling language never loses drafts.

import type { Job, Outcome } from "./api";

export type Section = "knowledge" | "create" | "gallery";
export type Lang = "zh" | "en";

export interface StudioState {
  section: Section;
  theme: string;
  tagDraft: Record<string, string>;
  interior: boolean;
  siteId: string;
  ideaDraft: string;
  lastOutcome: Outcome | null;
  confirmedPrompt: string; // always verbatim from a server response
  activeJob: Job | null;
  creationId: number | null;
  language: Lang;
  largeText: boolean;
  highContrast: boolean;
}

export type Listener = (state: StudioState) => void;

export const THEMES = [
  "historical-reconstruction",
  "risk-estimation",
  "future-preservation",
];

export function initialState(): StudioState {
  return {
    section: "knowledge",
    theme: THEMES[0],
    tagDraft: {},
    interior: false,
    siteId: "ruishi-lou",
    ideaDraft: "",
    lastOutcome: null,
    confirmedPrompt: "",
    activeJob: null,
    creationId: null,
    language: "zh",
    largeText: false,
    highContrast: false,
  };
}

export class StudioStore {
  private state: StudioState = initialState();
  private listeners: Listener[] = [];

  get(): StudioState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private update(patch: Partial<StudioState>) {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  goTo(section: Section) {
    this.update({ section });
  }

  setTheme(theme: string) {
    if (!THEMES.includes(theme)) throw new Error(`unknown theme: ${theme}`);
    // a new theme invalidates any confirmed prompt, not the drafts
    this.update({ theme, lastOutcome: null, confirmedPrompt: "" });
  }

  setTag(categoryId: string, optionId: string) {
    const tagDraft = { ...this.state.tagDraft, [categoryId]: optionId };
    this.update({ tagDraft, lastOutcome: null, confirmedPrompt: "" });
  }

  clearTag(categoryId: string) {
    const tagDraft = { ...this.state.tagDraft };
    delete tagDraft[categoryId];
    this.update({ tagDraft, lastOutcome: null, confirmedPrompt: "" });
  }

  setInterior(interior: boolean) {
    this.update({ interior, lastOutcome: null, confirmedPrompt: "" });
  }

  setSite(siteId: string) {
    this.update({ siteId, lastOutcome: null, confirmedPrompt: "" });
  }

  setIdea(ideaDraft: string) {
    // editing the idea invalidates the previous confirmation
    this.update({ ideaDraft, confirmedPrompt: "" });
  }

  patchIdea(alternative: string) {
    // clicking a guardrail alternative replaces the draft with the suggestion
    this.setIdea(alternative);
  }

  recordValidation(outcome: Outcome, renderedPrompt: string) {
    this.update({ lastOutcome: outcome, confirmedPrompt: renderedPrompt });
  }

  canGenerate(): boolean {
    return this.state.confirmedPrompt.length > 0;
  }

  startJob(job: Job, creationId: number) {
    if (!this.canGenerate()) {
      throw new Error("generate requires a server-confirmed prompt");
    }
    this.update({ activeJob: job, creationId });
  }

  updateJob(job: Job) {
    this.update({ activeJob: job });
  }

  setLanguage(language: Lang) {
    this.update({ language }); // drafts untouched by design
  }

  setLargeText(largeText: boolean) {
    this.update({ largeText });
  }

  setHighContrast(highContrast: boolean) {
    this.update({ highContrast });
  }
}

/** CSS classes for the accessibility flags; applied to the document root. */
export function accessibilityClasses(state: StudioState): string[] {
  const classes: string[] = [];
  if (state.largeText) classes.push("large-text");
  if (state.highContrast) classes.push("high-contrast");
  return classes;
}
