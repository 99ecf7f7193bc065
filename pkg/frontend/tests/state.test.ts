import { describe, expect, it } from "vitest";

import { StudioStore, accessibilityClasses } from "../src/state";
import type { Outcome } from "../src/api";

const OUTCOME: Outcome = {
  status: "Accepted",
  violations: [],
  normalized_idea: "a market scene",
  provenance_trace: [],
};

describe("StudioStore", () => {
  it("cannot generate without a server-confirmed prompt", () => {
    const store = new StudioStore();
    store.setIdea("a market scene");
    expect(store.canGenerate()).toBe(false);
    expect(() =>
      store.startJob({ job_id: "j", status: "Queued", image_ids: [], failure_reason: "" }, 1),
    ).toThrow(/confirmed/);
  });

  it("confirmation unlocks generate", () => {
    const store = new StudioStore();
    store.recordValidation(OUTCOME, "server rendered prompt");
    expect(store.canGenerate()).toBe(true);
  });

  it("editing the idea invalidates the confirmation", () => {
    const store = new StudioStore();
    store.recordValidation(OUTCOME, "server rendered prompt");
    store.setIdea("something else");
    expect(store.canGenerate()).toBe(false);
  });

  it("changing tags or theme invalidates the confirmation", () => {
    const store = new StudioStore();
    store.recordValidation(OUTCOME, "prompt");
    store.setTag("viewpoint", "medium");
    expect(store.canGenerate()).toBe(false);
    store.recordValidation(OUTCOME, "prompt");
    store.setTheme("risk-estimation");
    expect(store.canGenerate()).toBe(false);
  });

  it("language toggle never loses drafts", () => {
    const store = new StudioStore();
    store.setIdea("my idea draft");
    store.setTag("viewpoint", "close-up");
    store.setLanguage("en");
    expect(store.get().ideaDraft).toBe("my idea draft");
    expect(store.get().tagDraft.viewpoint).toBe("close-up");
    store.setLanguage("zh");
    expect(store.get().ideaDraft).toBe("my idea draft");
  });

  it("patching from an alternative replaces the idea draft", () => {
    const store = new StudioStore();
    store.setIdea("an alien attack");
    store.patchIdea("bandits approaching at dusk");
    expect(store.get().ideaDraft).toBe("bandits approaching at dusk");
  });

  it("notifies subscribers on every change", () => {
    const store = new StudioStore();
    let calls = 0;
    const unsubscribe = store.subscribe(() => (calls += 1));
    store.setIdea("a");
    store.setLanguage("en");
    unsubscribe();
    store.setIdea("b");
    expect(calls).toBe(2);
  });

  it("rejects unknown themes", () => {
    const store = new StudioStore();
    expect(() => store.setTheme("not-a-theme")).toThrow(/unknown theme/);
  });
});

describe("accessibility flags", () => {
  it("map to root classes for every view", () => {
    const store = new StudioStore();
    expect(accessibilityClasses(store.get())).toEqual([]);
    store.setLargeText(true);
    expect(accessibilityClasses(store.get())).toEqual(["large-text"]);
    store.setHighContrast(true);
    expect(accessibilityClasses(store.get())).toEqual(["large-text", "high-contrast"]);
  });
});
