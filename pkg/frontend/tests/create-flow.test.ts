// Drives the create flow against the fake gateway: an "alien attack" idea
// surfaces exactly one guardrail notice whose alternative patches the draft,
// and a confirmed prompt yields a 4-image grid.

import { beforeEach, describe, expect, it } from "vitest";

import { StudioApi } from "../src/api";
import { StudioStore } from "../src/state";
import { renderCreate } from "../src/views/create";
import { makeFakeFetch, type FakeServerLog } from "./fake-server";

let root: HTMLElement;
let store: StudioStore;
let api: StudioApi;
let log: FakeServerLog;

function click(selector: string) {
  const el = root.querySelector<HTMLElement>(selector);
  expect(el, selector).not.toBeNull();
  el!.click();
}

async function settle() {
  // let queued microtasks and the fast poll timer run
  await new Promise((resolve) => setTimeout(resolve, 30));
}

beforeEach(async () => {
  document.body.innerHTML = '<div id="root"></div>';
  root = document.getElementById("root")!;
  log = { generateBodies: [] };
  api = new StudioApi("", makeFakeFetch(log));
  store = new StudioStore();
  store.setLanguage("en");
  store.goTo("create");
  await renderCreate(root, api, store, "test-session", { pollInterval: 1 });
});

describe("create flow", () => {
  it("alien attack idea surfaces exactly one notice with an alternative", async () => {
    const idea = root.querySelector<HTMLTextAreaElement>(".idea-input")!;
    idea.value = "an alien attack";
    idea.dispatchEvent(new Event("input"));
    click(".validate-button");
    await settle();

    const notices = root.querySelectorAll(".guardrail-notice");
    expect(notices).toHaveLength(1);
    expect(notices[0].querySelectorAll("button.alternative").length).toBeGreaterThan(0);
  });

  it("clicking the alternative patches the idea draft", async () => {
    const idea = root.querySelector<HTMLTextAreaElement>(".idea-input")!;
    idea.value = "an alien attack";
    idea.dispatchEvent(new Event("input"));
    click(".validate-button");
    await settle();

    click("button.alternative");
    expect(store.get().ideaDraft).toBe("bandits approaching across the rice fields at dusk");
    expect(idea.value).toBe("bandits approaching across the rice fields at dusk");
  });

  it("generate stays disabled until the server confirms a prompt", async () => {
    const generate = root.querySelector<HTMLButtonElement>(".generate-button")!;
    expect(generate.disabled).toBe(true);
    const idea = root.querySelector<HTMLTextAreaElement>(".idea-input")!;
    idea.value = "a morning market";
    idea.dispatchEvent(new Event("input"));
    click(".validate-button");
    await settle();
    expect(generate.disabled).toBe(false);
  });

  it("confirming renders a 4-image grid from the job", async () => {
    const idea = root.querySelector<HTMLTextAreaElement>(".idea-input")!;
    idea.value = "a morning market";
    idea.dispatchEvent(new Event("input"));
    click(".validate-button");
    await settle();
    click(".generate-button");
    await settle();
    await settle();

    const images = root.querySelectorAll(".image-grid img");
    expect(images).toHaveLength(4);
    expect(root.querySelectorAll(".image-grid .refine-button")).toHaveLength(4);
  });

  it("client honesty: the generated prompt body is the server's verbatim", async () => {
    const idea = root.querySelector<HTMLTextAreaElement>(".idea-input")!;
    idea.value = "a morning market";
    idea.dispatchEvent(new Event("input"));
    click(".validate-button");
    await settle();
    const shown = root.querySelector(".prompt-view")!.textContent!;
    click(".generate-button");
    await settle();

    const sent = log.generateBodies[0] as { confirmed_prompt: string };
    expect(sent.confirmed_prompt).toBe(shown);
    expect(shown).toContain("1930s historical period");
  });
});
