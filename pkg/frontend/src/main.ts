// Entry point: router, session bootstrap, accessibility flags, service worker.

import { StudioApi } from "./api";
import { StudioStore, accessibilityClasses, type Section } from "./state";
import { renderKnowledge } from "./views/knowledge";
import { renderCreate } from "./views/create";
import { renderGallery } from "./views/gallery";
import { t } from "./i18n";

const api = new StudioApi();
const store = new StudioStore();

async function main() {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app root");

  const sessionId = await api.createSession(store.get().language);

  const header = document.createElement("header");
  header.className = "studio-header";
  const nav = document.createElement("nav");
  for (const section of ["knowledge", "create", "gallery"] as Section[]) {
    const button = document.createElement("button");
    button.type = "button";
    button.dataset.section = section;
    button.textContent = t(section, store.get().language);
    button.addEventListener("click", () => store.goTo(section));
    nav.appendChild(button);
  }

  const langToggle = document.createElement("button");
  langToggle.type = "button";
  langToggle.className = "lang-toggle";
  langToggle.textContent = "中/EN";
  langToggle.addEventListener("click", () =>
    store.setLanguage(store.get().language === "zh" ? "en" : "zh"),
  );

  const largeText = document.createElement("button");
  largeText.type = "button";
  largeText.textContent = t("large_text", store.get().language);
  largeText.addEventListener("click", () => store.setLargeText(!store.get().largeText));

  const highContrast = document.createElement("button");
  highContrast.type = "button";
  highContrast.textContent = t("high_contrast", store.get().language);
  highContrast.addEventListener("click", () => store.setHighContrast(!store.get().highContrast));

  header.append(nav, langToggle, largeText, highContrast);
  const view = document.createElement("main");
  view.id = "view";
  root.append(header, view);

  let renderedFor = "";
  async function render() {
    const state = store.get();
    document.documentElement.className = accessibilityClasses(state).join(" ");
    const key = `${state.section}:${state.language}`;
    if (key === renderedFor) return; // draft edits do not re-render the whole view
    renderedFor = key;
    if (state.section === "knowledge") await renderKnowledge(view, api, store);
    else if (state.section === "create") await renderCreate(view, api, store, sessionId);
    else await renderGallery(view, api, store, sessionId);
  }

  store.subscribe(() => void render());
  await render();

  if ("serviceWorker" in navigator) {
    try {
      await navigator.serviceWorker.register("/assets/sw.js");
    } catch {
      // offline shell is best-effort; the app works without it
    }
  }
}

void main();
