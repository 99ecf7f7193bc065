// Knowledge view: section content with persona narration, a taxonomy
// navigator, and the persona chat panel.

import { StudioApi, type KnowledgeSection, type TagCategory } from "../api";
import type { StudioStore } from "../state";
import { pick, t } from "../i18n";

const SECTION_IDS = ["background", "historical-reconstruction", "speculative-futures"];

export async function renderKnowledge(
  root: HTMLElement,
  api: StudioApi,
  store: StudioStore,
): Promise<void> {
  const lang = store.get().language;
  root.innerHTML = "";

  const nav = document.createElement("nav");
  nav.className = "section-nav";
  const content = document.createElement("article");
  content.className = "knowledge-content";
  root.append(nav, content);

  async function showSection(sectionId: string) {
    let section: KnowledgeSection;
    try {
      section = await api.knowledge(sectionId);
    } catch {
      content.innerHTML = `<p class="offline-error">${t("offline_generation", lang)}</p>`;
      return;
    }
    content.innerHTML = "";
    const title = document.createElement("h2");
    title.textContent = pick(section.title, lang);
    const narration = document.createElement("blockquote");
    narration.className = "persona-narration";
    narration.textContent = pick(section.narration, lang);
    const body = document.createElement("p");
    body.textContent = pick(section.body, lang);
    content.append(title, narration, body);

    if (section.categories.length > 0) {
      content.appendChild(await renderTaxonomyNavigator(api, section.categories, lang));
    }
  }

  for (const sectionId of SECTION_IDS) {
    const button = document.createElement("button");
    button.type = "button";
    button.dataset.sectionId = sectionId;
    button.textContent = sectionId;
    button.addEventListener("click", () => void showSection(sectionId));
    nav.appendChild(button);
  }

  root.appendChild(renderChatPanel(api, store));
  await showSection(SECTION_IDS[0]);
}

async function renderTaxonomyNavigator(
  api: StudioApi,
  categoryIds: string[],
  lang: "zh" | "en",
): Promise<HTMLElement> {
  const wrap = document.createElement("section");
  wrap.className = "taxonomy-navigator";
  const categories = await api.listCategories();
  for (const category of categories.filter((c: TagCategory) => categoryIds.includes(c.category_id))) {
    const details = document.createElement("details");
    const summary = document.createElement("summary");
    summary.textContent = pick(category.name, lang);
    details.appendChild(summary);
    const list = document.createElement("ul");
    for (const option of category.options) {
      const item = document.createElement("li");
      item.textContent = `${pick(option.label, lang)}: ${option.specification_text}`;
      list.appendChild(item);
    }
    details.appendChild(list);
    wrap.appendChild(details);
  }
  return wrap;
}

export function renderChatPanel(api: StudioApi, store: StudioStore): HTMLElement {
  const lang = store.get().language;
  const panel = document.createElement("aside");
  panel.className = "chat-panel";
  const log = document.createElement("div");
  log.className = "chat-log";
  const input = document.createElement("input");
  input.placeholder = t("ask_persona", lang);
  const send = document.createElement("button");
  send.type = "button";
  send.textContent = ">";

  async function ask() {
    const question = input.value.trim();
    if (!question) return;
    input.value = "";
    appendTurn(log, "user", question, []);
    try {
      const turn = await api.personaChat(question, lang);
      appendTurn(log, "persona", turn.text, turn.cited_concept_ids);
    } catch (err) {
      appendTurn(log, "persona", String(err), []);
    }
  }

  send.addEventListener("click", () => void ask());
  input.addEventListener("keydown", (e) => {
    if (e.key === "Enter") void ask();
  });
  panel.append(log, input, send);
  return panel;
}

function appendTurn(log: HTMLElement, role: string, text: string, cited: string[]) {
  const bubble = document.createElement("div");
  bubble.className = `chat-turn ${role}`;
  bubble.textContent = text;
  if (cited.length > 0) {
    const citations = document.createElement("small");
    citations.className = "citations";
    citations.textContent = cited.join(", ");
    bubble.appendChild(citations);
  }
  log.appendChild(bubble);
}
