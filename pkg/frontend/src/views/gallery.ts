// Gallery view: past creations in creation-id order with exhibit-card export.

import { StudioApi, type CreationView } from "../api";
import type { StudioStore } from "../state";
import { t } from "../i18n";

export async function renderGallery(
  root: HTMLElement,
  api: StudioApi,
  store: StudioStore,
  sessionId: string,
): Promise<void> {
  const lang = store.get().language;
  root.innerHTML = "";
  let creations: CreationView[];
  try {
    creations = await api.creations(sessionId);
  } catch (err) {
    root.textContent = String(err);
    return;
  }
  if (creations.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = t("empty_gallery", lang);
    root.appendChild(empty);
    return;
  }
  const list = document.createElement("ol");
  list.className = "creation-list";
  for (const creation of creations) {
    list.appendChild(renderCreation(creation, api, sessionId, lang));
  }
  root.appendChild(list);
}

function renderCreation(
  creation: CreationView,
  api: StudioApi,
  sessionId: string,
  lang: "zh" | "en",
): HTMLElement {
  const item = document.createElement("li");
  item.className = "creation-entry";
  item.dataset.creationId = String(creation.creation_id);

  const heading = document.createElement("h3");
  heading.textContent = `#${creation.creation_id} — ${creation.theme}`;
  item.appendChild(heading);

  const thumbs = document.createElement("div");
  thumbs.className = "saved-thumbs";
  for (const imageId of creation.saved_image_ids) {
    const img = document.createElement("img");
    img.src = api.imageUrl(imageId);
    img.alt = imageId;
    thumbs.appendChild(img);
  }
  item.appendChild(thumbs);

  if (creation.iterations.length > 0) {
    const prompt = document.createElement("details");
    const summary = document.createElement("summary");
    summary.textContent = `${creation.iterations.length} iterations`;
    prompt.appendChild(summary);
    const text = document.createElement("pre");
    text.textContent = creation.iterations[creation.iterations.length - 1].final_prompt;
    prompt.appendChild(text);
    item.appendChild(prompt);
  }

  if (creation.saved_image_ids.length > 0) {
    const link = document.createElement("a");
    link.className = "export-card";
    link.textContent = t("export_card", lang);
    link.href = api.exhibitCardUrl(sessionId, creation.creation_id, creation.saved_image_ids[0]);
    link.download = `exhibit-card-${creation.creation_id}.html`;
    item.appendChild(link);
  }
  return item;
}
