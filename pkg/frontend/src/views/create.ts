// Create view: left presets, center idea-to-prompt panel with guardrail
// notices, right 2x2 canvas with refine/save. Prompt text is always the
// server's; the client only displays and re-submits it.

import { StudioApi, type Job, type TagCategory } from "../api";
import { THEMES, type StudioStore } from "../state";
import { renderNotices } from "../notices";
import { pick, t } from "../i18n";

const POLL_INTERVAL_MS = 1000;

export interface CreateViewHooks {
  pollInterval?: number;
  onJobDone?: (job: Job) => void;
}

export async function renderCreate(
  root: HTMLElement,
  api: StudioApi,
  store: StudioStore,
  sessionId: string,
  hooks: CreateViewHooks = {},
): Promise<void> {
  const lang = store.get().language;
  root.innerHTML = "";

  const presets = document.createElement("aside");
  presets.className = "preset-column";
  const center = document.createElement("section");
  center.className = "idea-column";
  const canvas = document.createElement("section");
  canvas.className = "canvas-column";
  root.append(presets, center, canvas);

  // theme picker
  const themeSelect = document.createElement("select");
  themeSelect.className = "theme-select";
  for (const theme of THEMES) {
    const option = document.createElement("option");
    option.value = theme;
    option.textContent = theme;
    themeSelect.appendChild(option);
  }
  themeSelect.value = store.get().theme;
  themeSelect.addEventListener("change", () => store.setTheme(themeSelect.value));
  presets.appendChild(themeSelect);

  // tag presets
  const categories = await api.listCategories();
  for (const category of categories) {
    presets.appendChild(renderCategoryPicker(category, store, lang));
  }

  // idea panel
  const idea = document.createElement("textarea");
  idea.className = "idea-input";
  idea.placeholder = t("idea_placeholder", lang);
  idea.value = store.get().ideaDraft;
  idea.addEventListener("input", () => store.setIdea(idea.value));

  const validateButton = document.createElement("button");
  validateButton.type = "button";
  validateButton.className = "validate-button";
  validateButton.textContent = t("validate", lang);

  const noticesBox = document.createElement("div");
  noticesBox.className = "notices";
  const promptView = document.createElement("pre");
  promptView.className = "prompt-view";

  const generateButton = document.createElement("button");
  generateButton.type = "button";
  generateButton.className = "generate-button";
  generateButton.textContent = t("confirm_generate", lang);
  generateButton.disabled = true;

  center.append(idea, validateButton, noticesBox, promptView, generateButton);

  const grid = document.createElement("div");
  grid.className = "image-grid";
  const status = document.createElement("p");
  status.className = "job-status";
  canvas.append(status, grid);

  async function runValidation() {
    const state = store.get();
    const submitted = state.ideaDraft;
    try {
      const response = await api.validate({
        theme: state.theme,
        tags: state.tagDraft,
        interior: state.interior,
        site_id: state.siteId,
        idea: submitted,
      });
      store.recordValidation(response.outcome, response.scaffolded_prompt.rendered);
      promptView.textContent = response.scaffolded_prompt.rendered;
      noticesBox.innerHTML = "";
      for (const el of renderNotices(response.outcome, submitted, lang, (alternative) => {
        store.patchIdea(alternative);
        idea.value = alternative;
      })) {
        noticesBox.appendChild(el);
      }
      generateButton.disabled = !store.canGenerate();
    } catch (err) {
      noticesBox.innerHTML = "";
      const error = document.createElement("p");
      error.className = "api-error";
      error.textContent = String(err);
      noticesBox.appendChild(error);
    }
  }

  async function pollUntilDone(jobId: string): Promise<Job> {
    const interval = hooks.pollInterval ?? POLL_INTERVAL_MS;
    for (;;) {
      const job = await api.job(jobId);
      store.updateJob(job);
      if (job.status === "Done" || job.status === "Failed") return job;
      await new Promise((resolve) => setTimeout(resolve, interval));
    }
  }

  function fillGrid(job: Job, parentControls: boolean) {
    grid.innerHTML = "";
    for (const imageId of job.image_ids) {
      const cell = document.createElement("figure");
      cell.className = "grid-cell";
      const img = document.createElement("img");
      img.src = api.imageUrl(imageId);
      img.alt = imageId;
      cell.appendChild(img);
      if (parentControls) {
        const refine = document.createElement("button");
        refine.type = "button";
        refine.className = "refine-button";
        refine.textContent = t("refine", lang);
        refine.addEventListener("click", () => void runGeneration(imageId));
        const save = document.createElement("button");
        save.type = "button";
        save.className = "save-button";
        save.textContent = t("save", lang);
        save.addEventListener("click", () => {
          const creationId = store.get().creationId;
          if (creationId != null) void api.saveImage(sessionId, creationId, imageId);
        });
        cell.append(refine, save);
      }
      grid.appendChild(cell);
    }
  }

  async function runGeneration(parentImageId?: string) {
    const state = store.get();
    if (!store.canGenerate()) return;
    status.textContent = t("generating", lang);
    try {
      const response = await api.generate({
        session_id: sessionId,
        theme: state.theme,
        tags: state.tagDraft,
        interior: state.interior,
        site_id: state.siteId,
        confirmed_prompt: state.confirmedPrompt,
        idea: state.ideaDraft,
        parent_image_id: parentImageId,
        creation_id: parentImageId ? (state.creationId ?? undefined) : undefined,
      });
      // display the server's (possibly corrected) prompt, never our own copy
      promptView.textContent = response.prompt;
      store.startJob(
        { job_id: response.job_id, status: "Queued", image_ids: [], failure_reason: "" },
        response.creation_id,
      );
      const job = await pollUntilDone(response.job_id);
      if (job.status === "Failed") {
        status.textContent = `${job.failure_reason} `;
        const retry = document.createElement("button");
        retry.type = "button";
        retry.textContent = t("retry", lang);
        retry.addEventListener("click", () => void runGeneration(parentImageId));
        status.appendChild(retry);
        return;
      }
      status.textContent = "";
      fillGrid(job, true);
      hooks.onJobDone?.(job);
    } catch (err) {
      status.textContent = navigator.onLine === false ? t("offline_generation", lang) : String(err);
    }
  }

  validateButton.addEventListener("click", () => void runValidation());
  generateButton.addEventListener("click", () => void runGeneration());
  store.subscribe(() => {
    generateButton.disabled = !store.canGenerate();
  });
}

function renderCategoryPicker(
  category: TagCategory,
  store: StudioStore,
  lang: "zh" | "en",
): HTMLElement {
  const wrap = document.createElement("fieldset");
  wrap.className = "category-picker";
  wrap.dataset.categoryId = category.category_id;
  const legend = document.createElement("legend");
  legend.textContent = pick(category.name, lang);
  wrap.appendChild(legend);
  const select = document.createElement("select");
  if (category.selection_rule === "at-most-one") {
    const none = document.createElement("option");
    none.value = "";
    none.textContent = "-";
    select.appendChild(none);
  }
  for (const option of category.options) {
    const el = document.createElement("option");
    el.value = option.option_id;
    el.textContent = pick(option.label, lang);
    select.appendChild(el);
  }
  const current = store.get().tagDraft[category.category_id];
  if (current) select.value = current;
  select.addEventListener("change", () => {
    if (select.value) store.setTag(category.category_id, select.value);
    else store.clearTag(category.category_id);
  });
  wrap.appendChild(select);
  return wrap;
}
