import type { Bilingual } from "./api";
import type { Lang } from "./state";

export function pick(text: Bilingual, lang: Lang): string {
  if (lang === "zh") return text.zh;
  return text.en || text.zh;
}

const STRINGS: Record<string, Bilingual> = {
  knowledge: { zh: "知识", en: "Knowledge" },
  create: { zh: "创作", en: "Create" },
  gallery: { zh: "作品集", en: "Gallery" },
  idea_placeholder: { zh: "描述你想看到的场景……", en: "Describe the scene you imagine..." },
  validate: { zh: "生成提示词", en: "Build prompt" },
  confirm_generate: { zh: "确认并生成", en: "Confirm and generate" },
  refine: { zh: "细化这张图", en: "Refine this image" },
  save: { zh: "保存", en: "Save" },
  export_card: { zh: "导出展览卡", en: "Export exhibit card" },
  generating: { zh: "生成中……", en: "Generating..." },
  offline_generation: {
    zh: "图像生成需要网络连接",
    en: "Generation requires connectivity",
  },
  empty_gallery: { zh: "还没有作品，去创作吧！", en: "No creations yet; go create!" },
  guardrail_notice: { zh: "真实性提示", en: "Authenticity notice" },
  alternatives: { zh: "可替换为：", en: "Try instead:" },
  ask_persona: { zh: "向黄璧秀提问……", en: "Ask Huang Bixiu..." },
  large_text: { zh: "大字号", en: "Large text" },
  high_contrast: { zh: "高对比度", en: "High contrast" },
  retry: { zh: "重试", en: "Retry" },
};

export function t(key: string, lang: Lang): string {
  const entry = STRINGS[key];
  if (!entry) return key;
  return pick(entry, lang);
}
