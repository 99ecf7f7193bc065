// Guardrail notices: one rendered notice per Violation in the last outcome,
// with the offending span highlighted and clickable alternatives.

import type { Outcome, Violation } from "./api";
import type { Lang } from "./state";
import { pick, t } from "./i18n";

export interface GuardrailNotice {
  tier: number;
  ruleId: string;
  explanation: string;
  highlighted: string; // the offending fragment of the submitted idea
  alternatives: string[];
}

export function buildNotices(outcome: Outcome, submittedIdea: string, lang: Lang): GuardrailNotice[] {
  return outcome.violations.map((v: Violation) => ({
    tier: v.tier,
    ruleId: v.rule_id,
    explanation: pick(v.explanation, lang),
    highlighted: submittedIdea.slice(v.span[0], v.span[1]),
    alternatives: lang === "zh" ? v.alternatives.zh : v.alternatives.en,
  }));
}

export function renderNotice(
  notice: GuardrailNotice,
  lang: Lang,
  onAlternative: (alternative: string) => void,
): HTMLElement {
  const box = document.createElement("div");
  box.className = "guardrail-notice";
  box.dataset.tier = String(notice.tier);
  box.dataset.ruleId = notice.ruleId;

  const title = document.createElement("strong");
  title.textContent = `${t("guardrail_notice", lang)} (Tier ${notice.tier})`;
  box.appendChild(title);

  if (notice.highlighted) {
    const mark = document.createElement("mark");
    mark.className = "offending-span";
    mark.textContent = notice.highlighted;
    box.appendChild(mark);
  }

  const explanation = document.createElement("p");
  explanation.textContent = notice.explanation;
  box.appendChild(explanation);

  if (notice.alternatives.length > 0) {
    const label = document.createElement("span");
    label.textContent = t("alternatives", lang);
    box.appendChild(label);
    for (const alternative of notice.alternatives) {
      const button = document.createElement("button");
      button.className = "alternative";
      button.type = "button";
      button.textContent = alternative;
      button.addEventListener("click", () => onAlternative(alternative));
      box.appendChild(button);
    }
  }
  return box;
}

export function renderNotices(
  outcome: Outcome,
  submittedIdea: string,
  lang: Lang,
  onAlternative: (alternative: string) => void,
): HTMLElement[] {
  return buildNotices(outcome, submittedIdea, lang).map((n) =>
    renderNotice(n, lang, onAlternative),
  );
}
