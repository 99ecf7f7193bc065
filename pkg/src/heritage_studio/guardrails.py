"""Three-tier authenticity guardrails: constraint profiles, tag validation,
idea normalization with tag precedence, and deterministic prompt assembly.

Everything here is a pure function of (corpus, inputs); the rejection lexicon
is data loaded from the corpus ``lexicon/`` directory, never code.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .corpus import CATEGORY_ORDER, Bilingual, Corpus, DiaolouSite, RuleEntry

MAX_NORMALIZE_PASSES = 5


class TaskTheme(str, Enum):
    HISTORICAL_RECONSTRUCTION = "historical-reconstruction"
    RISK_ESTIMATION = "risk-estimation"
    FUTURE_PRESERVATION = "future-preservation"


TEMPORAL_RULES = {
    TaskTheme.HISTORICAL_RECONSTRUCTION: "strict-1930s",
    TaskTheme.RISK_ESTIMATION: "present-or-near-future",
    TaskTheme.FUTURE_PRESERVATION: "speculative-future",
}

TEMPORAL_CLAUSES = {
    TaskTheme.HISTORICAL_RECONSTRUCTION: (
        "Every element of the scene must conform strictly to the 1930s historical period."
    ),
    TaskTheme.RISK_ESTIMATION: (
        "The scene may depict present-day or near-future conditions to show realistic threats."
    ),
    TaskTheme.FUTURE_PRESERVATION: (
        "The scene may depict a speculative future imagined for heritage preservation."
    ),
}

# Identical across all three themes by construction.
ARCHITECTURE_LOCK_CLAUSE = (
    "The Diaolou's fundamental structure, including its form, proportions, "
    "façade, roofline, and window positions, must remain recognizable and intact."
)
CULTURAL_CONTEXT_CLAUSE = (
    "The scene is set among the Diaolou villages of Kaiping, Guangdong, China, "
    "with figures and cultural elements consistent with Chinese cultural heritage."
)

ALLOWED_CONTENT = {
    TaskTheme.HISTORICAL_RECONSTRUCTION: (
        "1930s Kaiping rural life",
        "period-appropriate figures and objects",
        "interior decorative arts of the period",
    ),
    TaskTheme.RISK_ESTIMATION: (
        "water damage and weathering",
        "structural deterioration and foundation issues",
        "visitor impact and environmental threats",
    ),
    TaskTheme.FUTURE_PRESERVATION: (
        "future preservation scenarios",
        "community participation",
        "sustainable development and heritage protection strategies",
    ),
}


@dataclass(frozen=True)
class ConstraintProfile:
    theme: TaskTheme
    temporal_rule: str
    temporal_clause: str
    architecture_lock_clause: str
    cultural_context_clause: str
    allowed_content: tuple[str, ...]
    rejection_lexicon: tuple[str, ...]  # active rule ids


def constraint_profile(theme: TaskTheme, corpus: Optional[Corpus] = None) -> ConstraintProfile:
    """The per-theme Tier-1 rule set. Total over the three themes."""
    theme = TaskTheme(theme)
    rejection = ()
    if corpus is not None:
        rejection = tuple(r.rule_id for r in corpus.rules_for_theme(theme.value))
    return ConstraintProfile(
        theme=theme,
        temporal_rule=TEMPORAL_RULES[theme],
        temporal_clause=TEMPORAL_CLAUSES[theme],
        architecture_lock_clause=ARCHITECTURE_LOCK_CLAUSE,
        cultural_context_clause=CULTURAL_CONTEXT_CLAUSE,
        allowed_content=ALLOWED_CONTENT[theme],
        rejection_lexicon=rejection,
    )


@dataclass(frozen=True)
class TagSelection:
    """User-chosen option per category, plus the interior/exterior view flag."""

    choices: tuple[tuple[str, str], ...]  # (category_id, option_id) pairs
    interior: bool = False

    @classmethod
    def of(cls, mapping: dict, interior: bool = False) -> "TagSelection":
        return cls(choices=tuple(sorted(mapping.items())), interior=interior)

    @property
    def view_context(self) -> str:
        return "interior" if self.interior else "exterior"

    def get(self, category_id: str) -> Optional[str]:
        for cid, oid in self.choices:
            if cid == category_id:
                return oid
        return None


@dataclass(frozen=True)
class TagError:
    """Tier-2 failure detail; one entry per offending category."""

    problems: tuple[tuple[str, str], ...]  # (category_id, problem code)
    message: Bilingual


@dataclass(frozen=True)
class Violation:
    tier: int
    rule_id: str
    span: tuple[int, int]  # character range into the submitted text
    resolution: str  # Removed | Replaced | Relocated | Overridden-by-tag
    explanation: Bilingual
    alternatives_en: tuple[str, ...]
    alternatives_zh: tuple[str, ...]


@dataclass(frozen=True)
class ValidationOutcome:
    status: str  # Accepted | Normalized | TagError
    violations: tuple[Violation, ...]
    normalized_idea: str
    provenance_trace: tuple[str, ...]


@dataclass(frozen=True)
class Clause:
    text: str
    origin: str  # tier1 | site | tag:<category> | idea | enrichment


@dataclass(frozen=True)
class ScaffoldedPrompt:
    clauses: tuple[Clause, ...]
    rendered: str

    @property
    def structured_view(self) -> list:
        return [{"text": c.text, "origin": c.origin} for c in self.clauses]


# --- tier 2 -------------------------------------------------------------------


def validate_tags(selection: TagSelection, theme: TaskTheme, corpus: Corpus) -> Optional[TagError]:
    """None when the selection is valid; otherwise a TagError naming each problem."""
    problems: list[tuple[str, str]] = []
    known = {c.category_id: c for c in corpus.categories}
    seen = set()
    for cid, oid in selection.choices:
        cat = known.get(cid)
        if cat is None:
            problems.append((cid, "unknown-category"))
            continue
        if cid in seen:
            problems.append((cid, "duplicate-category"))
            continue
        seen.add(cid)
        if cat.option(oid) is None:
            problems.append((cid, "unknown-option"))
            continue
        if cat.applicability == "interior-only" and not selection.interior:
            problems.append((cid, "interior-only"))
    for cat in corpus.categories:
        if cat.selection_rule == "exactly-one" and selection.get(cat.category_id) is None:
            problems.append((cat.category_id, "missing-required"))
    if not problems:
        return None
    names = ", ".join(cid for cid, _ in problems)
    return TagError(
        problems=tuple(problems),
        message=Bilingual(
            zh=f"以下标签选择不符合要求：{names}",
            en=f"The following tag selections are invalid: {names}",
        ),
    )


# --- phrase matching ----------------------------------------------------------

_CJK = re.compile(r"[一-鿿]")


def _phrase_pattern(phrase: str) -> re.Pattern:
    if _CJK.search(phrase):
        return re.compile(re.escape(phrase))
    tokens = [re.escape(t) for t in phrase.split()]
    return re.compile(r"(?<!\w)" + r"\s+".join(tokens) + r"(?!\w)", re.IGNORECASE)


@dataclass(frozen=True)
class _Matcher:
    priority: int  # 0 = tag conflict, 1 = theme rule
    order: int  # authoring order, tie-break
    phrase: str
    lang: str
    pattern: re.Pattern
    rule: Optional[RuleEntry]  # None for tag conflicts
    category_id: str = ""
    option_id: str = ""
    option_label: Optional[Bilingual] = None
    option_spec: str = ""


def _build_matchers(selection: TagSelection, theme: TaskTheme, corpus: Corpus) -> list[_Matcher]:
    matchers: list[_Matcher] = []
    order = 0
    # tag-conflict pass comes first: selected options claim their conflict spans
    for cid in CATEGORY_ORDER:
        oid = selection.get(cid)
        if oid is None:
            continue
        opt = corpus.category(cid).option(oid)
        if opt is None:
            continue
        for term_id in opt.conflict_terms:
            term = corpus.term(term_id)
            for lang, phrases in (("en", term.match_en), ("zh", term.match_zh)):
                for phrase in phrases:
                    matchers.append(
                        _Matcher(
                            priority=0,
                            order=order,
                            phrase=phrase,
                            lang=lang,
                            pattern=_phrase_pattern(phrase),
                            rule=None,
                            category_id=cid,
                            option_id=oid,
                            option_label=opt.label,
                            option_spec=opt.specification_text,
                        )
                    )
                    order += 1
    for rule in corpus.rules_for_theme(TaskTheme(theme).value):
        for lang, phrases in (("en", rule.match_en), ("zh", rule.match_zh)):
            for phrase in phrases:
                matchers.append(
                    _Matcher(
                        priority=1,
                        order=order,
                        phrase=phrase,
                        lang=lang,
                        pattern=_phrase_pattern(phrase),
                        rule=rule,
                    )
                )
                order += 1
    return matchers


def _find_matches(text: str, matchers: list[_Matcher]) -> list[tuple[int, int, _Matcher]]:
    """Non-overlapping matches: tag conflicts before rules, then longest match
    first, ties broken by authoring order."""
    candidates = []
    for m in matchers:
        for hit in m.pattern.finditer(text):
            candidates.append((hit.start(), hit.end(), m))
    candidates.sort(key=lambda c: (c[2].priority, -(c[1] - c[0]), c[2].order, c[0]))
    accepted: list[tuple[int, int, _Matcher]] = []
    for start, end, m in candidates:
        if any(start < e and s < end for s, e, _ in accepted):
            continue
        accepted.append((start, end, m))
    accepted.sort(key=lambda c: c[0])
    return accepted


def _tidy(text: str) -> str:
    text = re.sub(r"\s+", " ", text)
    text = re.sub(r"\s+([,.;:!?，。；：！？])", r"\1", text)
    text = re.sub(r"(^|[\s(])[,;]\s*", r"\1", text)
    return text.strip(" ,;")


def _apply_matches(text: str, matches: list[tuple[int, int, _Matcher]]) -> tuple[str, list[str]]:
    """Rewrite text per match actions; returns (new text, relocate payloads)."""
    pieces = []
    cursor = 0
    relocations: list[str] = []
    for start, end, m in matches:
        pieces.append(text[cursor:start])
        if m.rule is None:
            pass  # overridden by tag: span dropped
        elif m.rule.action == "replace":
            pieces.append(m.rule.payload.get(m.lang))
        elif m.rule.action == "relocate":
            payload = m.rule.payload.get(m.lang)
            if payload not in relocations:
                relocations.append(payload)
        cursor = end
    pieces.append(text[cursor:])
    return "".join(pieces), relocations


def _violation_for(match: tuple[int, int, _Matcher]) -> Violation:
    start, end, m = match
    if m.rule is None:
        label = m.option_label or Bilingual(zh="", en="")
        return Violation(
            tier=2,
            rule_id=f"tag:{m.category_id}:{m.option_id}",
            span=(start, end),
            resolution="Overridden-by-tag",
            explanation=Bilingual(
                zh=f"该描述与所选标签“{label.zh}”冲突，标签优先，冲突内容已移除。",
                en=(
                    f"This phrase conflicts with the selected tag '{label.en}'; "
                    "tags take precedence, so the conflicting phrase was removed."
                ),
            ),
            alternatives_en=(m.option_spec,),
            alternatives_zh=(label.zh,),
        )
    resolution = {"remove": "Removed", "replace": "Replaced", "relocate": "Relocated"}[m.rule.action]
    return Violation(
        tier=m.rule.tier,
        rule_id=m.rule.rule_id,
        span=(start, end),
        resolution=resolution,
        explanation=m.rule.explanation,
        alternatives_en=m.rule.alternatives_en,
        alternatives_zh=m.rule.alternatives_zh,
    )


EMPTY_IDEA_VIOLATION_ID = "empty-idea"


def _normalize(text: str, matchers: list[_Matcher]) -> tuple[str, list[Violation]]:
    violations: list[Violation] = []
    current = text
    for _ in range(MAX_NORMALIZE_PASSES):
        matches = _find_matches(current, matchers)
        if not matches:
            break
        violations.extend(_violation_for(m) for m in matches)
        current, relocations = _apply_matches(current, matches)
        current = _tidy(current)
        for payload in relocations:
            current = f"{current}, {payload}" if current else payload
    return current, violations


def validate_idea(
    idea: str, selection: TagSelection, theme: TaskTheme, corpus: Corpus
) -> ValidationOutcome:
    """Tier-3 idea validation: tag-conflict pass, theme lexicon pass, residual scan.

    Deterministic and pure; all problems surface as Violations, never errors.
    """
    matchers = _build_matchers(selection, theme, corpus)
    normalized, violations = _normalize(idea, matchers)
    if idea.strip() and not normalized.strip():
        violations.append(
            Violation(
                tier=3,
                rule_id=EMPTY_IDEA_VIOLATION_ID,
                span=(0, len(idea)),
                resolution="Removed",
                explanation=Bilingual(
                    zh="你的想法在规范化后没有剩余内容，画面将仅依据所选标签生成。",
                    en=(
                        "Nothing of the idea remained after normalization; the scene "
                        "will be built from the selected tags alone."
                    ),
                ),
                alternatives_en=("Describe villagers, weather, or light around the tower.",),
                alternatives_zh=("可以描述碉楼周围的村民、天气或光线。",),
            )
        )
    status = "Accepted" if not violations else "Normalized"
    trace = tuple(f"{v.resolution}:{v.rule_id}" for v in violations) + (("idea",) if normalized else ())
    return ValidationOutcome(
        status=status,
        violations=tuple(violations),
        normalized_idea=normalized,
        provenance_trace=trace,
    )


# --- prompt assembly ----------------------------------------------------------


def _tier1_clauses(theme: TaskTheme) -> list[Clause]:
    profile = constraint_profile(theme)
    return [
        Clause(text=profile.temporal_clause, origin="tier1"),
        Clause(text=profile.architecture_lock_clause, origin="tier1"),
        Clause(text=profile.cultural_context_clause, origin="tier1"),
    ]


def _tag_clause(corpus: Corpus, category_id: str, option_id: str) -> Clause:
    cat = corpus.category(category_id)
    opt = cat.option(option_id)
    return Clause(text=f"{cat.name.en}: {opt.specification_text}.", origin=f"tag:{category_id}")


def _ensure_period(text: str) -> str:
    return text if text.endswith((".", "。", "!", "?", "！", "？")) else text + "."


def assemble_prompt(
    site: DiaolouSite,
    selection: TagSelection,
    outcome: ValidationOutcome,
    theme: TaskTheme,
    corpus: Corpus,
) -> ScaffoldedPrompt:
    """Deterministic clause assembly in canonical order: Tier-1 invariants,
    site exemplar, tags in fixed category order, normalized idea, enrichment."""
    if outcome.status == "TagError":
        raise ValueError("cannot assemble a prompt from a TagError outcome")
    clauses: list[Clause] = list(_tier1_clauses(theme))
    clauses.append(
        Clause(
            text=(
                f"The scene depicts {site.names.en} ({site.names.zh}), "
                f"a Diaolou of {site.cluster}."
            ),
            origin="site",
        )
    )
    for cid in CATEGORY_ORDER:
        oid = selection.get(cid)
        if oid is not None:
            clauses.append(_tag_clause(corpus, cid, oid))
    idea_text = outcome.normalized_idea.strip()
    if idea_text:
        clauses.append(Clause(text=_ensure_period(idea_text), origin="idea"))
    enrichment = [
        t.phrase.en
        for t in corpus.enrichment_terms()
        if not t.applicable_styles or site.style in t.applicable_styles
    ]
    if enrichment:
        clauses.append(
            Clause(text="Architectural details: " + ", ".join(enrichment) + ".", origin="enrichment")
        )
    rendered = " ".join(c.text for c in clauses)
    return ScaffoldedPrompt(clauses=tuple(clauses), rendered=rendered)


# --- revalidation of user edits -----------------------------------------------


def required_clauses(selection: TagSelection, theme: TaskTheme, corpus: Corpus) -> list[Clause]:
    """Tier-1 and tag clauses that must survive any user edit."""
    clauses = list(_tier1_clauses(theme))
    for cid in CATEGORY_ORDER:
        oid = selection.get(cid)
        if oid is not None:
            clauses.append(_tag_clause(corpus, cid, oid))
    return clauses


def revalidate(
    edited_prompt: str, selection: TagSelection, theme: TaskTheme, corpus: Corpus
) -> ValidationOutcome:
    """Re-run the rule pipeline over a user-edited rendered prompt.

    Tier-1 and tag clauses are re-asserted: if the edit deleted one, it is
    re-inserted (in canonical order, ahead of the edit) and logged as a
    Violation with resolution Replaced.
    """
    violations: list[Violation] = []
    missing: list[Clause] = []
    for clause in required_clauses(selection, theme, corpus):
        if clause.text not in edited_prompt:
            missing.append(clause)
            tier = 1 if clause.origin == "tier1" else 2
            violations.append(
                Violation(
                    tier=tier,
                    rule_id=f"reassert:{clause.origin}",
                    span=(0, 0),
                    resolution="Replaced",
                    explanation=Bilingual(
                        zh="该条款为不可协商的真实性约束，已重新插入提示词。",
                        en=(
                            "This clause is a non-negotiable authenticity constraint "
                            "and was re-inserted into the prompt."
                        ),
                    ),
                    alternatives_en=(clause.text,),
                    alternatives_zh=(clause.text,),
                )
            )
    matchers = _build_matchers(selection, theme, corpus)
    normalized_edit, rule_violations = _normalize(edited_prompt, matchers)
    violations.extend(rule_violations)
    parts = [c.text for c in missing]
    if normalized_edit:
        parts.append(normalized_edit)
    corrected = " ".join(parts)
    status = "Accepted" if not violations else "Normalized"
    trace = tuple(f"{v.resolution}:{v.rule_id}" for v in violations) + ("edit",)
    return ValidationOutcome(
        status=status,
        violations=tuple(violations),
        normalized_idea=corrected,
        provenance_trace=trace,
    )
