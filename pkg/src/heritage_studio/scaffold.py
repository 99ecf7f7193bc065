"""Idea elaboration and the Huang Bixiu persona dialogue.

Both sit behind a language-model port. The remote port talks to an external
chat-completion endpoint; the deterministic fallback makes every behavior
testable offline. Guardrails stay authoritative: any model output is re-run
through idea validation before it is shown.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Optional, Protocol

import httpx

from .corpus import Corpus
from .guardrails import TagSelection, TaskTheme, ValidationOutcome, validate_idea

PERSONA_NAME = "Huang Bixiu"
PERSONA_NAME_ZH = "黄璧秀"
RETRIEVAL_K = 3
DEFAULT_TIMEOUT_SECONDS = 20.0


class PortUnavailable(Exception):
    pass


class LanguageModelPort(Protocol):
    def complete(self, system_prompt: str, user_turns: list[str], max_length: int) -> str: ...


class FallbackLanguageModel:
    """Pure template expansion; no network, no state."""

    def complete(self, system_prompt: str, user_turns: list[str], max_length: int) -> str:
        return " ".join(user_turns)[:max_length]


class RemoteLanguageModel:
    """Thin client for an OpenAI-style chat endpoint; one retry, then raises."""

    def __init__(self, endpoint: str, api_key: str = "", timeout: float = DEFAULT_TIMEOUT_SECONDS):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout

    def complete(self, system_prompt: str, user_turns: list[str], max_length: int) -> str:
        messages = [{"role": "system", "content": system_prompt}]
        messages += [{"role": "user", "content": t} for t in user_turns]
        payload = {"messages": messages, "max_tokens": max_length}
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        last_error: Optional[Exception] = None
        for _ in range(2):
            try:
                resp = httpx.post(
                    self.endpoint, json=payload, headers=headers, timeout=self.timeout
                )
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except Exception as exc:  # noqa: BLE001 - any transport failure falls through
                last_error = exc
        raise PortUnavailable(str(last_error))


def port_from_env(env: Optional[dict] = None) -> LanguageModelPort:
    env = os.environ if env is None else env
    endpoint = env.get("LM_ENDPOINT", "")
    if not endpoint:
        return FallbackLanguageModel()
    timeout = float(env.get("LM_TIMEOUT_SECONDS", DEFAULT_TIMEOUT_SECONDS))
    return RemoteLanguageModel(endpoint, env.get("LM_API_KEY", ""), timeout)


# --- idea elaboration ---------------------------------------------------------

ELABORATION_SYSTEM_PROMPT = (
    "You expand a short scene idea about the Kaiping Diaolou into a richer "
    "description. Keep every constraint clause untouched and add only "
    "historically grounded detail."
)


def _template_elaboration(normalized_idea: str, selection: TagSelection, corpus: Corpus) -> str:
    phrases = []
    for cid, oid in selection.choices:
        opt = corpus.category(cid).option(oid)
        if opt is not None:
            phrases.append(opt.specification_text)
    detail = "; ".join(phrases)
    if normalized_idea and detail:
        return f"{normalized_idea}, shown as {detail}"
    return normalized_idea or detail


def elaborate_idea(
    normalized_idea: str,
    selection: TagSelection,
    theme: TaskTheme,
    corpus: Corpus,
    port: LanguageModelPort,
) -> tuple[str, ValidationOutcome]:
    """Elaborate an already-validated idea; the result is re-validated before
    display, so guardrails win over any model output."""
    try:
        raw = port.complete(
            ELABORATION_SYSTEM_PROMPT,
            [_template_elaboration(normalized_idea, selection, corpus)],
            max_length=600,
        )
    except PortUnavailable:
        raw = _template_elaboration(normalized_idea, selection, corpus)
    outcome = validate_idea(raw, selection, theme, corpus)
    return outcome.normalized_idea, outcome


# --- persona dialogue ---------------------------------------------------------


@dataclass(frozen=True)
class DialogueTurn:
    role: str  # user | persona
    text: str
    cited_concept_ids: tuple[str, ...] = ()

    @property
    def grounded(self) -> bool:
        return bool(self.cited_concept_ids)


@dataclass(frozen=True)
class PersonaProfile:
    name: str = PERSONA_NAME
    name_zh: str = PERSONA_NAME_ZH
    grounding_facts: tuple[str, ...] = ("ruishi-lou", "background")
    system_framing: str = (
        f"You are {PERSONA_NAME} ({PERSONA_NAME_ZH}), the historical builder of "
        "Ruishi Lou, guiding museum visitors through the Kaiping Diaolou. Answer "
        "only from the provided heritage passages; if they do not contain the "
        "answer, say so."
    )


_WORD = re.compile(r"[a-zA-Z]{3,}")
_CJK_CHAR = re.compile(r"[一-鿿]")

_STOPWORDS = {
    "the", "and", "was", "who", "what", "where", "when", "why", "how", "did",
    "does", "are", "for", "with", "that", "this", "his", "her", "its", "have",
    "about", "tell", "please",
}


def _tokens(text: str) -> set[str]:
    words = {w.lower() for w in _WORD.findall(text)} - _STOPWORDS
    cjk = _CJK_CHAR.findall(text)
    bigrams = {a + b for a, b in zip(cjk, cjk[1:])}
    return words | bigrams


def _passages(corpus: Corpus) -> list[tuple[str, str]]:
    out = []
    for site in corpus.sites:
        out.append((site.site_id, f"{site.names.en} {site.names.zh}: " + site.descriptions.en + " " + site.descriptions.zh))
    for sec in corpus.sections:
        out.append((sec.section_id, sec.body.en + " " + sec.body.zh))
    for cat in corpus.categories:
        specs = "; ".join(f"{o.label.en}: {o.specification_text}" for o in cat.options)
        out.append((cat.category_id, f"{cat.name.en} {cat.name.zh}: {specs}"))
    return out


def retrieve(corpus: Corpus, question: str, k: int = RETRIEVAL_K) -> list[tuple[str, str, int]]:
    """Top-k passages by term overlap: (concept_id, passage, score), score > 0."""
    qtokens = _tokens(question)
    scored = []
    for concept_id, passage in _passages(corpus):
        score = len(qtokens & _tokens(passage))
        if score > 0:
            scored.append((concept_id, passage, score))
    scored.sort(key=lambda item: (-item[2], item[0]))
    return scored[:k]


NO_GROUNDING_REPLY = {
    "en": (
        f"I am {PERSONA_NAME}, and I speak only of what I know of the Kaiping "
        "Diaolou; my knowledge base holds no answer to that question."
    ),
    "zh": f"我是{PERSONA_NAME_ZH}，只谈我所知的开平碉楼之事；这个问题不在我的知识范围之内。",
}


def persona_reply(
    history: list[DialogueTurn],
    question: str,
    corpus: Corpus,
    port: LanguageModelPort,
    lang: str = "en",
    profile: PersonaProfile = PersonaProfile(),
) -> DialogueTurn:
    """Grounded persona answer; refuses rather than fabricates."""
    if not question.strip():
        raise ValueError("question must be nonempty")
    hits = retrieve(corpus, question)
    if not hits:
        return DialogueTurn(role="persona", text=NO_GROUNDING_REPLY.get(lang, NO_GROUNDING_REPLY["en"]))
    cited = tuple(concept_id for concept_id, _, _ in hits)
    context = "\n".join(passage for _, passage, _ in hits)
    framing = (
        f"I am {PERSONA_NAME}, builder of Ruishi Lou. "
        if lang == "en"
        else f"我是瑞石楼的建造者{PERSONA_NAME_ZH}。"
    )
    if isinstance(port, FallbackLanguageModel):
        # fallback: persona framing plus the best-matching passage verbatim
        text = framing + hits[0][1]
        return DialogueTurn(role="persona", text=text, cited_concept_ids=cited)
    turns = [t.text for t in history if t.role == "user"] + [
        f"Heritage passages:\n{context}\n\nQuestion: {question}"
    ]
    try:
        answer = port.complete(profile.system_framing, turns, max_length=400)
    except PortUnavailable:
        answer = hits[0][1]
    return DialogueTurn(role="persona", text=framing + answer, cited_concept_ids=cited)


def narration_for(section_id: str, corpus: Corpus, lang: str = "en") -> str:
    """The authored persona narration for a knowledge section."""
    section = corpus.section(section_id)
    return section.narration.get(lang)
