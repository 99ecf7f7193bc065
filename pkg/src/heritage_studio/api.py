"""HTTP gateway: the full pipeline behind a versioned JSON API.

All state lives in the session store and the job registry; handlers are
stateless. Guardrails are enforced server-side: no generation job can run a
prompt that fails revalidation, regardless of what the client sent.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from . import corpus as corpus_mod
from . import guardrails, images, scaffold, store as store_mod

API_PREFIX = "/api/v1"

ERROR_CODES = {
    "bad_request",
    "tag_error",
    "guardrail_violation",
    "unknown_site",
    "unknown_section",
    "unknown_category",
    "unknown_job",
    "unknown_image",
    "unknown_session",
    "unknown_creation",
    "image_not_saved",
    "queue_full",
    "rate_limited",
}


class ApiError(Exception):
    def __init__(self, code: str, message_zh: str, message_en: str, status: int = 400,
                 tier: Optional[int] = None, alternatives: Optional[list] = None):
        assert code in ERROR_CODES, code
        self.code = code
        self.message = {"zh": message_zh, "en": message_en}
        self.status = status
        self.tier = tier
        self.alternatives = alternatives
        super().__init__(message_en)

    def body(self) -> dict:
        error = {"code": self.code, "message": self.message}
        if self.tier is not None:
            error["tier"] = self.tier
        if self.alternatives is not None:
            error["alternatives"] = self.alternatives
        return {"error": error}


@dataclass
class AppConfig:
    corpus_dir: Optional[Path] = None
    data_dir: Path = Path("data")
    lang_default: str = "zh"
    generate_rate_limit_per_min: int = 10
    image_workers: int = 2
    ui_dir: Optional[Path] = None
    lm_env: Optional[dict] = None
    image_env: Optional[dict] = None


def canonical_json(payload) -> bytes:
    return json.dumps(payload, ensure_ascii=False, sort_keys=True).encode("utf-8")


def canonical_response(payload) -> Response:
    return Response(content=canonical_json(payload), media_type="application/json")


class RateLimiter:
    def __init__(self, per_minute: int):
        self.per_minute = per_minute
        self._hits: dict[str, list[float]] = {}
        self._lock = threading.Lock()

    def allow(self, key: str) -> bool:
        now = time.time()
        with self._lock:
            window = [t for t in self._hits.get(key, []) if now - t < 60.0]
            if len(window) >= self.per_minute:
                self._hits[key] = window
                return False
            window.append(now)
            self._hits[key] = window
            return True


# --- serializers --------------------------------------------------------------


def _bilingual(b) -> dict:
    return {"zh": b.zh, "en": b.en}


def _site_payload(site) -> dict:
    return {
        "site_id": site.site_id,
        "names": _bilingual(site.names),
        "cluster": site.cluster,
        "functions": list(site.functions),
        "style": site.style,
        "window_features": list(site.window_features),
        "conservation_status": site.conservation_status,
        "descriptions": _bilingual(site.descriptions),
        "base_rendering_ref": site.base_rendering_ref,
    }


def _option_payload(opt) -> dict:
    return {
        "option_id": opt.option_id,
        "label": _bilingual(opt.label),
        "specification_text": opt.specification_text,
        "conflict_terms": list(opt.conflict_terms),
    }


def _category_payload(cat) -> dict:
    return {
        "category_id": cat.category_id,
        "name": _bilingual(cat.name),
        "selection_rule": cat.selection_rule,
        "applicability": cat.applicability,
        "options": [_option_payload(o) for o in cat.options],
    }


def _violation_payload(v) -> dict:
    return {
        "tier": v.tier,
        "rule_id": v.rule_id,
        "span": list(v.span),
        "resolution": v.resolution,
        "explanation": _bilingual(v.explanation),
        "alternatives": {"en": list(v.alternatives_en), "zh": list(v.alternatives_zh)},
    }


def _outcome_payload(outcome) -> dict:
    return {
        "status": outcome.status,
        "violations": [_violation_payload(v) for v in outcome.violations],
        "normalized_idea": outcome.normalized_idea,
        "provenance_trace": list(outcome.provenance_trace),
    }


def _job_payload(job) -> dict:
    return {
        "job_id": job.job_id,
        "status": job.status,
        "image_ids": list(job.image_ids),
        "failure_reason": job.failure_reason,
    }


def _creation_payload(creation) -> dict:
    return {
        "creation_id": creation.creation_id,
        "session_id": creation.session_id,
        "theme": creation.theme,
        "saved_image_ids": list(creation.saved_image_ids),
        "iterations": [
            {
                "theme": it.theme,
                "tags": it.tags,
                "idea": it.idea,
                "outcome_status": it.outcome_status,
                "violation_count": it.violation_count,
                "final_prompt": it.final_prompt,
                "job_id": it.job_id,
                "image_ids": list(it.image_ids),
            }
            for it in creation.iterations
        ],
    }


DEFAULT_SHELL = """<!DOCTYPE html>
<html lang="zh"><head><meta charset="utf-8"><title>Gen-Diaolou Studio</title></head>
<body><h1>Gen-Diaolou Studio</h1>
<p>The studio frontend bundle is not installed; the API is live under /api/v1/.</p>
</body></html>
"""


def _parse_selection(body: dict) -> guardrails.TagSelection:
    tags = body.get("tags")
    if not isinstance(tags, dict):
        raise ApiError("bad_request", "缺少 tags 字段", "missing 'tags' object", 400)
    return guardrails.TagSelection.of(tags, interior=bool(body.get("interior", False)))


def _parse_theme(body: dict) -> guardrails.TaskTheme:
    theme = body.get("theme")
    try:
        return guardrails.TaskTheme(theme)
    except ValueError:
        raise ApiError("bad_request", "缺少或非法的 theme 字段", f"missing or invalid 'theme': {theme!r}", 400)


def create_app(config: Optional[AppConfig] = None) -> FastAPI:
    config = config or AppConfig()
    corpus_dir = config.corpus_dir or corpus_mod.default_corpus_root()
    corpus = corpus_mod.load_corpus(corpus_dir)

    data_dir = Path(config.data_dir)
    session_store = store_mod.SessionStore(data_dir)
    image_store = images.ImageStore(data_dir / "images")
    backend = images.backend_from_env(config.image_env)
    pipeline = images.ImagePipeline(corpus, image_store, backend, workers=config.image_workers)
    lm_port = scaffold.port_from_env(config.lm_env)
    limiter = RateLimiter(config.generate_rate_limit_per_min)

    app = FastAPI(title="heritage-studio", version="1.0")
    app.state.corpus = corpus
    app.state.store = session_store
    app.state.pipeline = pipeline

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.body())

    @app.middleware("http")
    async def cross_origin(request: Request, call_next):
        response = await call_next(request)
        response.headers["Access-Control-Allow-Origin"] = "*"
        return response

    # --- knowledge and taxonomy ----------------------------------------------

    @app.get(API_PREFIX + "/health")
    def health():
        return canonical_response(
            {"status": "ok", "corpus_version": corpus.corpus_version, "sites": len(corpus.sites)}
        )

    @app.get(API_PREFIX + "/sites")
    def sites():
        return canonical_response({"sites": [_site_payload(s) for s in corpus.sites]})

    @app.get(API_PREFIX + "/sites/{site_id}")
    def site(site_id: str):
        try:
            return canonical_response(_site_payload(corpus.site(site_id)))
        except corpus_mod.UnknownConcept:
            raise ApiError("unknown_site", f"未知的碉楼：{site_id}", f"unknown site: {site_id}", 404)

    @app.get(API_PREFIX + "/taxonomy/categories")
    def categories():
        return canonical_response(
            {"categories": [_category_payload(c) for c in corpus.categories]}
        )

    @app.get(API_PREFIX + "/taxonomy/categories/{category_id}/options")
    def category_options(category_id: str):
        try:
            options = corpus_mod.list_tag_options(corpus, category_id)
        except corpus_mod.UnknownCategory:
            raise ApiError(
                "unknown_category", f"未知的类别：{category_id}", f"unknown category: {category_id}", 404
            )
        return canonical_response({"options": [_option_payload(o) for o in options]})

    @app.get(API_PREFIX + "/knowledge/{section_id}")
    def knowledge(section_id: str):
        try:
            section = corpus.section(section_id)
        except corpus_mod.UnknownConcept:
            raise ApiError(
                "unknown_section", f"未知的章节：{section_id}", f"unknown section: {section_id}", 404
            )
        return canonical_response(
            {
                "section_id": section.section_id,
                "title": _bilingual(section.title),
                "body": _bilingual(section.body),
                "narration": _bilingual(section.narration),
                "sites": list(section.site_ids),
                "categories": list(section.category_ids),
            }
        )

    # --- persona ---------------------------------------------------------------

    @app.post(API_PREFIX + "/persona/chat")
    async def persona_chat(request: Request):
        body = await request.json()
        question = (body.get("question") or "").strip()
        if not question:
            raise ApiError("bad_request", "缺少 question 字段", "missing 'question'", 400)
        lang = body.get("lang", config.lang_default)
        history = [
            scaffold.DialogueTurn(role=t.get("role", "user"), text=t.get("text", ""))
            for t in body.get("history", [])
        ]
        turn = scaffold.persona_reply(history, question, corpus, lm_port, lang=lang)
        return canonical_response(
            {
                "role": turn.role,
                "text": turn.text,
                "cited_concept_ids": list(turn.cited_concept_ids),
                "grounded": turn.grounded,
            }
        )

    # --- guardrails ------------------------------------------------------------

    @app.post(API_PREFIX + "/guardrails/validate")
    async def validate(request: Request):
        body = await request.json()
        theme = _parse_theme(body)
        selection = _parse_selection(body)
        site_id = body.get("site_id", corpus.sites[0].site_id)
        try:
            site = corpus.site(site_id)
        except corpus_mod.UnknownConcept:
            raise ApiError("unknown_site", f"未知的碉楼：{site_id}", f"unknown site: {site_id}", 404)
        tag_error = guardrails.validate_tags(selection, theme, corpus)
        if tag_error is not None:
            raise ApiError(
                "tag_error",
                tag_error.message.zh,
                tag_error.message.en,
                422,
                tier=2,
                alternatives=[f"{cid}: {problem}" for cid, problem in tag_error.problems],
            )
        idea = body.get("idea", "")
        outcome = guardrails.validate_idea(idea, selection, theme, corpus)
        elaborated, elaborated_outcome = scaffold.elaborate_idea(
            outcome.normalized_idea, selection, theme, corpus, lm_port
        )
        display = outcome
        if body.get("elaborate", True):
            display = guardrails.ValidationOutcome(
                status=outcome.status,
                violations=outcome.violations + elaborated_outcome.violations,
                normalized_idea=elaborated,
                provenance_trace=outcome.provenance_trace + elaborated_outcome.provenance_trace,
            )
        prompt = guardrails.assemble_prompt(site, selection, display, theme, corpus)
        return canonical_response(
            {
                "outcome": _outcome_payload(display),
                "scaffolded_prompt": {
                    "rendered": prompt.rendered,
                    "structured": prompt.structured_view,
                },
            }
        )

    # --- generation ------------------------------------------------------------

    def _record_on_completion(job_id: str, session_id: str, creation_id: int,
                              theme: guardrails.TaskTheme, selection: guardrails.TagSelection,
                              idea: str, outcome, prompt: str):
        def runner():
            job = pipeline.wait(job_id, timeout=120.0)
            if job.status != "Done":
                return
            session_store.record_iteration(
                session_id,
                store_mod.IterationEntry(
                    theme=theme.value,
                    tags=dict(selection.choices),
                    idea=idea,
                    outcome_status=outcome.status,
                    violation_count=len(outcome.violations),
                    final_prompt=prompt,
                    job_id=job_id,
                    image_ids=job.image_ids,
                    interior=selection.interior,
                ),
                creation_id=creation_id,
            )

        threading.Thread(target=runner, daemon=True).start()

    @app.post(API_PREFIX + "/generate")
    async def generate(request: Request):
        client = request.client.host if request.client else "unknown"
        if not limiter.allow(client):
            raise ApiError("rate_limited", "请求过于频繁，请稍候再试", "too many generation requests", 429)
        body = await request.json()
        session_id = body.get("session_id", "")
        if session_id not in session_store.sessions:
            raise ApiError("unknown_session", f"未知的会话：{session_id}", f"unknown session: {session_id}", 404)
        theme = _parse_theme(body)
        selection = _parse_selection(body)
        site_id = body.get("site_id", "")
        try:
            site = corpus.site(site_id)
        except corpus_mod.UnknownConcept:
            raise ApiError("unknown_site", f"未知的碉楼：{site_id}", f"unknown site: {site_id}", 404)
        tag_error = guardrails.validate_tags(selection, theme, corpus)
        if tag_error is not None:
            raise ApiError("tag_error", tag_error.message.zh, tag_error.message.en, 422, tier=2)
        confirmed = body.get("confirmed_prompt", "")
        if not confirmed:
            raise ApiError("bad_request", "缺少 confirmed_prompt 字段", "missing 'confirmed_prompt'", 400)

        # clients are untrusted: revalidate server-side and run the corrected prompt
        revalidated = guardrails.revalidate(confirmed, selection, theme, corpus)
        final_prompt = revalidated.normalized_idea
        corrected = final_prompt != confirmed

        seed = int(body.get("seed", pipeline.next_seed()))
        parent_image_id = body.get("parent_image_id", "")
        try:
            if parent_image_id:
                job_id = pipeline.refine(parent_image_id, final_prompt, seed)
            else:
                job_id = pipeline.submit(
                    images.GenerationRequest(
                        request_id=f"req-{session_id}-{seed}",
                        prompt=final_prompt,
                        base_rendering_ref=site.base_rendering_ref,
                        seed=seed,
                    )
                )
        except images.UnknownImage:
            raise ApiError("unknown_image", f"未知的图像：{parent_image_id}",
                           f"unknown image: {parent_image_id}", 404)
        except images.QueueFull:
            raise ApiError("queue_full", "生成队列已满", "generation queue is full", 503)

        creation_id = body.get("creation_id")
        if creation_id is None:
            creation_id = session_store.allocate_creation(session_id, theme.value)
        else:
            creation = session_store.creations.get(int(creation_id))
            if creation is None or creation.session_id != session_id:
                raise ApiError("unknown_creation", f"未知的创作：{creation_id}",
                               f"unknown creation: {creation_id}", 404)
            creation_id = int(creation_id)
        _record_on_completion(
            job_id, session_id, creation_id, theme, selection,
            body.get("idea", ""), revalidated, final_prompt,
        )
        return canonical_response(
            {
                "job_id": job_id,
                "creation_id": creation_id,
                "seed": seed,
                "corrected": corrected,
                "prompt": final_prompt,
                "violations": [_violation_payload(v) for v in revalidated.violations],
            }
        )

    @app.get(API_PREFIX + "/jobs/{job_id}")
    def job_status(job_id: str):
        try:
            return canonical_response(_job_payload(pipeline.poll(job_id)))
        except images.UnknownJob:
            raise ApiError("unknown_job", f"未知的任务：{job_id}", f"unknown job: {job_id}", 404)

    @app.get(API_PREFIX + "/images/{image_id}")
    def image(image_id: str):
        try:
            payload, media_type = pipeline.fetch_image(image_id)
        except images.UnknownImage:
            raise ApiError("unknown_image", f"未知的图像：{image_id}", f"unknown image: {image_id}", 404)
        digest = hashlib.sha256(payload).hexdigest()
        return Response(
            content=payload,
            media_type=media_type,
            headers={
                "Cache-Control": "public, max-age=31536000, immutable",
                "ETag": f'"{digest}"',
                "X-Content-Hash": digest,
            },
        )

    # --- sessions and analytics ------------------------------------------------

    @app.post(API_PREFIX + "/sessions")
    async def create_session(request: Request):
        body = await request.json()
        session = session_store.create_session(
            body.get("language", config.lang_default), body.get("participant_label", "")
        )
        return canonical_response(
            {
                "session_id": session.session_id,
                "language": session.language,
                "participant_label": session.participant_label,
            }
        )

    @app.post(API_PREFIX + "/sessions/{session_id}/iterations/save-image")
    async def save_image(session_id: str, request: Request):
        body = await request.json()
        try:
            session_store.save_image(session_id, int(body.get("creation_id", -1)), body.get("image_id", ""))
        except store_mod.UnknownCreation as exc:
            raise ApiError("unknown_creation", f"未知的创作：{exc}", f"unknown creation: {exc}", 404)
        except store_mod.ImageNotSaved as exc:
            raise ApiError("image_not_saved", f"图像不属于该创作：{exc}",
                           f"image does not belong to this creation: {exc}", 409)
        return canonical_response({"saved": True})

    @app.get(API_PREFIX + "/sessions/{session_id}/creations")
    def creations(session_id: str):
        try:
            records = session_store.creations_for(session_id)
        except store_mod.UnknownSession:
            raise ApiError("unknown_session", f"未知的会话：{session_id}",
                           f"unknown session: {session_id}", 404)
        return canonical_response({"creations": [_creation_payload(c) for c in records]})

    @app.get(API_PREFIX + "/sessions/{session_id}/creations/{creation_id}/exhibit-card")
    def exhibit_card(session_id: str, creation_id: int, image_id: str = ""):
        creation = session_store.creations.get(creation_id)
        if creation is None or creation.session_id != session_id:
            raise ApiError("unknown_creation", f"未知的创作：{creation_id}",
                           f"unknown creation: {creation_id}", 404)
        if not image_id:
            if not creation.saved_image_ids:
                raise ApiError("image_not_saved", "该创作尚无已保存的图像",
                               "no saved images in this creation", 409)
            image_id = creation.saved_image_ids[0]
        try:
            card = session_store.export_exhibit_card(creation_id, image_id, image_store)
        except store_mod.ImageNotSaved:
            raise ApiError("image_not_saved", f"图像未保存：{image_id}",
                           f"image not saved: {image_id}", 409)
        return Response(content=card, media_type="text/html; charset=utf-8")

    @app.get(API_PREFIX + "/analytics/summary")
    def analytics_summary(theme: str = ""):
        summaries = session_store.compute_summary(theme or None)
        return canonical_response(
            {
                "summaries": [
                    {
                        "theme": s.theme,
                        "participants": s.participants,
                        "iterations_mean": s.iterations_mean,
                        "iterations_sd": s.iterations_sd,
                        "images_mean": s.images_mean,
                        "images_sd": s.images_sd,
                    }
                    for s in summaries
                ]
            }
        )

    # --- offline manifest and shell --------------------------------------------

    def _shell_bytes() -> bytes:
        if config.ui_dir and (Path(config.ui_dir) / "index.html").is_file():
            return (Path(config.ui_dir) / "index.html").read_bytes()
        return DEFAULT_SHELL.encode("utf-8")

    def _manifest_entries() -> list[dict]:
        entries = [("/", _shell_bytes())]
        entries.append((API_PREFIX + "/sites", canonical_json({"sites": [_site_payload(s) for s in corpus.sites]})))
        entries.append(
            (API_PREFIX + "/taxonomy/categories",
             canonical_json({"categories": [_category_payload(c) for c in corpus.categories]}))
        )
        for section in corpus.sections:
            payload = canonical_json(
                {
                    "section_id": section.section_id,
                    "title": _bilingual(section.title),
                    "body": _bilingual(section.body),
                    "narration": _bilingual(section.narration),
                    "sites": list(section.site_ids),
                    "categories": list(section.category_ids),
                }
            )
            entries.append((API_PREFIX + f"/knowledge/{section.section_id}", payload))
        return [
            {
                "route": route,
                "content_hash": hashlib.sha256(payload).hexdigest(),
                "byte_size": len(payload),
            }
            for route, payload in entries
        ]

    @app.get(API_PREFIX + "/offline-manifest")
    def offline_manifest():
        return canonical_response({"entries": _manifest_entries()})

    if config.ui_dir and Path(config.ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(config.ui_dir), html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def shell():
            return HTMLResponse(content=DEFAULT_SHELL)

    return app
