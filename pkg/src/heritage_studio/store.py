"""Append-only session store: sessions, creations, iteration logs, saved
images, task analytics, and exhibit-card export.

Persistence is a single JSON-lines log (``data/sessions.log``). Records are
schema-checked on load; the schema deliberately has no personal-data fields.
"""

from __future__ import annotations

import base64
import html
import json
import statistics
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .images import ImageStore

LOG_FILENAME = "sessions.log"

THEMES = ("historical-reconstruction", "risk-estimation", "future-preservation")


class StoreError(Exception):
    pass


class StorageFailure(StoreError):
    pass


class UnknownSession(StoreError):
    pass


class InvalidEntry(StoreError):
    pass


class UnknownCreation(StoreError):
    pass


class ImageNotSaved(StoreError):
    pass


# closed field sets; anything beyond these fails schema validation on load
RECORD_FIELDS = {
    "session": {"type", "session_id", "created_at", "language", "participant_label"},
    "iteration": {
        "type",
        "session_id",
        "creation_id",
        "theme",
        "tags",
        "interior",
        "idea",
        "outcome_status",
        "violation_count",
        "final_prompt",
        "job_id",
        "image_ids",
        "timestamp",
    },
    "save": {"type", "session_id", "creation_id", "image_id"},
    "creation": {"type", "session_id", "creation_id", "theme"},
}


@dataclass(frozen=True)
class Session:
    session_id: str
    created_at: float
    language: str
    participant_label: str


@dataclass(frozen=True)
class IterationEntry:
    theme: str
    tags: dict
    idea: str
    outcome_status: str
    violation_count: int
    final_prompt: str
    job_id: str
    image_ids: tuple[str, ...]
    timestamp: float = 0.0
    interior: bool = False


@dataclass
class CreationRecord:
    creation_id: int
    session_id: str
    theme: str
    iterations: list = field(default_factory=list)
    saved_image_ids: list = field(default_factory=list)


@dataclass(frozen=True)
class TaskSummary:
    theme: str
    participants: int
    iterations_mean: float
    iterations_sd: float
    images_mean: float
    images_sd: float


class SessionStore:
    def __init__(self, data_dir) -> None:
        self.data_dir = Path(data_dir)
        self.log_path = self.data_dir / LOG_FILENAME
        self._lock = threading.Lock()
        self.sessions: dict[str, Session] = {}
        self.creations: dict[int, CreationRecord] = {}
        self._next_creation_id = 1
        try:
            self.data_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageFailure(str(exc))
        if self.log_path.exists():
            self._replay_log()

    # --- persistence ----------------------------------------------------------

    def _append(self, record: dict) -> None:
        try:
            with self.log_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
        except OSError as exc:
            raise StorageFailure(str(exc))

    def _replay_log(self) -> None:
        for lineno, line in enumerate(self.log_path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            record = json.loads(line)
            kind = record.get("type")
            allowed = RECORD_FIELDS.get(kind)
            if allowed is None:
                raise StorageFailure(f"{self.log_path}:{lineno}: unknown record type {kind!r}")
            extra = set(record) - allowed
            if extra:
                raise StorageFailure(
                    f"{self.log_path}:{lineno}: fields outside schema: {sorted(extra)}"
                )
            self._apply(record, persist=False)

    def _apply(self, record: dict, persist: bool = True) -> None:
        kind = record["type"]
        if kind == "session":
            session = Session(
                session_id=record["session_id"],
                created_at=record["created_at"],
                language=record["language"],
                participant_label=record["participant_label"],
            )
            self.sessions[session.session_id] = session
        elif kind == "iteration":
            cid = record["creation_id"]
            creation = self.creations.get(cid)
            if creation is None:
                creation = CreationRecord(
                    creation_id=cid, session_id=record["session_id"], theme=record["theme"]
                )
                self.creations[cid] = creation
                self._next_creation_id = max(self._next_creation_id, cid + 1)
            creation.iterations.append(
                IterationEntry(
                    theme=record["theme"],
                    tags=record["tags"],
                    idea=record["idea"],
                    outcome_status=record["outcome_status"],
                    violation_count=record["violation_count"],
                    final_prompt=record["final_prompt"],
                    job_id=record["job_id"],
                    image_ids=tuple(record["image_ids"]),
                    timestamp=record["timestamp"],
                    interior=record.get("interior", False),
                )
            )
        elif kind == "creation":
            cid = record["creation_id"]
            if cid not in self.creations:
                self.creations[cid] = CreationRecord(
                    creation_id=cid, session_id=record["session_id"], theme=record["theme"]
                )
                self._next_creation_id = max(self._next_creation_id, cid + 1)
        elif kind == "save":
            self.creations[record["creation_id"]].saved_image_ids.append(record["image_id"])
        if persist:
            self._append(record)

    # --- operations -----------------------------------------------------------

    def create_session(self, language: str, participant_label: str) -> Session:
        with self._lock:
            session = Session(
                session_id=uuid.uuid4().hex[:12],
                created_at=time.time(),
                language=language,
                participant_label=participant_label,
            )
            self._apply(
                {
                    "type": "session",
                    "session_id": session.session_id,
                    "created_at": session.created_at,
                    "language": session.language,
                    "participant_label": session.participant_label,
                }
            )
            return session

    def allocate_creation(self, session_id: str, theme: str) -> int:
        """Open an empty creation up front; iterations append to it later."""
        if theme not in THEMES:
            raise InvalidEntry(f"unknown theme {theme!r}")
        with self._lock:
            if session_id not in self.sessions:
                raise UnknownSession(session_id)
            creation_id = self._next_creation_id
            self._next_creation_id += 1
            self._apply(
                {
                    "type": "creation",
                    "session_id": session_id,
                    "creation_id": creation_id,
                    "theme": theme,
                }
            )
            return creation_id

    def record_iteration(
        self, session_id: str, entry: IterationEntry, creation_id: Optional[int] = None
    ) -> int:
        if entry.theme not in THEMES:
            raise InvalidEntry(f"unknown theme {entry.theme!r}")
        if len(entry.image_ids) != 4:
            raise InvalidEntry(f"expected exactly 4 image ids, got {len(entry.image_ids)}")
        if not entry.final_prompt:
            raise InvalidEntry("final prompt must be nonempty")
        with self._lock:
            if session_id not in self.sessions:
                raise UnknownSession(session_id)
            if creation_id is None:
                creation_id = self._next_creation_id
                self._next_creation_id += 1
            else:
                creation = self.creations.get(creation_id)
                if creation is None or creation.session_id != session_id:
                    raise UnknownCreation(str(creation_id))
            self._apply(
                {
                    "type": "iteration",
                    "session_id": session_id,
                    "creation_id": creation_id,
                    "theme": entry.theme,
                    "tags": entry.tags,
                    "interior": entry.interior,
                    "idea": entry.idea,
                    "outcome_status": entry.outcome_status,
                    "violation_count": entry.violation_count,
                    "final_prompt": entry.final_prompt,
                    "job_id": entry.job_id,
                    "image_ids": list(entry.image_ids),
                    "timestamp": entry.timestamp or time.time(),
                }
            )
            return creation_id

    def save_image(self, session_id: str, creation_id: int, image_id: str) -> None:
        with self._lock:
            creation = self.creations.get(creation_id)
            if creation is None or creation.session_id != session_id:
                raise UnknownCreation(str(creation_id))
            produced = {i for it in creation.iterations for i in it.image_ids}
            if image_id not in produced:
                raise ImageNotSaved(image_id)
            if image_id not in creation.saved_image_ids:
                self._apply(
                    {
                        "type": "save",
                        "session_id": session_id,
                        "creation_id": creation_id,
                        "image_id": image_id,
                    }
                )

    def creations_for(self, session_id: str) -> list[CreationRecord]:
        if session_id not in self.sessions:
            raise UnknownSession(session_id)
        return sorted(
            (c for c in self.creations.values() if c.session_id == session_id),
            key=lambda c: c.creation_id,
        )

    def compute_summary(self, theme_filter: Optional[str] = None) -> list[TaskSummary]:
        """Population mean/SD of per-participant iteration and image totals."""
        themes = (theme_filter,) if theme_filter else THEMES
        out = []
        for theme in themes:
            per_participant: dict[str, list[int]] = {}
            for creation in self.creations.values():
                if creation.theme != theme:
                    continue
                label = self.sessions[creation.session_id].participant_label
                totals = per_participant.setdefault(label, [0, 0])
                totals[0] += len(creation.iterations)
                totals[1] += sum(len(it.image_ids) for it in creation.iterations)
            if not per_participant:
                continue
            iterations = [v[0] for v in per_participant.values()]
            images = [v[1] for v in per_participant.values()]
            out.append(
                TaskSummary(
                    theme=theme,
                    participants=len(per_participant),
                    iterations_mean=statistics.fmean(iterations),
                    iterations_sd=statistics.pstdev(iterations),
                    images_mean=statistics.fmean(images),
                    images_sd=statistics.pstdev(images),
                )
            )
        return out

    def export_exhibit_card(
        self, creation_id: int, image_id: str, image_store: ImageStore
    ) -> bytes:
        """Self-contained HTML card embedding the image, prompt, theme and tags."""
        creation = self.creations.get(creation_id)
        if creation is None:
            raise UnknownCreation(str(creation_id))
        if image_id not in creation.saved_image_ids:
            raise ImageNotSaved(image_id)
        iteration = next(
            it for it in creation.iterations if image_id in it.image_ids
        )
        payload, media_type = image_store.get(image_id)
        encoded = base64.b64encode(payload).decode("ascii")
        tags = ", ".join(f"{k}={v}" for k, v in sorted(iteration.tags.items()))
        doc = f"""<!DOCTYPE html>
<html lang="en">
<head><meta charset="utf-8"><title>Exhibit Card #{creation_id}</title>
<style>body{{font-family:serif;max-width:40rem;margin:2rem auto}}img{{width:100%}}
dt{{font-weight:bold}}</style></head>
<body>
<h1>Creation #{creation_id}</h1>
<img src="data:{media_type};base64,{encoded}" alt="saved creation image">
<dl>
<dt>Theme</dt><dd>{html.escape(iteration.theme)}</dd>
<dt>Tags</dt><dd>{html.escape(tags)}</dd>
<dt>Prompt</dt><dd>{html.escape(iteration.final_prompt)}</dd>
<dt>Image</dt><dd>{html.escape(image_id)}</dd>
</dl>
</body>
</html>
"""
        return doc.encode("utf-8")


# --- pilot fixture ------------------------------------------------------------


def default_fixture_path() -> Path:
    return Path(__file__).parent / "data" / "fixtures" / "pilot_logs.corpus"


def load_pilot_fixture(path=None) -> list[dict]:
    """Rows of {participant, theme, iterations, images} from the fixture file."""
    from .corpus import parse_records

    rows = []
    for rec in parse_records(Path(path or default_fixture_path())):
        if rec.get("record") != "pilot-log":
            continue
        rows.append(
            {
                "participant": rec["participant"],
                "theme": rec["theme"],
                "iterations": int(rec["iterations"]),
                "images": int(rec["images"]),
            }
        )
    return rows


def replay_pilot_fixture(store: SessionStore, rows: Optional[list] = None) -> None:
    """Materialize fixture rows as sessions and creations with synthetic ids."""
    rows = rows if rows is not None else load_pilot_fixture()
    sessions: dict[str, Session] = {}
    for row in rows:
        label = row["participant"]
        if label not in sessions:
            sessions[label] = store.create_session("zh", label)
        session = sessions[label]
        cid = None
        for index in range(row["iterations"]):
            image_ids = tuple(
                f"fixture-{label}-{row['theme']}-{index}-{k}" for k in range(4)
            )
            cid = store.record_iteration(
                session.session_id,
                IterationEntry(
                    theme=row["theme"],
                    tags={},
                    idea="",
                    outcome_status="Accepted",
                    violation_count=0,
                    final_prompt="(fixture)",
                    job_id=f"fixture-{label}-{row['theme']}-{index}",
                    image_ids=image_ids,
                ),
                creation_id=cid,
            )
