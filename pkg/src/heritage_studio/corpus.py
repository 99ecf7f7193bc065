"""Bilingual Diaolou knowledge base: sites, tag taxonomy, knowledge sections, lexicon.

The corpus lives on disk as line-oriented ``key: value`` records in UTF-8
``.corpus`` files (blank-line separated, ``#`` comments, indented continuation
lines). Every file starts with a header record carrying ``corpus_version: 1``.
A loaded Corpus is immutable and exhaustively cross-checked at load time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

CORPUS_VERSION = "1"

SECTION_IDS = ("background", "historical-reconstruction", "speculative-futures")

# Required option cardinality per category, in canonical category order.
CATEGORY_CARDINALITY = {
    "viewpoint": 3,
    "time-of-day": 3,
    "people": 3,
    "building-function": 3,
    "architectural-style": 5,
    "window-features": 5,
    "decorative-patterns": 3,
    "rendering-style": 6,
}
CATEGORY_ORDER = tuple(CATEGORY_CARDINALITY)

SITE_FUNCTIONS = {"defense-focused", "flood-protection", "residential"}


class CorpusError(Exception):
    """Base class for corpus loading failures."""


class MissingFile(CorpusError):
    pass


class SchemaViolation(CorpusError):
    def __init__(self, message: str, file: str = "", line: int = 0):
        self.file = file
        self.line = line
        if file:
            message = f"{file}:{line}: {message}"
        super().__init__(message)


class DanglingReference(CorpusError):
    pass


class UnknownCategory(CorpusError):
    pass


class UnknownConcept(CorpusError):
    pass


class UnsupportedLanguage(CorpusError):
    pass


@dataclass(frozen=True)
class Bilingual:
    zh: str
    en: str

    def get(self, lang: str, warnings: Optional[list] = None) -> str:
        if lang == "zh":
            return self.zh
        if lang == "en":
            if self.en:
                return self.en
            # missing translation falls back to zh rather than erroring
            if warnings is not None:
                warnings.append("missing en text, fell back to zh")
            return self.zh
        raise UnsupportedLanguage(lang)


@dataclass(frozen=True)
class TagOption:
    option_id: str
    label: Bilingual
    specification_text: str
    conflict_terms: tuple[str, ...] = ()


@dataclass(frozen=True)
class TagCategory:
    category_id: str
    name: Bilingual
    options: tuple[TagOption, ...]
    selection_rule: str  # exactly-one | at-most-one
    applicability: str  # all-views | interior-only

    def option(self, option_id: str) -> Optional[TagOption]:
        for opt in self.options:
            if opt.option_id == option_id:
                return opt
        return None


@dataclass(frozen=True)
class DiaolouSite:
    site_id: str
    names: Bilingual
    cluster: str
    functions: tuple[str, ...]
    style: str
    window_features: tuple[str, ...]
    conservation_status: str
    descriptions: Bilingual
    base_rendering_ref: str
    illustrative: bool = False


@dataclass(frozen=True)
class KnowledgeSection:
    section_id: str
    title: Bilingual
    body: Bilingual
    narration: Bilingual
    site_ids: tuple[str, ...]
    category_ids: tuple[str, ...]


@dataclass(frozen=True)
class LexiconTerm:
    """A lexicon phrase: enrichment vocabulary and/or tag-conflict trigger."""

    term_id: str
    phrase: Bilingual
    kind: str  # enrichment | conflict
    applicable_styles: tuple[str, ...] = ()  # empty = all styles
    match_en: tuple[str, ...] = ()
    match_zh: tuple[str, ...] = ()


@dataclass(frozen=True)
class RuleEntry:
    """One theme-scoped rejection/normalization rule."""

    rule_id: str
    tier: int
    theme_scope: tuple[str, ...]
    match_en: tuple[str, ...]
    match_zh: tuple[str, ...]
    action: str  # remove | replace | relocate
    payload: Bilingual  # replacement / relocation phrase; empty for remove
    explanation: Bilingual
    alternatives_en: tuple[str, ...]
    alternatives_zh: tuple[str, ...]

    @property
    def trigger_terms(self) -> tuple[str, ...]:
        return self.match_en + self.match_zh


@dataclass(frozen=True)
class Corpus:
    root: str
    corpus_version: str
    sites: tuple[DiaolouSite, ...]
    categories: tuple[TagCategory, ...]
    sections: tuple[KnowledgeSection, ...]
    terms: tuple[LexiconTerm, ...]
    rules: tuple[RuleEntry, ...]

    def site(self, site_id: str) -> DiaolouSite:
        for s in self.sites:
            if s.site_id == site_id:
                return s
        raise UnknownConcept(f"unknown site: {site_id}")

    def category(self, category_id: str) -> TagCategory:
        for c in self.categories:
            if c.category_id == category_id:
                return c
        raise UnknownCategory(f"unknown category: {category_id}")

    def section(self, section_id: str) -> KnowledgeSection:
        for sec in self.sections:
            if sec.section_id == section_id:
                return sec
        raise UnknownConcept(f"unknown section: {section_id}")

    def term(self, term_id: str) -> LexiconTerm:
        for t in self.terms:
            if t.term_id == term_id:
                return t
        raise UnknownConcept(f"unknown lexicon term: {term_id}")

    def enrichment_terms(self) -> tuple[LexiconTerm, ...]:
        return tuple(t for t in self.terms if t.kind == "enrichment")

    def rules_for_theme(self, theme: str) -> tuple[RuleEntry, ...]:
        return tuple(r for r in self.rules if theme in r.theme_scope)

    def rendering_path(self, ref: str) -> Path:
        return Path(self.root) / "assets" / "renderings" / ref

    def serialized(self) -> str:
        """Canonical JSON form, used for byte-identity checks."""

        def plain(obj):
            if hasattr(obj, "__dataclass_fields__"):
                return {k: plain(getattr(obj, k)) for k in obj.__dataclass_fields__}
            if isinstance(obj, tuple):
                return [plain(x) for x in obj]
            return obj

        doc = {
            "corpus_version": self.corpus_version,
            "sites": plain(self.sites),
            "categories": plain(self.categories),
            "sections": plain(self.sections),
            "terms": plain(self.terms),
            "rules": plain(self.rules),
        }
        return json.dumps(doc, ensure_ascii=False, sort_keys=True)


# --- record file parsing ------------------------------------------------------


def parse_records(path: Path) -> list[dict]:
    """Parse one ``.corpus`` file into a list of record dicts.

    Records carry a ``_file``/``_line`` origin for error reporting. The
    header record (corpus_version) is validated and stripped.
    """
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingFile(str(path))
    records: list[dict] = []
    current: dict = {}
    last_key = None
    start_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line.strip():
            if current:
                records.append(current)
                current, last_key = {}, None
            continue
        if line.lstrip().startswith("#"):
            continue
        if line[0] in " \t":
            # continuation of the previous value
            if last_key is None:
                raise SchemaViolation("continuation line without a key", str(path), lineno)
            current[last_key] = current[last_key] + " " + line.strip()
            continue
        if ": " not in line and not line.endswith(":"):
            raise SchemaViolation(f"malformed line: {line!r}", str(path), lineno)
        key, _, value = line.partition(":")
        key = key.strip()
        if not current:
            start_line = lineno
        if key in current:
            raise SchemaViolation(f"duplicate key {key!r}", str(path), lineno)
        current[key] = value.strip()
        current.setdefault("_file", str(path))
        current.setdefault("_line", start_line)
        last_key = key
    if current:
        records.append(current)
    if not records:
        raise SchemaViolation("empty corpus file", str(path), 1)
    header = records[0]
    if header.get("corpus_version") != CORPUS_VERSION:
        raise SchemaViolation(
            f"missing or unsupported corpus_version header (want {CORPUS_VERSION})",
            str(path),
            header.get("_line", 1),
        )
    return records[1:]


def _require(rec: dict, key: str) -> str:
    value = rec.get(key, "")
    if not value:
        raise SchemaViolation(f"missing required field {key!r}", rec.get("_file", ""), rec.get("_line", 0))
    return value


def _bilingual(rec: dict, stem: str, required: bool = True) -> Bilingual:
    zh = rec.get(f"{stem}_zh", "")
    en = rec.get(f"{stem}_en", "")
    if required and (not zh or not en):
        raise SchemaViolation(
            f"field {stem!r} must be present in both zh and en",
            rec.get("_file", ""),
            rec.get("_line", 0),
        )
    return Bilingual(zh=zh, en=en)


def _listfield(rec: dict, key: str) -> tuple[str, ...]:
    raw = rec.get(key, "")
    return tuple(v.strip() for v in raw.split(";") if v.strip())


# --- loading ------------------------------------------------------------------


def _iter_corpus_files(directory: Path) -> Iterator[Path]:
    if not directory.is_dir():
        raise MissingFile(str(directory))
    files = sorted(directory.glob("*.corpus"))
    if not files:
        raise MissingFile(f"{directory}: no .corpus files")
    return iter(files)


def load_corpus(root_path) -> Corpus:
    """Load and fully validate the corpus directory at ``root_path``."""
    root = Path(root_path)
    if not root.is_dir():
        raise MissingFile(str(root))

    categories = _load_categories(root / "taxonomy" / "categories.corpus")
    terms, rules = _load_lexicon(root / "lexicon")
    sites = _load_sites(root / "sites")
    sections = _load_sections(root / "knowledge")

    corpus = Corpus(
        root=str(root),
        corpus_version=CORPUS_VERSION,
        sites=sites,
        categories=categories,
        sections=sections,
        terms=terms,
        rules=rules,
    )
    _check_integrity(corpus)
    return corpus


def _load_categories(path: Path) -> tuple[TagCategory, ...]:
    records = parse_records(path)
    categories: dict[str, dict] = {}
    options: dict[str, list[TagOption]] = {}
    for rec in records:
        kind = _require(rec, "record")
        if kind == "category":
            cid = _require(rec, "id")
            categories[cid] = rec
            options.setdefault(cid, [])
        elif kind == "option":
            cid = _require(rec, "category")
            if cid not in categories:
                raise SchemaViolation(
                    f"option before its category {cid!r}", rec["_file"], rec["_line"]
                )
            options[cid].append(
                TagOption(
                    option_id=_require(rec, "id"),
                    label=_bilingual(rec, "label"),
                    specification_text=_require(rec, "specification"),
                    conflict_terms=_listfield(rec, "conflicts"),
                )
            )
        else:
            raise SchemaViolation(f"unknown record kind {kind!r}", rec["_file"], rec["_line"])
    out = []
    for cid, rec in categories.items():
        rule = rec.get("selection_rule", "at-most-one")
        if rule not in ("exactly-one", "at-most-one"):
            raise SchemaViolation(f"bad selection_rule {rule!r}", rec["_file"], rec["_line"])
        applicability = rec.get("applicability", "all-views")
        if applicability not in ("all-views", "interior-only"):
            raise SchemaViolation(f"bad applicability {applicability!r}", rec["_file"], rec["_line"])
        out.append(
            TagCategory(
                category_id=cid,
                name=_bilingual(rec, "name"),
                options=tuple(options[cid]),
                selection_rule=rule,
                applicability=applicability,
            )
        )
    return tuple(out)


def _load_sites(directory: Path) -> tuple[DiaolouSite, ...]:
    sites = []
    for path in _iter_corpus_files(directory):
        for rec in parse_records(path):
            if _require(rec, "record") != "site":
                raise SchemaViolation("expected site record", rec["_file"], rec["_line"])
            sites.append(
                DiaolouSite(
                    site_id=_require(rec, "id"),
                    names=_bilingual(rec, "name"),
                    cluster=_require(rec, "cluster"),
                    functions=_listfield(rec, "functions"),
                    style=_require(rec, "style"),
                    window_features=_listfield(rec, "windows"),
                    conservation_status=rec.get("conservation", ""),
                    descriptions=_bilingual(rec, "description"),
                    base_rendering_ref=_require(rec, "base_rendering"),
                    illustrative=rec.get("illustrative", "no") == "yes",
                )
            )
    return tuple(sites)


def _load_sections(directory: Path) -> tuple[KnowledgeSection, ...]:
    sections = []
    for path in _iter_corpus_files(directory):
        for rec in parse_records(path):
            if _require(rec, "record") != "section":
                raise SchemaViolation("expected section record", rec["_file"], rec["_line"])
            sections.append(
                KnowledgeSection(
                    section_id=_require(rec, "id"),
                    title=_bilingual(rec, "title"),
                    body=_bilingual(rec, "body"),
                    narration=_bilingual(rec, "narration"),
                    site_ids=_listfield(rec, "sites"),
                    category_ids=_listfield(rec, "categories"),
                )
            )
    return tuple(sections)


def _load_lexicon(directory: Path) -> tuple[tuple[LexiconTerm, ...], tuple[RuleEntry, ...]]:
    terms: list[LexiconTerm] = []
    rules: list[RuleEntry] = []
    for path in _iter_corpus_files(directory):
        for rec in parse_records(path):
            kind = _require(rec, "record")
            if kind == "term":
                terms.append(
                    LexiconTerm(
                        term_id=_require(rec, "id"),
                        phrase=_bilingual(rec, "phrase"),
                        kind=rec.get("kind", "enrichment"),
                        applicable_styles=_listfield(rec, "styles"),
                        match_en=_listfield(rec, "match_en"),
                        match_zh=_listfield(rec, "match_zh"),
                    )
                )
            elif kind == "rule":
                action = _require(rec, "action")
                if action not in ("remove", "replace", "relocate"):
                    raise SchemaViolation(f"bad action {action!r}", rec["_file"], rec["_line"])
                payload = _bilingual(rec, "payload", required=action != "remove")
                entry = RuleEntry(
                    rule_id=_require(rec, "id"),
                    tier=int(rec.get("tier", "1")),
                    theme_scope=_listfield(rec, "themes"),
                    match_en=_listfield(rec, "match_en"),
                    match_zh=_listfield(rec, "match_zh"),
                    action=action,
                    payload=payload,
                    explanation=_bilingual(rec, "explanation"),
                    alternatives_en=_listfield(rec, "alternatives_en"),
                    alternatives_zh=_listfield(rec, "alternatives_zh"),
                )
                if not entry.trigger_terms:
                    raise SchemaViolation("rule has no trigger terms", rec["_file"], rec["_line"])
                if entry.tier not in (1, 2, 3):
                    raise SchemaViolation("rule tier must be 1, 2 or 3", rec["_file"], rec["_line"])
                if not entry.alternatives_en or not entry.alternatives_zh:
                    raise SchemaViolation("rule needs at least one alternative", rec["_file"], rec["_line"])
                rules.append(entry)
            else:
                raise SchemaViolation(f"unknown record kind {kind!r}", rec["_file"], rec["_line"])
    return tuple(terms), tuple(rules)


def _check_integrity(corpus: Corpus) -> None:
    seen = set()
    for cat in corpus.categories:
        if cat.category_id in seen:
            raise SchemaViolation(f"duplicate category {cat.category_id!r}")
        seen.add(cat.category_id)
        for opt in cat.options:
            for term_id in opt.conflict_terms:
                if not any(t.term_id == term_id for t in corpus.terms):
                    raise DanglingReference(
                        f"option {cat.category_id}/{opt.option_id} conflicts with "
                        f"unknown lexicon term {term_id!r}"
                    )
            if not opt.specification_text:
                raise SchemaViolation(f"option {opt.option_id} has empty specification")

    style_cat = corpus.category("architectural-style")
    window_cat = corpus.category("window-features")
    style_ids = {o.option_id for o in style_cat.options}
    window_ids = {o.option_id for o in window_cat.options}

    site_ids = set()
    for site in corpus.sites:
        if site.site_id in site_ids:
            raise SchemaViolation(f"duplicate site {site.site_id!r}")
        site_ids.add(site.site_id)
        if site.style not in style_ids:
            raise DanglingReference(
                f"site {site.site_id}: style {site.style!r} is not an architectural-style option"
            )
        for w in site.window_features:
            if w not in window_ids:
                raise DanglingReference(
                    f"site {site.site_id}: window tag {w!r} is not a window-features option"
                )
        for fn in site.functions:
            if fn not in SITE_FUNCTIONS:
                raise DanglingReference(f"site {site.site_id}: unknown function tag {fn!r}")
        if not corpus.rendering_path(site.base_rendering_ref).is_file():
            raise DanglingReference(
                f"site {site.site_id}: base rendering {site.base_rendering_ref!r} not bundled"
            )

    got_sections = {s.section_id for s in corpus.sections}
    missing = set(SECTION_IDS) - got_sections
    if missing:
        raise SchemaViolation(f"missing knowledge sections: {sorted(missing)}")
    for sec in corpus.sections:
        for sid in sec.site_ids:
            if sid not in site_ids:
                raise DanglingReference(f"section {sec.section_id}: unknown site {sid!r}")
        for cid in sec.category_ids:
            if cid not in seen:
                raise DanglingReference(f"section {sec.section_id}: unknown category {cid!r}")

    term_ids = set()
    for term in corpus.terms:
        if term.term_id in term_ids:
            raise SchemaViolation(f"duplicate lexicon term {term.term_id!r}")
        term_ids.add(term.term_id)
        for style in term.applicable_styles:
            if style not in style_ids:
                raise DanglingReference(f"term {term.term_id}: unknown style {style!r}")


def validate_bundled_cardinality(corpus: Corpus) -> None:
    """Assert the bundled-corpus counts: 10 sites, 8 categories, fixed option counts."""
    if len(corpus.sites) != 10:
        raise SchemaViolation(f"expected 10 sites, found {len(corpus.sites)}")
    if len(corpus.categories) != 8:
        raise SchemaViolation(f"expected 8 categories, found {len(corpus.categories)}")
    for cid, count in CATEGORY_CARDINALITY.items():
        cat = corpus.category(cid)
        if len(cat.options) != count:
            raise SchemaViolation(
                f"category {cid}: expected {count} options, found {len(cat.options)}"
            )
    deco = corpus.category("decorative-patterns")
    if deco.applicability != "interior-only":
        raise SchemaViolation("decorative-patterns must be interior-only")


# --- public query operations --------------------------------------------------


def list_tag_options(corpus: Corpus, category_id: str) -> tuple[TagOption, ...]:
    """Options of one category, in authored order."""
    return corpus.category(category_id).options


def describe(corpus: Corpus, concept_id: str, lang: str) -> str:
    """Resolve prose for a site, category, option, section or lexicon term id."""
    if lang not in ("zh", "en"):
        raise UnsupportedLanguage(lang)
    for site in corpus.sites:
        if site.site_id == concept_id:
            return site.descriptions.get(lang)
    for cat in corpus.categories:
        if cat.category_id == concept_id:
            return cat.name.get(lang)
        for opt in cat.options:
            if opt.option_id == concept_id:
                return f"{opt.label.get(lang)}: {opt.specification_text}"
    for sec in corpus.sections:
        if sec.section_id == concept_id:
            return sec.body.get(lang)
    for term in corpus.terms:
        if term.term_id == concept_id:
            return term.phrase.get(lang)
    raise UnknownConcept(concept_id)


def default_corpus_root() -> Path:
    """Path of the corpus bundled with the package."""
    return Path(__file__).parent / "data" / "corpus"
