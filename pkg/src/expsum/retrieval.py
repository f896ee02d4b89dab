"""Three-stage cascaded retrieval over the knowledge base.

Stage 1 keeps entries whose path context shares a long-enough left-aligned
token prefix with the query's path. Stage 2 ranks survivors by cosine
similarity between TF-IDF vectors and keeps the top n. Stage 3 drops terms
lexically nested inside longer surviving terms.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .code_model import METADATA_FIELD_ORDER, MetadataSet
from .knowledge_base import (
    KnowledgeEntry,
    TfIdfModel,
    cosine_similarity,
    encode_tfidf,
    split_camel,
)

_PATH_DELIMITERS = ("/", ".", "@")


@dataclass(frozen=True)
class QueryText:
    """Retrieval query: comma-concatenated metadata values plus the query's
    own path used for context matching."""

    concatenated: str
    path: str

    def __post_init__(self):
        if not self.path:
            raise ValueError("QueryText.path must be non-empty")


@dataclass(frozen=True)
class RetrievalConfig:
    path_overlap_threshold: float = 0.75
    top_n: int = 9
    token_overlap_threshold: float = 0.75

    def __post_init__(self):
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")
        for name in ("path_overlap_threshold", "token_overlap_threshold"):
            value = getattr(self, name)
            if not (0.0 < value <= 1.0):
                raise ValueError(f"{name} must be in (0, 1]")


@dataclass
class RetrievalResult:
    """Deduplicated terms of the surviving entries plus per-stage survivor
    counts for auditability."""

    terms: list[str] = field(default_factory=list)
    entries: list[KnowledgeEntry] = field(default_factory=list)
    stage_trace: list[int] = field(default_factory=lambda: [0, 0, 0])

    def to_dict(self) -> dict:
        return {
            "terms": list(self.terms),
            "entries": [e.to_public_dict() for e in self.entries],
            "stage_trace": list(self.stage_trace),
        }


def _render_value(value) -> str:
    if isinstance(value, list):
        parts = []
        for item in value:
            if hasattr(item, "name"):  # ParameterField
                text = item.name or ""
                if item.type_annotation:
                    text = f"{text}: {item.type_annotation}" if text else item.type_annotation
                if item.default_value is not None:
                    text = f"{text} = {item.default_value}"
                parts.append(text)
            else:
                parts.append(str(item))
        return ", ".join(p for p in parts if p)
    return str(value)


def query_from_metadata(m: MetadataSet) -> QueryText:
    """Build the comma-concatenated query from a (checked) metadata set."""
    values: list[str] = []
    for name in METADATA_FIELD_ORDER:
        if name == "dmt":
            values.extend(m.dmt[k] for k in sorted(m.dmt))
            continue
        value = getattr(m, name)
        if value is None:
            continue
        rendered = _render_value(value)
        if rendered:
            values.append(rendered)
    return QueryText(
        concatenated=", ".join(values),
        path=m.package_module or m.file_path,
    )


def _path_tokens(path: str) -> list[str]:
    for delim in _PATH_DELIMITERS[1:]:
        path = path.replace(delim, _PATH_DELIMITERS[0])
    return [t.lower() for t in path.split(_PATH_DELIMITERS[0]) if t]


def path_overlap(query_path: str, entry_path: str) -> float:
    """Left-aligned consecutive token overlap, relative to the query path.

    Both paths are tokenized on '/', '.', and '@'; tokens are compared
    case-insensitively from the left until the first mismatch.
    """
    query_tokens = _path_tokens(query_path)
    entry_tokens = _path_tokens(entry_path)
    if not query_tokens:
        return 0.0
    matched = 0
    for q, e in zip(query_tokens, entry_tokens):
        if q != e:
            break
        matched += 1
    return matched / len(query_tokens)


def stage1_filter(
    query: QueryText, entries: list[KnowledgeEntry], cfg: RetrievalConfig
) -> list[KnowledgeEntry]:
    """Keep entries with sufficient path-context overlap, preserving order."""
    return [
        e
        for e in entries
        if path_overlap(query.path, e.path_context) >= cfg.path_overlap_threshold
    ]


def stage2_rank(
    query: QueryText,
    model: TfIdfModel,
    survivors: list[KnowledgeEntry],
    cfg: RetrievalConfig,
) -> list[KnowledgeEntry]:
    """Rank survivors by cosine similarity of TF-IDF vectors; keep top n.

    Ties (including the all-zero-score case of an out-of-vocabulary query)
    break deterministically by ascending path context, then term.
    """
    query_vector = encode_tfidf(model, query.concatenated)
    scored = [
        (cosine_similarity(query_vector, e.vector), e) for e in survivors
    ]
    scored.sort(key=lambda pair: (-pair[0], pair[1].path_context, pair[1].term))
    return [e for _, e in scored[: cfg.top_n]]


def term_tokens(term: str) -> list[str]:
    """Lowercased tokens of a term, split on whitespace and camel-case
    boundaries."""
    tokens: list[str] = []
    for word in term.split():
        tokens.extend(seg.lower() for seg in split_camel(word))
    return tokens


def token_overlap(t_i: str, t_j: str) -> float:
    """Shared-token ratio between two terms, relative to the longer term."""
    tokens_i = Counter(term_tokens(t_i))
    tokens_j = Counter(term_tokens(t_j))
    longer = max(sum(tokens_i.values()), sum(tokens_j.values()))
    if longer == 0:
        return 0.0
    shared = sum((tokens_i & tokens_j).values())
    return shared / longer


def stage3_dedup(terms: list[str], cfg: RetrievalConfig) -> list[str]:
    """Collapse exact duplicates, then drop every term that is a
    sufficiently overlapping, strictly shorter (by characters) variant of
    another term. Survivors keep their original order."""
    collapsed: list[str] = []
    for term in terms:
        if term not in collapsed:
            collapsed.append(term)
    survivors = []
    for t_i in collapsed:
        nested = any(
            t_j != t_i
            and token_overlap(t_i, t_j) >= cfg.token_overlap_threshold
            and len(t_i) < len(t_j)
            for t_j in collapsed
        )
        if not nested:
            survivors.append(t_i)
    return survivors


def retrieve(
    query: QueryText,
    kb: tuple[TfIdfModel, list[KnowledgeEntry]],
    cfg: RetrievalConfig,
) -> RetrievalResult:
    """Run the full cascade and report per-stage survivor counts."""
    model, entries = kb
    stage1 = stage1_filter(query, entries, cfg)
    stage2 = stage2_rank(query, model, stage1, cfg)
    terms = stage3_dedup([e.term for e in stage2], cfg)
    return RetrievalResult(
        terms=terms,
        entries=stage2,
        stage_trace=[len(stage1), len(stage2), len(terms)],
    )
