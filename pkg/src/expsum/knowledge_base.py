"""Domain-term knowledge base built from package-level documentation.

Each entry is a 4-tuple: the term, the documentation it came from, the path
context (package root) of that documentation, and a sparse TF-IDF vector of
the documentation. Terms are found lexically (special-form expressions) and
semantically (words whose synonym substitution would change sentence
meaning, judged by an LLM).
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ClientFailure, EmptyCorpus, IoFailure

# Compact standard English stopword list used to pick semantic-extraction
# candidates.
STOPWORDS = frozenset(
    """a about above after again against all am an and any are as at be
    because been before being below between both but by can did do does
    doing down during each few for from further had has have having he her
    here hers herself him himself his how i if in into is it its itself just
    me more most my myself no nor not now of off on once only or other our
    ours ourselves out over own same she should so some such than that the
    their theirs them themselves then there these they this those through to
    too under until up very was we were what when where which while who whom
    why will with you your yours yourself yourselves""".split()
)

_CAMEL_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+")
_WORD_RE = re.compile(r"[A-Za-z0-9]+")
_STRIP_PUNCT = ".,;:!?()[]{}<>\"'`"


def split_camel(word: str) -> list[str]:
    """Segment a mixed-case identifier: ``getBatteryLevel`` -> get, Battery,
    Level; ``AVSession`` -> AV, Session."""
    return _CAMEL_RE.findall(word)


def tokenize(text: str) -> list[str]:
    """Lowercased subtokens: split on non-alphanumerics, then on camel-case
    boundaries."""
    tokens: list[str] = []
    for word in _WORD_RE.findall(text):
        tokens.extend(seg.lower() for seg in split_camel(word))
    return tokens


@dataclass(frozen=True)
class PackageDoc:
    """One package-level documentation text and the package root it
    documents."""

    path_context: str
    text: str

    def __post_init__(self):
        if not self.path_context:
            raise ValueError("PackageDoc.path_context must be non-empty")
        if not self.text:
            raise ValueError("PackageDoc.text must be non-empty")


@dataclass
class SparseVector:
    """Index-to-weight map; zero weights are never stored."""

    entries: dict[int, float] = field(default_factory=dict)

    def dot(self, other: "SparseVector") -> float:
        if len(self.entries) > len(other.entries):
            return other.dot(self)
        return sum(w * other.entries.get(i, 0.0) for i, w in self.entries.items())

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.entries.values()))

    def __bool__(self) -> bool:
        return bool(self.entries)


def cosine_similarity(a: SparseVector, b: SparseVector) -> float:
    denom = a.norm() * b.norm()
    if denom == 0.0:
        return 0.0
    return a.dot(b) / denom


@dataclass
class TfIdfModel:
    """Corpus statistics for TF-IDF encoding.

    ``doc_count`` is the number of fitted documents and ``doc_frequency``
    maps a token to how many documents contain it. The inverse document
    frequency of token i is ``ln(doc_count / (doc_frequency[i] + alpha))``
    with a small smoothing constant alpha. With a single-document corpus the
    IDF is slightly negative (ln(1/1.01)); that degenerate case is
    documented behavior, not an error.
    """

    vocabulary: dict[str, int]
    doc_count: int
    doc_frequency: dict[str, int]
    alpha: float = 0.01
    log_base: str = "natural"

    def idf(self, token: str) -> float:
        return math.log(self.doc_count / (self.doc_frequency[token] + self.alpha))


@dataclass
class KnowledgeEntry:
    """4-tuple knowledge record: term, documentation, path context, vector."""

    term: str
    documentation: str
    path_context: str
    vector: SparseVector

    def to_public_dict(self) -> dict:
        return {
            "term": self.term,
            "documentation": self.documentation,
            "path_context": self.path_context,
        }


def fit_tfidf(docs: list[PackageDoc], alpha: float = 0.01) -> TfIdfModel:
    """Fit corpus statistics over the package documents."""
    if not docs:
        raise EmptyCorpus("cannot fit TF-IDF on zero documents")
    vocabulary: dict[str, int] = {}
    doc_frequency: dict[str, int] = {}
    for doc in docs:
        tokens = tokenize(doc.text)
        for token in tokens:
            if token not in vocabulary:
                vocabulary[token] = len(vocabulary)
        for token in set(tokens):
            doc_frequency[token] = doc_frequency.get(token, 0) + 1
    return TfIdfModel(
        vocabulary=vocabulary,
        doc_count=len(docs),
        doc_frequency=doc_frequency,
        alpha=alpha,
    )


def encode_tfidf(model: TfIdfModel, text: str) -> SparseVector:
    """Encode a text against the fitted model.

    Term frequency is the token's count divided by the text's total token
    count (out-of-vocabulary tokens included in the denominator, then
    dropped from the vector).
    """
    tokens = tokenize(text)
    if not tokens:
        return SparseVector()
    total = len(tokens)
    counts = Counter(tokens)
    entries: dict[int, float] = {}
    for token, count in counts.items():
        index = model.vocabulary.get(token)
        if index is None:
            continue
        weight = (count / total) * model.idf(token)
        if weight != 0.0:
            entries[index] = weight
    return SparseVector(entries)


# -- term extraction ---------------------------------------------------------


def _is_all_caps(word: str) -> bool:
    letters = [c for c in word if c.isalpha()]
    return len(letters) >= 2 and all(c.isupper() for c in letters)


def _is_camel(word: str) -> bool:
    if not any(c.islower() for c in word) or not any(c.isupper() for c in word):
        return False
    return len(split_camel(word)) >= 2


def extract_terms_lexical(doc: PackageDoc) -> list[str]:
    """Special-form expressions: camel-case identifiers, all-caps strings,
    and expressions with underscores or interior special characters.

    Returns surface forms, deduplicated, in first-occurrence order.
    """
    terms: list[str] = []
    seen: set[str] = set()
    for raw in doc.text.split():
        word = raw.strip(_STRIP_PUNCT + "@")
        if len(word) < 2 or word in seen:
            continue
        has_special = any(not c.isalnum() for c in word)
        if has_special or _is_all_caps(word) or _is_camel(word):
            terms.append(word)
            seen.add(word)
    return terms


_SENTENCE_SPLIT_RE = re.compile(r"[.!?;\n]+")

SEMANTIC_JUDGE_SYSTEM_PROMPT = (
    "You judge whether replacing one word with a plausible synonym changes "
    "the technical meaning of a sentence."
)


def _semantic_candidates(doc: PackageDoc, lexical: set[str]) -> list[tuple[str, str]]:
    sentences = [s.strip() for s in _SENTENCE_SPLIT_RE.split(doc.text) if s.strip()]
    candidates: list[tuple[str, str]] = []
    seen: set[str] = set()
    for sentence in sentences:
        for raw in sentence.split():
            word = raw.strip(_STRIP_PUNCT + "@")
            if len(word) < 3 or not word.isalpha():
                continue
            if word in lexical or word in seen:
                continue
            if word.lower() in STOPWORDS:
                continue
            seen.add(word)
            candidates.append((word, sentence))
    return candidates


def extract_terms_semantic(doc: PackageDoc, client) -> list[str]:
    """Words in plain lexical form whose synonym substitution would change
    the sentence meaning, as judged by the client.

    The client must answer ``changed`` or ``preserved``; anything else is a
    malformed payload. Failures carry the document's path context.
    """
    from .llm import LlmRequest

    lexical = set(extract_terms_lexical(doc))
    terms: list[str] = []
    for word, sentence in _semantic_candidates(doc, lexical):
        prompt = (
            f"Sentence: {sentence}\n"
            f"Word: {word}\n"
            "Propose a plausible synonym for the word, substitute it, and "
            "decide whether the sentence's technical meaning changes.\n"
            "Answer with exactly one word: changed or preserved."
        )
        try:
            response = client.complete(
                LlmRequest(
                    system_prompt=SEMANTIC_JUDGE_SYSTEM_PROMPT,
                    user_prompt=prompt,
                    temperature=0.0,
                    max_tokens=8,
                )
            )
        except ClientFailure as e:
            raise ClientFailure(
                f"{doc.path_context}: {e}", kind=e.kind
            ) from e
        verdict = response.text.strip().lower().split()
        if not verdict or verdict[0] not in ("changed", "preserved"):
            raise ClientFailure(
                f"{doc.path_context}: unusable judgment {response.text!r} "
                f"for word {word!r}",
                kind="malformed_payload",
            )
        if verdict[0] == "changed":
            terms.append(word)
    return terms


def build_knowledge_base(
    docs: list[PackageDoc], client
) -> tuple[TfIdfModel, list[KnowledgeEntry]]:
    """Fit the TF-IDF model and materialize one entry per (term, document).

    A document yielding zero terms contributes no entries but still counts
    toward the corpus statistics.
    """
    model = fit_tfidf(docs)
    entries: list[KnowledgeEntry] = []
    for doc in docs:
        terms = extract_terms_lexical(doc)
        for term in extract_terms_semantic(doc, client):
            if term not in terms:
                terms.append(term)
        vector = encode_tfidf(model, doc.text)
        for term in terms:
            entries.append(
                KnowledgeEntry(
                    term=term,
                    documentation=doc.text,
                    path_context=doc.path_context,
                    vector=SparseVector(dict(vector.entries)),
                )
            )
    return model, entries


# -- persistence -------------------------------------------------------------


def kb_to_json(model: TfIdfModel, entries: list[KnowledgeEntry]) -> str:
    payload = {
        "model": {
            "vocabulary": model.vocabulary,
            "doc_count": model.doc_count,
            "doc_frequency": model.doc_frequency,
            "alpha": model.alpha,
            "log_base": model.log_base,
        },
        "entries": [
            {
                "term": e.term,
                "documentation": e.documentation,
                "path_context": e.path_context,
                "vector": {str(i): w for i, w in sorted(e.vector.entries.items())},
            }
            for e in entries
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def kb_from_json(text: str) -> tuple[TfIdfModel, list[KnowledgeEntry]]:
    payload = json.loads(text)
    m = payload["model"]
    model = TfIdfModel(
        vocabulary={k: int(v) for k, v in m["vocabulary"].items()},
        doc_count=int(m["doc_count"]),
        doc_frequency={k: int(v) for k, v in m["doc_frequency"].items()},
        alpha=float(m["alpha"]),
        log_base=m.get("log_base", "natural"),
    )
    entries = [
        KnowledgeEntry(
            term=e["term"],
            documentation=e["documentation"],
            path_context=e["path_context"],
            vector=SparseVector({int(i): float(w) for i, w in e["vector"].items()}),
        )
        for e in payload["entries"]
    ]
    return model, entries


def save_knowledge_base(
    path: str | Path, model: TfIdfModel, entries: list[KnowledgeEntry]
) -> None:
    Path(path).write_text(kb_to_json(model, entries), encoding="utf-8")


def load_knowledge_base(path: str | Path) -> tuple[TfIdfModel, list[KnowledgeEntry]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot read knowledge base {path}: {e}") from e
    return kb_from_json(text)
