"""Anatomy vocabulary: label ids, canonical names, synonyms, ranked lookup.

The ranking used by :func:`search_anatomy_names` is also reused for tool
name suggestions, so the matching rules live here as plain functions over
strings.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import EmptyQuery

# match ranks, best first
RANK_EXACT = 0
RANK_PREFIX = 1
RANK_SUBSTRING = 2
RANK_FUZZY = 3
FUZZY_MAX_DISTANCE = 2
MAX_RESULTS = 10


def levenshtein(a, b) -> int:
    """Edit distance with unit costs; works on strings or any sequences."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, xa in enumerate(a, start=1):
        cur = [i]
        for j, xb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (xa != xb)))
        prev = cur
    return prev[-1]


def match_rank(query: str, term: str) -> int | None:
    """Rank of ``term`` against ``query`` (case-insensitive), or None."""
    q, t = query.lower(), term.lower()
    if t == q:
        return RANK_EXACT
    if t.startswith(q):
        return RANK_PREFIX
    if q in t:
        return RANK_SUBSTRING
    if levenshtein(q, t) <= FUZZY_MAX_DISTANCE:
        return RANK_FUZZY
    return None


def suggest_names(query: str, names, k: int = 3) -> list[str]:
    """The k closest candidate names, rank-matched first, then by raw edit
    distance. Used for did-you-mean suggestions on unknown tool names."""
    q = query.lower()
    scored = []
    for name in names:
        rank = match_rank(q, name)
        scored.append((rank if rank is not None else RANK_FUZZY + 1, levenshtein(q, name.lower()), name))
    scored.sort()
    return [name for _, _, name in scored[:k]]


@dataclass(frozen=True)
class VocabEntry:
    label: int
    name: str
    synonyms: tuple[str, ...] = ()

    @property
    def terms(self) -> tuple[str, ...]:
        return (self.name,) + self.synonyms


@dataclass(frozen=True)
class AnatomyMatch:
    label: int
    name: str
    rank: int
    matched: str

    def as_dict(self) -> dict:
        return {"label": self.label, "name": self.name, "rank": self.rank, "matched": self.matched}


class Vocabulary:
    """Immutable id -> entry table loaded from the tab-separated format
    ``id<TAB>name<TAB>synonym1,synonym2`` (synonyms optional)."""

    def __init__(self, entries):
        self.entries = tuple(sorted(entries, key=lambda e: e.label))
        self.by_label = {e.label: e for e in self.entries}

    def __len__(self):
        return len(self.entries)

    @classmethod
    def from_text(cls, text: str) -> "Vocabulary":
        entries = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise ValueError(f"vocabulary line {lineno}: expected id<TAB>name")
            synonyms = tuple(s for s in parts[2].split(",") if s) if len(parts) > 2 else ()
            entries.append(VocabEntry(int(parts[0]), parts[1], synonyms))
        return cls(entries)

    @classmethod
    def from_file(cls, path) -> "Vocabulary":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def name_for(self, label: int) -> str | None:
        entry = self.by_label.get(label)
        return entry.name if entry else None


def load_default_vocabulary() -> Vocabulary:
    text = resources.files("ctkit").joinpath("data/anatomy_vocabulary.tsv").read_text("utf-8")
    return Vocabulary.from_text(text)


def load_vocabulary(path=None) -> Vocabulary:
    if path is None:
        return load_default_vocabulary()
    return Vocabulary.from_file(path)


def search_anatomy_names(query: str, vocabulary: Vocabulary) -> list[AnatomyMatch]:
    """Ranked vocabulary lookup over canonical names and synonyms.

    Exact beats prefix beats substring beats small-edit-distance; ties break
    alphabetically on the canonical name; at most 10 results.
    """
    if not query or not query.strip():
        raise EmptyQuery("query must be non-empty")
    matches = []
    for entry in vocabulary.entries:
        best = None
        for term in entry.terms:
            rank = match_rank(query, term)
            if rank is not None and (best is None or rank < best[0]):
                best = (rank, term)
        if best is not None:
            matches.append(AnatomyMatch(entry.label, entry.name, best[0], best[1]))
    matches.sort(key=lambda m: (m.rank, m.name))
    return matches[:MAX_RESULTS]
