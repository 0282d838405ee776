"""Ellipsis disambiguation experiment over pretrained word embeddings.

Verb matrices are the sum of subject (x) object outer products over a
triple corpus.  An elliptical sentence "sub1 verb obj and sub2 does-too"
composes per model: the non-linear full copy applies the verb phrase to
both subjects, the k-extension adds the bare subjects scaled by k, and
the two basis-copy variants keep the verb phrase on one conjunct only.
Sentences are ranked by cosine against the candidate-verb sentence and
scored with tie-aware Spearman correlation against human judgements.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


class EmbeddingError(ValueError):
    pass


class MissingWordError(KeyError):
    def __init__(self, word: str):
        super().__init__(word)
        self.word = word

    def __str__(self) -> str:
        return f"word not in embedding store: {self.word!r}"


@dataclass
class EmbeddingStore:
    vectors: dict[str, np.ndarray]
    dim: int
    source: str = ""

    def lookup(self, word: str) -> np.ndarray:
        if word not in self.vectors:
            raise MissingWordError(word)
        return self.vectors[word]

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def coverage(self, words: Sequence[str]) -> tuple[int, list[str]]:
        missing = sorted({w for w in words if w not in self.vectors})
        return len(words) - len(missing), missing


def load_embeddings(path: str | Path, fmt: str = "word2vec-text") -> EmbeddingStore:
    """Read word2vec text format: header ``vocab_count dim`` then one
    ``word v1 .. vd`` line per word.  First occurrence of a word wins."""
    if fmt != "word2vec-text":
        raise ValueError(f"unsupported embedding format {fmt!r}")
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().split()
        if len(header) != 2:
            raise EmbeddingError(f"{path}:1: header must be 'vocab_count dim'")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise EmbeddingError(f"{path}:1: header must be two integers") from exc
        lineno = 1
        for raw in handle:
            lineno += 1
            if not raw.strip():
                continue
            parts = raw.split()
            word, values = parts[0], parts[1:]
            if len(values) != dim:
                raise EmbeddingError(
                    f"{path}:{lineno}: expected {dim} floats for {word!r}, got {len(values)}"
                )
            if word not in vectors:
                vectors[word] = np.array([float(x) for x in values])
        if len(vectors) != count:
            raise EmbeddingError(
                f"{path}: header declares {count} words, file provides {len(vectors)}"
            )
    return EmbeddingStore(vectors, dim, source=str(path))


@dataclass
class VerbMatrix:
    lemma: str
    matrix: np.ndarray


def relational_verb(pairs: Sequence[tuple[np.ndarray, np.ndarray]], lemma: str = "") -> VerbMatrix:
    """Sum of subject (x) object outer products."""
    if not pairs:
        raise ValueError("relational verb needs at least one subject/object pair")
    dim = len(pairs[0][0])
    matrix = np.zeros((dim, len(pairs[0][1])))
    for subject, obj in pairs:
        if len(subject) != matrix.shape[0] or len(obj) != matrix.shape[1]:
            raise ValueError("inconsistent vector dimensions in verb pairs")
        matrix += np.outer(subject, obj)
    return VerbMatrix(lemma, matrix)


def compose_transitive(verb: VerbMatrix, sub: np.ndarray, obj: np.ndarray) -> np.ndarray:
    """Copy-object composition: matrix times object, pointwise subject."""
    if verb.matrix.shape[1] != len(obj) or verb.matrix.shape[0] != len(sub):
        raise ValueError("dimension mismatch in transitive composition")
    return (verb.matrix @ obj) * sub


# ---------------------------------------------------------------------------
# sentence models


class ModelKind:
    __slots__ = ()
    name = "?"


@dataclass(frozen=True)
class Full(ModelKind):
    name: str = field(default="full", init=False)


@dataclass(frozen=True)
class KExt(ModelKind):
    k: float = 1.0
    name: str = field(default="k-extension", init=False)


@dataclass(frozen=True)
class CopyA(ModelKind):
    name: str = field(default="copy-a", init=False)


@dataclass(frozen=True)
class CopyB(ModelKind):
    name: str = field(default="copy-b", init=False)


@dataclass(frozen=True)
class Additive(ModelKind):
    name: str = field(default="additive", init=False)


@dataclass(frozen=True)
class VerbOnly(ModelKind):
    name: str = field(default="verb-only", init=False)


def default_model_kinds() -> list[ModelKind]:
    return [Full(), KExt(1.0), CopyA(), CopyB(), Additive(), VerbOnly()]


def compose_ellipsis(
    kind: ModelKind,
    verb: Optional[VerbMatrix],
    sub1: np.ndarray,
    obj: np.ndarray,
    sub2: np.ndarray,
    verb_vec: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Vector for "sub1 verb obj and sub2 does-too" under one model.

    The two baselines use the verb's word vector (``verb_vec``) instead
    of, or in addition to, the relational matrix.
    """
    if isinstance(kind, (Full, KExt, CopyA, CopyB)):
        if verb is None:
            raise ValueError(f"{kind.name} model needs a verb matrix")
        vp = verb.matrix @ obj
        if isinstance(kind, Full):
            return vp * sub1 + vp * sub2
        if isinstance(kind, KExt):
            return vp * sub1 + kind.k * sub2 + kind.k * sub1 + vp * sub2
        if isinstance(kind, CopyA):
            return vp * sub1 + sub2
        return sub1 + vp * sub2
    if isinstance(kind, Additive):
        if verb_vec is None:
            raise ValueError("additive model needs the verb word vector")
        return sub1 + verb_vec + obj + sub2
    if isinstance(kind, VerbOnly):
        if verb_vec is None:
            raise ValueError("verb-only model needs the verb word vector")
        return np.array(verb_vec, dtype=float)
    raise TypeError(f"unknown model kind {kind!r}")


# ---------------------------------------------------------------------------
# scoring


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError("cosine needs vectors of equal length")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine undefined for the zero vector")
    return float(np.dot(u, v) / (nu * nv))


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks with ties sharing their average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2 + 1
        for t in range(i, j + 1):
            ranks[order[t]] = shared
        i = j + 1
    return ranks


def spearman_rho(model_scores: Sequence[float], human_scores: Sequence[float]) -> float:
    """Tie-aware rank correlation (Pearson correlation of average ranks)."""
    if len(model_scores) != len(human_scores):
        raise ValueError("score lists must have equal length")
    if len(model_scores) < 2:
        raise ValueError("rank correlation needs at least two items")
    a = np.array(average_ranks(model_scores))
    b = np.array(average_ranks(human_scores))
    a -= a.mean()
    b -= b.mean()
    denom = np.sqrt(np.sum(a * a) * np.sum(b * b))
    if denom == 0.0:
        raise ValueError("rank correlation undefined for constant scores")
    return float(np.sum(a * b) / denom)


# ---------------------------------------------------------------------------
# task harness


@dataclass(frozen=True)
class TaskEntry:
    subject1: str
    verb: str
    object: str
    subject2: str
    candidate_verb: str
    human_score: float


def load_task_entries(path: str | Path) -> list[TaskEntry]:
    """TSV with header subject1 verb object subject2 candidate_verb score."""
    expected = ["subject1", "verb", "object", "subject2", "candidate_verb", "score"]
    entries = []
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n").split("\t")
        if header != expected:
            wanted = "\t".join(expected)
            raise ValueError(f"{path}:1: header must be {wanted!r}")
        for lineno, raw in enumerate(handle, start=2):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 tab-separated fields")
            entries.append(
                TaskEntry(parts[0], parts[1], parts[2], parts[3], parts[4], float(parts[5]))
            )
    return entries


def load_verb_triples(path: str | Path) -> list[tuple[str, str, str]]:
    """TSV of (verb, subject, object) rows used to train verb matrices."""
    triples = []
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected verb<TAB>subject<TAB>object")
            triples.append((parts[0], parts[1], parts[2]))
    return triples


def build_verb_matrices(
    triples: Sequence[tuple[str, str, str]], store: EmbeddingStore
) -> tuple[dict[str, VerbMatrix], list[str]]:
    pairs: dict[str, list[tuple[np.ndarray, np.ndarray]]] = {}
    skipped = []
    for verb, subject, obj in triples:
        if subject not in store or obj not in store:
            skipped.append(f"triple ({verb}, {subject}, {obj}): argument out of vocabulary")
            continue
        pairs.setdefault(verb, []).append((store.lookup(subject), store.lookup(obj)))
    return {verb: relational_verb(ps, verb) for verb, ps in pairs.items()}, skipped


@dataclass
class ReportRow:
    model: str
    rho: float
    n_entries: int
    n_skipped: int


@dataclass
class TaskReport:
    rows: list[ReportRow]
    skipped: list[str]
    notes: list[str] = field(default_factory=list)

    def render_csv(self) -> str:
        out = io.StringIO()
        out.write("model,rho,n_entries,n_skipped\n")
        for row in self.rows:
            out.write(f"{row.model},{row.rho:.6f},{row.n_entries},{row.n_skipped}\n")
        return out.getvalue()

    def render_text(self) -> str:
        lines = [f"{'model':<14} {'rho':>8} {'entries':>8} {'skipped':>8}"]
        for row in self.rows:
            lines.append(f"{row.model:<14} {row.rho:>8.4f} {row.n_entries:>8} {row.n_skipped:>8}")
        if self.skipped:
            lines.append("")
            lines.append("skipped entries:")
            lines.extend(f"  - {reason}" for reason in self.skipped)
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines) + "\n"


def run_task(
    entries: Sequence[TaskEntry],
    store: EmbeddingStore,
    triples: Sequence[tuple[str, str, str]],
    kinds: Optional[Sequence[ModelKind]] = None,
) -> TaskReport:
    """Score every entry under every model and correlate with human scores.

    An entry is usable only if all its words are in the vocabulary and
    both verbs have trained matrices; unusable entries are skipped for
    every model and reported.
    """
    kinds = list(kinds) if kinds is not None else default_model_kinds()
    matrices, skipped = build_verb_matrices(triples, store)
    usable: list[TaskEntry] = []
    for idx, entry in enumerate(entries):
        words = [entry.subject1, entry.object, entry.subject2, entry.verb, entry.candidate_verb]
        missing = [w for w in words if w not in store]
        if missing:
            skipped.append(f"entry {idx} ({entry.verb}/{entry.candidate_verb}): OOV {missing}")
            continue
        absent = [v for v in (entry.verb, entry.candidate_verb) if v not in matrices]
        if absent:
            skipped.append(f"entry {idx} ({entry.verb}/{entry.candidate_verb}): no matrix for {absent}")
            continue
        usable.append(entry)
    if not usable:
        raise ValueError("no usable entries in the dataset")
    rows = []
    for kind in kinds:
        scores = []
        humans = []
        for entry in usable:
            sub1 = store.lookup(entry.subject1)
            obj = store.lookup(entry.object)
            sub2 = store.lookup(entry.subject2)
            anchor = compose_ellipsis(
                kind, matrices[entry.verb], sub1, obj, sub2, store.lookup(entry.verb)
            )
            candidate = compose_ellipsis(
                kind,
                matrices[entry.candidate_verb],
                sub1,
                obj,
                sub2,
                store.lookup(entry.candidate_verb),
            )
            scores.append(cosine(anchor, candidate))
            humans.append(entry.human_score)
        rows.append(ReportRow(kind.name, spearman_rho(scores, humans), len(usable), len(entries) - len(usable)))
    return TaskReport(rows, skipped)
