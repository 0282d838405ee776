"""Tensor-shape interpretation, diagram compilation, and evaluation.

A formula denotes an ordered list of factors: plain base-space factors
for atoms, and graded (wedge-layer) factors for banged formulas.
Function types are stored argument-factors-first; products concatenate.
A checked derivation compiles to a linear-map term over those factors
(identities, evaluation cups, copy boxes, layer-1 projections, block
swaps, sequential and parallel composition), and evaluation contracts
word tensors through the term with a pluggable copying map.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import fock
from .fock import (
    BasisCopyA,
    BasisCopyB,
    BasisCopyRaw,
    DeltaKind,
    FockCapError,
    FullDual,
    KExtension,
    fock_dim,
)
from .formulas import (
    Atom,
    Bang,
    DEFAULT_ATOMS,
    Formula,
    Over,
    Product,
    Sequent,
    Under,
    format_formula,
    parse_formula,
)
from .prover import Derivation, Rule, check_derivation


class ShapeError(ValueError):
    pass


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class SpaceAssignment:
    """Dimensions for the two atomic spaces plus grading controls."""

    dim_n: int = 2
    dim_s: int = 2
    fock_truncation: int | str = 1
    fulldual_cap: int = 4096

    def __post_init__(self) -> None:
        if self.dim_n < 1 or self.dim_s < 1:
            raise ValueError("atomic dimensions must be at least 1")
        if self.fock_truncation != "full" and (
            not isinstance(self.fock_truncation, int) or self.fock_truncation < 1
        ):
            raise ValueError("fock_truncation must be a positive int or 'full'")

    def atom_dim(self, name: str) -> int:
        if name == "N":
            return self.dim_n
        if name == "S":
            return self.dim_s
        raise ShapeError(f"no space assigned to atom {name!r}")


@dataclass(frozen=True)
class BaseFactor:
    atom: str
    dim: int


@dataclass(frozen=True)
class FockFactor:
    inner: tuple
    layers: int
    dim: int

    @property
    def inner_dim(self) -> int:
        return math.prod(f.dim for f in self.inner)

    @property
    def layer1(self) -> slice:
        return slice(1, 1 + self.inner_dim)


Shape = tuple


def _fock_factor(inner: Shape, sa: SpaceAssignment) -> FockFactor:
    m = math.prod(f.dim for f in inner)
    if sa.fock_truncation == "full":
        if 2**m > sa.fulldual_cap:
            raise ShapeError(
                f"full grading of a {m}-dimensional space exceeds cap {sa.fulldual_cap}"
            )
        layers = m
    else:
        layers = min(sa.fock_truncation, m)
    return FockFactor(inner, layers, fock_dim(m, layers))


def interpret_formula(f: Formula, sa: SpaceAssignment) -> Shape:
    """Factor list of a formula; function types store argument then result."""
    if isinstance(f, Atom):
        return (BaseFactor(f.atom, sa.atom_dim(f.atom)),)
    if isinstance(f, Product):
        return interpret_formula(f.left, sa) + interpret_formula(f.right, sa)
    if isinstance(f, Under):
        return interpret_formula(f.left, sa) + interpret_formula(f.right, sa)
    if isinstance(f, Over):
        return interpret_formula(f.right, sa) + interpret_formula(f.left, sa)
    if isinstance(f, Bang):
        return (_fock_factor(interpret_formula(f.inner, sa), sa),)
    raise TypeError(f"not a formula: {f!r}")


def interpret_antecedent(formulas: Sequence[Formula], sa: SpaceAssignment) -> Shape:
    out: tuple = ()
    for f in formulas:
        out += interpret_formula(f, sa)
    return out


def shape_dims(shape: Shape) -> tuple[int, ...]:
    return tuple(f.dim for f in shape)


def total_dim(shape: Shape) -> int:
    return math.prod(shape_dims(shape)) if shape else 1


# ---------------------------------------------------------------------------
# diagram terms


class DiagramTerm:
    """Linear-map IR node; every term knows its input and output factor lists."""

    __slots__ = ()

    @property
    def dom(self) -> Shape:
        raise NotImplementedError

    @property
    def cod(self) -> Shape:
        raise NotImplementedError


@dataclass(frozen=True)
class Id(DiagramTerm):
    shape: Shape

    @property
    def dom(self) -> Shape:
        return self.shape

    @property
    def cod(self) -> Shape:
        return self.shape


@dataclass(frozen=True)
class Cup(DiagramTerm):
    """Evaluation of a function factor block against its argument block.

    The function block stores argument factors before result factors;
    ``arg_first`` says whether the argument block sits to its left or right.
    """

    arg: Shape
    fun: Shape
    arg_first: bool = True

    def __post_init__(self) -> None:
        if self.fun[: len(self.arg)] != self.arg:
            raise ShapeError("function block does not start with the argument factors")

    @property
    def result(self) -> Shape:
        return self.fun[len(self.arg) :]

    @property
    def dom(self) -> Shape:
        return self.arg + self.fun if self.arg_first else self.fun + self.arg

    @property
    def cod(self) -> Shape:
        return self.result


@dataclass(frozen=True)
class DeltaBox(DiagramTerm):
    factor: FockFactor

    @property
    def dom(self) -> Shape:
        return (self.factor,)

    @property
    def cod(self) -> Shape:
        return (self.factor, self.factor)


@dataclass(frozen=True)
class EpsBox(DiagramTerm):
    factor: FockFactor

    @property
    def dom(self) -> Shape:
        return (self.factor,)

    @property
    def cod(self) -> Shape:
        return self.factor.inner


@dataclass(frozen=True)
class EmbedBox(DiagramTerm):
    """Layer-1 inclusion, the right inverse of EpsBox; used for promotion."""

    factor: FockFactor

    @property
    def dom(self) -> Shape:
        return self.factor.inner

    @property
    def cod(self) -> Shape:
        return (self.factor,)


@dataclass(frozen=True)
class Swap(DiagramTerm):
    left: Shape
    right: Shape

    @property
    def dom(self) -> Shape:
        return self.left + self.right

    @property
    def cod(self) -> Shape:
        return self.right + self.left


@dataclass(frozen=True)
class Seq(DiagramTerm):
    first: DiagramTerm
    then: DiagramTerm

    def __post_init__(self) -> None:
        if self.first.cod != self.then.dom:
            raise ShapeError(
                f"composition mismatch: {shape_dims(self.first.cod)} vs {shape_dims(self.then.dom)}"
            )

    @property
    def dom(self) -> Shape:
        return self.first.dom

    @property
    def cod(self) -> Shape:
        return self.then.cod


@dataclass(frozen=True)
class Par(DiagramTerm):
    left: DiagramTerm
    right: DiagramTerm

    @property
    def dom(self) -> Shape:
        return self.left.dom + self.right.dom

    @property
    def cod(self) -> Shape:
        return self.left.cod + self.right.cod


def seq_all(terms: Sequence[DiagramTerm]) -> DiagramTerm:
    terms = [t for t in terms if t is not None]
    if not terms:
        raise ValueError("empty composite")
    out = terms[0]
    for t in terms[1:]:
        out = Seq(out, t)
    return out


def par_all(terms: Sequence[DiagramTerm]) -> DiagramTerm:
    useful = [t for t in terms if not (isinstance(t, Id) and not t.shape)]
    if not useful:
        return Id(())
    out = useful[0]
    for t in useful[1:]:
        out = Par(out, t)
    return out


def count_boxes(term: DiagramTerm, cls: type) -> int:
    n = 1 if isinstance(term, cls) else 0
    if isinstance(term, Seq):
        n += count_boxes(term.first, cls) + count_boxes(term.then, cls)
    elif isinstance(term, Par):
        n += count_boxes(term.left, cls) + count_boxes(term.right, cls)
    return n


def term_to_sexpr(term: DiagramTerm) -> str:
    def dims(shape: Shape) -> str:
        return "x".join(str(f.dim) for f in shape) or "1"

    if isinstance(term, Id):
        return f"(id {dims(term.shape)})"
    if isinstance(term, Cup):
        side = "arg-left" if term.arg_first else "arg-right"
        return f"(cup {side} {dims(term.arg)} {dims(term.fun)})"
    if isinstance(term, DeltaBox):
        return f"(copy {term.factor.dim})"
    if isinstance(term, EpsBox):
        return f"(eps {term.factor.dim}->{dims(term.factor.inner)})"
    if isinstance(term, EmbedBox):
        return f"(embed {dims(term.factor.inner)}->{term.factor.dim})"
    if isinstance(term, Swap):
        return f"(swap {dims(term.left)} {dims(term.right)})"
    if isinstance(term, Seq):
        return f"(seq {term_to_sexpr(term.first)} {term_to_sexpr(term.then)})"
    if isinstance(term, Par):
        return f"(par {term_to_sexpr(term.left)} {term_to_sexpr(term.right)})"
    raise TypeError(f"not a term: {term!r}")


# ---------------------------------------------------------------------------
# compilation


def compile_derivation(d: Derivation, sa: SpaceAssignment) -> DiagramTerm:
    """Compile a checked derivation into a diagram term.

    The term's input shape is the interpretation of the conclusion's
    antecedent and its output shape the interpretation of the goal.
    """
    verdict = check_derivation(d)
    if not verdict:
        raise CompileError(f"derivation fails checking at {verdict.path}: {verdict.reason}")
    return _compile(d, sa)


def _compile(d: Derivation, sa: SpaceAssignment) -> DiagramTerm:
    ant = d.conclusion.antecedent
    shapes = [interpret_formula(f, sa) for f in ant]

    def block(lo: int, hi: int) -> Shape:
        out: tuple = ()
        for s in shapes[lo:hi]:
            out += s
        return out

    rule = d.rule
    if rule is Rule.AX:
        return Id(interpret_formula(d.conclusion.goal, sa))
    if rule is Rule.UNDER_L:
        p, g = d.data
        f_term = _compile(d.premises[0], sa)
        g_term = _compile(d.premises[1], sa)
        fun = ant[p]
        arg_shape = interpret_formula(fun.left, sa)
        fun_shape = interpret_formula(fun, sa)
        before, after = block(0, p - g), block(p + 1, len(ant))
        feed = par_all([Id(before), f_term, Id(fun_shape), Id(after)])
        cup = par_all([Id(before), Cup(arg_shape, fun_shape, arg_first=True), Id(after)])
        return seq_all([feed, cup, g_term])
    if rule is Rule.OVER_L:
        p, g = d.data
        f_term = _compile(d.premises[0], sa)
        g_term = _compile(d.premises[1], sa)
        fun = ant[p]
        arg_shape = interpret_formula(fun.right, sa)
        fun_shape = interpret_formula(fun, sa)
        before, after = block(0, p), block(p + 1 + g, len(ant))
        feed = par_all([Id(before), Id(fun_shape), f_term, Id(after)])
        cup = par_all([Id(before), Cup(arg_shape, fun_shape, arg_first=False), Id(after)])
        return seq_all([feed, cup, g_term])
    if rule is Rule.CONTR:
        (p,) = d.data
        inner = _compile(d.premises[0], sa)
        factor = interpret_formula(ant[p], sa)[0]
        box = par_all([Id(block(0, p)), DeltaBox(factor), Id(block(p + 1, len(ant)))])
        return Seq(box, inner)
    if rule is Rule.BANG_L:
        (p,) = d.data
        inner = _compile(d.premises[0], sa)
        factor = interpret_formula(ant[p], sa)[0]
        box = par_all([Id(block(0, p)), EpsBox(factor), Id(block(p + 1, len(ant)))])
        return Seq(box, inner)
    if rule is Rule.BANG_R:
        inner = _compile(d.premises[0], sa)
        factor = interpret_formula(d.conclusion.goal, sa)[0]
        return Seq(inner, EmbedBox(factor))
    if rule in (Rule.PERM1, Rule.PERM2):
        i, j = d.data
        inner = _compile(d.premises[0], sa)
        moved = interpret_formula(ant[i], sa)
        if rule is Rule.PERM2:
            between = block(i + 1, j + 1)
            box = par_all([Id(block(0, i)), Swap(moved, between), Id(block(j + 1, len(ant)))])
        else:
            between = block(j, i)
            box = par_all([Id(block(0, j)), Swap(between, moved), Id(block(i + 1, len(ant)))])
        return Seq(box, inner)
    if rule is Rule.PROD_L:
        return _compile(d.premises[0], sa)
    if rule is Rule.PROD_R:
        return par_all([_compile(d.premises[0], sa), _compile(d.premises[1], sa)])
    if rule in (Rule.OVER_R, Rule.UNDER_R):
        raise CompileError(f"{rule.value} has no diagram interpretation in this IR")
    raise CompileError(f"cannot compile rule {rule}")


# ---------------------------------------------------------------------------
# evaluation


def _layer1_support_check(arr: np.ndarray, axis: int, factor: FockFactor) -> None:
    bad = [0] + list(range(1 + factor.inner_dim, factor.dim))
    if not bad:
        return
    moved = np.moveaxis(arr, axis, 0)
    if np.max(np.abs(moved[bad])) > 1e-12 * max(1.0, np.max(np.abs(arr))):
        raise ShapeError("copying map applied to a vector with content outside layer 1")


def _layer1_vector(factor: FockFactor, fill: float) -> np.ndarray:
    vec = np.zeros(factor.dim)
    vec[factor.layer1] = fill
    return vec


@functools.lru_cache(maxsize=None)
def _raw_copy_tensor(dim: int, inner_dim: int) -> np.ndarray:
    out = np.zeros((dim, dim, dim))
    for i in range(1, 1 + inner_dim):
        out[i, i, i] = 1.0
    out.flags.writeable = False
    return out


@functools.lru_cache(maxsize=None)
def _full_copy_tensor(inner_dim: int) -> np.ndarray:
    total = 2**inner_dim
    if total**3 > 1 << 21:
        raise FockCapError("full copying tensor too large to materialize")
    basis = fock.flat_basis(inner_dim)
    rank_of = {subset: idx for idx, (_, subset) in enumerate(basis)}
    out = np.zeros((total, total, total))
    for x, (k1, left) in enumerate(basis):
        for y, (k2, right) in enumerate(basis):
            if k1 + k2 > inner_dim:
                continue
            sign, merged = fock.wedge_normalize(left + right)
            if sign:
                out[rank_of[merged], x, y] = sign
    out.flags.writeable = False
    return out


def _eps_matrix(factor: FockFactor) -> np.ndarray:
    out = np.zeros((factor.dim, factor.inner_dim))
    for i in range(factor.inner_dim):
        out[1 + i, i] = 1.0
    return out


def projection_tensor(factor: FockFactor) -> np.ndarray:
    """Layer-1 projection reshaped over the inner factors.

    This is the default tensor for ellipsis markers that simply re-read
    the verb phrase they point at.
    """
    dims = (factor.dim,) + shape_dims(factor.inner)
    return _eps_matrix(factor).reshape(dims)


def _contract_axes(arr: np.ndarray, axes_a: list[int], axes_b: list[int]) -> np.ndarray:
    letters = [chr(ord("a") + i) if i < 26 else chr(ord("A") + i - 26) for i in range(arr.ndim)]
    for x, y in zip(axes_a, axes_b):
        letters[y] = letters[x]
    contracted = set(axes_a) | set(axes_b)
    out_letters = [letters[i] for i in range(arr.ndim) if i not in contracted]
    return np.einsum(f"{''.join(letters)}->{''.join(out_letters)}", arr)


def _insert_vector_axis(arr: np.ndarray, vec: np.ndarray, axis: int) -> np.ndarray:
    out = np.multiply.outer(arr, vec)
    return np.moveaxis(out, -1, axis)


def _apply(term: DiagramTerm, arr: np.ndarray, off: int, kind: DeltaKind) -> list[np.ndarray]:
    if isinstance(term, Id):
        return [arr]
    if isinstance(term, Seq):
        out = []
        for mid in _apply(term.first, arr, off, kind):
            out.extend(_apply(term.then, mid, off, kind))
        return out
    if isinstance(term, Par):
        out = []
        shift = len(term.left.cod)
        for mid in _apply(term.left, arr, off, kind):
            out.extend(_apply(term.right, mid, off + shift, kind))
        return out
    if isinstance(term, Swap):
        a, b = len(term.left), len(term.right)
        order = list(range(arr.ndim))
        segment = order[off + a : off + a + b] + order[off : off + a]
        order[off : off + a + b] = segment
        return [np.transpose(arr, order)]
    if isinstance(term, Cup):
        m = len(term.arg)
        if term.arg_first:
            arg_axes = list(range(off, off + m))
            fun_arg_axes = list(range(off + m, off + 2 * m))
        else:
            fun_arg_axes = list(range(off, off + m))
            arg_axes = list(range(off + len(term.fun), off + len(term.fun) + m))
        return [_contract_axes(arr, arg_axes, fun_arg_axes)]
    if isinstance(term, EpsBox):
        factor = term.factor
        out = np.tensordot(arr, _eps_matrix(factor), axes=([off], [0]))
        out = np.moveaxis(out, -1, off)
        inner_dims = shape_dims(factor.inner)
        new_shape = out.shape[:off] + inner_dims + out.shape[off + 1 :]
        return [out.reshape(new_shape)]
    if isinstance(term, EmbedBox):
        factor = term.factor
        k = len(factor.inner)
        merged_shape = arr.shape[:off] + (factor.inner_dim,) + arr.shape[off + k :]
        merged = arr.reshape(merged_shape)
        out = np.tensordot(merged, _eps_matrix(factor).T, axes=([off], [0]))
        return [np.moveaxis(out, -1, off)]
    if isinstance(term, DeltaBox):
        factor = term.factor
        if isinstance(kind, KExtension):
            _layer1_support_check(arr, off, factor)
            kvec = _layer1_vector(factor, kind.k)
            left = _insert_vector_axis(arr, kvec, off + 1)
            right = _insert_vector_axis(arr, kvec, off)
            return [left, right]
        if isinstance(kind, BasisCopyA):
            _layer1_support_check(arr, off, factor)
            return [_insert_vector_axis(arr, _layer1_vector(factor, 1.0), off + 1)]
        if isinstance(kind, BasisCopyB):
            _layer1_support_check(arr, off, factor)
            return [_insert_vector_axis(arr, _layer1_vector(factor, 1.0), off)]
        if isinstance(kind, BasisCopyRaw):
            _layer1_support_check(arr, off, factor)
            table = _raw_copy_tensor(factor.dim, factor.inner_dim)
            out = np.tensordot(arr, table, axes=([off], [0]))
            out = np.moveaxis(out, [-2, -1], [off, off + 1])
            return [out]
        if isinstance(kind, FullDual):
            if factor.layers != factor.inner_dim:
                raise ShapeError("full copying needs the untruncated grading")
            if factor.dim > kind.cap:
                raise FockCapError(f"factor dimension {factor.dim} exceeds cap {kind.cap}")
            table = _full_copy_tensor(factor.inner_dim)
            out = np.tensordot(arr, table, axes=([off], [0]))
            out = np.moveaxis(out, [-2, -1], [off, off + 1])
            return [out]
        raise TypeError(f"unknown delta kind {kind!r}")
    raise TypeError(f"not a term: {term!r}")


def evaluate(term: DiagramTerm, inputs: Sequence[np.ndarray], kind: DeltaKind) -> np.ndarray:
    """Contract word tensors through a compiled term.

    ``inputs`` follow the antecedent order; each array's axes are its
    formula's factor dimensions.  Copy boxes expand to the chosen map's
    formal sum and the result distributes over summands, so the output
    is linear in every input.
    """
    joint = np.array(1.0)
    for arr in inputs:
        joint = np.multiply.outer(joint, np.asarray(arr, dtype=float))
    want = shape_dims(term.dom)
    if joint.shape != want:
        raise ShapeError(f"inputs have dims {joint.shape}, term expects {want}")
    out = np.zeros(shape_dims(term.cod))
    for summand in _apply(term, joint, 0, kind):
        out = out + summand
    return out


# ---------------------------------------------------------------------------
# word tensors


def support_mask(shape: Shape) -> np.ndarray:
    """Ones where a stored tensor may carry data: graded factors hold
    layer-1 content only, recursively through their inner factors."""

    def factor_mask(factor) -> np.ndarray:
        if isinstance(factor, BaseFactor):
            return np.ones(factor.dim)
        inner = np.array(1.0)
        for g in factor.inner:
            inner = np.multiply.outer(inner, factor_mask(g))
        vec = np.zeros(factor.dim)
        vec[factor.layer1] = inner.reshape(-1)
        return vec

    out = np.array(1.0)
    for f in shape:
        out = np.multiply.outer(out, factor_mask(f))
    return out


def random_word_tensor(shape: Shape, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(shape_dims(shape)) * support_mask(shape)


def lift_layer1(shape: Shape, raw: np.ndarray) -> np.ndarray:
    """Spread a tensor over the base dims into the layer-1 slots of ``shape``."""
    out = np.zeros(shape_dims(shape))
    mask = support_mask(shape)
    out[mask > 0] = np.asarray(raw, dtype=float).reshape(-1)
    return out


class WordTensorStore:
    """Write-once map from words to tensors matching their lexical shapes."""

    def __init__(self, assignment: SpaceAssignment):
        self.assignment = assignment
        self._entries: dict[str, tuple[Formula, Shape, np.ndarray]] = {}

    def put(self, word: str, formula: Formula | str, array) -> None:
        if isinstance(formula, str):
            formula = parse_formula(formula)
        shape = interpret_formula(formula, self.assignment)
        arr = np.asarray(array, dtype=float).reshape(shape_dims(shape))
        off_support = arr * (1.0 - np.minimum(support_mask(shape), 1.0))
        if np.max(np.abs(off_support), initial=0.0) > 1e-9:
            raise ShapeError(f"tensor for {word!r} has content outside layer-1 slots")
        arr = arr.copy()
        arr.flags.writeable = False
        self._entries[word] = (formula, shape, arr)

    def get(self, word: str) -> tuple[Formula, Shape, np.ndarray]:
        if word not in self._entries:
            raise KeyError(f"no tensor stored for {word!r}")
        return self._entries[word]

    def tensor(self, word: str) -> np.ndarray:
        return self.get(word)[2]

    def shape(self, word: str) -> Shape:
        return self.get(word)[1]

    def __contains__(self, word: str) -> bool:
        return word in self._entries

    def words(self) -> list[str]:
        return list(self._entries)


def load_word_tensors(path: str | Path, assignment: SpaceAssignment) -> WordTensorStore:
    """TSV reader: ``word<TAB>formula<TAB>space-separated floats``."""
    store = WordTensorStore(assignment)
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected word<TAB>formula<TAB>floats")
            word, formula_text, floats = parts
            values = np.array([float(x) for x in floats.split()])
            shape = interpret_formula(parse_formula(formula_text), assignment)
            if values.size != total_dim(shape):
                raise ValueError(
                    f"{path}:{lineno}: {word!r} needs {total_dim(shape)} values, got {values.size}"
                )
            store.put(word, formula_text, values)
    return store
