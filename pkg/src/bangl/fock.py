"""Graded exterior-algebra vectors over a fixed-basis real space.

A graded tensor stores one dense component per wedge layer k, indexed by
the colexicographic rank of the strictly increasing basis subset
e_{i1} ^ ... ^ e_{ik}.  The multiplication concatenates wedge factors
with the permutation sign, its basis-level adjoint gives the full
comultiplication, and several cheaper copying maps (k-extension and the
basis-copy family) act on layer-1 vectors only.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np


class FockCapError(ValueError):
    """Full-grading operation would exceed the configured size cap."""


@dataclass(frozen=True)
class BaseSpace:
    """An n-dimensional space with the standard basis, self-dual by convention."""

    dim: int

    def __post_init__(self) -> None:
        if self.dim < 0:
            raise ValueError("dimension must be non-negative")


def fock_dim(n: int, layers: int) -> int:
    """Total dimension of the wedge grading truncated at ``layers``."""
    if not 0 <= layers <= n:
        raise ValueError(f"need 0 <= layers <= dim, got layers={layers}, dim={n}")
    return sum(math.comb(n, k) for k in range(layers + 1))


def wedge_normalize(indices: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sort wedge factor indices, tracking the permutation sign.

    A repeated index makes the wedge zero, reported as sign 0.
    """
    items = list(indices)
    sign = 1
    for i in range(1, len(items)):
        j = i
        while j > 0 and items[j - 1] > items[j]:
            items[j - 1], items[j] = items[j], items[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(items, items[1:]):
        if a == b:
            return 0, ()
    return sign, tuple(items)


def colex_rank(subset: Sequence[int]) -> int:
    return sum(math.comb(element, position + 1) for position, element in enumerate(subset))


@functools.lru_cache(maxsize=None)
def layer_subsets(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """All k-subsets of range(n) in colexicographic order."""
    return tuple(sorted(itertools.combinations(range(n), k), key=colex_rank))


@functools.lru_cache(maxsize=None)
def _layer_ranks(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {subset: r for r, subset in enumerate(layer_subsets(n, k))}


@functools.lru_cache(maxsize=None)
def _mult_table(n: int, k1: int, k2: int) -> tuple[tuple[int, int, int, int], ...]:
    """Nonzero products of layer-k1 by layer-k2 wedges: (r1, r2, sign, r_out)."""
    if k1 + k2 > n:
        return ()
    out = []
    ranks = _layer_ranks(n, k1 + k2)
    for r1, left in enumerate(layer_subsets(n, k1)):
        for r2, right in enumerate(layer_subsets(n, k2)):
            sign, merged = wedge_normalize(left + right)
            if sign:
                out.append((r1, r2, sign, ranks[merged]))
    return tuple(out)


class GradedTensor:
    """Immutable vector of a truncated wedge grading.

    ``components`` maps layer k to a dense float vector of length
    C(n, k); absent layers are zero.  ``max_layer`` caps which layers may
    carry data and is preserved by arithmetic unless explicitly promoted.
    """

    __slots__ = ("space", "max_layer", "_components")

    def __init__(self, space: BaseSpace, components: Mapping[int, np.ndarray], max_layer: int):
        if not 0 <= max_layer <= space.dim:
            raise ValueError(f"max_layer must be in [0, {space.dim}]")
        stored: dict[int, np.ndarray] = {}
        for k, vec in components.items():
            if not 0 <= k <= max_layer:
                raise ValueError(f"layer {k} outside truncation {max_layer}")
            arr = np.asarray(vec, dtype=float).copy()
            expected = math.comb(space.dim, k)
            if arr.shape != (expected,):
                raise ValueError(f"layer {k} needs length {expected}, got {arr.shape}")
            arr.flags.writeable = False
            stored[k] = arr
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "max_layer", max_layer)
        object.__setattr__(self, "_components", stored)

    def __setattr__(self, name, value):
        raise AttributeError("GradedTensor is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, space: BaseSpace, max_layer: int) -> "GradedTensor":
        return cls(space, {}, max_layer)

    @classmethod
    def unit(cls, space: BaseSpace, max_layer: int = 0) -> "GradedTensor":
        return cls(space, {0: np.array([1.0])}, max_layer)

    @classmethod
    def from_layer1(cls, space: BaseSpace, vec, max_layer: int = 1) -> "GradedTensor":
        return cls(space, {1: np.asarray(vec, dtype=float)}, max_layer)

    @classmethod
    def basis(cls, space: BaseSpace, subset: Sequence[int], max_layer: int | None = None) -> "GradedTensor":
        sign, sorted_subset = wedge_normalize(subset)
        if sign == 0:
            raise ValueError("repeated wedge factor")
        k = len(sorted_subset)
        layer = np.zeros(math.comb(space.dim, k))
        layer[_layer_ranks(space.dim, k)[sorted_subset]] = sign
        return cls(space, {k: layer}, max_layer if max_layer is not None else max(k, 1) if space.dim else 0)

    @classmethod
    def from_flat(cls, space: BaseSpace, flat, max_layer: int) -> "GradedTensor":
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (fock_dim(space.dim, max_layer),):
            raise ValueError("flat vector length does not match the truncation")
        components = {}
        offset = 0
        for k in range(max_layer + 1):
            size = math.comb(space.dim, k)
            components[k] = flat[offset : offset + size]
            offset += size
        return cls(space, components, max_layer)

    # -- accessors ----------------------------------------------------

    def layer(self, k: int) -> np.ndarray:
        if k in self._components:
            return self._components[k]
        out = np.zeros(math.comb(self.space.dim, k))
        out.flags.writeable = False
        return out

    def layers(self) -> Iterable[int]:
        return sorted(self._components)

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.layer(k) for k in range(self.max_layer + 1)]) if self.max_layer >= 0 else np.zeros(0)

    def is_layer1_only(self, tol: float = 0.0) -> bool:
        return all(
            k == 1 or np.all(np.abs(vec) <= tol) for k, vec in self._components.items()
        )

    def allclose(self, other: "GradedTensor", tol: float = 1e-12) -> bool:
        if self.space != other.space:
            return False
        top = max(self.max_layer, other.max_layer)
        return all(
            np.allclose(self.layer(k), other.layer(k), atol=tol)
            for k in range(top + 1)
        )

    def dump(self) -> str:
        lines = [f"layer {k}: {np.array2string(self.layer(k))}" for k in range(self.max_layer + 1)]
        return "\n".join(lines)

    def __repr__(self) -> str:
        nonzero = {k: list(v) for k, v in self._components.items()}
        return f"GradedTensor(dim={self.space.dim}, max_layer={self.max_layer}, {nonzero})"

    # -- linear structure ----------------------------------------------

    def __add__(self, other: "GradedTensor") -> "GradedTensor":
        if self.space != other.space:
            raise ValueError("mismatched base spaces")
        top = max(self.max_layer, other.max_layer)
        keys = set(self._components) | set(other._components)
        return GradedTensor(
            self.space, {k: self.layer(k) + other.layer(k) for k in keys}, top
        )

    def __sub__(self, other: "GradedTensor") -> "GradedTensor":
        return self + (-1.0) * other

    def __rmul__(self, scalar: float) -> "GradedTensor":
        return GradedTensor(
            self.space,
            {k: scalar * v for k, v in self._components.items()},
            self.max_layer,
        )


def fock_mult(u: GradedTensor, w: GradedTensor) -> GradedTensor:
    """Bilinear alternating product; wedges with repeated factors vanish."""
    if u.space != w.space:
        raise ValueError("mismatched base spaces")
    n = u.space.dim
    out_layer = min(n, u.max_layer + w.max_layer)
    acc: dict[int, np.ndarray] = {}
    for k1 in u.layers():
        a = u.layer(k1)
        for k2 in w.layers():
            k_out = k1 + k2
            if k_out > out_layer:
                continue
            b = w.layer(k2)
            target = acc.setdefault(k_out, np.zeros(math.comb(n, k_out)))
            for r1, r2, sign, r_out in _mult_table(n, k1, k2):
                value = a[r1] * b[r2]
                if value:
                    target[r_out] += sign * value
    return GradedTensor(u.space, acc, out_layer)


def flat_basis(n: int) -> list[tuple[int, tuple[int, ...]]]:
    """Total basis enumeration (layer, subset) in flat order for L = n."""
    out = []
    for k in range(n + 1):
        out.extend((k, subset) for subset in layer_subsets(n, k))
    return out


def fock_comult_full(v: GradedTensor, cap: int = 4096) -> np.ndarray:
    """The basis-level adjoint of ``fock_mult`` as a 2^n x 2^n matrix.

    Entry [x, y] is the coefficient of basis_x (x) basis_y, with flat
    indices running over layers in order and colex rank within a layer.
    Requires the argument to carry the full grading.
    """
    n = v.space.dim
    if v.max_layer != n:
        raise ValueError("full comultiplication needs the untruncated grading")
    total = 2**n
    if total > cap:
        raise FockCapError(f"2^{n} = {total} exceeds cap {cap}")
    flat = v.flatten()
    rank_of: dict[tuple[int, ...], int] = {}
    offset = 0
    for k in range(n + 1):
        for subset in layer_subsets(n, k):
            rank_of[subset] = offset
            offset += 1
    basis = flat_basis(n)
    out = np.zeros((total, total))
    for x, (k1, left) in enumerate(basis):
        for y, (k2, right) in enumerate(basis):
            if k1 + k2 > n:
                continue
            sign, merged = wedge_normalize(left + right)
            if sign:
                out[x, y] = sign * flat[rank_of[merged]]
    return out


# ---------------------------------------------------------------------------
# copying maps


class DeltaKind:
    """Base marker for the pluggable copying maps."""

    __slots__ = ()


@dataclass(frozen=True)
class FullDual(DeltaKind):
    cap: int = 4096


@dataclass(frozen=True)
class KExtension(DeltaKind):
    k: float = 1.0


@dataclass(frozen=True)
class BasisCopyRaw(DeltaKind):
    pass


@dataclass(frozen=True)
class BasisCopyA(DeltaKind):
    pass


@dataclass(frozen=True)
class BasisCopyB(DeltaKind):
    pass


def _require_layer1(v: GradedTensor, kind: DeltaKind) -> None:
    if not v.is_layer1_only(tol=0.0):
        raise ValueError(f"{type(kind).__name__} is defined on layer-1 vectors only")


def delta_apply(kind: DeltaKind, v: GradedTensor) -> list[tuple[GradedTensor, GradedTensor]]:
    """Expand a copying map into a formal sum of pure tensor summands."""
    space, top = v.space, v.max_layer
    if isinstance(kind, KExtension):
        _require_layer1(v, kind)
        kvec = GradedTensor.from_layer1(space, np.full(space.dim, kind.k), top)
        return [(v, kvec), (kvec, v)]
    if isinstance(kind, BasisCopyRaw):
        _require_layer1(v, kind)
        coeffs = v.layer(1)
        out = []
        for i in range(space.dim):
            if coeffs[i] == 0.0:
                continue
            unit_i = np.zeros(space.dim)
            unit_i[i] = 1.0
            out.append(
                (
                    GradedTensor.from_layer1(space, coeffs[i] * unit_i, top),
                    GradedTensor.from_layer1(space, unit_i, top),
                )
            )
        return out
    if isinstance(kind, BasisCopyA):
        _require_layer1(v, kind)
        ones = GradedTensor.from_layer1(space, np.ones(space.dim), top)
        return [(v, ones)]
    if isinstance(kind, BasisCopyB):
        _require_layer1(v, kind)
        ones = GradedTensor.from_layer1(space, np.ones(space.dim), top)
        return [(ones, v)]
    if isinstance(kind, FullDual):
        matrix = fock_comult_full(v, cap=kind.cap)
        n = space.dim
        basis = flat_basis(n)
        out = []
        for x in range(matrix.shape[0]):
            for y in range(matrix.shape[1]):
                if matrix[x, y] == 0.0:
                    continue
                kx, sx = basis[x]
                ky, sy = basis[y]
                out.append(
                    (
                        matrix[x, y] * GradedTensor.basis(space, sx, n),
                        GradedTensor.basis(space, sy, n),
                    )
                )
        return out
    raise TypeError(f"unknown delta kind {kind!r}")


def counit_eps(v: GradedTensor) -> np.ndarray:
    """Projection onto the layer-1 component."""
    return np.array(v.layer(1))


def embed_layer1(space: BaseSpace, vec, max_layer: int = 1) -> GradedTensor:
    """Place a plain vector at layer 1, zero elsewhere."""
    return GradedTensor.from_layer1(space, vec, max_layer)


def delta_inclusion(v: GradedTensor) -> GradedTensor:
    """Include a graded vector at layer 1 of the grading over its own flat space."""
    outer_space = BaseSpace(fock_dim(v.space.dim, v.max_layer))
    return GradedTensor.from_layer1(outer_space, v.flatten())


def extract_inclusion(inc: GradedTensor, space: BaseSpace, max_layer: int) -> GradedTensor:
    """Retract an inclusion: read layer 1 back as a graded vector."""
    return GradedTensor.from_flat(space, counit_eps(inc), max_layer)
