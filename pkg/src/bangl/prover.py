"""Backward-chaining cut-free proof search with controlled contraction.

The rule set is the sequent calculus for a Lambek system that allows
empty antecedents, plus a ``!`` modality licensing contraction and
permutation of banged formulas, plus the two standard product rules so
that comma goals like ``S,S`` are derivable.

Every rule instance records position data in ``Derivation.data`` so a
derivation can be re-checked independently of the search that found it.
"""

from __future__ import annotations

import functools
import json
import time
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

from .formulas import (
    Atom,
    Bang,
    Formula,
    Over,
    Product,
    Sequent,
    Under,
    format_formula,
    parse_formula,
    parse_sequent,
)


class Rule(Enum):
    AX = "Ax"
    OVER_L = "OverL"
    OVER_R = "OverR"
    UNDER_L = "UnderL"
    UNDER_R = "UnderR"
    BANG_L = "BangL"
    BANG_R = "BangR"
    PERM1 = "Perm1"
    PERM2 = "Perm2"
    CONTR = "Contr"
    PROD_L = "ProdL"
    PROD_R = "ProdR"


@dataclass(frozen=True)
class Derivation:
    conclusion: Sequent
    rule: Rule
    premises: tuple["Derivation", ...] = ()
    data: tuple[int, ...] = ()


class SearchTimeout(Exception):
    """Raised when proof search exceeds its wall-clock budget."""


@dataclass(frozen=True)
class SearchConfig:
    max_depth: int = 40
    contraction_budget: int = 1
    max_solutions: int = 1
    timeout: Optional[float] = None

    def __post_init__(self) -> None:
        if self.max_depth <= 0:
            raise ValueError("max_depth must be positive")
        if self.contraction_budget < 0:
            raise ValueError("contraction_budget must be non-negative")
        if self.max_solutions <= 0:
            raise ValueError("max_solutions must be positive")
        if self.timeout is not None and self.timeout < 0:
            raise ValueError("timeout must be non-negative")


def _move(items: tuple, src: int, dst: int) -> tuple:
    lst = list(items)
    moved = lst.pop(src)
    lst.insert(dst, moved)
    return tuple(lst)


def premises_for(seq: Sequent, rule: Rule, data: tuple[int, ...]) -> Optional[tuple[Sequent, ...]]:
    """The premise sequents a rule instance demands, or None if malformed.

    This single schema table drives both checking and search.
    """
    ant, goal = seq.antecedent, seq.goal
    n = len(ant)
    if rule is Rule.AX:
        if data == () and n == 1 and ant[0] == goal:
            return ()
        return None
    if rule is Rule.OVER_L:
        if len(data) != 2:
            return None
        p, g = data
        if not (0 <= p < n and 0 <= g <= n - p - 1 and isinstance(ant[p], Over)):
            return None
        fun = ant[p]
        gamma = ant[p + 1 : p + 1 + g]
        rest = ant[:p] + (fun.left,) + ant[p + 1 + g :]
        return (Sequent(gamma, fun.right), Sequent(rest, goal))
    if rule is Rule.UNDER_L:
        if len(data) != 2:
            return None
        p, g = data
        if not (0 <= p < n and 0 <= g <= p and isinstance(ant[p], Under)):
            return None
        fun = ant[p]
        gamma = ant[p - g : p]
        rest = ant[: p - g] + (fun.right,) + ant[p + 1 :]
        return (Sequent(gamma, fun.left), Sequent(rest, goal))
    if rule is Rule.OVER_R:
        if data == () and isinstance(goal, Over):
            return (Sequent(ant + (goal.right,), goal.left),)
        return None
    if rule is Rule.UNDER_R:
        if data == () and isinstance(goal, Under):
            return (Sequent((goal.left,) + ant, goal.right),)
        return None
    if rule is Rule.BANG_L:
        if len(data) == 1 and 0 <= data[0] < n and isinstance(ant[data[0]], Bang):
            p = data[0]
            return (Sequent(ant[:p] + (ant[p].inner,) + ant[p + 1 :], goal),)
        return None
    if rule is Rule.BANG_R:
        if data == () and isinstance(goal, Bang) and all(isinstance(f, Bang) for f in ant):
            return (Sequent(ant, goal.inner),)
        return None
    if rule in (Rule.PERM1, Rule.PERM2):
        if len(data) != 2:
            return None
        i, j = data
        if not (0 <= i < n and 0 <= j < n and i != j):
            return None
        if not isinstance(ant[i], Bang):
            return None
        if rule is Rule.PERM1 and not j < i:
            return None
        if rule is Rule.PERM2 and not j > i:
            return None
        return (Sequent(_move(ant, i, j), goal),)
    if rule is Rule.CONTR:
        if len(data) == 1 and 0 <= data[0] < n and isinstance(ant[data[0]], Bang):
            p = data[0]
            return (Sequent(ant[:p] + (ant[p],) + ant[p:], goal),)
        return None
    if rule is Rule.PROD_L:
        if len(data) == 1 and 0 <= data[0] < n and isinstance(ant[data[0]], Product):
            p = data[0]
            prod = ant[p]
            return (Sequent(ant[:p] + (prod.left, prod.right) + ant[p + 1 :], goal),)
        return None
    if rule is Rule.PROD_R:
        if len(data) == 1 and isinstance(goal, Product) and 0 <= data[0] <= n:
            k = data[0]
            return (Sequent(ant[:k], goal.left), Sequent(ant[k:], goal.right))
        return None
    raise ValueError(f"unknown rule {rule}")


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    path: tuple[int, ...] = ()
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_derivation(d: Derivation) -> CheckResult:
    """Verify every node is a correct instance of its rule schema."""
    expected = premises_for(d.conclusion, d.rule, d.data)
    if expected is None:
        return CheckResult(False, (), f"{d.rule.value} does not apply with data {d.data}")
    if len(expected) != len(d.premises):
        return CheckResult(False, (), f"{d.rule.value} expects {len(expected)} premises")
    for idx, (want, child) in enumerate(zip(expected, d.premises)):
        if child.conclusion != want:
            return CheckResult(
                False, (idx,), f"premise {idx} is {child.conclusion}, rule demands {want}"
            )
        sub = check_derivation(child)
        if not sub:
            return CheckResult(False, (idx,) + sub.path, sub.reason)
    return CheckResult(True)


def count_rule(d: Derivation, rule: Rule) -> int:
    return (d.rule is rule) + sum(count_rule(p, rule) for p in d.premises)


def derivation_size(d: Derivation) -> int:
    return 1 + sum(derivation_size(p) for p in d.premises)


# ---------------------------------------------------------------------------
# atom-count feasibility pruning

# Each rule except contraction preserves the signed atom balance of a
# sequent; a contraction of !X shifts it by the signed counts of X.  A
# sequent whose balance cannot be repaired within the remaining
# contraction budget is unprovable.


@functools.lru_cache(maxsize=None)
def _atom_delta(f: Formula) -> tuple[tuple[str, int], ...]:
    if isinstance(f, Atom):
        return ((f.name, 1),)
    if isinstance(f, Bang):
        return _atom_delta(f.inner)
    if isinstance(f, Product):
        counter = Counter(dict(_atom_delta(f.left)))
        counter.update(dict(_atom_delta(f.right)))
        return tuple(sorted(counter.items()))
    if isinstance(f, Under):
        counter = Counter(dict(_atom_delta(f.right)))
        counter.subtract(dict(_atom_delta(f.left)))
        return tuple(sorted(counter.items()))
    if isinstance(f, Over):
        counter = Counter(dict(_atom_delta(f.left)))
        counter.subtract(dict(_atom_delta(f.right)))
        return tuple(sorted(counter.items()))
    raise TypeError(f"not a formula: {f!r}")


@functools.lru_cache(maxsize=None)
def _bang_subformulas(f: Formula) -> frozenset[Formula]:
    if isinstance(f, Atom):
        return frozenset()
    if isinstance(f, Bang):
        return _bang_subformulas(f.inner) | {f}
    return _bang_subformulas(f.left) | _bang_subformulas(f.right)


def _net_balance(seq: Sequent) -> Counter:
    net = Counter()
    for f in seq.antecedent:
        net.update(dict(_atom_delta(f)))
    net.subtract(dict(_atom_delta(seq.goal)))
    return net


class _Search:
    _UNBOUNDED = 1 << 30

    def __init__(self, config: SearchConfig):
        self.config = config
        self.deadline = None if config.timeout is None else time.monotonic() + config.timeout
        # (sequent, budget snapshot) -> largest depth that failed exhaustively
        self.fail_cache: dict[tuple, int] = {}

    def run(self, seq: Sequent) -> list[Derivation]:
        found, _ = self._derive(seq, self.config.max_depth, {}, frozenset(), self.config.max_solutions)
        return found

    def _budget_key(self, used: dict[Formula, int]) -> tuple:
        return tuple(sorted((format_formula(f), n) for f, n in used.items() if n))

    def _feasible(self, seq: Sequent, used: dict[Formula, int]) -> bool:
        net = _net_balance(seq)
        if not any(net.values()):
            return True
        shapes = frozenset().union(
            *(_bang_subformulas(f) for f in seq.antecedent + (seq.goal,))
        )
        deltas = []
        for shape in shapes:
            remaining = self.config.contraction_budget - used.get(shape, 0)
            if remaining > 0:
                deltas.append((remaining, dict(_atom_delta(shape))))
        for atom, value in net.items():
            if value == 0:
                continue
            lo = sum(rem * min(0, d.get(atom, 0)) for rem, d in deltas)
            hi = sum(rem * max(0, d.get(atom, 0)) for rem, d in deltas)
            if not (lo <= -value <= hi):
                return False
        return True

    def _candidates(self, seq: Sequent) -> list[tuple[Rule, tuple[int, ...]]]:
        ant, goal = seq.antecedent, seq.goal
        n = len(ant)
        # invertible rules are applied eagerly and exclusively
        if isinstance(goal, Over):
            return [(Rule.OVER_R, ())]
        if isinstance(goal, Under):
            return [(Rule.UNDER_R, ())]
        for p, f in enumerate(ant):
            if isinstance(f, Product):
                return [(Rule.PROD_L, (p,))]
        out: list[tuple[Rule, tuple[int, ...]]] = []
        if n == 1 and ant[0] == goal:
            out.append((Rule.AX, ()))
        for p, f in enumerate(ant):
            if isinstance(f, Over):
                out.extend((Rule.OVER_L, (p, g)) for g in range(n - p))
        for p, f in enumerate(ant):
            if isinstance(f, Under):
                out.extend((Rule.UNDER_L, (p, g)) for g in range(p + 1))
        if isinstance(goal, Product):
            out.extend((Rule.PROD_R, (k,)) for k in range(n + 1))
        bang_positions = [p for p, f in enumerate(ant) if isinstance(f, Bang)]
        out.extend((Rule.BANG_L, (p,)) for p in bang_positions)
        if isinstance(goal, Bang) and ant and all(isinstance(f, Bang) for f in ant):
            out.append((Rule.BANG_R, ()))
        out.extend((Rule.CONTR, (p,)) for p in bang_positions)
        for i in bang_positions:
            for j in range(n):
                if j == i:
                    continue
                out.append((Rule.PERM1 if j < i else Rule.PERM2, (i, j)))
        return out

    def _derive(
        self,
        seq: Sequent,
        depth_left: int,
        used: dict[Formula, int],
        seen: frozenset[Sequent],
        limit: int,
    ) -> tuple[list[Derivation], bool]:
        """DFS for up to ``limit`` derivations.

        The second result reports whether enumeration below this sequent
        was exhaustive (no depth, loop, or limit cutoffs), which is what
        makes a negative result safe to cache.
        """
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise SearchTimeout(f"proof search exceeded {self.config.timeout}s")
        if limit <= 0:
            return [], False
        if not self._feasible(seq, used):
            return [], True
        key = (seq, self._budget_key(used))
        cached = self.fail_cache.get(key)
        if cached is not None and depth_left <= cached:
            return [], cached >= self._UNBOUNDED
        if depth_left <= 0:
            return [], False
        results: list[Derivation] = []
        complete = True
        seen_here = seen | {seq}
        for rule, data in self._candidates(seq):
            if rule is Rule.CONTR:
                shape = seq.antecedent[data[0]]
                if used.get(shape, 0) >= self.config.contraction_budget:
                    continue
                child_used = dict(used)
                child_used[shape] = child_used.get(shape, 0) + 1
            else:
                child_used = used
            premises = premises_for(seq, rule, data)
            if premises is None:
                continue
            if any(p in seen_here for p in premises):
                complete = False
                continue
            room = limit - len(results)
            if room <= 0:
                return results, False
            if not premises:
                results.append(Derivation(seq, rule, (), data))
            elif len(premises) == 1:
                subs, sub_complete = self._derive(
                    premises[0], depth_left - 1, child_used, seen_here, room
                )
                complete = complete and sub_complete
                results.extend(Derivation(seq, rule, (s,), data) for s in subs)
            else:
                left_subs, left_complete = self._derive(
                    premises[0], depth_left - 1, child_used, seen_here, room
                )
                complete = complete and left_complete
                for left in left_subs:
                    room = limit - len(results)
                    if room <= 0:
                        return results, False
                    right_subs, right_complete = self._derive(
                        premises[1], depth_left - 1, child_used, seen_here, room
                    )
                    complete = complete and right_complete
                    results.extend(
                        Derivation(seq, rule, (left, right), data) for right in right_subs
                    )
            if len(results) >= limit:
                return results, False
        if not results:
            level = self._UNBOUNDED if complete else depth_left
            if cached is None or level > cached:
                self.fail_cache[key] = level
        return results, complete


def prove(seq: Sequent, config: SearchConfig = SearchConfig()) -> list[Derivation]:
    """Search for up to ``config.max_solutions`` derivations of ``seq``.

    An empty list means no proof within the configured bounds; running
    out of wall clock raises SearchTimeout instead.
    """
    return _Search(config).run(seq)


# ---------------------------------------------------------------------------
# serialization


def derivation_to_text(d: Derivation, indent: int = 0) -> str:
    pad = "  " * indent
    line = f"{pad}{d.rule.value} {d.conclusion}"
    if d.data:
        line += " @" + ",".join(str(x) for x in d.data)
    parts = [line]
    parts.extend(derivation_to_text(p, indent + 1) for p in d.premises)
    return "\n".join(parts)


def derivation_to_dict(d: Derivation) -> dict:
    return {
        "rule": d.rule.value,
        "conclusion": str(d.conclusion),
        "data": list(d.data),
        "premises": [derivation_to_dict(p) for p in d.premises],
    }


def derivation_to_json(d: Derivation) -> str:
    return json.dumps(derivation_to_dict(d), indent=2)


def derivation_from_dict(obj: dict, atoms=None) -> Derivation:
    from .formulas import DEFAULT_ATOMS

    atoms = atoms or DEFAULT_ATOMS
    rule = Rule(obj["rule"])
    conclusion = parse_sequent(obj["conclusion"], atoms)
    premises = tuple(derivation_from_dict(p, atoms) for p in obj["premises"])
    return Derivation(conclusion, rule, premises, tuple(obj["data"]))


def derivation_from_json(text: str, atoms=None) -> Derivation:
    return derivation_from_dict(json.loads(text), atoms)
