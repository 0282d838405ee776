"""Formula AST, surface grammar, sequents, and the word->type lexicon.

Types are built from a declared atom set (default {N, S}) with three
connectives: two directed divisions, a copying modality written ``!``,
and a comma product.  The same comma doubles as the antecedent
separator in sequent notation, so the sequent parser splits only on
top-level commas.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

DEFAULT_ATOMS = frozenset({"N", "S"})


class ParseError(ValueError):
    """Rejected surface text; ``offset`` is the position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class UnknownAtomError(ParseError):
    pass


class UnknownWordError(KeyError):
    def __init__(self, word: str):
        super().__init__(word)
        self.word = word

    def __str__(self) -> str:
        return f"word not in lexicon: {self.word!r}"


class Formula:
    """Base class for type formulas; all nodes are immutable."""

    __slots__ = ()

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Over(Formula):
    """B/A: ``left`` is the result B, ``right`` is the argument A."""

    left: Formula
    right: Formula


@dataclass(frozen=True)
class Under(Formula):
    """A\\B: ``left`` is the argument A, ``right`` is the result B."""

    left: Formula
    right: Formula


@dataclass(frozen=True)
class Bang(Formula):
    inner: Formula


@dataclass(frozen=True)
class Product(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Sequent:
    antecedent: tuple[Formula, ...]
    goal: Formula

    def __str__(self) -> str:
        left = ", ".join(format_formula(f) for f in self.antecedent)
        return f"{left} -> {format_formula(self.goal)}" if left else f"-> {format_formula(self.goal)}"


# ---------------------------------------------------------------------------
# lexing / parsing


_OPERATORS = "!\\/(),"


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPERATORS:
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, atoms: frozenset[str]):
        self.text = text
        self.atoms = atoms
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def next(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> tuple[str, str, int]:
        tok = self.next()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1] or 'end of input'!r}", tok[2])
        return tok

    # comma binds loosest and associates to the right
    def formula(self) -> Formula:
        left = self.slash()
        if self.peek()[0] == ",":
            self.next()
            return Product(left, self.formula())
        return left

    # the divisions are non-associative: at most one per precedence level
    def slash(self) -> Formula:
        left = self.unary()
        kind = self.peek()[0]
        if kind == "\\":
            self.next()
            return Under(left, self.unary())
        if kind == "/":
            self.next()
            return Over(left, self.unary())
        return left

    def unary(self) -> Formula:
        kind, value, offset = self.peek()
        if kind == "!":
            self.next()
            return Bang(self.unary())
        if kind == "(":
            self.next()
            inner = self.formula()
            self.expect(")")
            return inner
        if kind == "name":
            self.next()
            if value not in self.atoms:
                raise UnknownAtomError(f"unknown atom {value!r}", offset)
            return Atom(value)
        raise ParseError(f"expected a formula, found {value or 'end of input'!r}", offset)


def parse_formula(text: str, atoms: frozenset[str] = DEFAULT_ATOMS) -> Formula:
    """Parse surface text into a Formula; raises ParseError with an offset."""
    if not text.strip():
        raise ParseError("empty formula", 0)
    parser = _Parser(text, atoms)
    result = parser.formula()
    kind, value, offset = parser.peek()
    if kind != "end":
        raise ParseError(f"trailing input {value!r}", offset)
    return result


def _operand(f: Formula) -> str:
    # division operands take parentheses unless atomic or banged
    if isinstance(f, (Over, Under, Product)):
        return f"({format_formula(f)})"
    return format_formula(f)


def format_formula(f: Formula) -> str:
    """Minimal-parenthesization text; `parse_formula` inverts it."""
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Bang):
        return "!" + _operand(f.inner)
    if isinstance(f, Under):
        return f"{_operand(f.left)}\\{_operand(f.right)}"
    if isinstance(f, Over):
        return f"{_operand(f.left)}/{_operand(f.right)}"
    if isinstance(f, Product):
        left = format_formula(f.left)
        if isinstance(f.left, Product):
            left = f"({left})"
        return f"{left},{format_formula(f.right)}"
    raise TypeError(f"not a formula: {f!r}")


def _split_top_commas(text: str, base: int) -> list[tuple[str, int]]:
    parts = []
    depth = 0
    start = 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced ')'", base + i)
        elif ch == "," and depth == 0:
            parts.append((text[start:i], base + start))
            start = i + 1
    parts.append((text[start:], base + start))
    return parts


def parse_sequent(text: str, atoms: frozenset[str] = DEFAULT_ATOMS) -> Sequent:
    """Parse ``A1, ..., An -> B``; only top-level commas separate antecedents."""
    pieces = text.split("->")
    if len(pieces) != 2:
        offset = text.find("->", text.find("->") + 2) if len(pieces) > 2 else len(text)
        raise ParseError("sequent needs exactly one '->'", max(offset, 0))
    left, right = pieces
    antecedent = []
    if left.strip():
        for chunk, offset in _split_top_commas(left, 0):
            if not chunk.strip():
                raise ParseError("empty antecedent item", offset)
            antecedent.append(parse_formula(chunk, atoms))
    if not right.strip():
        raise ParseError("missing goal formula", len(text))
    goal = parse_formula(right, atoms)
    return Sequent(tuple(antecedent), goal)


# ---------------------------------------------------------------------------
# lexicon


class Lexicon:
    """Ordered multimap from words to type formulas; ambiguity is a list."""

    def __init__(self) -> None:
        self._entries: dict[str, list[Formula]] = {}

    def add(self, word: str, formula: Formula) -> None:
        self._entries.setdefault(word, []).append(formula)

    def lookup(self, word: str) -> list[Formula]:
        if word not in self._entries:
            raise UnknownWordError(word)
        return list(self._entries[word])

    def words(self) -> list[str]:
        return list(self._entries)

    def __contains__(self, word: str) -> bool:
        return word in self._entries

    def __len__(self) -> int:
        return len(self._entries)


def load_lexicon(path: str | Path, atoms: frozenset[str] = DEFAULT_ATOMS) -> Lexicon:
    """Read a UTF-8 TSV lexicon, one ``word<TAB>formula`` entry per line."""
    lexicon = Lexicon()
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "\t" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'word<TAB>formula'")
            word, _, formula_text = line.partition("\t")
            if not word or not formula_text.strip():
                raise ValueError(f"{path}:{lineno}: expected 'word<TAB>formula'")
            lexicon.add(word, parse_formula(formula_text, atoms))
    return lexicon


_DEFAULT_LEXICON_ROWS = [
    ("John", "!N"),
    ("John", "N"),
    ("Bill", "!N"),
    ("Mary", "N"),
    ("He", "!N\\N"),
    ("he", "!N\\N"),
    ("sleeps", "N\\S"),
    ("snores", "N\\S"),
    ("plays", "!(N\\S)/N"),
    ("guitar", "N"),
    ("likes", "!((!(!N\\S))/N)"),
    ("his", "(!(!N\\N))/N"),
    ("code", "N"),
    ("does-too", "(!(N\\S))\\(N\\S)"),
    ("does-too", "(!(!N\\S))\\(!N\\S)"),
]


def default_lexicon() -> Lexicon:
    """Built-in lexicon covering the pronoun and ellipsis example phrases."""
    lexicon = Lexicon()
    for word, text in _DEFAULT_LEXICON_ROWS:
        lexicon.add(word, parse_formula(text))
    return lexicon


def phrase_sequents(lexicon: Lexicon, words: Sequence[str], goal: Formula) -> Iterator[Sequent]:
    """Lazily enumerate one sequent per combination of word type choices.

    Unknown words raise immediately, naming the word.  Ambiguous words
    multiply out in lexicon entry order.
    """
    choices = [lexicon.lookup(word) for word in words]
    for combo in itertools.product(*choices):
        yield Sequent(tuple(combo), goal)
