"""Formula language: AST, parser, printer, type checker and evaluator.

Formulas range over fixed-width two's-complement bitvectors.  The text
syntax, lowest precedence first::

    a -> b            implication, right-associative
    a || b            logical or
    a && b            logical and
    !a                logical not
    a == b  a != b  a < b  a > b  a <u b      (non-associative)
    a & b  a | b  a ^ b                       bitwise, one level
    a + b  a - b
    a * b
    -a  ~a
    x  42  0x2a  -7  ld(m, i)  st(m, i, v)  (a)

``<`` and ``>`` are signed; ``<u`` is unsigned.  ``ld``/``st`` take a
memory expression as first argument: an identifier (the initial memory)
or another ``st``.

Templates reuse the same grammar; parsed with ``propositional=True``,
bare identifiers become placeholders instead of bitvector variables.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Union

BOOL, BV, MEM = "bool", "bv", "mem"

ARITH_OPS = ("add", "sub", "mul", "and", "or", "xor")
COMPARE_OPS = ("lt_s", "lt_u", "gt_s", "eq", "ne")
LOGIC_OPS = ("logand", "logor", "implies")
BINARY_OPS = ARITH_OPS + COMPARE_OPS + LOGIC_OPS
UNARY_OPS = ("bitnot", "lognot", "neg")

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class FormulaError(ValueError):
    pass


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class FormulaTypeError(FormulaError):
    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# ---------------------------------------------------------------- AST

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class MemRef:
    """The initial memory."""
    name: str


@dataclass(frozen=True)
class Prop:
    """Propositional placeholder (templates only)."""
    name: str


@dataclass(frozen=True)
class UnaryOp:
    op: str
    child: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class MemLd:
    mem: "Node"
    index: "Node"


@dataclass(frozen=True)
class MemSt:
    mem: "Node"
    index: "Node"
    value: "Node"


Node = Union[Var, Const, MemRef, Prop, UnaryOp, BinOp, MemLd, MemSt]


@dataclass(frozen=True)
class Formula:
    root: Node
    name: str = field(default="", compare=False)

    def __str__(self) -> str:
        return print_formula(self)

    @property
    def free_vars(self) -> tuple[str, ...]:
        return free_vars(self.root)

    @property
    def kind(self) -> str:
        return type_of(self.root)


def children(node: Node) -> tuple[Node, ...]:
    if isinstance(node, UnaryOp):
        return (node.child,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, MemLd):
        return (node.mem, node.index)
    if isinstance(node, MemSt):
        return (node.mem, node.index, node.value)
    return ()


def walk(node: Node) -> Iterator[Node]:
    """Pre-order, left to right."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def free_vars(node: Node) -> tuple[str, ...]:
    """Sorted names of the bitvector variables."""
    return tuple(sorted({n.name for n in walk(node) if isinstance(n, Var)}))


def uses_memory(node: Node) -> bool:
    return any(isinstance(n, (MemLd, MemSt)) for n in walk(node))


# ---------------------------------------------------------------- typing

_CHILD_NAMES = {UnaryOp: ("child",), BinOp: ("left", "right"),
                MemLd: ("mem", "index"), MemSt: ("mem", "index", "value")}


def type_of(node: Node, path: str = "root") -> str:
    """Return the node's type, raising FormulaTypeError on ill-typed input."""
    if isinstance(node, Var):
        if not _IDENT.match(node.name):
            raise FormulaTypeError(f"invalid identifier {node.name!r}", path)
        return BV
    if isinstance(node, Const):
        return BV
    if isinstance(node, MemRef):
        return MEM
    if isinstance(node, Prop):
        return BOOL

    names = _CHILD_NAMES[type(node)]
    kinds = [type_of(c, f"{path}.{n}") for c, n in zip(children(node), names)]

    def expect(i: int, want: str, ctx: str) -> None:
        if kinds[i] != want:
            raise FormulaTypeError(f"{ctx} expects {want} operand, got {kinds[i]}",
                                   f"{path}.{names[i]}")

    if isinstance(node, UnaryOp):
        want = BOOL if node.op == "lognot" else BV
        expect(0, want, node.op)
        return want
    if isinstance(node, BinOp):
        if node.op in LOGIC_OPS:
            expect(0, BOOL, node.op)
            expect(1, BOOL, node.op)
            return BOOL
        expect(0, BV, node.op)
        expect(1, BV, node.op)
        return BOOL if node.op in COMPARE_OPS else BV
    if isinstance(node, MemLd):
        expect(0, MEM, "ld")
        expect(1, BV, "ld")
        return BV
    expect(0, MEM, "st")
    expect(1, BV, "st")
    expect(2, BV, "st")
    return MEM


# ---------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<int>0[xX][0-9A-Fa-f]+|\d+)
  | (?P<ltu><u(?![A-Za-z0-9_]))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|&&|\|\||==|!=|[-!<>+*&|^~(),])
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _where(text: str, pos: int, line: int) -> tuple[int, int]:
    """(line, column), both 1-based, of offset ``pos``."""
    before = text[:pos]
    return line + before.count("\n"), pos - (before.rfind("\n") + 1) + 1


def _tokenize(text: str, line: int) -> list[_Tok]:
    toks, pos = [], 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}",
                                     *_where(text, pos, line))
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok("op" if kind == "ltu" else kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


# ---------------------------------------------------------------- parser

_CMP = {"==": "eq", "!=": "ne", "<": "lt_s", ">": "gt_s", "<u": "lt_u"}
_BITWISE = {"&": "and", "|": "or", "^": "xor"}
_ADDITIVE = {"+": "add", "-": "sub"}


class _Parser:
    def __init__(self, text: str, width: int, propositional: bool, line: int):
        self.text = text
        self.toks = _tokenize(text, line)
        self.i = 0
        self.width = width
        self.prop = propositional
        self.line = line

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg: str, tok: _Tok | None = None) -> FormulaSyntaxError:
        tok = tok or self.peek()
        return FormulaSyntaxError(msg, *_where(self.text, tok.pos, self.line))

    def expect(self, text: str) -> _Tok:
        tok = self.take()
        if tok.text != text:
            shown = tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}", tok)
        return tok

    def at(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.text in texts

    def parse(self) -> Node:
        node = self.implies()
        if self.peek().kind != "eof":
            raise self.error(f"unexpected {self.peek().text!r}")
        return node

    def implies(self) -> Node:
        left = self.logor()
        if self.at("->"):
            self.take()
            return BinOp("implies", left, self.implies())
        return left

    def logor(self) -> Node:
        node = self.logand()
        while self.at("||"):
            self.take()
            node = BinOp("logor", node, self.logand())
        return node

    def logand(self) -> Node:
        node = self.lognot()
        while self.at("&&"):
            self.take()
            node = BinOp("logand", node, self.lognot())
        return node

    def lognot(self) -> Node:
        if self.at("!"):
            self.take()
            return UnaryOp("lognot", self.lognot())
        return self.comparison()

    def comparison(self) -> Node:
        left = self.bitwise()
        if self.at(*_CMP):
            op = _CMP[self.take().text]
            right = self.bitwise()
            if self.at(*_CMP):
                raise self.error("comparison operators do not chain")
            return BinOp(op, left, right)
        return left

    def bitwise(self) -> Node:
        node = self.additive()
        while self.at(*_BITWISE):
            op = _BITWISE[self.take().text]
            node = BinOp(op, node, self.additive())
        return node

    def additive(self) -> Node:
        node = self.multiplicative()
        while self.at(*_ADDITIVE):
            op = _ADDITIVE[self.take().text]
            node = BinOp(op, node, self.multiplicative())
        return node

    def multiplicative(self) -> Node:
        node = self.unary()
        while self.at("*"):
            self.take()
            node = BinOp("mul", node, self.unary())
        return node

    def unary(self) -> Node:
        if self.at("-"):
            self.take()
            if self.peek().kind == "int":
                return self.const(self.take(), negative=True)
            return UnaryOp("neg", self.unary())
        if self.at("~"):
            self.take()
            return UnaryOp("bitnot", self.unary())
        return self.atom()

    def const(self, tok: _Tok, negative: bool = False) -> Const:
        value = int(tok.text, 0)
        if negative:
            value = -value
        lo, hi = -(1 << (self.width - 1)), (1 << self.width) - 1
        if not lo <= value <= hi:
            raise self.error(f"constant {value} does not fit in {self.width} bits", tok)
        return Const(value)

    def atom(self) -> Node:
        tok = self.peek()
        if tok.kind == "int":
            return self.const(self.take())
        if tok.kind == "ident":
            self.take()
            if tok.text in ("ld", "st") and self.at("("):
                return self.memop(tok.text)
            return Prop(tok.text) if self.prop else Var(tok.text)
        if self.at("("):
            self.take()
            node = self.implies()
            self.expect(")")
            return node
        raise self.error(f"expected an operand, found {tok.text or 'end of input'!r}")

    def memory(self) -> Node:
        tok = self.peek()
        if tok.kind == "ident" and tok.text == "st" and self.toks[self.i + 1].text == "(":
            self.take()
            return self.memop("st")
        if tok.kind == "ident" and tok.text != "ld":
            self.take()
            return MemRef(tok.text)
        raise self.error("expected a memory operand (identifier or st(...))")

    def memop(self, which: str) -> Node:
        self.expect("(")
        mem = self.memory()
        self.expect(",")
        index = self.implies()
        if which == "ld":
            self.expect(")")
            return MemLd(mem, index)
        self.expect(",")
        value = self.implies()
        self.expect(")")
        return MemSt(mem, index, value)


def parse_formula(text: str, width: int = 32, *, name: str = "", line: int = 1) -> Formula:
    """Parse and type-check a formula."""
    try:
        root = _Parser(text, width, False, line).parse()
        type_of(root)
    except RecursionError:
        raise FormulaError(f"{name or 'formula'} nests too deeply") from None
    return Formula(root, name)


# ---------------------------------------------------------------- printer

_INFIX = {"eq": "==", "ne": "!=", "lt_s": "<", "gt_s": ">", "lt_u": "<u",
          "and": "&", "or": "|", "xor": "^", "add": "+", "sub": "-", "mul": "*",
          "logand": "&&", "logor": "||", "implies": "->"}
_LEVEL = {"implies": 1, "logor": 2, "logand": 3, "lognot": 4}
_LEVEL.update({op: 5 for op in COMPARE_OPS})
_LEVEL.update({op: 6 for op in ("and", "or", "xor")})
_LEVEL.update({"add": 7, "sub": 7, "mul": 8, "neg": 9, "bitnot": 9})
_ATOM = 10


def _level(node: Node) -> int:
    if isinstance(node, (UnaryOp, BinOp)):
        return _LEVEL[node.op]
    if isinstance(node, Const) and node.value < 0:
        return 9
    return _ATOM


def _show(node: Node) -> str:
    if isinstance(node, (Var, MemRef, Prop)):
        return node.name
    if isinstance(node, Const):
        return str(node.value)
    if isinstance(node, MemLd):
        return f"ld({_show(node.mem)}, {_show(node.index)})"
    if isinstance(node, MemSt):
        return f"st({_show(node.mem)}, {_show(node.index)}, {_show(node.value)})"
    if isinstance(node, UnaryOp):
        sym = {"neg": "-", "bitnot": "~", "lognot": "!"}[node.op]
        child = _show(node.child)
        if node.op == "lognot":
            wrap = _level(node.child) < _ATOM and not (
                isinstance(node.child, UnaryOp) and node.child.op == "lognot")
        else:
            wrap = _level(node.child) < 9 or (node.op == "neg" and isinstance(node.child, Const))
        return f"{sym}({child})" if wrap else f"{sym}{child}"

    lvl = _LEVEL[node.op]
    left, right = _show(node.left), _show(node.right)
    llvl, rlvl = _level(node.left), _level(node.right)
    if node.op == "implies":
        wrap_l, wrap_r = llvl <= lvl, rlvl < lvl
    elif node.op in COMPARE_OPS:
        wrap_l, wrap_r = llvl <= lvl, rlvl <= lvl
    else:
        wrap_l, wrap_r = llvl < lvl, rlvl <= lvl
        if lvl == 6:
            # mixed bitwise operators are always parenthesised
            wrap_l = wrap_l or (llvl == 6 and node.left.op != node.op)
    if wrap_l:
        left = f"({left})"
    if wrap_r:
        right = f"({right})"
    return f"{left} {_INFIX[node.op]} {right}"


def print_formula(f: Formula | Node) -> str:
    return _show(f.root if isinstance(f, Formula) else f)


# ---------------------------------------------------------------- evaluator

def to_signed(value: int, width: int) -> int:
    value &= (1 << width) - 1
    return value - (1 << width) if value >> (width - 1) else value


def eval_formula(f: Formula | Node, sigma: Mapping[str, int],
                 mem0: Mapping[int, int] | None = None, width: int = 32,
                 mem_size: int = 256) -> int:
    """Evaluate under W-bit wraparound semantics.

    Bitvector results come back as unsigned W-bit integers, booleans as 0/1.
    Memory is a word-indexed map with indices reduced modulo ``mem_size``;
    locations absent from ``mem0`` read as 0.
    """
    mask = (1 << width) - 1
    root = f.root if isinstance(f, Formula) else f

    def ev(node):
        if isinstance(node, Var):
            return sigma[node.name] & mask
        if isinstance(node, Const):
            return node.value & mask
        if isinstance(node, MemRef):
            return dict(mem0 or {})
        if isinstance(node, UnaryOp):
            v = ev(node.child)
            if node.op == "lognot":
                return 1 - v
            if node.op == "bitnot":
                return ~v & mask
            return -v & mask
        if isinstance(node, MemLd):
            mem = ev(node.mem)
            return mem.get(ev(node.index) % mem_size, 0) & mask
        if isinstance(node, MemSt):
            mem = ev(node.mem)
            mem[ev(node.index) % mem_size] = ev(node.value)
            return mem
        if isinstance(node, Prop):
            raise FormulaError(f"placeholder {node.name} cannot be evaluated")

        op = node.op
        if op == "implies":
            return 1 if not ev(node.left) else ev(node.right)
        if op == "logand":
            return ev(node.left) & ev(node.right)
        if op == "logor":
            return ev(node.left) | ev(node.right)
        a, b = ev(node.left), ev(node.right)
        if op == "add":
            return (a + b) & mask
        if op == "sub":
            return (a - b) & mask
        if op == "mul":
            return (a * b) & mask
        if op == "and":
            return a & b
        if op == "or":
            return a | b
        if op == "xor":
            return a ^ b
        if op == "eq":
            return int(a == b)
        if op == "ne":
            return int(a != b)
        if op == "lt_u":
            return int(a < b)
        if op == "lt_s":
            return int(to_signed(a, width) < to_signed(b, width))
        if op == "gt_s":
            return int(to_signed(a, width) > to_signed(b, width))
        raise FormulaError(f"unknown operator {op}")

    return ev(root)


# ---------------------------------------------------------------- templates

@dataclass(frozen=True)
class Template:
    skeleton: Node
    placeholders: tuple[str, ...]
    name: str = ""

    def __str__(self) -> str:
        return print_formula(self.skeleton)


def placeholder_order(node: Node) -> tuple[str, ...]:
    """Distinct placeholder names in first-occurrence, left-to-right order."""
    seen: dict[str, None] = {}
    for n in walk(node):
        if isinstance(n, Prop):
            seen.setdefault(n.name)
    return tuple(seen)


def _is_closed_atom(node: Node) -> bool:
    """A placeholder- and variable-free boolean subterm such as ``1 == 1``."""
    if any(isinstance(n, (Prop, Var, MemRef)) for n in walk(node)):
        return False
    try:
        return type_of(node) == BOOL
    except FormulaTypeError:
        return False


def _is_propositional(node: Node) -> bool:
    if isinstance(node, Prop) or _is_closed_atom(node):
        return True
    if isinstance(node, UnaryOp) and node.op == "lognot":
        return _is_propositional(node.child)
    if isinstance(node, BinOp) and node.op in LOGIC_OPS:
        return _is_propositional(node.left) and _is_propositional(node.right)
    return False


def eval_propositional(node: Node, values: Mapping[str, bool]) -> bool:
    if isinstance(node, Prop):
        return bool(values[node.name])
    if isinstance(node, UnaryOp) and node.op == "lognot":
        return not eval_propositional(node.child, values)
    if isinstance(node, BinOp) and node.op in LOGIC_OPS:
        a = eval_propositional(node.left, values)
        b = eval_propositional(node.right, values)
        if node.op == "logand":
            return a and b
        if node.op == "logor":
            return a or b
        return (not a) or b
    return bool(eval_formula(node, {}))


def is_propositional_tautology(node: Node) -> bool:
    names = placeholder_order(node)
    for bits in range(1 << len(names)):
        values = {n: bool(bits >> i & 1) for i, n in enumerate(names)}
        if not eval_propositional(node, values):
            return False
    return True


def parse_template(text: str, *, name: str = "", line: int = 1) -> Template:
    root = _Parser(text, 32, True, line).parse()
    if not _is_propositional(root):
        raise FormulaTypeError("templates may only contain placeholders, logical connectives and closed boolean atoms", "root")
    if not is_propositional_tautology(root):
        raise FormulaError(f"template {name or text!r} is not a propositional tautology")
    return Template(root, placeholder_order(root), name)


def substitute(node: Node, mapping: Mapping[str, Node]) -> Node:
    """Replace every placeholder occurrence by its mapped subtree."""
    if isinstance(node, Prop):
        return mapping[node.name]
    if isinstance(node, UnaryOp):
        return UnaryOp(node.op, substitute(node.child, mapping))
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, mapping), substitute(node.right, mapping))
    return node


# ---------------------------------------------------------------- corpora

DATA_DIR = Path(__file__).parent / "data"
SEEDS_PATH = DATA_DIR / "seeds.txt"
TEMPLATES_PATH = DATA_DIR / "templates.txt"


class CorpusError(FormulaError):
    def __init__(self, message: str, path: str, line: int):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def read_corpus(path: str | Path) -> list[tuple[int, str, str]]:
    """Yield (line number, name, text) for every entry of a corpus file."""
    entries, seen = [], set()
    path = Path(path)
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, text = line.partition(":")
        name, text = name.strip(), text.strip()
        if not sep or not name or not text:
            raise CorpusError("expected 'name : formula'", str(path), lineno)
        if name in seen:
            raise CorpusError(f"duplicate entry name {name!r}", str(path), lineno)
        seen.add(name)
        entries.append((lineno, name, text))
    return entries


def load_seeds(path: str | Path = SEEDS_PATH, width: int = 32) -> list[Formula]:
    """Load a seed corpus; every seed must be boolean-valued."""
    seeds = []
    for lineno, name, text in read_corpus(path):
        try:
            f = parse_formula(text, width, name=name, line=lineno)
        except FormulaError as exc:
            raise CorpusError(str(exc), str(path), lineno) from exc
        if f.kind != BOOL:
            raise CorpusError(f"seed {name!r} is not boolean-valued", str(path), lineno)
        seeds.append(f)
    return seeds


def load_templates(path: str | Path = TEMPLATES_PATH) -> list[Template]:
    templates = []
    for lineno, name, text in read_corpus(path):
        try:
            templates.append(parse_template(text, name=name, line=lineno))
        except FormulaError as exc:
            raise CorpusError(str(exc), str(path), lineno) from exc
    return templates
