"""Clifford+T circuit IR: OpenQASM 2.0 subset parser/printer, dependency DAG,
and desk-scale benchmark generators (adder, QFT, Ising layer).
"""
from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from enum import Enum
from graphlib import TopologicalSorter
from typing import Iterable, Sequence


class GateKind(str, Enum):
    H = "H"
    S = "S"
    SDG = "Sdg"
    T = "T"
    TDG = "Tdg"
    X = "X"
    Y = "Y"
    Z = "Z"
    CX = "CX"
    MEASURE_Z = "MeasureZ"


_QASM_NAMES = {
    "h": GateKind.H,
    "s": GateKind.S,
    "sdg": GateKind.SDG,
    "t": GateKind.T,
    "tdg": GateKind.TDG,
    "x": GateKind.X,
    "y": GateKind.Y,
    "z": GateKind.Z,
    "cx": GateKind.CX,
    "measure": GateKind.MEASURE_Z,
}
_KIND_TO_QASM = {v: k for k, v in _QASM_NAMES.items()}

CLIFFORD_KINDS = frozenset(
    {GateKind.H, GateKind.S, GateKind.SDG, GateKind.X, GateKind.Y, GateKind.Z, GateKind.CX}
)


class QasmError(ValueError):
    """Base class for circuit input errors."""


class QasmSyntaxError(QasmError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnsupportedGateError(QasmError):
    def __init__(self, gate: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"unsupported gate {gate!r}{where}")
        self.gate = gate
        self.line = line
        self.column = column


class QubitIndexError(QasmError):
    pass


class MeasurementOrderError(QasmError):
    """A gate acts on a qubit after that qubit was measured."""


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        arity = 2 if self.kind is GateKind.CX else 1
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind.value} takes {arity} qubit(s), got {self.qubits}")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError(f"CX needs distinct qubits, got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"negative qubit index in {self.qubits}")

    def __repr__(self) -> str:
        return f"{self.kind.value}({','.join(map(str, self.qubits))})"


@dataclass(frozen=True)
class LogicalCircuit:
    width: int
    gates: tuple[Gate, ...]
    name: str = "circuit"

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.width < 0:
            raise ValueError("width must be non-negative")
        measured: set[int] = set()
        for i, g in enumerate(self.gates):
            for q in g.qubits:
                if q >= self.width:
                    raise QubitIndexError(f"gate {i} {g!r} touches qubit {q} >= width {self.width}")
                if q in measured:
                    raise MeasurementOrderError(f"gate {i} {g!r} acts on qubit {q} after its measurement")
            if g.kind is GateKind.MEASURE_Z:
                measured.add(g.qubits[0])

    def count(self, *kinds: GateKind) -> int:
        return sum(1 for g in self.gates if g.kind in kinds)

    @property
    def t_count(self) -> int:
        return self.count(GateKind.T, GateKind.TDG)

    @property
    def measured_qubits(self) -> frozenset[int]:
        return frozenset(g.qubits[0] for g in self.gates if g.kind is GateKind.MEASURE_Z)


# --------------------------------------------------------------------------
# OpenQASM 2.0 subset

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<number>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<punct>[\[\](),;])
  | (?P<other>.)
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, line_start = 1, 0
    for m in _TOKEN.finditer(text):
        kind = m.lastgroup
        tok_text = m.group()
        col = m.start() - line_start + 1
        if kind == "other":
            raise QasmSyntaxError(f"unexpected character {tok_text!r}", line, col)
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, tok_text, line, col))
        nl = tok_text.count("\n")
        if nl:
            line += nl
            line_start = m.start() + tok_text.rindex("\n") + 1
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0
        self.qreg: tuple[str, int] | None = None
        self.cregs: dict[str, int] = {}

    def _peek(self) -> _Tok | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def _eof_error(self, what: str) -> QasmSyntaxError:
        last = self.toks[-1] if self.toks else _Tok("", "", 1, 0)
        return QasmSyntaxError(f"unexpected end of input, expected {what}", last.line, last.col + len(last.text))

    def _next(self) -> _Tok:
        tok = self._peek()
        if tok is None:
            raise self._eof_error("more input")
        self.pos += 1
        return tok

    def _expect(self, text: str) -> _Tok:
        tok = self._peek()
        if tok is None:
            raise self._eof_error(repr(text))
        if tok.text != text:
            raise QasmSyntaxError(f"expected {text!r}, got {tok.text!r}", tok.line, tok.col)
        self.pos += 1
        return tok

    def _expect_kind(self, kind: str, what: str) -> _Tok:
        tok = self._peek()
        if tok is None:
            raise self._eof_error(what)
        if tok.kind != kind:
            raise QasmSyntaxError(f"expected {what}, got {tok.text!r}", tok.line, tok.col)
        self.pos += 1
        return tok

    def _int(self) -> int:
        tok = self._expect_kind("number", "integer")
        if not tok.text.isdigit():
            raise QasmSyntaxError(f"expected integer, got {tok.text!r}", tok.line, tok.col)
        return int(tok.text)

    def _qubit_ref(self) -> int:
        name = self._expect_kind("ident", "register name")
        if self.qreg is None:
            raise QasmSyntaxError("qubit used before qreg declaration", name.line, name.col)
        if name.text != self.qreg[0]:
            raise QasmSyntaxError(f"unknown quantum register {name.text!r}", name.line, name.col)
        self._expect("[")
        idx_tok = self._peek()
        idx = self._int()
        self._expect("]")
        if idx >= self.qreg[1]:
            raise QubitIndexError(
                f"qubit index {idx} out of range for {self.qreg[0]}[{self.qreg[1]}] "
                f"(line {idx_tok.line}, column {idx_tok.col})"
            )
        return idx

    def _clbit_ref(self) -> None:
        name = self._expect_kind("ident", "classical register name")
        if name.text not in self.cregs:
            raise QasmSyntaxError(f"unknown classical register {name.text!r}", name.line, name.col)
        self._expect("[")
        idx_tok = self._peek()
        idx = self._int()
        self._expect("]")
        if idx >= self.cregs[name.text]:
            raise QasmSyntaxError(f"classical bit index {idx} out of range", idx_tok.line, idx_tok.col)

    def parse(self, name: str) -> LogicalCircuit:
        gates: list[Gate] = []
        measured: set[int] = set()
        while (tok := self._peek()) is not None:
            word = tok.text
            if tok.kind != "ident":
                raise QasmSyntaxError(f"unexpected {word!r}", tok.line, tok.col)
            self.pos += 1
            if word == "OPENQASM":
                ver = self._expect_kind("number", "version")
                if not ver.text.startswith("2"):
                    raise QasmSyntaxError(f"only OPENQASM 2.x is supported, got {ver.text}", ver.line, ver.col)
                self._expect(";")
            elif word == "include":
                self._expect_kind("string", "file name")
                self._expect(";")
            elif word in ("qreg", "creg"):
                reg = self._expect_kind("ident", "register name")
                self._expect("[")
                size = self._int()
                self._expect("]")
                self._expect(";")
                if word == "qreg":
                    if self.qreg is not None:
                        raise QasmSyntaxError("only one qreg is supported", tok.line, tok.col)
                    self.qreg = (reg.text, size)
                else:
                    self.cregs[reg.text] = size
            elif word == "barrier":
                self._qubit_ref()
                while self._peek() is not None and self._peek().text == ",":
                    self.pos += 1
                    self._qubit_ref()
                self._expect(";")
            elif word in _QASM_NAMES:
                kind = _QASM_NAMES[word]
                nxt = self._peek()
                if nxt is not None and nxt.text == "(":
                    raise UnsupportedGateError(word, tok.line, tok.col)
                qubits = [self._qubit_ref()]
                if kind is GateKind.CX:
                    self._expect(",")
                    qubits.append(self._qubit_ref())
                    if qubits[0] == qubits[1]:
                        raise QasmSyntaxError("cx needs two distinct qubits", tok.line, tok.col)
                elif kind is GateKind.MEASURE_Z:
                    nxt = self._peek()
                    if nxt is not None and nxt.kind == "arrow":
                        self.pos += 1
                        self._clbit_ref()
                self._expect(";")
                for q in qubits:
                    if q in measured:
                        raise MeasurementOrderError(
                            f"{word} on qubit {q} after its measurement (line {tok.line}, column {tok.col})"
                        )
                if kind is GateKind.MEASURE_Z:
                    measured.add(qubits[0])
                gates.append(Gate(kind, tuple(qubits)))
            else:
                raise UnsupportedGateError(word, tok.line, tok.col)
        if self.qreg is None:
            raise QasmSyntaxError("missing qreg declaration", 1, 1)
        return LogicalCircuit(self.qreg[1], tuple(gates), name)


def parse_qasm(text: str, name: str = "circuit") -> LogicalCircuit:
    """Parse an OPENQASM 2.0 subset (single qreg, h/s/sdg/t/tdg/x/y/z/cx/measure)."""
    return _Parser(text).parse(name)


def load_qasm(path) -> LogicalCircuit:
    from pathlib import Path

    path = Path(path)
    return parse_qasm(path.read_text(), name=path.stem)


def print_qasm(circuit: LogicalCircuit) -> str:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.width}];"]
    if circuit.measured_qubits:
        lines.append(f"creg c[{circuit.width}];")
    for g in circuit.gates:
        if g.kind is GateKind.MEASURE_Z:
            lines.append(f"measure q[{g.qubits[0]}] -> c[{g.qubits[0]}];")
        else:
            args = ",".join(f"q[{q}]" for q in g.qubits)
            lines.append(f"{_KIND_TO_QASM[g.kind]} {args};")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Dependency DAG


@dataclass(frozen=True)
class OpDag:
    size: int
    edges: frozenset[tuple[int, int]]
    preds: tuple[tuple[int, ...], ...] = field(repr=False)
    succs: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def nodes(self) -> range:
        return range(self.size)

    def topological_order(self) -> list[int]:
        ts = TopologicalSorter({i: self.preds[i] for i in range(self.size)})
        return list(ts.static_order())

    def roots(self) -> list[int]:
        return [i for i in range(self.size) if not self.preds[i]]


def dag_from_supports(supports: Sequence[Iterable[int]]) -> OpDag:
    """Per-qubit chain DAG: op b depends on the previous op touching each of its qubits."""
    last: dict[int, int] = {}
    preds: list[set[int]] = []
    for i, support in enumerate(supports):
        ps = set()
        for q in support:
            if q in last:
                ps.add(last[q])
            last[q] = i
        preds.append(ps)
    succs: list[list[int]] = [[] for _ in supports]
    edges = set()
    for b, ps in enumerate(preds):
        for a in sorted(ps):
            succs[a].append(b)
            edges.add((a, b))
    return OpDag(
        len(preds),
        frozenset(edges),
        tuple(tuple(sorted(ps)) for ps in preds),
        tuple(tuple(s) for s in succs),
    )


def build_dag(circuit: LogicalCircuit) -> OpDag:
    return dag_from_supports([g.qubits for g in circuit.gates])


# --------------------------------------------------------------------------
# Benchmarks
#
# Templates are written with generic phase rotations rz(angle). Angles that are
# multiples of pi/2 lower to exact S/Z/Sdg; every other rotation becomes a
# deterministic word of `rz_word_len` T-syllables (T, then H or S.H between
# consecutive T gates), seeded by (benchmark kind, rotation index).

BENCHMARK_KINDS = ("adder", "qft", "ising")

ISING_COUPLING_ANGLE = 0.3
ISING_FIELD_ANGLE = 0.7


@dataclass
class _Builder:
    kind: str
    rz_word_len: int
    gates: list[Gate] = field(default_factory=list)
    n_rotations: int = 0

    def g(self, kind: GateKind, *qubits: int) -> None:
        self.gates.append(Gate(kind, qubits))

    def rz(self, q: int, angle: float) -> None:
        a = math.remainder(angle, 2 * math.pi)
        quarter = a / (math.pi / 2)
        if abs(quarter - round(quarter)) < 1e-12:
            exact = {0: [], 1: [GateKind.S], 2: [GateKind.Z], -1: [GateKind.SDG], -2: [GateKind.Z]}
            for k in exact[int(round(quarter))]:
                self.g(k, q)
            return
        idx = self.n_rotations
        self.n_rotations += 1
        if self.rz_word_len == 1:
            self.g(GateKind.T if a > 0 else GateKind.TDG, q)
            return
        rng = random.Random(f"{self.kind}:{idx}")
        self.g(GateKind.T, q)
        for _ in range(self.rz_word_len - 1):
            if rng.random() < 0.5:
                self.g(GateKind.S, q)
            self.g(GateKind.H, q)
            self.g(GateKind.T, q)

    def ccx(self, c1: int, c2: int, t: int) -> None:
        q = math.pi / 4
        self.g(GateKind.H, t)
        self.g(GateKind.CX, c2, t)
        self.rz(t, -q)
        self.g(GateKind.CX, c1, t)
        self.rz(t, q)
        self.g(GateKind.CX, c2, t)
        self.rz(t, -q)
        self.g(GateKind.CX, c1, t)
        self.rz(c2, q)
        self.rz(t, q)
        self.g(GateKind.H, t)
        self.g(GateKind.CX, c1, c2)
        self.rz(c1, q)
        self.rz(c2, -q)
        self.g(GateKind.CX, c1, c2)

    def cphase(self, control: int, target: int, lam: float) -> None:
        self.rz(control, lam / 2)
        self.g(GateKind.CX, control, target)
        self.rz(target, -lam / 2)
        self.g(GateKind.CX, control, target)
        self.rz(target, lam / 2)


def _adder(b: _Builder, n: int) -> None:
    # Cuccaro ripple-carry: q0 = carry-in, (a_i, b_i) = (1+2i, 2+2i), carry-out = 2k+1.
    if n < 4:
        raise ValueError("adder needs n >= 4")
    k = (n - 2) // 2
    a = [1 + 2 * i for i in range(k)]
    bb = [2 + 2 * i for i in range(k)]
    cin, cout = 0, 2 * k + 1

    def maj(c, y, x):
        b.g(GateKind.CX, x, y)
        b.g(GateKind.CX, x, c)
        b.ccx(c, y, x)

    def uma(c, y, x):
        b.ccx(c, y, x)
        b.g(GateKind.CX, x, c)
        b.g(GateKind.CX, c, y)

    carries = [cin] + a[:-1]
    for i in range(k):
        maj(carries[i], bb[i], a[i])
    b.g(GateKind.CX, a[k - 1], cout)
    for i in reversed(range(k)):
        uma(carries[i], bb[i], a[i])


def _qft(b: _Builder, n: int) -> None:
    for j in range(n):
        b.g(GateKind.H, j)
        for k in range(j + 1, n):
            b.cphase(k, j, math.pi / 2 ** (k - j))


def _ising(b: _Builder, n: int) -> None:
    for i in range(n - 1):
        b.g(GateKind.CX, i, i + 1)
        b.rz(i + 1, ISING_COUPLING_ANGLE)
        b.g(GateKind.CX, i, i + 1)
    for i in range(n):
        b.g(GateKind.H, i)
        b.rz(i, ISING_FIELD_ANGLE)
        b.g(GateKind.H, i)


_TEMPLATES = {"adder": _adder, "qft": _qft, "ising": _ising}


def gen_benchmark(kind: str, n: int, rz_word_len: int = 30, measure: bool = True) -> LogicalCircuit:
    if kind not in _TEMPLATES:
        raise ValueError(f"unsupported benchmark kind {kind!r}; expected one of {BENCHMARK_KINDS}")
    if n < 2:
        raise ValueError("n must be >= 2")
    if rz_word_len < 1:
        raise ValueError("rz_word_len must be >= 1")
    b = _Builder(kind, rz_word_len)
    _TEMPLATES[kind](b, n)
    if measure:
        for q in range(n):
            b.g(GateKind.MEASURE_Z, q)
    return LogicalCircuit(n, tuple(b.gates), f"{kind}-{n}")


def template_rotation_count(kind: str, n: int) -> int:
    """Number of non-Clifford phase rotations in a benchmark template."""
    b = _Builder(kind, 1)
    _TEMPLATES[kind](b, n)
    return b.n_rotations
