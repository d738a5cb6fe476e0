"""Pauli-based computation: Pauli-product algebra, gate lowering and
weight-constrained Clifford pruning.

Conventions
-----------
A rotation ``P(theta)`` is the unitary ``exp(-i * theta * P)``, so that
``S = Z(pi/4)`` and ``T = Z(pi/8)`` hold up to global phase. Pauli products are
Hermitian; any real sign is folded into the rotation angle or the measurement
sign. Pauli products are stored as two bitmasks (x, z) with ``Y = i X Z`` on
each qubit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Union

from .circuit_ir import Gate, GateKind, LogicalCircuit


class Phase(Enum):
    ONE = 0
    I = 1
    MINUS_ONE = 2
    MINUS_I = 3

    def __mul__(self, other: "Phase") -> "Phase":
        return Phase((self.value + other.value) % 4)

    @property
    def complex(self) -> complex:
        return (1, 1j, -1, -1j)[self.value]


_AXES = {"X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


@dataclass(frozen=True, order=True)
class PauliProduct:
    """Sparse Pauli product; identity factors are never stored."""

    x: int = 0
    z: int = 0

    @classmethod
    def from_factors(cls, factors: dict[int, str]) -> "PauliProduct":
        x = z = 0
        for q, axis in factors.items():
            if axis == "I":
                continue
            bx, bz = _AXES[axis]
            x |= bx << q
            z |= bz << q
        return cls(x, z)

    @classmethod
    def parse(cls, text: str) -> "PauliProduct":
        """``"Y0 X1"`` -> PauliProduct."""
        factors = {}
        for tok in text.split():
            axis, q = tok[0], int(tok[1:])
            if axis not in _AXES or q in factors:
                raise ValueError(f"bad Pauli factor {tok!r} in {text!r}")
            factors[q] = axis
        return cls.from_factors(factors)

    @classmethod
    def single(cls, axis: str, qubit: int) -> "PauliProduct":
        return cls.from_factors({qubit: axis})

    @property
    def mask(self) -> int:
        return self.x | self.z

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    @property
    def support(self) -> tuple[int, ...]:
        m, out, q = self.x | self.z, [], 0
        while m:
            if m & 1:
                out.append(q)
            m >>= 1
            q += 1
        return tuple(out)

    @property
    def factors(self) -> dict[int, str]:
        return {q: "IZXY"[((self.x >> q) & 1) << 1 | ((self.z >> q) & 1)] for q in self.support}

    def restrict(self, keep_mask: int) -> "PauliProduct":
        return PauliProduct(self.x & keep_mask, self.z & keep_mask)

    def __bool__(self) -> bool:
        return bool(self.x | self.z)

    def __str__(self) -> str:
        return " ".join(f"{a}{q}" for q, a in self.factors.items()) or "I"


IDENTITY = PauliProduct()


def pauli_mul(a: PauliProduct, b: PauliProduct) -> tuple[Phase, PauliProduct]:
    """Group product ``a * b`` as (global phase, Hermitian Pauli product)."""
    ya, xa, za = a.x & a.z, a.x & ~a.z, a.z & ~a.x
    yb, xb, zb = b.x & b.z, b.x & ~b.z, b.z & ~b.x
    # per-qubit exponent of i: ZX=iY, XY=iZ, YZ=iX and reversed orders give -i
    plus = (za & xb) | (xa & yb) | (ya & zb)
    minus = (xa & zb) | (ya & xb) | (za & yb)
    k = (plus.bit_count() - minus.bit_count()) % 4
    return Phase(k), PauliProduct(a.x ^ b.x, a.z ^ b.z)


def anticommutes(a: PauliProduct, b: PauliProduct) -> bool:
    return ((a.x & b.z) ^ (a.z & b.x)).bit_count() & 1 == 1


# --------------------------------------------------------------------------
# Operations

PI_8 = 1
PI_4 = 2


@dataclass(frozen=True)
class PauliRotation:
    """``exp(-i * eighths * pi/8 * pauli)`` with eighths in {+-1, +-2}."""

    pauli: PauliProduct
    eighths: int

    def __post_init__(self):
        if self.eighths not in (1, -1, 2, -2):
            raise ValueError(f"rotation angle must be +-pi/8 or +-pi/4, got {self.eighths}*pi/8")
        if not self.pauli:
            raise ValueError("rotation about the identity")

    @property
    def angle(self) -> float:
        return self.eighths * math.pi / 8

    @property
    def is_clifford(self) -> bool:
        return abs(self.eighths) == 2

    @property
    def sign(self) -> int:
        return 1 if self.eighths > 0 else -1

    def negated(self) -> "PauliRotation":
        return PauliRotation(self.pauli, -self.eighths)

    def with_pauli(self, pauli: PauliProduct, sign: int) -> "PauliRotation":
        return PauliRotation(pauli, sign * self.eighths)

    def __str__(self) -> str:
        return f"ROT {_angle_text(self.eighths)} {self.pauli}"


@dataclass(frozen=True)
class PauliMeasurement:
    pauli: PauliProduct
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("measurement sign must be +1 or -1")
        if not self.pauli:
            raise ValueError("measurement of the identity")

    is_clifford = False

    def negated(self) -> "PauliMeasurement":
        return PauliMeasurement(self.pauli, -self.sign)

    def with_pauli(self, pauli: PauliProduct, sign: int) -> "PauliMeasurement":
        return PauliMeasurement(pauli, sign * self.sign)

    def __str__(self) -> str:
        return f"MEAS {'+' if self.sign > 0 else '-'} {self.pauli}"


PbcOp = Union[PauliRotation, PauliMeasurement]


def op_weight(op: PbcOp | PauliProduct) -> int:
    pauli = op if isinstance(op, PauliProduct) else op.pauli
    return pauli.weight


@dataclass(frozen=True)
class PbcCircuit:
    """Ordered PBC program. ``frame`` is a trailing Pauli correction on unmeasured qubits."""

    width: int
    ops: tuple[PbcOp, ...]
    frame: PauliProduct = IDENTITY
    measured: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        object.__setattr__(self, "measured", frozenset(self.measured))
        limit = 1 << self.width
        for op in self.ops:
            if op.pauli.mask >= limit:
                raise ValueError(f"{op} exceeds width {self.width}")

    @property
    def measured_mask(self) -> int:
        return sum(1 << q for q in self.measured)


# --------------------------------------------------------------------------
# Lowering


def _z(q):
    return PauliProduct.single("Z", q)


def _x(q):
    return PauliProduct.single("X", q)


def decompose_gate(g: Gate) -> list[PbcOp]:
    q = g.qubits[0]
    k = g.kind
    if k is GateKind.H:
        return [PauliRotation(_z(q), PI_4), PauliRotation(_x(q), PI_4), PauliRotation(_z(q), PI_4)]
    if k is GateKind.S:
        return [PauliRotation(_z(q), PI_4)]
    if k is GateKind.SDG:
        return [PauliRotation(_z(q), -PI_4)]
    if k is GateKind.T:
        return [PauliRotation(_z(q), PI_8)]
    if k is GateKind.TDG:
        return [PauliRotation(_z(q), -PI_8)]
    if k is GateKind.CX:
        c, t = g.qubits
        zx = PauliProduct(1 << t, 1 << c)
        return [PauliRotation(zx, PI_4), PauliRotation(_z(c), -PI_4), PauliRotation(_x(t), -PI_4)]
    if k in (GateKind.X, GateKind.Y, GateKind.Z):
        # pi/2 rotation as two pi/4 halves; prune folds the pair into the Pauli frame
        p = PauliProduct.single(k.value, q)
        return [PauliRotation(p, PI_4), PauliRotation(p, PI_4)]
    if k is GateKind.MEASURE_Z:
        return [PauliMeasurement(_z(q), 1)]
    raise ValueError(f"unsupported gate {g!r}")


def lower(circuit: LogicalCircuit) -> PbcCircuit:
    ops: list[PbcOp] = []
    for g in circuit.gates:
        ops.extend(decompose_gate(g))
    return PbcCircuit(circuit.width, tuple(ops), IDENTITY, circuit.measured_qubits)


# --------------------------------------------------------------------------
# Commutation and pruning


def commute_past(clifford: PauliRotation, op: PbcOp) -> PbcOp:
    """Rewrite ``op`` so that ``[clifford, op] == [op', clifford]``.

    For anticommuting products the new operator is ``sign(theta) * i * P * P'``.
    """
    if not clifford.is_clifford:
        raise ValueError("commute_past needs a pi/4 rotation")
    if not anticommutes(clifford.pauli, op.pauli):
        return op
    phase, prod = pauli_mul(clifford.pauli, op.pauli)
    phase = phase * Phase.I
    assert phase in (Phase.ONE, Phase.MINUS_ONE)
    sign = clifford.sign * (1 if phase is Phase.ONE else -1)
    return op.with_pauli(prod, sign)


def _i_product_sign(ax: int, az: int, bx: int, bz: int) -> int:
    """Real sign s with ``i * A * B = s * (A xor B)`` for anticommuting A, B."""
    ya, xa, za = ax & az, ax & ~az, az & ~ax
    yb, xb, zb = bx & bz, bx & ~bz, bz & ~bx
    plus = (za & xb) | (xa & yb) | (ya & zb)
    minus = (xa & zb) | (ya & xb) | (za & yb)
    return 1 if (plus.bit_count() - minus.bit_count() + 1) % 4 == 0 else -1


def _push_clifford(pending: list[PauliRotation], c: PauliRotation) -> PauliProduct | None:
    """Append a travelling Clifford, merging with an equal-axis one it can reach.

    Returns the Pauli produced by a pi/2 merge (to be folded into the frame).
    """
    for j in range(len(pending) - 1, -1, -1):
        p = pending[j]
        if p.pauli == c.pauli:
            del pending[j]
            if p.eighths + c.eighths == 0:
                return None
            return c.pauli
        if anticommutes(p.pauli, c.pauli):
            break
    pending.append(c)
    return None


def prune(circuit: PbcCircuit, max_weight: float | None = None) -> PbcCircuit:
    """Commute Cliffords to the end, absorbing them into measurements.

    A Clifford passes an anticommuting non-Clifford rotation or measurement only
    if the rewritten operator has weight <= ``max_weight``; otherwise it stays in
    place. Cliffords pass each other only when they commute. Cliffords left at
    the end that act only on measured qubits are dropped, as is the Pauli frame
    on measured qubits.
    """
    W = math.inf if max_weight is None else max_weight
    if W < 1:
        raise ValueError("max_weight must be >= 1")
    out: list[PbcOp] = []
    pending: list[PauliRotation] = []
    frame = IDENTITY
    for op in circuit.ops:
        if anticommutes(frame, op.pauli):
            op = op.negated()
        if op.is_clifford:
            merged = _push_clifford(pending, op)
            if merged is not None:
                frame = pauli_mul(frame, merged)[1]
            continue
        # inner loop on raw bitmasks: this is the hot path of the whole pipeline
        cx, cz, flip = op.pauli.x, op.pauli.z, 1
        stuck: list[PauliRotation] = []
        passed: list[PauliRotation] = []
        for c in reversed(pending):
            px, pz = c.pauli.x, c.pauli.z
            if stuck and any(anticommutes(c.pauli, s.pauli) for s in stuck):
                stuck.append(c)
            elif not ((px & cz) ^ (pz & cx)).bit_count() & 1:
                passed.append(c)
            elif ((px ^ cx) | (pz ^ cz)).bit_count() <= W:
                # same rewrite as commute_past, sign tracked as +-1
                flip *= c.sign * _i_product_sign(px, pz, cx, cz)
                cx, cz = px ^ cx, pz ^ cz
                passed.append(c)
            else:
                stuck.append(c)
        cur = op if (cx, cz, flip) == (op.pauli.x, op.pauli.z, 1) else op.with_pauli(PauliProduct(cx, cz), flip)
        out.extend(reversed(stuck))
        out.append(cur)
        pending = passed[::-1]

    measured = circuit.measured_mask
    kept: list[PauliRotation] = []
    for c in reversed(pending):
        if c.pauli.mask & ~measured == 0 and not any(anticommutes(c.pauli, k.pauli) for k in kept):
            continue
        kept.append(c)
    out.extend(reversed(kept))
    frame = pauli_mul(frame, circuit.frame)[1].restrict(~measured)
    return PbcCircuit(circuit.width, tuple(out), frame, circuit.measured)


def transpile(circuit: LogicalCircuit, max_weight: float | None = None) -> PbcCircuit:
    return prune(lower(circuit), max_weight)


@dataclass(frozen=True)
class PbcSummary:
    non_clifford: int
    residual_clifford: int
    measurements: int
    max_weight: int
    max_non_clifford_weight: int
    mean_non_clifford_weight: float


def summarize(circuit: PbcCircuit) -> PbcSummary:
    nc = [op.pauli.weight for op in circuit.ops if isinstance(op, PauliRotation) and not op.is_clifford]
    cl = sum(1 for op in circuit.ops if isinstance(op, PauliRotation) and op.is_clifford)
    meas = sum(1 for op in circuit.ops if isinstance(op, PauliMeasurement))
    return PbcSummary(
        non_clifford=len(nc),
        residual_clifford=cl,
        measurements=meas,
        max_weight=max((op.pauli.weight for op in circuit.ops), default=0),
        max_non_clifford_weight=max(nc, default=0),
        mean_non_clifford_weight=sum(nc) / len(nc) if nc else 0.0,
    )


# --------------------------------------------------------------------------
# Text format: one op per line, ``ROT -pi/8 Y0 X1`` / ``MEAS + Z0 Z3``.

_ANGLE_TEXT = {1: "pi/8", -1: "-pi/8", 2: "pi/4", -2: "-pi/4"}
_TEXT_ANGLE = {v: k for k, v in _ANGLE_TEXT.items()}


def _angle_text(eighths: int) -> str:
    return _ANGLE_TEXT[eighths]


def dumps_pbc(circuit: PbcCircuit) -> str:
    lines = [f"WIDTH {circuit.width}"]
    if circuit.measured:
        lines.append("MEASURED " + " ".join(map(str, sorted(circuit.measured))))
    lines.extend(str(op) for op in circuit.ops)
    if circuit.frame:
        lines.append(f"FRAME {circuit.frame}")
    return "\n".join(lines) + "\n"


def loads_pbc(text: str) -> PbcCircuit:
    width = None
    measured: Iterable[int] = ()
    frame = IDENTITY
    ops: list[PbcOp] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        try:
            if head == "WIDTH":
                width = int(rest)
            elif head == "MEASURED":
                measured = [int(t) for t in rest.split()]
            elif head == "FRAME":
                frame = PauliProduct.parse(rest)
            elif head == "ROT":
                angle, _, paulis = rest.partition(" ")
                ops.append(PauliRotation(PauliProduct.parse(paulis), _TEXT_ANGLE[angle]))
            elif head == "MEAS":
                sign, _, paulis = rest.partition(" ")
                if sign not in "+-" or len(sign) != 1:
                    raise ValueError(f"bad sign {sign!r}")
                ops.append(PauliMeasurement(PauliProduct.parse(paulis), 1 if sign == "+" else -1))
            else:
                raise ValueError(f"unknown directive {head!r}")
        except (KeyError, ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if width is None:
        width = max((op.pauli.mask.bit_length() for op in ops), default=0)
    return PbcCircuit(width, tuple(ops), frame, frozenset(measured))
