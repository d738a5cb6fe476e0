"""Instruction costs for gross-code memory and surface-code compute, physical
qubit accounting, and the summed-error circuit fidelity estimator.

All times are in logical clock cycles (one syndrome-measurement round).
"""
from __future__ import annotations

import copy
import json
import math
import os
import warnings
from dataclasses import asdict, dataclass, replace
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Any, Mapping

COST_TABLE_ENV = "HETEC_COST_TABLE"


class GrossOp(str, Enum):
    CLIFFORD_ROTATION = "CliffordRotation"
    AUTOMORPHISM = "Automorphism"
    MEASUREMENT = "Measurement"
    JOINT_XX = "JointXX"


class ExtrapolationWarning(UserWarning):
    pass


def _deep_merge(base: dict, override: Mapping) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


@lru_cache(maxsize=1)
def _default_table_dict() -> dict:
    text = resources.files("hetec").joinpath("data/cost_table.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class CostTable:
    anchor_p: tuple[float, ...]
    gross_error: dict[str, tuple[float, ...]]
    gross_cycles: dict[str, int]
    surface_prefactor: float
    surface_threshold: float
    clifford_cycles_per_distance: int
    non_clifford_cycles_per_distance: int
    bus_variants: dict[str, tuple[int, int]]
    idle_error_per_cycle: float

    @classmethod
    def from_dict(cls, raw: Mapping) -> "CostTable":
        g = raw["gross"]
        ops = g["operations"]
        table = cls(
            anchor_p=tuple(float(p) for p in g["anchor_p"]),
            gross_error={k: tuple(float(e) for e in v["error"]) for k, v in ops.items()},
            gross_cycles={k: int(v["cycles"]) for k, v in ops.items()},
            surface_prefactor=float(raw["surface"]["prefactor"]),
            surface_threshold=float(raw["surface"]["threshold"]),
            clifford_cycles_per_distance=int(raw["surface"]["clifford_cycles_per_distance"]),
            non_clifford_cycles_per_distance=int(raw["surface"]["non_clifford_cycles_per_distance"]),
            bus_variants={
                k: (int(v["ancilla_qubits"]), int(v["measurement_rounds"]))
                for k, v in raw["bus_variants"].items()
            },
            idle_error_per_cycle=float(raw.get("idle_error_per_cycle", 0.0)),
        )
        table.validate()
        return table

    def validate(self) -> None:
        if list(self.anchor_p) != sorted(self.anchor_p, reverse=True):
            raise ValueError("anchor_p must be listed in decreasing order")
        for op in GrossOp:
            errs = self.gross_error.get(op.value)
            if errs is None or len(errs) != len(self.anchor_p):
                raise ValueError(f"cost table lacks {op.value} errors at every anchor")
            if not all(0 < e < 1 for e in errs):
                raise ValueError(f"{op.value} error values must lie in (0, 1)")
            if any(b >= a for a, b in zip(errs, errs[1:])):
                raise ValueError(f"{op.value} errors must decrease with decreasing p")


def load_cost_table(path: str | os.PathLike | None = None) -> CostTable:
    """Default table, overridden by ``path`` or ``$HETEC_COST_TABLE`` when given."""
    raw = _default_table_dict()
    path = path or os.environ.get(COST_TABLE_ENV)
    if path:
        with open(path) as fh:
            raw = _deep_merge(raw, json.load(fh))
    return CostTable.from_dict(raw)


DEFAULT_TABLE = CostTable.from_dict(_default_table_dict())


# --------------------------------------------------------------------------
# Error formulas


def surface_clifford_error(p: float, d: int, table: CostTable = DEFAULT_TABLE) -> float:
    if not 0 < p < 1:
        raise ValueError(f"physical error rate must lie in (0, 1), got {p}")
    if d < 1:
        raise ValueError(f"distance must be >= 1, got {d}")
    return table.surface_prefactor * (p / table.surface_threshold) ** ((d + 1) / 2)


def surface_nonclifford_error(
    p: float, d: int, w: int, doubled: bool = False, table: CostTable = DEFAULT_TABLE
) -> float:
    if w < 1:
        raise ValueError(f"Pauli weight must be >= 1, got {w}")
    e = w * surface_clifford_error(p, d, table)
    return 2 * e if doubled else e


def gross_op_error(kind: GrossOp | str, p: float, table: CostTable = DEFAULT_TABLE) -> float:
    """Table value at anchor p; log-log linear interpolation between anchors."""
    kind = GrossOp(kind)
    ps = table.anchor_p
    errs = table.gross_error[kind.value]
    if not p > 0:
        raise ValueError(f"physical error rate must be positive, got {p}")
    if p > ps[0]:
        raise ValueError(f"p={p} is above the highest tabulated rate {ps[0]}; extrapolation rejected")
    for pa, ea in zip(ps, errs):
        if p == pa:
            return ea
    if p < ps[-1]:
        warnings.warn(
            f"p={p} is below the lowest tabulated rate {ps[-1]}; extrapolating {kind.value} log-log",
            ExtrapolationWarning,
            stacklevel=2,
        )
        hi, lo = len(ps) - 2, len(ps) - 1
    else:
        lo = next(i for i, pa in enumerate(ps) if pa < p)
        hi = lo - 1
    x0, x1 = math.log(ps[hi]), math.log(ps[lo])
    y0, y1 = math.log(errs[hi]), math.log(errs[lo])
    t = (math.log(p) - x0) / (x1 - x0)
    return math.exp(y0 + t * (y1 - y0))


# --------------------------------------------------------------------------
# Architecture


@dataclass(frozen=True)
class ArchitectureConfig:
    """Heterogeneous architecture: S surface tiles of distance d plus B gross blocks."""

    surface_tiles: int = 2
    distance: int = 13
    gross_blocks: int = 0
    block_capacity: int = 11
    bus_variant: str = "mono"
    p: float = 1e-3
    qubits_per_block: int = 288
    tile_qubits: float = 191.0
    routing_factor: float = 1.5
    homogeneous_qubits_per_logical: float = 463.0
    homogeneous_accounting: str = "constant"  # or "tile": n * routing_factor * (2d^2 - 1)
    estimator_mode: str = "sum"  # or "product"
    nonclifford_doubled: bool = False
    in_memory_native_rotations: float = 1.0
    idle_errors: bool = False
    # gross memory model
    group_order: tuple[int, int] = (6, 2)
    generators: tuple[tuple[int, int], ...] = ((1, 0), (2, 0), (4, 0), (5, 0), (1, 1))
    sync_mode: bool = True
    access_model: str = "bfs"  # or "fixed"
    fixed_access_steps: tuple[int, int] = (2, 2)
    sacrificed_label: tuple[int, int] | None = None

    def __post_init__(self):
        if self.surface_tiles < 1:
            raise ValueError("need at least one surface tile")
        if self.distance < 3 or self.distance % 2 == 0:
            raise ValueError(f"surface distance must be odd and >= 3, got {self.distance}")
        if self.gross_blocks < 0:
            raise ValueError("gross block count must be >= 0")
        if not 0 < self.p < 1:
            raise ValueError("p must lie in (0, 1)")
        if self.estimator_mode not in ("sum", "product"):
            raise ValueError(f"unknown estimator mode {self.estimator_mode!r}")
        if self.access_model not in ("bfs", "fixed"):
            raise ValueError(f"unknown access model {self.access_model!r}")
        if self.homogeneous_accounting not in ("constant", "tile"):
            raise ValueError(f"unknown homogeneous accounting {self.homogeneous_accounting!r}")
        object.__setattr__(self, "group_order", tuple(self.group_order))
        object.__setattr__(self, "generators", tuple(tuple(g) for g in self.generators))
        object.__setattr__(self, "fixed_access_steps", tuple(self.fixed_access_steps))
        if self.sacrificed_label is not None:
            object.__setattr__(self, "sacrificed_label", tuple(self.sacrificed_label))

    def replace(self, **changes) -> "ArchitectureConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ArchitectureConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown architecture fields: {sorted(unknown)}")
        return cls(**raw)


def bus_qubits(arch: ArchitectureConfig, table: CostTable = DEFAULT_TABLE) -> int:
    try:
        return table.bus_variants[arch.bus_variant][0]
    except KeyError:
        raise ValueError(f"unknown bus variant {arch.bus_variant!r}") from None


def block_count(n_qubits: int, surface_tiles: int, capacity: int = 11) -> int:
    if n_qubits <= 0:
        raise ValueError("need at least one qubit")
    return math.ceil(max(0, n_qubits - surface_tiles) / capacity)


def surface_portion(arch: ArchitectureConfig) -> int:
    return math.ceil(arch.surface_tiles * arch.tile_qubits * arch.routing_factor - 1e-9)


def physical_qubits(arch: ArchitectureConfig, table: CostTable = DEFAULT_TABLE) -> int:
    """Gross blocks + their buses + routed surface tiles; magic-state factories excluded."""
    return arch.gross_blocks * (arch.qubits_per_block + bus_qubits(arch, table)) + surface_portion(arch)


def homogeneous_qubits(n_qubits: int, distance: int, arch: ArchitectureConfig) -> int:
    if arch.homogeneous_accounting == "constant":
        return round(n_qubits * arch.homogeneous_qubits_per_logical)
    return math.ceil(n_qubits * arch.routing_factor * (2 * distance**2 - 1))


@dataclass(frozen=True)
class InstructionCosts:
    """Per-instruction (cycles, error) at one architecture point."""

    d: int
    p: float
    surface_clifford_cycles: int
    surface_non_clifford_cycles: int
    surface_clifford_error: float
    nonclifford_doubled: bool
    auto_cycles: int
    xx_cycles: int
    meas_cycles: int
    in_memory_clifford_cycles: int
    auto_error: float
    xx_error: float
    meas_error: float
    in_memory_clifford_error: float
    idle_error_per_cycle: float

    def surface_nonclifford_error(self, w: int) -> float:
        e = w * self.surface_clifford_error
        return 2 * e if self.nonclifford_doubled else e


def instruction_costs(arch: ArchitectureConfig, table: CostTable | None = None) -> InstructionCosts:
    table = table or load_cost_table()
    try:
        _, rounds = table.bus_variants[arch.bus_variant]
    except KeyError:
        raise ValueError(f"unknown bus variant {arch.bus_variant!r}") from None
    # bus variants rescale measurement-based instructions relative to the mono-layer rounds
    base_rounds = table.gross_cycles[GrossOp.MEASUREMENT.value]
    scale = rounds / base_rounds
    mult = arch.in_memory_native_rotations
    d, p = arch.distance, arch.p
    return InstructionCosts(
        d=d,
        p=p,
        surface_clifford_cycles=table.clifford_cycles_per_distance * d,
        surface_non_clifford_cycles=table.non_clifford_cycles_per_distance * d,
        surface_clifford_error=surface_clifford_error(p, d, table),
        nonclifford_doubled=arch.nonclifford_doubled,
        auto_cycles=table.gross_cycles[GrossOp.AUTOMORPHISM.value],
        xx_cycles=round(table.gross_cycles[GrossOp.JOINT_XX.value] * scale),
        meas_cycles=round(table.gross_cycles[GrossOp.MEASUREMENT.value] * scale),
        in_memory_clifford_cycles=round(table.gross_cycles[GrossOp.CLIFFORD_ROTATION.value] * scale * mult),
        auto_error=gross_op_error(GrossOp.AUTOMORPHISM, p, table),
        xx_error=gross_op_error(GrossOp.JOINT_XX, p, table),
        meas_error=gross_op_error(GrossOp.MEASUREMENT, p, table),
        in_memory_clifford_error=mult * gross_op_error(GrossOp.CLIFFORD_ROTATION, p, table),
        idle_error_per_cycle=table.idle_error_per_cycle if arch.idle_errors else 0.0,
    )


# --------------------------------------------------------------------------
# Estimator

IO, CLIFFORD, NON_CLIFFORD = "io", "clifford", "non_clifford"

EVENT_CATEGORY = {
    "Fetch": IO,
    "Store": IO,
    "Automorphism": IO,
    "GrossMeasure": IO,
    "JointXX": IO,
    "SurfaceClifford": CLIFFORD,
    "InMemoryClifford": CLIFFORD,
    "SurfaceMeasure": CLIFFORD,
    "SurfaceNonClifford": NON_CLIFFORD,
}


def event_category(kind) -> str:
    return EVENT_CATEGORY[getattr(kind, "value", kind)]


@dataclass(frozen=True)
class ErrorBreakdown:
    io: float = 0.0
    clifford: float = 0.0
    non_clifford: float = 0.0
    idle: float = 0.0
    total: float = 0.0
    cycles: int = 0
    mode: str = "sum"

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


def estimate_circuit(schedule, mode: str = "sum") -> ErrorBreakdown:
    """Sum per-event errors into IO / Clifford / non-Clifford categories.

    ``schedule`` needs ``events`` (each with ``kind`` and ``error``),
    ``total_cycles`` and optionally ``idle_error``.
    """
    sums = {IO: 0.0, CLIFFORD: 0.0, NON_CLIFFORD: 0.0}
    log_survive = 0.0
    for ev in schedule.events:
        sums[event_category(ev.kind)] += ev.error
        log_survive += math.log1p(-ev.error)
    idle = float(getattr(schedule, "idle_error", 0.0))
    if mode == "sum":
        total = sums[IO] + sums[CLIFFORD] + sums[NON_CLIFFORD] + idle
    elif mode == "product":
        total = -math.expm1(log_survive + math.log1p(-idle))
    else:
        raise ValueError(f"unknown estimator mode {mode!r}")
    return ErrorBreakdown(sums[IO], sums[CLIFFORD], sums[NON_CLIFFORD], idle, total, schedule.total_cycles, mode)
