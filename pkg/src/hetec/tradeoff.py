"""Heterogeneous vs all-surface comparison at matched logical error rate."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Union

from .circuit_ir import LogicalCircuit
from .cost_model import (
    DEFAULT_TABLE,
    ArchitectureConfig,
    CostTable,
    ErrorBreakdown,
    estimate_circuit,
    homogeneous_qubits,
    instruction_costs,
    physical_qubits,
)
from .pbc import PbcCircuit, transpile
from .scheduler import Schedule, schedule

CircuitLike = Union[LogicalCircuit, PbcCircuit]

# relative slack when comparing an achieved error against a target; the
# closed-form surface errors carry ~1 ulp of rounding
TARGET_RTOL = 1e-12
MAX_DISTANCE = 999


@dataclass(frozen=True)
class RunResult:
    cycles: int
    error: float
    qubits: int
    io_count: int
    breakdown: ErrorBreakdown
    schedule: Schedule

    def to_dict(self) -> dict:
        return {
            "cycles": self.cycles,
            "error": self.error,
            "qubits": self.qubits,
            "io_count": self.io_count,
            "breakdown": self.breakdown.as_dict(),
        }


def _as_pbc(circuit: CircuitLike, max_weight: int | None) -> PbcCircuit:
    if isinstance(circuit, PbcCircuit):
        return circuit
    return transpile(circuit, max_weight)


def _homogeneous_arch(n: int, d: int, p: float, base: ArchitectureConfig | None) -> ArchitectureConfig:
    base = base or ArchitectureConfig()
    return base.replace(surface_tiles=max(n, 1), gross_blocks=0, distance=d, p=p)


def heterogeneous_run(
    circuit: CircuitLike,
    arch: ArchitectureConfig,
    seed: int = 0,
    max_weight: int | None = None,
    table: CostTable | None = None,
) -> RunResult:
    """Prune at W = max_weight (default: S), schedule on ``arch`` and estimate."""
    pbc = _as_pbc(circuit, max_weight if max_weight is not None else arch.surface_tiles)
    costs = instruction_costs(arch, table)
    sched = schedule(pbc, arch, seed, costs)
    est = estimate_circuit(sched, arch.estimator_mode)
    if arch.gross_blocks == 0:
        qubits = homogeneous_qubits(pbc.width, arch.distance, arch)
    else:
        qubits = physical_qubits(arch, table or DEFAULT_TABLE)
    return RunResult(sched.total_cycles, est.total, qubits, sched.io_count, est, sched)


def homogeneous_run(
    circuit: CircuitLike,
    n: int,
    d: int,
    p: float,
    seed: int = 0,
    base: ArchitectureConfig | None = None,
    table: CostTable | None = None,
) -> RunResult:
    """All-surface run: n tiles, no memory, no weight limit."""
    pbc = _as_pbc(circuit, None)
    arch = _homogeneous_arch(n, d, p, base)
    return heterogeneous_run(pbc, arch, seed, None, table)


def min_distance_for_target(
    circuit: CircuitLike,
    p: float,
    e_target: float,
    n: int | None = None,
    seed: int = 0,
    base: ArchitectureConfig | None = None,
    table: CostTable | None = None,
) -> int:
    """Smallest odd d >= 3 whose all-surface error is at most ``e_target``."""
    if not 0 < e_target:
        raise ValueError(f"target error must be positive, got {e_target}")
    tbl = table or DEFAULT_TABLE
    if p >= tbl.surface_threshold:
        raise ValueError(f"p={p} is not below threshold {tbl.surface_threshold}; no distance suffices")
    pbc = _as_pbc(circuit, None)
    n = pbc.width if n is None else n
    for d in range(3, MAX_DISTANCE + 1, 2):
        err = homogeneous_run(pbc, n, d, p, seed, base, table).error
        if err <= e_target * (1 + TARGET_RTOL):
            return d
    raise ValueError(f"no distance up to {MAX_DISTANCE} reaches {e_target}")


@dataclass(frozen=True)
class TradeoffReport:
    e_target: float
    d_het: int
    d_surf: int
    q_het: int
    q_homog: int
    t_het: int
    t_homog: int
    e_homog: float
    r_qub_improvement: float  # q_homog / q_het; > 1 favours the heterogeneous system
    r_qub: float  # q_het / q_homog
    r_time: float  # t_homog / t_het

    def to_dict(self) -> dict:
        return asdict(self)


def ratios(q_het: float, q_homog: float, t_het: float, t_homog: float) -> tuple[float, float, float]:
    """(qubit improvement q_homog/q_het, raw q_het/q_homog, time ratio t_homog/t_het)."""
    if min(q_het, q_homog, t_het, t_homog) <= 0:
        raise ValueError("qubit and cycle counts must be positive")
    return q_homog / q_het, q_het / q_homog, t_homog / t_het


def compare(
    circuit: CircuitLike,
    het_arch: ArchitectureConfig,
    p: float | None = None,
    seed: int = 0,
    max_weight: int | None = None,
    table: CostTable | None = None,
) -> TradeoffReport:
    if p is not None:
        het_arch = het_arch.replace(p=p)
    pbc_homog = _as_pbc(circuit, None)
    het = heterogeneous_run(circuit, het_arch, seed, max_weight, table)
    e_target = het.error
    d_surf = min_distance_for_target(pbc_homog, het_arch.p, e_target, None, seed, het_arch, table)
    hom = homogeneous_run(pbc_homog, pbc_homog.width, d_surf, het_arch.p, seed, het_arch, table)
    r_imp, r_raw, r_time = ratios(het.qubits, hom.qubits, het.cycles, hom.cycles)
    return TradeoffReport(
        e_target=e_target,
        d_het=het_arch.distance,
        d_surf=d_surf,
        q_het=het.qubits,
        q_homog=hom.qubits,
        t_het=het.cycles,
        t_homog=hom.cycles,
        e_homog=hom.error,
        r_qub_improvement=r_imp,
        r_qub=r_raw,
        r_time=r_time,
    )


SWEEP_FIELDS = ("S", "p", "error_io", "error_clifford", "error_nonclifford", "error_total", "cycles", "qubits", "io_count")


def sweep_row(run: RunResult, arch: ArchitectureConfig) -> dict:
    b = run.breakdown
    return {
        "S": arch.surface_tiles,
        "p": arch.p,
        "error_io": b.io,
        "error_clifford": b.clifford,
        "error_nonclifford": b.non_clifford,
        "error_total": b.total,
        "cycles": run.cycles,
        "qubits": run.qubits,
        "io_count": run.io_count,
    }
