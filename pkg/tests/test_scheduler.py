import random
from functools import lru_cache

import pytest
from hypothesis import given, settings, strategies as st

from hetec.circuit_ir import Gate, GateKind, LogicalCircuit, gen_benchmark
from hetec.cost_model import ArchitectureConfig, block_count, estimate_circuit
from hetec.pbc import IDENTITY, PauliMeasurement, PauliProduct, PauliRotation, PbcCircuit, transpile
from hetec.scheduler import (
    CapacityExceededError,
    EventKind,
    GrossSlot,
    SurfaceTile,
    event_digest,
    initial_placement,
    schedule,
    schedule_stats,
    schedule_to_csv,
    schedule_to_json,
)
from schedule_checks import (
    coverage_ok,
    dependency_violations,
    residency_violations,
    resource_violations,
    total_cycles_ok,
    weight_violations,
)
from test_circuit_ir import random_circuit

P = PauliProduct.parse


def arch_for(n, S, **kw):
    return ArchitectureConfig(surface_tiles=S, gross_blocks=block_count(n, S), **kw)


def check_all(pbc, arch, sched):
    assert coverage_ok(pbc, sched)
    assert dependency_violations(pbc, sched) == []
    assert resource_violations(sched) == []
    assert residency_violations(sched) == []
    assert weight_violations(sched, arch.surface_tiles) == []
    assert total_cycles_ok(sched)


@lru_cache(maxsize=None)
def small_bench(kind, n, W):
    return transpile(gen_benchmark(kind, n, 4), W)


# -- placement


def test_all_on_surface_when_room():
    pbc = small_bench("ising", 4, 4)
    pl = initial_placement(pbc, ArchitectureConfig(surface_tiles=4))
    assert sorted(loc.index for loc in pl.values()) == [0, 1, 2, 3]


def test_latest_first_use_goes_to_memory():
    ops = (PauliRotation(P("Z0"), 1), PauliRotation(P("Z1"), 1), PauliRotation(P("Z2"), 1))
    pbc = PbcCircuit(3, ops, IDENTITY, frozenset())
    pl = initial_placement(pbc, ArchitectureConfig(surface_tiles=2, gross_blocks=1))
    assert isinstance(pl[2], GrossSlot)
    assert isinstance(pl[0], SurfaceTile) and isinstance(pl[1], SurfaceTile)


def test_placement_fills_blocks():
    pbc = small_bench("adder", 18, 2)
    pl = initial_placement(pbc, arch_for(18, 2))
    on_surface = [q for q, loc in pl.items() if isinstance(loc, SurfaceTile)]
    per_block = {}
    for loc in pl.values():
        if isinstance(loc, GrossSlot):
            per_block[loc.block] = per_block.get(loc.block, 0) + 1
    assert len(on_surface) == 2
    assert sum(per_block.values()) == 16 and max(per_block.values()) <= 11
    assert len(set(pl.values())) == 18


def test_capacity_exceeded():
    pbc = small_bench("adder", 18, 2)
    with pytest.raises(CapacityExceededError):
        initial_placement(pbc, ArchitectureConfig(surface_tiles=2, gross_blocks=1))


# -- timing


def test_single_t_and_measure():
    pbc = PbcCircuit(1, (PauliRotation(P("Z0"), 1), PauliMeasurement(P("Z0"))), IDENTITY, frozenset({0}))
    s = schedule(pbc, ArchitectureConfig(surface_tiles=1))
    assert [e.kind for e in s.events] == [EventKind.SURFACE_NON_CLIFFORD, EventKind.SURFACE_MEASURE]
    assert s.total_cycles == 26 + 13
    assert s.io_count == 0


def test_one_fetch_for_remote_operand():
    ops = (PauliRotation(P("Z0"), 1), PauliRotation(P("Z1"), 1), PauliRotation(P("Z0 X2"), 1))
    pbc = PbcCircuit(3, ops, IDENTITY, frozenset())
    arch = ArchitectureConfig(surface_tiles=2, gross_blocks=1)
    s = schedule(pbc, arch)
    kinds = [e.kind for e in s.events]
    assert kinds.count(EventKind.FETCH) == 1
    fetch = next(e for e in s.events if e.kind is EventKind.FETCH)
    last = s.op_events()[2]
    assert fetch.qubits == (2,) and fetch.end <= last.start
    check_all(pbc, arch, s)


def test_in_memory_clifford():
    # qubits 2 and 3 start in memory; their Clifford runs there at 14 cycles
    ops = (PauliRotation(P("Z0"), 1), PauliRotation(P("Z1"), 1), PauliRotation(P("Z2 Z3"), 2))
    pbc = PbcCircuit(4, ops, IDENTITY, frozenset())
    arch = ArchitectureConfig(surface_tiles=2, gross_blocks=1)
    s = schedule(pbc, arch)
    ev = s.op_events()[2]
    assert ev.kind is EventKind.IN_MEMORY_CLIFFORD
    assert ev.duration == 14 and ev.error == 4e-5
    assert s.io_count == 0


def test_memory_measurement_uses_gross_row():
    ops = (PauliRotation(P("Z0"), 1), PauliMeasurement(P("Z1")))
    pbc = PbcCircuit(2, ops, IDENTITY, frozenset({1}))
    arch = ArchitectureConfig(surface_tiles=1, gross_blocks=1)
    s = schedule(pbc, arch)
    ev = s.op_events()[1]
    assert ev.kind is EventKind.GROSS_MEASURE and ev.duration == 7


def test_homogeneous_has_no_io():
    pbc = small_bench("qft", 5, None)
    arch = ArchitectureConfig(surface_tiles=5)
    s = schedule(pbc, arch)
    est = estimate_circuit(s)
    assert s.io_count == 0
    assert est.io == 0
    assert all(e.kind not in (EventKind.IN_MEMORY_CLIFFORD, EventKind.GROSS_MEASURE) for e in s.events)
    check_all(pbc, arch, s)


def test_rejects_overweight():
    pbc = small_bench("qft", 5, None)
    with pytest.raises(ValueError, match="weight"):
        schedule(pbc, arch_for(5, 2))


def test_parallel_tiles_overlap():
    ops = (PauliRotation(P("Z0"), 1), PauliRotation(P("Z1"), 1))
    s = schedule(PbcCircuit(2, ops, IDENTITY, frozenset()), ArchitectureConfig(surface_tiles=2))
    assert [e.start for e in s.events] == [0, 0]
    assert s.total_cycles == 26


# -- invariants


@pytest.mark.parametrize("kind,n", [("adder", 8), ("qft", 6), ("ising", 7)])
@pytest.mark.parametrize("S", [1, 2, 3, 5])
def test_invariants_small_benchmarks(kind, n, S):
    pbc = small_bench(kind, n, S)
    arch = arch_for(n, S)
    check_all(pbc, arch, schedule(pbc, arch, seed=S))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.sampled_from(["bfs", "fixed"]), st.booleans())
def test_invariants_random(seed, S, access, sync):
    rng = random.Random(seed)
    n = rng.randint(2, 14)
    gates = random_circuit(rng, n, rng.randint(1, 40)).gates
    c = LogicalCircuit(n, gates + tuple(Gate(GateKind.MEASURE_Z, (q,)) for q in range(n)))
    pbc = transpile(c, S)
    arch = arch_for(n, S, access_model=access, sync_mode=sync)
    check_all(pbc, arch, schedule(pbc, arch, seed=seed))


def test_full_memory_exchange():
    # every slot taken: swaps must go through the same block
    n = 2 + 11
    rng = random.Random(5)
    c = LogicalCircuit(n, random_circuit(rng, n, 60).gates)
    pbc = transpile(c, 2)
    arch = ArchitectureConfig(surface_tiles=2, gross_blocks=1)
    s = schedule(pbc, arch, seed=1)
    assert s.io_count > 0
    check_all(pbc, arch, s)


def test_determinism():
    pbc = small_bench("adder", 10, 2)
    arch = arch_for(10, 2)
    a, b = schedule(pbc, arch, seed=9), schedule(pbc, arch, seed=9)
    assert event_digest(a) == event_digest(b)
    assert schedule_to_csv(a) == schedule_to_csv(b)


def test_idle_errors_optional():
    pbc = small_bench("ising", 4, 2)
    quiet = schedule(pbc, arch_for(4, 2))
    noisy = schedule(pbc, arch_for(4, 2, idle_errors=True))
    assert quiet.idle_error == 0
    assert noisy.idle_error > 0
    assert estimate_circuit(noisy).total > estimate_circuit(quiet).total


# -- stats and export


def test_stats_counts():
    pbc = small_bench("adder", 8, 2)
    s = schedule(pbc, arch_for(8, 2))
    st_ = schedule_stats(s)
    assert sum(st_.gate_distribution.values()) == st_.events == len(s.events)
    assert st_.io_count == s.io_count > 0
    assert st_.cycles == s.total_cycles


def test_empty_schedule_stats():
    s = schedule(PbcCircuit(1, (), IDENTITY, frozenset()), ArchitectureConfig(surface_tiles=1))
    st_ = schedule_stats(s)
    assert st_.cycles == st_.io_count == st_.events == 0
    assert all(v == 0 for v in st_.gate_distribution.values())
    assert all(v == 0 for v in st_.errors.values())


def test_exports():
    import csv
    import io
    import json

    s = schedule(small_bench("ising", 4, 2), arch_for(4, 2))
    data = json.loads(schedule_to_json(s))
    assert data["total_cycles"] == s.total_cycles
    assert len(data["events"]) == len(s.events)
    assert {"kind", "start", "duration", "qubits"} <= set(data["events"][0])
    rows = list(csv.DictReader(io.StringIO(schedule_to_csv(s))))
    assert len(rows) == len(s.events)
    assert int(rows[-1]["start"]) == s.events[-1].start


@pytest.mark.parametrize("cap", [3, 6, 11])
@pytest.mark.parametrize("seed", range(8))
def test_single_tile_full_blocks(seed, cap):
    # one tile and tight blocks: cross-block Cliffords need exchanges
    rng = random.Random(seed)
    n = 1 + 2 * cap
    c = LogicalCircuit(n, random_circuit(rng, n, 50).gates)
    pbc = transpile(c, 1)
    arch = ArchitectureConfig(surface_tiles=1, gross_blocks=2, block_capacity=cap)
    check_all(pbc, arch, schedule(pbc, arch, seed=seed))
