"""Greedy scheduling of pruned PBC circuits onto surface tiles + gross memory.

Every frontier op whose operands are all on surface tiles runs there; Clifford
rotations and measurements whose operands share one gross block run in memory.
When nothing can run, one fetch / store / swap is inserted, chosen by how many
frontier ops it unblocks; ties go to the eviction whose victim is needed
latest, then to a seed-determined order.
"""
from __future__ import annotations

import csv
import hashlib
import heapq
import io
import json
import random
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

from .circuit_ir import dag_from_supports
from .cost_model import (
    ArchitectureConfig,
    CLIFFORD,
    InstructionCosts,
    IO,
    NON_CLIFFORD,
    event_category,
    instruction_costs,
)
from .memory_model import (
    GeneratorSet,
    GrossBlock,
    MonomialLabel,
    MoveRecord,
    fetch,
    generator_set_for,
    make_block,
    store,
)
from .pbc import PauliMeasurement, PbcCircuit


class SchedulerError(RuntimeError):
    pass


class CapacityExceededError(SchedulerError):
    pass


class DeadlockError(SchedulerError):
    pass


class EventKind(str, Enum):
    SURFACE_CLIFFORD = "SurfaceClifford"
    SURFACE_NON_CLIFFORD = "SurfaceNonClifford"
    SURFACE_MEASURE = "SurfaceMeasure"
    IN_MEMORY_CLIFFORD = "InMemoryClifford"
    AUTOMORPHISM = "Automorphism"
    FETCH = "Fetch"
    STORE = "Store"
    GROSS_MEASURE = "GrossMeasure"


@dataclass(frozen=True)
class SurfaceTile:
    index: int


@dataclass(frozen=True)
class GrossSlot:
    block: int
    label: MonomialLabel


Location = Union[SurfaceTile, GrossSlot]
Placement = dict[int, Location]


@dataclass(frozen=True)
class ScheduleEvent:
    kind: EventKind
    qubits: tuple[int, ...]
    start: int
    duration: int
    error: float
    op_index: int | None = None
    tiles: tuple[int, ...] = ()
    block: int | None = None
    move: MoveRecord | None = None

    @property
    def end(self) -> int:
        return self.start + self.duration

    @property
    def category(self) -> str:
        return event_category(self.kind)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind.value,
            "start": self.start,
            "duration": self.duration,
            "qubits": list(self.qubits),
            "error": self.error,
            "category": self.category,
            "op_index": self.op_index,
            "tiles": list(self.tiles),
            "block": self.block,
        }
        if self.move is not None:
            out["label"] = str(self.move.label)
            out["x_auto_steps"] = self.move.x_auto_steps
            out["z_auto_steps"] = self.move.z_auto_steps
        return out


@dataclass
class Schedule:
    events: list[ScheduleEvent]
    total_cycles: int
    placement: Placement
    n_ops: int = 0
    idle_error: float = 0.0
    initial_placement: Placement = field(default_factory=dict)

    @property
    def io_count(self) -> int:
        return sum(1 for e in self.events if e.kind in (EventKind.FETCH, EventKind.STORE))

    @property
    def category_errors(self) -> dict[str, float]:
        sums = {IO: 0.0, CLIFFORD: 0.0, NON_CLIFFORD: 0.0}
        for e in self.events:
            sums[e.category] += e.error
        return sums

    def op_events(self) -> dict[int, ScheduleEvent]:
        return {e.op_index: e for e in self.events if e.op_index is not None}


# --------------------------------------------------------------------------
# Placement


def _first_use_order(circuit: PbcCircuit, seed: int) -> list[int]:
    first: dict[int, int] = {}
    for i, op in enumerate(circuit.ops):
        for q in op.pauli.support:
            first.setdefault(q, i)
    rng = random.Random(seed)
    keys = {q: (first.get(q, len(circuit.ops)), rng.random()) for q in range(circuit.width)}
    return sorted(range(circuit.width), key=lambda q: keys[q])


def _slot_order(block: GrossBlock) -> list[MonomialLabel]:
    return sorted(block.occupancy, key=lambda a: (block.distance_to(a), a.j, a.i))


def initial_placement(
    circuit: PbcCircuit, arch: ArchitectureConfig, seed: int = 0, gens: GeneratorSet | None = None
) -> Placement:
    """Earliest-used qubits fill the tiles; the rest fill memory slots nearest the probe first."""
    n, S, B = circuit.width, arch.surface_tiles, arch.gross_blocks
    if n > S + B * arch.block_capacity:
        raise CapacityExceededError(
            f"{n} qubits exceed {S} tiles + {B} blocks x {arch.block_capacity} slots"
        )
    order = _first_use_order(circuit, seed)
    placement: Placement = {}
    for t, q in enumerate(order[:S]):
        placement[q] = SurfaceTile(t)
    rest = order[S:]
    gens = gens or generator_set_for(arch)
    for b in range(B):
        chunk, rest = rest[: arch.block_capacity], rest[arch.block_capacity :]
        slots = _slot_order(make_block(b, arch, gens))
        for q, label in zip(chunk, slots):
            placement[q] = GrossSlot(b, label)
    return placement


# --------------------------------------------------------------------------
# Scheduler state


@dataclass(frozen=True)
class _Move:
    kind: str  # "fetch" | "store" | "swap"
    fetch_qubit: int | None
    store_qubit: int | None
    store_block: int | None = None

    def sort_key(self):
        return (self.kind, self.fetch_qubit if self.fetch_qubit is not None else -1,
                self.store_qubit if self.store_qubit is not None else -1,
                self.store_block if self.store_block is not None else -1)


class _Machine:
    def __init__(self, circuit: PbcCircuit, arch: ArchitectureConfig, costs: InstructionCosts, seed: int):
        self.circuit = circuit
        self.arch = arch
        self.costs = costs
        self.rng = random.Random(seed)
        self.gens = generator_set_for(arch)
        self.fixed = arch.fixed_access_steps if arch.access_model == "fixed" else None
        self.placement = initial_placement(circuit, arch, seed, self.gens)
        self.initial = dict(self.placement)
        self.blocks = [make_block(b, arch, self.gens) for b in range(arch.gross_blocks)]
        self.tile_of: dict[int, int] = {}
        self.resident: list[int | None] = [None] * arch.surface_tiles
        for q, loc in self.placement.items():
            if isinstance(loc, SurfaceTile):
                self.tile_of[q] = loc.index
                self.resident[loc.index] = q
            else:
                self.blocks[loc.block].place(q, loc.label)
        self.qubit_ready = [0] * circuit.width
        self.tile_free = [0] * arch.surface_tiles
        self.block_free = [0] * arch.gross_blocks
        self.events: list[ScheduleEvent] = []
        # per-qubit op chains; pointer = first op not yet executed
        self.uses: list[list[int]] = [[] for _ in range(circuit.width)]
        for i, op in enumerate(circuit.ops):
            for q in op.pauli.support:
                self.uses[q].append(i)
        self.next_ptr = [0] * circuit.width

    def next_use(self, q: int) -> float:
        k = self.next_ptr[q]
        return self.uses[q][k] if k < len(self.uses[q]) else float("inf")

    # -- location helpers
    def block_of(self, q: int) -> int | None:
        loc = self.placement.get(q)
        return loc.block if isinstance(loc, GrossSlot) else None

    def mode(self, i: int, on_surface=None, block_of=None) -> EventKind | None:
        op = self.circuit.ops[i]
        support = op.pauli.support
        on_surface = on_surface or (lambda q: q in self.tile_of)
        block_of = block_of or self.block_of
        is_meas = isinstance(op, PauliMeasurement)
        if all(on_surface(q) for q in support):
            if is_meas:
                return EventKind.SURFACE_MEASURE
            return EventKind.SURFACE_CLIFFORD if op.is_clifford else EventKind.SURFACE_NON_CLIFFORD
        if is_meas or op.is_clifford:
            blocks = {block_of(q) for q in support}
            if len(blocks) == 1 and None not in blocks:
                return EventKind.GROSS_MEASURE if is_meas else EventKind.IN_MEMORY_CLIFFORD
        return None

    # -- execution
    def execute(self, i: int, kind: EventKind) -> None:
        op = self.circuit.ops[i]
        support = op.pauli.support
        c = self.costs
        start = max(self.qubit_ready[q] for q in support)
        tiles: tuple[int, ...] = ()
        block = None
        if kind in (EventKind.SURFACE_CLIFFORD, EventKind.SURFACE_MEASURE, EventKind.SURFACE_NON_CLIFFORD):
            tiles = tuple(self.tile_of[q] for q in support)
            start = max([start] + [self.tile_free[t] for t in tiles])
            if kind is EventKind.SURFACE_NON_CLIFFORD:
                dur, err = c.surface_non_clifford_cycles, c.surface_nonclifford_error(op.pauli.weight)
            else:
                dur, err = c.surface_clifford_cycles, c.surface_clifford_error
            for t in tiles:
                self.tile_free[t] = start + dur
        else:
            block = self.block_of(support[0])
            start = max(start, self.block_free[block])
            if kind is EventKind.IN_MEMORY_CLIFFORD:
                dur, err = c.in_memory_clifford_cycles, c.in_memory_clifford_error
            else:
                dur, err = c.meas_cycles, c.meas_error
            self.block_free[block] = start + dur
        for q in support:
            self.qubit_ready[q] = start + dur
            self.next_ptr[q] += 1
        self.events.append(ScheduleEvent(kind, support, start, dur, err, i, tiles, block))

    def do_fetch(self, q: int, tile: int | None) -> None:
        """Fetch q into ``tile`` (None: into a routing patch, tile assigned later)."""
        b = self.block_of(q)
        blk = self.blocks[b]
        label = self.placement[q].label
        rec = fetch(blk, label, self.costs, fixed_steps=self.fixed)
        start = max(self.block_free[b], self.qubit_ready[q])
        if tile is not None:
            start = max(start, self.tile_free[tile])
        end = start + rec.duration_cycles
        self.block_free[b] = end
        self.qubit_ready[q] = end
        tiles = ()
        if tile is not None:
            self.tile_free[tile] = end
            self.tile_of[q] = tile
            self.resident[tile] = q
            self.placement[q] = SurfaceTile(tile)
            tiles = (tile,)
        self.events.append(
            ScheduleEvent(EventKind.FETCH, (q,), start, rec.duration_cycles, rec.error_contribution,
                          None, tiles, b, rec)
        )

    def nearest_free_label(self, b: int) -> MonomialLabel | None:
        blk = self.blocks[b]
        free = blk.free_labels()
        if not free:
            return None
        return min(free, key=lambda a: (blk.distance_to(a), a.j, a.i))

    def do_store(self, q: int, b: int, label: MonomialLabel | None = None) -> int:
        """Store surface qubit q into block b; returns the freed tile."""
        label = label or self.nearest_free_label(b)
        tile = self.tile_of.pop(q)
        rec = store(self.blocks[b], q, label, self.costs, fixed_steps=self.fixed)
        start = max(self.block_free[b], self.qubit_ready[q], self.tile_free[tile])
        end = start + rec.duration_cycles
        self.block_free[b] = end
        self.qubit_ready[q] = end
        self.tile_free[tile] = end
        self.resident[tile] = None
        self.placement[q] = GrossSlot(b, label)
        self.events.append(
            ScheduleEvent(EventKind.STORE, (q,), start, rec.duration_cycles, rec.error_contribution,
                          None, (tile,), b, rec)
        )
        return tile

    def free_tile(self) -> int | None:
        for t, q in enumerate(self.resident):
            if q is None:
                return t
        return None

    def store_block_for(self, preferred: int | None) -> int | None:
        if preferred is not None and self.blocks[preferred].free_labels():
            return preferred
        for b, blk in enumerate(self.blocks):
            if blk.free_labels():
                return b
        return None

    def apply(self, move: _Move) -> None:
        if move.kind == "fetch":
            self.do_fetch(move.fetch_qubit, self.free_tile())
        elif move.kind == "store":
            self.do_store(move.store_qubit, move.store_block)
        else:
            m, s = move.fetch_qubit, move.store_qubit
            b_m = self.block_of(m)
            b_s = self.store_block_for(b_m)
            if b_s is not None:
                tile = self.do_store(s, b_s)
                self.do_fetch(m, tile)
            else:
                self.exchange(m, s)

    def exchange(self, m: int, s: int) -> None:
        """Fetch ``m`` into a routing patch, then store ``s`` into the slot it left."""
        b_m = self.block_of(m)
        label_m = self.placement[m].label
        self.do_fetch(m, None)
        tile = self.do_store(s, b_m, label_m)
        self.tile_of[m] = tile
        self.resident[tile] = m
        self.placement[m] = SurfaceTile(tile)
        self.qubit_ready[m] = max(self.qubit_ready[m], self.tile_free[tile])
        self.tile_free[tile] = self.qubit_ready[m]

    # -- move selection
    def score(self, move: _Move, frontier_of: dict[int, int]) -> int:
        """Frontier ops that become executable after ``move``."""
        on_surface = set(self.tile_of)
        blocks = {}
        if move.store_qubit is not None:
            on_surface.discard(move.store_qubit)
            if move.kind == "store":
                blocks[move.store_qubit] = move.store_block
            else:
                b_m = self.block_of(move.fetch_qubit)
                b_s = self.store_block_for(b_m)
                blocks[move.store_qubit] = b_m if b_s is None else b_s
        if move.fetch_qubit is not None:
            on_surface.add(move.fetch_qubit)
            blocks[move.fetch_qubit] = None
        ops = {frontier_of[q] for q in (move.fetch_qubit, move.store_qubit) if q in frontier_of}
        return sum(
            1
            for i in ops
            if self.mode(i, on_surface.__contains__, lambda q: blocks[q] if q in blocks else self.block_of(q))
            is not None
        )

    def candidates(self, frontier: list[int]) -> list[_Move]:
        out: set[_Move] = set()
        has_free_tile = self.free_tile() is not None
        surface = [q for q in self.tile_of]
        for i in frontier:
            op = self.circuit.ops[i]
            support = op.pauli.support
            mem = [q for q in support if q not in self.tile_of]
            for m in mem:
                if has_free_tile:
                    out.add(_Move("fetch", m, None))
                for s in surface:
                    out.add(_Move("swap", m, s))
            if (op.is_clifford or isinstance(op, PauliMeasurement)) and mem:
                mem_blocks = {self.block_of(q) for q in mem}
                if len(mem_blocks) == 1:
                    (b,) = mem_blocks
                    if len(support) - len(mem) <= len(self.blocks[b].free_labels()):
                        for s in support:
                            if s in self.tile_of:
                                out.add(_Move("store", None, s, b))
        return sorted(out, key=_Move.sort_key)

    def fallback(self, frontier: list[int]) -> None:
        """Move every operand of the least blocked frontier op into place."""
        def missing(i):
            return sum(1 for q in self.circuit.ops[i].pauli.support if q not in self.tile_of)

        focus = min(frontier, key=lambda i: (missing(i), i))
        support = self.circuit.ops[focus].pauli.support
        if len(support) > self.arch.surface_tiles:
            self.gather(focus)
            return
        for m in [q for q in support if q not in self.tile_of]:
            tile = self.free_tile()
            if tile is not None:
                self.do_fetch(m, tile)
            else:
                victim = max((q for q in sorted(self.tile_of) if q not in support), key=self.next_use)
                self.apply(_Move("swap", m, victim))

    def gather(self, i: int) -> None:
        """Bring every operand of Clifford ``i`` into a single block."""
        support = self.circuit.ops[i].pauli.support
        fits = [b for b, blk in enumerate(self.blocks) if blk.capacity >= len(support)]
        if not fits:
            raise DeadlockError(f"op {i} ({self.circuit.ops[i]}) fits neither the surface nor one block")
        b = max(fits, key=lambda b: (sum(1 for q in support if self.block_of(q) == b), -b))
        while True:
            outside = [q for q in support if self.block_of(q) != b]
            if not outside:
                return
            surf = [q for q in outside if q in self.tile_of]
            if surf:
                if self.blocks[b].free_labels():
                    self.do_store(surf[0], b)
                else:
                    # full block: trade a non-operand for the operand
                    others = [q for q in sorted(self.blocks[b].occupied.values()) if q not in support]
                    self.exchange(max(others, key=self.next_use), surf[0])
            elif self.free_tile() is not None:
                self.do_fetch(outside[0], self.free_tile())
            else:
                # no surface qubit is an operand here
                self.exchange(outside[0], max(sorted(self.tile_of), key=self.next_use))

    def choose_move(self, frontier: list[int]) -> _Move | None:
        frontier_of = {q: i for i in frontier for q in self.circuit.ops[i].pauli.support}
        cands = self.candidates(frontier)
        self.rng.shuffle(cands)
        # ties on unblocked count go to the eviction whose victim is needed last
        best, best_key = None, (0, 0.0)
        for c in cands:
            sc = self.score(c, frontier_of)
            if sc == 0:
                continue
            victim = float("inf") if c.kind != "swap" else self.next_use(c.store_qubit)
            key = (sc, victim)
            if best is None or key > best_key:
                best, best_key = c, key
        return best


def _check_weights(circuit: PbcCircuit, arch: ArchitectureConfig) -> None:
    S = arch.surface_tiles
    for i, op in enumerate(circuit.ops):
        if not op.is_clifford and op.pauli.weight > S:
            raise ValueError(
                f"op {i} ({op}) has weight {op.pauli.weight} > {S} surface tiles; prune with max_weight <= {S}"
            )


def schedule(
    circuit: PbcCircuit,
    arch: ArchitectureConfig,
    seed: int = 0,
    costs: InstructionCosts | None = None,
    max_moves: int | None = None,
) -> Schedule:
    _check_weights(circuit, arch)
    costs = costs or instruction_costs(arch)
    mc = _Machine(circuit, arch, costs, seed)
    ops = circuit.ops
    dag = dag_from_supports([op.pauli.support for op in ops])
    indeg = [len(p) for p in dag.preds]
    frontier = [i for i in range(len(ops)) if indeg[i] == 0]
    heapq.heapify(frontier)
    moves = 0
    limit = max_moves if max_moves is not None else 8 * len(ops) + 64
    while frontier:
        progressed = True
        while progressed and frontier:
            progressed = False
            waiting = []
            while frontier:
                i = heapq.heappop(frontier)
                kind = mc.mode(i)
                if kind is None:
                    waiting.append(i)
                    continue
                mc.execute(i, kind)
                progressed = True
                for j in dag.succs[i]:
                    indeg[j] -= 1
                    if indeg[j] == 0:
                        heapq.heappush(frontier, j)
            frontier = waiting
            heapq.heapify(frontier)
        if not frontier:
            break
        moves += 1
        if moves > limit:
            raise DeadlockError(f"no progress after {moves} data movements")
        move = mc.choose_move(sorted(frontier))
        if move is None:
            mc.fallback(sorted(frontier))
        else:
            mc.apply(move)

    events = sorted(mc.events, key=lambda e: (e.start, e.end, e.kind.value, e.qubits))
    total = max((e.end for e in events), default=0)
    idle = 0.0
    if costs.idle_error_per_cycle:
        busy = Counter()
        for e in events:
            for q in e.qubits:
                busy[q] += e.duration
        idle = costs.idle_error_per_cycle * sum(max(0, total - busy[q]) for q in range(circuit.width))
    return Schedule(events, total, dict(mc.placement), len(ops), idle, mc.initial)


# --------------------------------------------------------------------------
# Stats and export


@dataclass(frozen=True)
class ScheduleStats:
    gate_distribution: dict[str, int]
    io_count: int
    cycles: int
    errors: dict[str, float]
    events: int


def schedule_stats(s: Schedule) -> ScheduleStats:
    dist = Counter(e.kind.value for e in s.events)
    return ScheduleStats(
        gate_distribution={k.value: dist.get(k.value, 0) for k in EventKind},
        io_count=s.io_count,
        cycles=s.total_cycles,
        errors=s.category_errors,
        events=len(s.events),
    )


def schedule_to_json(s: Schedule) -> str:
    return json.dumps(
        {"total_cycles": s.total_cycles, "io_count": s.io_count, "events": [e.to_dict() for e in s.events]},
        sort_keys=True,
    )


CSV_FIELDS = ("kind", "start", "duration", "qubits", "tiles", "block", "category", "error", "op_index")


def schedule_to_csv(s: Schedule) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for e in s.events:
        w.writerow([
            e.kind.value, e.start, e.duration, " ".join(map(str, e.qubits)), " ".join(map(str, e.tiles)),
            "" if e.block is None else e.block, e.category, repr(e.error),
            "" if e.op_index is None else e.op_index,
        ])
    return buf.getvalue()


def event_digest(s: Schedule) -> str:
    return hashlib.sha256(schedule_to_json(s).encode()).hexdigest()
