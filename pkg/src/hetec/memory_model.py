"""Gross-code memory blocks.

Logical slots carry monomial labels x^i y^j in Z_l x Z_m. One slot (the probe)
sits next to the bus port; an automorphism multiplies the port position by a
generator monomial, so reaching a target costs the Cayley-graph distance from
the probe label to the target label. Moving a qubit across the bus is the
automorphism route, a joint XX measurement, an optional Z-route (only when X
and Z labels are not synced), a Z measurement and a classical Pauli fix.
"""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from .cost_model import ArchitectureConfig, InstructionCosts


class BlockError(RuntimeError):
    pass


class BusBusyError(BlockError):
    pass


class DestinationOccupiedError(BlockError):
    pass


class EmptySlotError(BlockError):
    pass


class SlotOccupiedError(BlockError):
    pass


class UnreachableError(BlockError):
    pass


@dataclass(frozen=True, order=True)
class MonomialLabel:
    i: int
    j: int

    def __str__(self) -> str:
        parts = []
        if self.i:
            parts.append("x" if self.i == 1 else f"x^{self.i}")
        if self.j:
            parts.append("y" if self.j == 1 else f"y^{self.j}")
        return "".join(parts) or "1"


@dataclass(frozen=True)
class MonomialGroup:
    """Abelian group Z_l x Z_m of monomial labels."""

    l: int = 6
    m: int = 2

    def __post_init__(self):
        if self.l < 1 or self.m < 1:
            raise ValueError("group orders must be positive")

    @property
    def order(self) -> int:
        return self.l * self.m

    @property
    def identity(self) -> MonomialLabel:
        return MonomialLabel(0, 0)

    def label(self, i: int, j: int) -> MonomialLabel:
        return MonomialLabel(i % self.l, j % self.m)

    def elements(self) -> list[MonomialLabel]:
        return [MonomialLabel(i, j) for j in range(self.m) for i in range(self.l)]

    def mul(self, a: MonomialLabel, b: MonomialLabel) -> MonomialLabel:
        return MonomialLabel((a.i + b.i) % self.l, (a.j + b.j) % self.m)

    def inv(self, a: MonomialLabel) -> MonomialLabel:
        return MonomialLabel(-a.i % self.l, -a.j % self.m)

    def div(self, a: MonomialLabel, b: MonomialLabel) -> MonomialLabel:
        """a / b."""
        return self.mul(a, self.inv(b))

    def contains(self, a: MonomialLabel) -> bool:
        return 0 <= a.i < self.l and 0 <= a.j < self.m


@dataclass(frozen=True)
class Generator:
    label: MonomialLabel
    routes: frozenset[str] = frozenset({"X", "Z"})

    def __str__(self) -> str:
        return str(self.label)


@dataclass(frozen=True)
class GeneratorSet:
    group: MonomialGroup
    generators: tuple[Generator, ...]

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        for g in self.generators:
            if not self.group.contains(g.label):
                raise ValueError(f"generator {g} is not a group element")
            if g.label == self.group.identity:
                raise ValueError("the identity cannot be an automorphism generator")
            if not g.routes or not g.routes <= {"X", "Z"}:
                raise ValueError(f"generator {g} has bad routes {set(g.routes)}")
        for route in ("X", "Z"):
            if self.for_route(route) and len(_distances(self, route)) != self.group.order:
                raise ValueError(f"{route}-route generators do not generate the group")
        if not self.for_route("X"):
            raise ValueError("no X-route generators")

    @classmethod
    def from_exponents(cls, group: MonomialGroup, exps: Iterable[Sequence[int]]) -> "GeneratorSet":
        return cls(group, tuple(Generator(group.label(*e)) for e in exps))

    def for_route(self, route: str) -> tuple[Generator, ...]:
        return tuple(g for g in self.generators if route in g.routes)


@lru_cache(maxsize=64)
def _bfs_tree(gens: GeneratorSet, route: str) -> dict[MonomialLabel, tuple[MonomialLabel, Generator] | None]:
    """BFS from the identity; parent pointers give first-found minimal words."""
    group = gens.group
    usable = gens.for_route(route)
    parent: dict[MonomialLabel, tuple[MonomialLabel, Generator] | None] = {group.identity: None}
    queue = deque([group.identity])
    while queue:
        cur = queue.popleft()
        for g in usable:
            nxt = group.mul(cur, g.label)
            if nxt not in parent:
                parent[nxt] = (cur, g)
                queue.append(nxt)
    return parent


def _distances(gens: GeneratorSet, route: str) -> dict[MonomialLabel, int]:
    tree = _bfs_tree(gens, route)
    dist: dict[MonomialLabel, int] = {}

    def depth(x):
        if x not in dist:
            dist[x] = 0 if tree[x] is None else depth(tree[x][0]) + 1
        return dist[x]

    for x in tree:
        depth(x)
    return dist


# The listed members {x, x^2, x^4, x^5, xy} of the operator set; on Z_6 x Z_2
# they give a mean access distance of 1.5 and a diameter of 3.
DEFAULT_GROUP = MonomialGroup(6, 2)
DEFAULT_GENERATORS = GeneratorSet.from_exponents(DEFAULT_GROUP, [(1, 0), (2, 0), (4, 0), (5, 0), (1, 1)])


def shortest_automorphism_sequence(
    source: MonomialLabel,
    target: MonomialLabel,
    gens: GeneratorSet = DEFAULT_GENERATORS,
    route: str = "X",
) -> list[Generator]:
    """Minimum-length generator word w with source * w_1 * ... * w_k == target."""
    group = gens.group
    diff = group.div(target, source)
    tree = _bfs_tree(gens, route)
    if diff not in tree:
        raise UnreachableError(f"{target} is unreachable from {source} on the {route} route")
    word = []
    node = diff
    while tree[node] is not None:
        node, g = tree[node]
        word.append(g)
    word.reverse()
    return word


def automorphism_distance(
    source: MonomialLabel, target: MonomialLabel, gens: GeneratorSet = DEFAULT_GENERATORS, route: str = "X"
) -> int:
    return len(shortest_automorphism_sequence(source, target, gens, route))


@dataclass(frozen=True)
class AccessStats:
    mean: float
    max: int
    histogram: dict[int, int]


def access_cost_stats(gens: GeneratorSet = DEFAULT_GENERATORS, route: str = "X") -> AccessStats:
    """Word-length statistics over every ordered (probe, target) pair."""
    elems = gens.group.elements()
    hist = Counter(automorphism_distance(a, b, gens, route) for a in elems for b in elems)
    total = sum(hist.values())
    return AccessStats(
        mean=sum(k * v for k, v in hist.items()) / total,
        max=max(hist),
        histogram=dict(sorted(hist.items())),
    )


# --------------------------------------------------------------------------
# Blocks and moves


@dataclass(frozen=True)
class MoveRecord:
    direction: str  # "fetch" | "store"
    block: int
    qubit: int
    label: MonomialLabel
    x_word: tuple[Generator, ...]
    z_word: tuple[Generator, ...]
    duration_cycles: int
    error_contribution: float
    measurements: tuple[str, ...] = ("JointXX", "Zmeas")
    pauli_fix: bool = True

    @property
    def x_auto_steps(self) -> int:
        return len(self.x_word)

    @property
    def z_auto_steps(self) -> int:
        return len(self.z_word)


def move_duration(x_steps: int, z_steps: int, costs: InstructionCosts) -> int:
    return (x_steps + z_steps) * costs.auto_cycles + costs.xx_cycles + costs.meas_cycles


def move_error(x_steps: int, z_steps: int, costs: InstructionCosts) -> float:
    return (x_steps + z_steps) * costs.auto_error + costs.xx_error + costs.meas_error


@dataclass
class GrossBlock:
    """Mutable memory block; callers serialize operations on one block."""

    id: int
    gens: GeneratorSet = DEFAULT_GENERATORS
    capacity: int = 11
    sacrificed: MonomialLabel | None = None
    probe: MonomialLabel | None = None
    z_labels: dict[MonomialLabel, MonomialLabel] | None = None
    occupancy: dict[MonomialLabel, int | None] = field(default_factory=dict)
    bus_busy: bool = False

    def __post_init__(self):
        group = self.gens.group
        if self.probe is None:
            self.probe = group.identity
        if self.sacrificed is None and self.capacity < group.order:
            dist = _distances(self.gens, "X")
            self.sacrificed = max(group.elements(), key=lambda a: (dist[a], a.j, a.i))
        usable = [a for a in group.elements() if a != self.sacrificed]
        if self.capacity > len(usable):
            raise ValueError(f"capacity {self.capacity} exceeds the {len(usable)} usable slots")
        if self.z_labels is not None and sorted(self.z_labels) != sorted(group.elements()):
            raise ValueError("z_labels must map every slot")
        full = {a: None for a in usable}
        full.update(self.occupancy)
        self.occupancy = full

    @property
    def slot_labels(self) -> list[MonomialLabel]:
        return list(self.occupancy)

    @property
    def sync_mode(self) -> bool:
        return self.z_labels is None

    def z_label(self, a: MonomialLabel) -> MonomialLabel:
        return a if self.z_labels is None else self.z_labels[a]

    @property
    def occupied(self) -> dict[MonomialLabel, int]:
        return {a: q for a, q in self.occupancy.items() if q is not None}

    def free_labels(self) -> list[MonomialLabel]:
        if len(self.occupied) >= self.capacity:
            return []
        return [a for a, q in self.occupancy.items() if q is None]

    def label_of(self, qubit: int) -> MonomialLabel:
        for a, q in self.occupancy.items():
            if q == qubit:
                return a
        raise KeyError(f"qubit {qubit} is not in block {self.id}")

    def place(self, qubit: int, label: MonomialLabel) -> None:
        if label not in self.occupancy:
            raise ValueError(f"{label} is not a usable slot of block {self.id}")
        if self.occupancy[label] is not None:
            raise SlotOccupiedError(f"slot {label} of block {self.id} holds qubit {self.occupancy[label]}")
        if len(self.occupied) >= self.capacity:
            raise SlotOccupiedError(f"block {self.id} is at capacity {self.capacity}")
        self.occupancy[label] = qubit

    def distance_to(self, label: MonomialLabel) -> int:
        return automorphism_distance(self.probe, label, self.gens, "X")

    def route(
        self, target: MonomialLabel, fixed_steps: tuple[int, int] | None = None
    ) -> tuple[tuple[Generator, ...], tuple[Generator, ...]]:
        """(X-route word, Z-route word) taking the port from the probe to ``target``."""
        group = self.gens.group
        if fixed_steps is not None:
            gx = self.gens.for_route("X")[0]
            gz = (self.gens.for_route("Z") or self.gens.for_route("X"))[0]
            return (gx,) * fixed_steps[0], (gz,) * fixed_steps[1]
        x_word = tuple(shortest_automorphism_sequence(self.probe, target, self.gens, "X"))
        if self.sync_mode:
            return x_word, ()
        m_d = group.div(target, self.probe)
        m_dz = group.div(group.div(self.z_label(target), self.z_label(self.probe)), m_d)
        z_word = tuple(shortest_automorphism_sequence(group.identity, m_dz, self.gens, "Z"))
        return x_word, z_word


def fetch(
    block: GrossBlock,
    target: MonomialLabel,
    costs: InstructionCosts,
    *,
    destination_free: bool = True,
    fixed_steps: tuple[int, int] | None = None,
) -> MoveRecord:
    """Teleport the qubit at ``target`` out of ``block`` to a surface tile."""
    if block.bus_busy:
        raise BusBusyError(f"bus of block {block.id} is busy")
    if not destination_free:
        raise DestinationOccupiedError("destination surface tile is occupied")
    qubit = block.occupancy.get(target)
    if qubit is None:
        raise EmptySlotError(f"slot {target} of block {block.id} is empty")
    x_word, z_word = block.route(target, fixed_steps)
    block.occupancy[target] = None
    block.probe = target
    return MoveRecord(
        "fetch",
        block.id,
        qubit,
        target,
        x_word,
        z_word,
        move_duration(len(x_word), len(z_word), costs),
        move_error(len(x_word), len(z_word), costs),
    )


def store(
    block: GrossBlock,
    qubit: int,
    target: MonomialLabel,
    costs: InstructionCosts,
    *,
    fixed_steps: tuple[int, int] | None = None,
) -> MoveRecord:
    """Teleport ``qubit`` from a surface tile into the empty slot ``target``."""
    if block.bus_busy:
        raise BusBusyError(f"bus of block {block.id} is busy")
    if target not in block.occupancy:
        raise ValueError(f"{target} is not a usable slot of block {block.id}")
    if block.occupancy[target] is not None:
        raise SlotOccupiedError(f"slot {target} of block {block.id} holds qubit {block.occupancy[target]}")
    x_word, z_word = block.route(target, fixed_steps)
    block.place(qubit, target)
    block.probe = target
    return MoveRecord(
        "store",
        block.id,
        qubit,
        target,
        x_word,
        z_word,
        move_duration(len(x_word), len(z_word), costs),
        move_error(len(x_word), len(z_word), costs),
    )


def generator_set_for(arch: ArchitectureConfig) -> GeneratorSet:
    group = MonomialGroup(*arch.group_order)
    return GeneratorSet.from_exponents(group, arch.generators)


def make_block(block_id: int, arch: ArchitectureConfig, gens: GeneratorSet | None = None) -> GrossBlock:
    gens = gens or generator_set_for(arch)
    group = gens.group
    z_labels = None
    if not arch.sync_mode:
        # unsynced Z logicals: Z label of slot x^i y^j is x^-i y^j
        z_labels = {a: group.label(-a.i, a.j) for a in group.elements()}
    sacrificed = group.label(*arch.sacrificed_label) if arch.sacrificed_label is not None else None
    return GrossBlock(block_id, gens, arch.block_capacity, sacrificed, group.identity, z_labels)
