import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hetec.circuit_ir import Gate, GateKind, LogicalCircuit, gen_benchmark
from hetec.pbc import (
    IDENTITY,
    PI_4,
    PI_8,
    PauliMeasurement,
    PauliProduct,
    PauliRotation,
    PbcCircuit,
    Phase,
    anticommutes,
    commute_past,
    decompose_gate,
    dumps_pbc,
    loads_pbc,
    lower,
    op_weight,
    pauli_mul,
    prune,
    summarize,
    transpile,
)
from oracles import (
    H,
    all_pauli_strings,
    equal_up_to_phase,
    gate_outcome_distribution,
    gate_unitary,
    max_distribution_gap,
    pauli_matrix,
    pbc_outcome_distribution,
    pbc_unitary,
    rotation_matrix,
)
from test_circuit_ir import circuits, random_circuit

P = PauliProduct.parse


def pbc(width, *ops, measured=()):
    return PbcCircuit(width, ops, IDENTITY, frozenset(measured))


def logical_gates(c: LogicalCircuit):
    return [(g.kind.value, g.qubits) for g in c.gates]


paulis = st.builds(
    lambda axes: PauliProduct.from_factors(dict(enumerate(axes))),
    st.lists(st.sampled_from("IXYZ"), min_size=1, max_size=4),
)
nontrivial = paulis.filter(bool)


# -- algebra


def test_pauli_mul_examples():
    assert pauli_mul(P("Z0"), P("X0")) == (Phase.I, P("Y0"))
    assert pauli_mul(P("X0"), P("Z0")) == (Phase.MINUS_I, P("Y0"))
    assert pauli_mul(P("X0 X1"), P("X0 Z1")) == (Phase.MINUS_I, P("Y1"))


def test_pauli_mul_matches_matrices():
    rng = random.Random(7)
    strings = list(all_pauli_strings(3))
    for _ in range(100):
        fa, fb = rng.choice(strings), rng.choice(strings)
        phase, prod = pauli_mul(PauliProduct.from_factors(fa), PauliProduct.from_factors(fb))
        lhs = pauli_matrix(fa, 3) @ pauli_matrix(fb, 3)
        rhs = phase.complex * pauli_matrix(prod.factors, 3)
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_phase_group():
    for a in Phase:
        assert a * a * a * a is Phase.ONE
        for b in Phase:
            assert (a * b).complex == pytest.approx(a.complex * b.complex)


def test_anticommutes_examples():
    assert anticommutes(P("Z0"), P("X0"))
    assert not anticommutes(P("Z0 X1"), P("Z0 X1"))
    assert not anticommutes(P("Z0 X1"), P("X0 Z1"))


@settings(max_examples=200, deadline=None)
@given(paulis, paulis)
def test_anticommutes_matches_matrices(a, b):
    n = max(a.mask.bit_length(), b.mask.bit_length(), 1)
    ma, mb = pauli_matrix(a.factors, n), pauli_matrix(b.factors, n)
    assert anticommutes(a, b) == np.allclose(ma @ mb, -mb @ ma)


def test_pauli_product_text():
    p = P("Y0 X1")
    assert str(p) == "Y0 X1"
    assert p.weight == 2 and p.support == (0, 1)
    assert str(IDENTITY) == "I"
    with pytest.raises(ValueError):
        P("Q0")
    with pytest.raises(ValueError):
        P("X0 Z0")


def test_op_weight():
    assert op_weight(P("Z0")) == 1
    assert op_weight(PauliRotation(P("Z0 X1"), PI_8)) == 2


def test_rotation_validation():
    with pytest.raises(ValueError):
        PauliRotation(P("Z0"), 3)
    with pytest.raises(ValueError):
        PauliRotation(IDENTITY, 1)
    with pytest.raises(ValueError):
        PauliMeasurement(P("Z0"), 0)


# -- lowering


def test_decompose_examples():
    t = decompose_gate(Gate(GateKind.T, (3,)))
    assert t == [PauliRotation(P("Z3"), PI_8)]
    cx = decompose_gate(Gate(GateKind.CX, (0, 1)))
    assert cx == [PauliRotation(P("Z0 X1"), PI_4), PauliRotation(P("Z0"), -PI_4), PauliRotation(P("X1"), -PI_4)]
    assert decompose_gate(Gate(GateKind.MEASURE_Z, (2,))) == [PauliMeasurement(P("Z2"), 1)]


def test_rotation_convention():
    # S and T are Z rotations by pi/4 and pi/8 up to global phase
    s = rotation_matrix({0: "Z"}, math.pi / 4, 1)
    t = rotation_matrix({0: "Z"}, math.pi / 8, 1)
    assert equal_up_to_phase(s, np.diag([1, 1j])) < 1e-12
    assert equal_up_to_phase(t, np.diag([1, np.exp(1j * math.pi / 4)])) < 1e-12


@pytest.mark.parametrize("kind", list(GateKind))
def test_each_gate_lowers_exactly(kind):
    if kind is GateKind.MEASURE_Z:
        return
    qubits = (0, 1) if kind is GateKind.CX else (1,)
    c = LogicalCircuit(2, (Gate(kind, qubits),))
    err = equal_up_to_phase(pbc_unitary(lower(c)), gate_unitary(logical_gates(c), 2))
    assert err < 1e-12


def test_hadamard_sequence():
    ops = decompose_gate(Gate(GateKind.H, (0,)))
    u = np.eye(2, dtype=complex)
    for op in ops:
        u = rotation_matrix(op.pauli.factors, op.angle, 1) @ u
    assert equal_up_to_phase(u, H) < 1e-12


# -- commutation


def test_commute_past_commuting():
    op = PauliRotation(P("Z0"), PI_8)
    assert commute_past(PauliRotation(P("Z0"), PI_4), op) == op


def test_commute_past_examples():
    assert commute_past(PauliRotation(P("Z0"), PI_4), PauliRotation(P("X0"), PI_8)) == PauliRotation(P("Y0"), -PI_8)
    got = commute_past(PauliRotation(P("Z0 X1"), PI_4), PauliRotation(P("X0"), PI_8))
    assert got == PauliRotation(P("Y0 X1"), -PI_8)


def test_commute_past_rejects_non_clifford():
    with pytest.raises(ValueError):
        commute_past(PauliRotation(P("Z0"), PI_8), PauliRotation(P("X0"), PI_8))


@settings(max_examples=150, deadline=None)
@given(nontrivial, nontrivial, st.sampled_from([PI_4, -PI_4]), st.sampled_from([PI_8, -PI_8]), st.booleans())
def test_commute_past_is_exact(pc, pop, c_eighths, op_eighths, as_measure):
    # C then op  ==  op' then C, checked on dense matrices
    n = max(pc.mask.bit_length(), pop.mask.bit_length())
    c = PauliRotation(pc, c_eighths)
    op = PauliMeasurement(pop, 1 if op_eighths > 0 else -1) if as_measure else PauliRotation(pop, op_eighths)
    moved = commute_past(c, op)
    uc = rotation_matrix(pc.factors, c.angle, n)
    if as_measure:
        lhs = pauli_matrix(pop.factors, n) * op.sign
        rhs = uc @ (pauli_matrix(moved.pauli.factors, n) * moved.sign) @ uc.conj().T
        assert np.allclose(lhs, rhs, atol=1e-12)
    else:
        lhs = rotation_matrix(pop.factors, op.angle, n) @ uc
        rhs = uc @ rotation_matrix(moved.pauli.factors, moved.angle, n)
        assert equal_up_to_phase(lhs, rhs) < 1e-12


@settings(max_examples=100, deadline=None)
@given(nontrivial, nontrivial, st.sampled_from([PI_4, -PI_4]))
def test_commute_past_involution(pc, pop, eighths):
    c = PauliRotation(pc, eighths)
    op = PauliRotation(pop, PI_8)
    twice = commute_past(c, commute_past(c, op))
    assert twice.pauli == op.pauli
    # P (P P') = P' up to sign; the sign flips exactly when they anticommute
    assert twice.eighths == (-op.eighths if anticommutes(pc, pop) else op.eighths)


# -- pruning


def test_prune_absorbs_into_measurement():
    c = pbc(1, PauliRotation(P("Z0"), PI_4), PauliRotation(P("X0"), PI_8), PauliMeasurement(P("Z0")), measured={0})
    out = prune(c, 1)
    assert out.ops == (PauliRotation(P("Y0"), -PI_8), PauliMeasurement(P("Z0")))


def test_prune_weight_cap_keeps_clifford():
    c = pbc(2, PauliRotation(P("Z0 Z1"), PI_4), PauliRotation(P("X0"), PI_8))
    out = prune(c, 1)
    assert out.ops[0] == PauliRotation(P("Z0 Z1"), PI_4)
    assert out.ops[1] == PauliRotation(P("X0"), PI_8)
    unbounded = prune(c, None)
    assert unbounded.ops[0] == PauliRotation(P("Y0 Z1"), -PI_8)


def test_prune_empty():
    assert prune(pbc(0)).ops == ()


def test_prune_rejects_bad_weight():
    with pytest.raises(ValueError):
        prune(pbc(1), 0)


def test_pauli_gates_fold_into_frame():
    c = LogicalCircuit(1, (Gate(GateKind.X, (0,)), Gate(GateKind.T, (0,))))
    out = transpile(c)
    assert out.ops == (PauliRotation(P("Z0"), -PI_8),)
    assert out.frame == P("X0")


@pytest.mark.parametrize("W", [1, 2, 3, None])
@pytest.mark.parametrize("seed", range(40))
def test_prune_unitary_equivalence(seed, W):
    rng = random.Random(seed)
    n = rng.randint(1, 3)
    c = random_circuit(rng, n, rng.randint(0, 25))
    u = gate_unitary(logical_gates(c), n)
    assert equal_up_to_phase(pbc_unitary(lower(c)), u) < 1e-9
    assert equal_up_to_phase(pbc_unitary(transpile(c, W)), u) < 1e-9


@pytest.mark.parametrize("W", [1, 2, None])
@pytest.mark.parametrize("seed", range(25))
def test_prune_preserves_measurement_statistics(seed, W):
    rng = random.Random(1000 + seed)
    n = rng.randint(1, 3)
    c = random_circuit(rng, n, rng.randint(0, 20), measure=True)
    want = gate_outcome_distribution(logical_gates(c), n)
    got = pbc_outcome_distribution(transpile(c, W))
    assert max_distribution_gap(want, got) < 1e-9


@settings(max_examples=60, deadline=None)
@given(circuits(max_n=4, max_size=30), st.sampled_from([1, 2, 3, None]))
def test_weight_cap(c, W):
    out = transpile(c, W)
    cap = math.inf if W is None else max(W, 1)
    for op in out.ops:
        if not op.is_clifford:
            assert op.pauli.weight <= cap


@settings(max_examples=60, deadline=None)
@given(circuits(max_n=4, max_size=30))
def test_unbounded_prune_leaves_no_clifford_on_measured_circuits(c):
    full = LogicalCircuit(c.width, c.gates + tuple(
        Gate(GateKind.MEASURE_Z, (q,)) for q in range(c.width) if q not in c.measured_qubits
    ))
    s = summarize(transpile(full, None))
    assert s.residual_clifford == 0


def test_benchmark_unbounded_prune_removes_cliffords():
    s = summarize(transpile(gen_benchmark("ising", 4, 5), None))
    assert s.residual_clifford == 0
    assert s.non_clifford == gen_benchmark("ising", 4, 5).t_count


def test_qft8_bounded_prune_keeps_cliffords():
    s = summarize(transpile(gen_benchmark("qft", 8, 3), 2))
    assert s.residual_clifford > 0
    assert s.max_non_clifford_weight <= 2


def test_prune_is_deterministic():
    c = gen_benchmark("adder", 6, 3)
    assert transpile(c, 2) == transpile(c, 2)


# -- text format


def test_text_format_lines():
    c = pbc(2, PauliRotation(P("Y0 X1"), -PI_8), PauliMeasurement(P("Z0")), measured={0})
    text = dumps_pbc(c)
    assert "ROT -pi/8 Y0 X1" in text.splitlines()
    assert "MEAS + Z0" in text.splitlines()


@settings(max_examples=40, deadline=None)
@given(circuits(max_n=4, max_size=30), st.sampled_from([1, 2, None]))
def test_text_roundtrip(c, W):
    out = transpile(c, W)
    back = loads_pbc(dumps_pbc(out))
    assert back == out
    assert dumps_pbc(back) == dumps_pbc(out)


def test_loads_errors():
    with pytest.raises(ValueError, match="line 2"):
        loads_pbc("WIDTH 1\nROT pi/3 Z0\n")
    with pytest.raises(ValueError):
        loads_pbc("WIDTH 1\nMEAS * Z0\n")
    with pytest.raises(ValueError):
        loads_pbc("JUMP 3\n")
