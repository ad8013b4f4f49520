import io
import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fluxanneal.errors import CapacityError, DimensionError, ScheduleFormatError, ValidationError
from fluxanneal.problem import (
    REFERENCE_CASES,
    AnnealingSchedule,
    ControlSchedule,
    IsingProblem,
    all_configs,
    basis_spins,
    config_index,
    gibbs_probability,
    ground_states,
    index_config,
    ising_energy,
    load_catalog,
    load_schedule,
)

fields = st.floats(-2, 2, allow_nan=False)
couplings = st.floats(-1, 1, allow_nan=False)


@st.composite
def problems(draw, n_min=1, n_max=5):
    n = draw(st.integers(n_min, n_max))
    h = draw(st.lists(fields, min_size=n, max_size=n))
    J = {}
    for j, k in itertools.combinations(range(n), 2):
        if draw(st.booleans()):
            J[(j, k)] = draw(couplings)
    return IsingProblem(tuple(h), J)


def brute_ground(problem):
    configs = list(all_configs(problem.n_qubits))
    e = [ising_energy(problem, c) for c in configs]
    m = min(e)
    return {c for c, x in zip(configs, e) if abs(x - m) <= 1e-12}


# --- IsingProblem validation ------------------------------------------------

def test_field_range_enforced():
    with pytest.raises(ValidationError):
        IsingProblem((2.5, 0.0))
    IsingProblem((2.5, 0.0), allow_out_of_range=True)


def test_coupling_range_enforced():
    with pytest.raises(ValidationError):
        IsingProblem.two_qubit(0, 0, 1.5)


def test_diagonal_and_duplicate_couplings_rejected():
    with pytest.raises(ValidationError):
        IsingProblem((0, 0), {(1, 1): 0.5})
    with pytest.raises(ValidationError):
        IsingProblem((0, 0), {(0, 1): 0.5, (1, 0): 0.2})


def test_coupling_pair_normalized_and_bounds_checked():
    p = IsingProblem((0, 0), {(1, 0): 0.3})
    assert p.J == {(0, 1): 0.3}
    with pytest.raises(DimensionError):
        IsingProblem((0, 0), {(0, 2): 0.3})


# --- energies and ground states ---------------------------------------------

def test_energy_all_zero():
    assert ising_energy(IsingProblem.two_qubit(0, 0, 0), (1, 1)) == 0


def test_energy_case_b_minimum():
    p = REFERENCE_CASES["b"]
    assert ising_energy(p, (1, -1)) == pytest.approx(-1.02, abs=1e-12)
    assert ground_states(p) == {(1, -1)}


def test_energy_case_a_minimum():
    assert ising_energy(REFERENCE_CASES["a"], (-1, 1)) == pytest.approx(-1.05, abs=1e-12)


def test_energy_length_mismatch():
    with pytest.raises(DimensionError):
        ising_energy(REFERENCE_CASES["a"], (1, 1, 1))
    with pytest.raises(ValidationError):
        ising_energy(REFERENCE_CASES["a"], (1, 0))


def test_ground_states_degenerate_and_case_c():
    assert ground_states(IsingProblem.two_qubit(0, 0, 0)) == set(all_configs(2))
    assert ground_states(REFERENCE_CASES["c"]) == {(1, -1)}


def test_ground_state_guard():
    with pytest.raises(CapacityError):
        ground_states(IsingProblem(tuple([0.1] * 25)))


@given(problems())
def test_ground_states_match_brute_force(p):
    assert ground_states(p) == brute_ground(p)


@given(problems(n_min=2), st.data())
def test_energy_relabeling_invariance(p, data):
    n = p.n_qubits
    perm = data.draw(st.permutations(range(n)))
    config = data.draw(st.tuples(*[st.sampled_from([1, -1])] * n))
    h2 = [0.0] * n
    for k in range(n):
        h2[perm[k]] = p.h[k]
    J2 = {(perm[j], perm[k]): v for (j, k), v in p.J.items()}
    c2 = [0] * n
    for k in range(n):
        c2[perm[k]] = config[k]
    assert ising_energy(IsingProblem(tuple(h2), J2), c2) == pytest.approx(ising_energy(p, config), abs=1e-12)


@given(problems(), st.data())
def test_global_flip(p, data):
    config = data.draw(st.tuples(*[st.sampled_from([1, -1])] * p.n_qubits))
    assert ising_energy(p.flipped(), tuple(-s for s in config)) == ising_energy(p, config)


def test_basis_ordering():
    assert config_index((1, 1)) == 0
    assert config_index((-1, 1)) == 2
    for i in range(8):
        assert config_index(index_config(i, 3)) == i
    assert tuple(basis_spins(2)[1]) == (1, -1)


@given(problems(n_max=4))
def test_diagonal_energies_match_enumeration(p):
    e = p.diagonal_energies()
    for i in range(2**p.n_qubits):
        assert e[i] == pytest.approx(ising_energy(p, index_config(i, p.n_qubits)), abs=1e-12)


# --- Gibbs probability --------------------------------------------------------

def test_gibbs_infinite_temperature():
    assert gibbs_probability(REFERENCE_CASES["b"], 35.18, 0.0) == pytest.approx(0.25)


def test_gibbs_zero_temperature():
    assert gibbs_probability(REFERENCE_CASES["b"], 35.18, 50.0) == pytest.approx(1.0)


def test_gibbs_case_a_dense_sum():
    p, B, beta = REFERENCE_CASES["a"], 35.18, 0.588
    # uu: -(h1+h2) - J, ud: -(h1-h2) + J, du: (h1-h2) + J, dd: (h1+h2) - J
    e = B * np.array([-0.05 + 1, 0.05 - 1, -0.05 - 1, 0.05 + 1])
    w = np.exp(-beta * e)
    assert gibbs_probability(p, B, beta) == pytest.approx(w[2] / w.sum(), rel=1e-12)


@given(problems(n_max=3), st.floats(0, 2))
def test_gibbs_weights_sum_to_one(p, beta):
    import fluxanneal.problem as mod

    total = 0.0
    for c in all_configs(p.n_qubits):
        with pytest.MonkeyPatch.context() as mp:
            mp.setattr(mod, "ground_states", lambda _p, c=c: {c})
            total += gibbs_probability(p, 10.0, beta)
    assert total == pytest.approx(1.0)


def test_gibbs_negative_beta():
    with pytest.raises(ValidationError):
        gibbs_probability(REFERENCE_CASES["a"], 1.0, -0.1)


# --- schedules ----------------------------------------------------------------

def test_schedule_linear_interpolation():
    s = load_schedule("s,A,B\n0,5,0\n1,0,10\n")
    assert s.A(0.5) == pytest.approx(2.5)
    assert s.B(0.5) == pytest.approx(5.0)


def test_schedule_piecewise():
    s = load_schedule("s A B\n0 5 0\n0.5 2 4\n1 0 10\n")
    assert s.A(0.25) == pytest.approx(3.5)


def test_schedule_endpoint_rule():
    with pytest.raises(ScheduleFormatError, match="reach s=1"):
        load_schedule("s,A,B\n0,5,0\n0.5,2,4\n")


def test_schedule_error_rows():
    with pytest.raises(ScheduleFormatError) as err:
        load_schedule("# comment\ns,A,B\n0,5,0\n0.6,2,4\n0.5,1,1\n1,0,10\n")
    assert err.value.row is not None
    with pytest.raises(ScheduleFormatError) as err:
        load_schedule("s,A,B\n0,5,0\n1,-1,10\n")
    assert err.value.row == 3
    with pytest.raises(ScheduleFormatError):
        load_schedule("s,A,B\n0,x,0\n1,0,1\n")


def test_schedule_round_trip():
    s = AnnealingSchedule([0, 0.3, 1], [4, 1, 0], [0, 2, 9])
    back = load_schedule(s.to_text())
    np.testing.assert_array_equal(back.A(back.s), s.A(s.s))


@given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=8, unique=True),
       st.lists(st.floats(0, 10), min_size=10, max_size=10))
def test_schedule_exact_at_samples(inner, vals):
    s = np.array([0.0] + sorted(inner) + [1.0])
    A = np.array(vals[: len(s)] + [1.0] * max(0, len(s) - 10))[: len(s)]
    sched = AnnealingSchedule(s, A, A[::-1].copy())
    np.testing.assert_array_equal(sched.A(s), A)


def test_control_schedule():
    c = load_schedule("s,phi_Jx\n0,4.1\n1,4.4\n", "control")
    assert isinstance(c, ControlSchedule)
    assert c.phi(0.5) == pytest.approx(4.25)
    assert c.rate(0.5, 10.0) == pytest.approx(0.03)


# --- catalog ----------------------------------------------------------------

def test_catalog_rows():
    cat = load_catalog()
    assert len(cat) == 60
    first = cat[0]
    assert (first.h1, first.h2, first.J) == (0.2, 0.2, 0.2)
    assert first.p_qubit == pytest.approx(0.999)
    assert all(0 <= e.p_dwave <= 1 for e in cat)


def test_catalog_source_argument():
    text = "h1,h2,J,delta_E,p_qubit_pct,p_flux_pct,p_dwave_pct\n0.1,0.2,-0.5,1.0,50,60,70\n"
    (row,) = load_catalog(io.StringIO(text))
    assert row.p_dwave == pytest.approx(0.7)
    bad = text.replace("70", "170")
    with pytest.raises(ValidationError):
        load_catalog(io.StringIO(bad))
