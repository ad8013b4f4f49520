import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from fluxanneal.bathsim import (
    BETA_STAR,
    SpinBathSpec,
    anneal_with_bath,
    bath_hamiltonian,
    beta_sweep,
    build_total_hamiltonian,
    gibbs_reference,
    initial_bath_state,
    random_hypersphere_state,
    reduced_density_matrix,
    thermal_project,
    trace_estimate,
    workers_from_env,
)
from fluxanneal.bathsim.register import PAULI, apply_gate, sparse_operator
from fluxanneal.bathsim.spec import BathCouplings
from fluxanneal.errors import ValidationError
from fluxanneal.problem import REFERENCE_CASES, AnnealingSchedule, IsingProblem
from fluxanneal.qubitsim import anneal_success, hamiltonian_at
from fluxanneal.schedules import hardware_like_schedule

CASE_A = REFERENCE_CASES["a"]


def kron_all(ops):
    out = np.array([[1.0 + 0j]])
    for o in ops:
        out = np.kron(out, o)
    return out


def dense_term(sites, h, n):
    """Independent oracle: embed via a full kron and a basis permutation."""
    k = len(sites)
    rest = [q for q in range(n) if q not in sites]
    full = np.kron(h, np.eye(2 ** (n - k)))
    order = list(sites) + rest
    perm = np.argsort(order)
    T = full.reshape([2] * (2 * n))
    T = T.transpose(list(perm) + [n + p for p in perm])
    return T.reshape(2**n, 2**n)


def with_couplings(spec, bath=None, system=None):
    c = spec.couplings
    new = BathCouplings(c.bath if bath is None else np.asarray(bath, float),
                        c.system if system is None else np.asarray(system, float), c.links)
    object.__setattr__(spec, "couplings", new)
    return spec


# register kernels -----------------------------------------------------------

@pytest.mark.parametrize("sites", [(0,), (3,), (0, 1), (1, 3), (3, 0), (4, 2)])
def test_gate_and_sparse_against_kron(sites, rng):
    n = 5
    d = 2 ** len(sites)
    h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    ref = dense_term(sites, h, n)
    np.testing.assert_allclose(sparse_operator([(sites, h)], n).toarray(), ref, atol=1e-13)
    psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    out = psi.copy()
    apply_gate(out, sites, np.ascontiguousarray(h), n)
    np.testing.assert_allclose(out, ref @ psi, atol=1e-12)


def test_site_zero_is_most_significant():
    H = sparse_operator([((0,), PAULI["z"])], 3).toarray()
    np.testing.assert_allclose(np.diag(H).real, [1, 1, 1, 1, -1, -1, -1, -1])


# specs ----------------------------------------------------------------------

@given(st.integers(0, 10**6), st.sampled_from(["I", "II"]))
@settings(max_examples=20)
def test_couplings_in_unit_interval(seed, model):
    c = SpinBathSpec(model, 6, 1.0, 0.5, seed=seed).couplings
    assert np.all(np.abs(c.bath) <= 1) and np.all(np.abs(c.system) <= 1)


def test_coupling_tables_deterministic():
    a = SpinBathSpec("I", 8, 1.0, 0.3, seed=11)
    b = SpinBathSpec("I", 8, 2.0, 0.7, beta=0.1, seed=11)
    np.testing.assert_array_equal(a.couplings.bath, b.couplings.bath)
    assert a.couplings.links == b.couplings.links
    assert not np.array_equal(a.couplings.bath, SpinBathSpec("I", 8, 1.0, 0.3, seed=12).couplings.bath)


def test_model_ii_half_split():
    c = SpinBathSpec("II", 6, 1.0, 0.3).couplings
    assert c.links == ((0, 0), (0, 1), (0, 2), (1, 3), (1, 4), (1, 5))


def test_model_i_links_distinct_sites():
    for seed in range(20):
        links = SpinBathSpec("I", 4, 1.0, 0.3, seed=seed).couplings.links
        assert [q for q, _ in links] == [0, 1]
        assert links[0][1] != links[1][1]


@pytest.mark.parametrize("kw", [dict(model="III"), dict(n_bath=1), dict(model="II", n_bath=5), dict(beta=-1.0)])
def test_spec_validation(kw):
    base = dict(model="I", n_bath=4, energy=1.0, lam=0.1)
    base.update(kw)
    with pytest.raises(ValidationError):
        SpinBathSpec(**base)


def test_zero_couplings_give_zero_hamiltonian():
    spec = with_couplings(SpinBathSpec("I", 5, 1.0, 0.3), bath=np.zeros((5, 3)))
    assert abs(bath_hamiltonian(spec)).max() == 0


# random states and traces ---------------------------------------------------

def test_random_state_normalized_and_seeded():
    a = random_hypersphere_state(64, 3)
    assert np.linalg.norm(a) == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_array_equal(a, random_hypersphere_state(64, 3))
    with pytest.raises(ValidationError):
        random_hypersphere_state(48, 0)


def test_identity_trace_exact():
    phi = random_hypersphere_state(256, 0)
    assert trace_estimate(np.eye(256), phi) == pytest.approx(256.0, rel=1e-13)
    assert trace_estimate(lambda v: v, phi) == pytest.approx(256.0, rel=1e-13)


def test_traceless_estimate_scatter():
    n = 8
    Z = sparse_operator([((0,), PAULI["z"])], n)
    D = 2**n
    vals = np.array([trace_estimate(Z, random_hypersphere_state(D, s)) for s in range(100)])
    # per-sample standard deviation of D <phi|Z|phi> is about sqrt(D)
    assert abs(vals.mean()) < 4 * np.sqrt(D) / np.sqrt(100)
    assert np.all(np.abs(vals) < 6 * np.sqrt(D))


# thermal projection ---------------------------------------------------------

def test_beta_zero_leaves_state():
    spec = SpinBathSpec("I", 6, 1.0, 0.1, beta=0.0)
    phi = random_hypersphere_state(64, 1)
    th = thermal_project(phi, spec)
    np.testing.assert_array_equal(th.amplitudes, phi)
    assert th.partition_estimate() == pytest.approx(64.0)


def test_diagonal_model_ii_exact_reweighting():
    spec = SpinBathSpec("II", 6, 1.3, 0.1, beta=0.9)
    r = np.array(spec.couplings.bath)
    r[:, :2] = 0
    spec = with_couplings(spec, bath=r)
    phi = random_hypersphere_state(64, 2)
    w = bath_hamiltonian(spec).diagonal().real
    psi = np.exp(-0.45 * w) * phi
    th = thermal_project(phi, spec)
    np.testing.assert_allclose(th.amplitudes, psi / np.linalg.norm(psi), atol=1e-10)
    assert th.log_weight == pytest.approx(np.log(np.vdot(psi, psi).real), abs=1e-10)


@pytest.mark.parametrize("model", ["I", "II"])
def test_projection_matches_dense(model):
    spec = SpinBathSpec(model, 6, 1.0, 0.1, beta=1.5, seed=4)
    H = bath_hamiltonian(spec).toarray()
    phi = random_hypersphere_state(64, 5)
    psi = linalg.expm(-0.75 * H) @ phi
    th = thermal_project(phi, spec)
    assert abs(np.vdot(psi / np.linalg.norm(psi), th.amplitudes)) > 1 - 1e-8
    assert th.log_weight == pytest.approx(np.log(np.vdot(psi, psi).real), abs=1e-5)


def test_thermal_typicality_n8():
    spec = SpinBathSpec("I", 8, 1.0, 0.1, beta=1.0, seed=7)
    H = bath_hamiltonian(spec)
    w = np.linalg.eigvalsh(H.toarray())
    x = np.exp(-(w - w[0]))
    Z_exact = np.exp(-w[0]) * x.sum()
    E_exact = (w * x).sum() / x.sum()
    Zs, Es = [], []
    for s in range(20):
        th = thermal_project(random_hypersphere_state(256, 1000 + s), spec, H_B=H)
        Zs.append(th.partition_estimate())
        # energy from the reweighted sample: weight each seed by its own Z estimate
        Es.append(th.energy * th.partition_estimate())
    Zs = np.array(Zs)
    assert abs(Zs.mean() - Z_exact) < 3 * Zs.std(ddof=1) / np.sqrt(20)
    E_est = np.sum(Es) / Zs.sum()
    # ratio estimator error bar by the delta method
    r = np.array(Es) - E_est * Zs
    assert abs(E_est - E_exact) < 3 * r.std(ddof=1) / np.sqrt(20) / Zs.mean()


def test_energy_scale_beta_duality():
    c = 2.5
    a = SpinBathSpec("I", 6, 1.0, 0.1, beta=0.8, seed=9)
    b = SpinBathSpec("I", 6, 1.0 / c, 0.1, beta=0.8 * c, seed=9)
    ta, tb = initial_bath_state(a), initial_bath_state(b)
    assert abs(np.vdot(ta.amplitudes, tb.amplitudes)) > 1 - 1e-10


# anneals --------------------------------------------------------------------

@pytest.fixture(scope="module")
def hw():
    return hardware_like_schedule()


def test_zero_lambda_matches_isolated(hw):
    spec = SpinBathSpec("I", 4, 1.0, 0.0, beta=0.5, seed=1)
    res = anneal_with_bath(CASE_A, hw, spec, 5.0, tau=0.005)
    ref = anneal_success(CASE_A, hw, 5.0, tau=0.005, initial="plus")
    assert res.success_probability == pytest.approx(ref, abs=1e-9)
    # the reduced state stays pure when the bath is decoupled
    assert np.trace(res.rho @ res.rho).real == pytest.approx(1.0, abs=1e-9)


def test_step_defect_third_order(hw):
    spec = SpinBathSpec("I", 4, 1.0, 0.7, seed=2)
    plan = build_total_hamiltonian(CASE_A, hw, spec)
    H = plan.sparse(0.4).toarray()
    psi = random_hypersphere_state(64, 3)
    d = []
    for tau in (0.02, 0.01, 0.005):
        out = plan.step(psi.copy(), 0.4, tau)
        d.append(np.linalg.norm(out - linalg.expm(-1j * tau * H) @ psi))
    for d1, d2 in zip(d, d[1:]):
        assert d1 / d2 == pytest.approx(8.0, rel=0.2)


def test_total_hamiltonian_against_kron(hw):
    spec = SpinBathSpec("II", 2, 0.8, 0.6, seed=3)
    H = build_total_hamiltonian(CASE_A, hw, spec).sparse(0.3).toarray()
    c = spec.couplings
    ref = np.kron(hamiltonian_at(CASE_A, hw, 0.3), np.eye(4)).astype(complex)
    I2 = np.eye(2)
    for k in range(2):
        ref += kron_all([I2, I2] + [-0.8 * sum(c.bath[k][i] * PAULI[a] for i, a in enumerate("xyz")) if j == k else I2
                                    for j in range(2)])
    for k, (q, site) in enumerate(c.links):
        for i, a in enumerate("xyz"):
            ops = [I2] * 4
            ops[q] = PAULI[a]
            ops[2 + site] = PAULI[a]
            ref += 0.6 * c.system[k][i] * kron_all(ops)
    np.testing.assert_allclose(H, ref, atol=1e-12)


def test_norm_and_reduced_state(hw):
    spec = SpinBathSpec("I", 6, 1.0, 1.0, beta=BETA_STAR, seed=4)
    res = anneal_with_bath(CASE_A, hw, spec, 5.0, sample_s=(0.0, 0.5))
    assert res.norm_drift < 1e-8
    for rho in [res.rho, *res.samples.values()]:
        np.testing.assert_allclose(rho, rho.conj().T, atol=1e-13)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-8)
        assert np.linalg.eigvalsh(rho).min() > -1e-12
    assert set(res.samples) == {0.0, 0.5}
    assert 0 <= res.success_probability <= 1


def test_reduced_density_of_product():
    a = np.array([0.6, 0.8j, 0, 0])
    b = random_hypersphere_state(8, 0)
    np.testing.assert_allclose(reduced_density_matrix(np.kron(a, b)), np.outer(a, a.conj()), atol=1e-14)


def test_seed_determinism(hw):
    spec = SpinBathSpec("II", 4, 1.0, 0.5, seed=5)
    a = anneal_with_bath(CASE_A, hw, spec, 2.0).success_probability
    b = anneal_with_bath(CASE_A, hw, spec, 2.0).success_probability
    c = anneal_with_bath(CASE_A, hw, spec.with_(seed=6), 2.0).success_probability
    assert a == b and a != c


def test_bath_requires_two_qubits(hw):
    with pytest.raises(ValidationError):
        build_total_hamiltonian(IsingProblem((0.1, 0.2, 0.3), {}), hw, SpinBathSpec("I", 2, 1, 0))


def test_gibbs_reference_limits(hw):
    assert gibbs_reference(CASE_A, hw, 0.0) == pytest.approx(0.25)
    assert gibbs_reference(CASE_A, hw, 50.0) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValidationError):
        gibbs_reference(CASE_A, hw, -1.0)


def test_sweep_serial_equals_parallel(hw):
    spec = SpinBathSpec("I", 4, 1.0, 0.5)
    a = beta_sweep(CASE_A, hw, spec, [0.1, 0.5], [0, 1], 1.0, workers=1)
    b = beta_sweep(CASE_A, hw, spec, [0.1, 0.5], [0, 1], 1.0, workers=2)
    assert a == b
    assert a[0].values[0] == anneal_with_bath(CASE_A, hw, spec.with_(beta=0.1, seed=0), 1.0).success_probability


def test_workers_env(monkeypatch):
    monkeypatch.delenv("FLUXANNEAL_WORKERS", raising=False)
    assert workers_from_env() == 1
    monkeypatch.setenv("FLUXANNEAL_WORKERS", "3")
    assert workers_from_env() == 3
    for bad in ("0", "x"):
        monkeypatch.setenv("FLUXANNEAL_WORKERS", bad)
        with pytest.raises(ValidationError):
            workers_from_env()
