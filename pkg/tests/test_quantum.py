import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from bangoff import quantum as q
from bangoff.controls import BangOffControl, canonicalize, flip, negate
from bangoff.optimize import Objective, objective_and_gradient

from conftest import controls, states

ZZ = np.diag([1.0, -1.0, -1.0, 1.0])
PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
PSI_PLUS = np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2)


def taylor_expm(a, terms=30):
    """exp(a) by scaling and squaring of a truncated Taylor series."""
    norm = np.linalg.norm(a, 1)
    s = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0 else 0
    b = a / 2 ** s
    out = np.eye(len(a), dtype=complex)
    term = np.eye(len(a), dtype=complex)
    for k in range(1, terms):
        term = term @ b / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


# -- Hamiltonian ---------------------------------------------------------

def test_hamiltonian_zero_field_is_diagonal():
    np.testing.assert_array_equal(q.build_hamiltonian(0.0), np.diag([-1.5, 0.5, 0.5, 0.5]))


def test_hamiltonian_off_diagonal_couplings():
    h = q.build_hamiltonian(4.0)
    assert h[0, 1] == h[0, 2] == h[1, 3] == h[2, 3] == -2.0
    assert h[0, 3] == h[1, 2] == 0.0
    np.testing.assert_array_equal(h, h.T)


def test_hamiltonian_sign_conjugation():
    np.testing.assert_allclose(ZZ @ q.build_hamiltonian(-2.0) @ ZZ, q.build_hamiltonian(2.0), atol=0)


def test_hamiltonian_rejects_non_finite():
    with pytest.raises(ValueError):
        q.build_hamiltonian(float("nan"))


# -- eigensolver ---------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10, allow_nan=False))
def test_jacobi_matches_lapack(hx):
    h = q.build_hamiltonian(hx)
    w, v = q.jacobi_eigh(h)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(h), atol=1e-12)
    np.testing.assert_allclose(v.T @ v, np.eye(4), atol=1e-12)
    np.testing.assert_allclose((v * w) @ v.T, h, atol=1e-12)
    assert np.all(np.diff(w) >= 0)


@pytest.mark.parametrize("hx", [4.0, 0.0, -4.0, 2.0, -2.0])
def test_eigenvalues_are_characteristic_roots(hx):
    h = q.build_hamiltonian(hx)
    roots = np.sort(np.roots(np.poly(h)).real)
    w = q.spectral_decomposition(hx).eigenvalues
    # hx = 0 has a triple root, where polynomial root finding is only ~eps^(1/3) accurate
    np.testing.assert_allclose(w, roots, atol=1e-5)
    # polish: each eigenvalue is a root of det(H - w I)
    for lam in w:
        assert abs(np.linalg.det(h - lam * np.eye(4))) < 1e-10


def test_cached_decompositions_are_read_only():
    dec = q.spectral_decomposition(4.0)
    with pytest.raises(ValueError):
        dec.eigenvalues[0] = 1.0
    np.testing.assert_allclose(dec.reconstruct(), q.build_hamiltonian(4.0), atol=1e-12)


def test_jacobi_on_random_symmetric():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a = rng.normal(size=(4, 4))
        a = a + a.T
        w, v = q.jacobi_eigh(a)
        np.testing.assert_allclose(w, np.linalg.eigvalsh(a), atol=1e-12)
        np.testing.assert_allclose((v * w) @ v.T, a, atol=1e-12)


# -- ground states -------------------------------------------------------

def test_ground_state_zero_field():
    np.testing.assert_allclose(q.ground_state(0.0), [1, 0, 0, 0], atol=1e-15)


@pytest.mark.parametrize("hx", [-2.0, 2.0])
def test_ground_state_energy_is_smallest_root(hx):
    h = q.build_hamiltonian(hx)
    g = q.ground_state(hx)
    e_min = min(np.roots(np.poly(h)).real)
    assert abs(np.vdot(g, h @ g).real - e_min) < 1e-7
    assert abs(np.linalg.norm(g) - 1) < 1e-14
    k = np.argmax(np.abs(g))
    assert g[k].imag == 0 and g[k].real > 0


def test_initial_and_target_related_by_zz():
    np.testing.assert_allclose(ZZ @ q.PSI_INITIAL, q.PSI_TARGET, atol=1e-14)
    np.testing.assert_allclose(
        q.PSI_INITIAL, [0.81522474, -0.36816036, -0.36816036, 0.25362279], atol=1e-8
    )


def test_degenerate_ground_state_raises(monkeypatch):
    w = np.array([-1.0, -1.0, 0.0, 1.0])
    monkeypatch.setitem(q._CACHE, 7.0, q.SpectralDecomposition(w, np.eye(4)))
    with pytest.raises(q.DegenerateGroundStateError):
        q.ground_state(7.0)


# -- propagator ----------------------------------------------------------

@pytest.mark.parametrize("hx", [4.0, 0.0, -4.0, 1.3])
def test_propagator_zero_duration_is_identity(hx):
    np.testing.assert_allclose(q.propagator(hx, 0.0), np.eye(4), atol=1e-15)


def test_propagator_zero_field_phase():
    t = 0.73
    out = q.propagator(0.0, t) @ q.PSI_00
    np.testing.assert_allclose(out, np.exp(1.5j * t) * q.PSI_00, atol=1e-15)


@pytest.mark.parametrize("hx,dt", [(4.0, 0.1), (-4.0, 0.37), (0.0, 2.0), (4.0, 3.1)])
def test_propagator_matches_taylor_and_expm(hx, dt):
    u = q.propagator(hx, dt)
    a = -1j * q.build_hamiltonian(hx) * dt
    np.testing.assert_allclose(u, taylor_expm(a), atol=1e-13)
    np.testing.assert_allclose(u, scipy.linalg.expm(a), atol=1e-13)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-14)


def test_propagator_rejects_negative_duration():
    with pytest.raises(ValueError):
        q.propagator(4.0, -0.1)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 50, allow_nan=False))
def test_zero_field_propagator_is_diagonal(t):
    u = q.propagator(0.0, t)
    np.testing.assert_array_equal(u - np.diag(np.diag(u)), np.zeros((4, 4)))


# -- evolution -----------------------------------------------------------

def test_evolve_empty_control():
    c = BangOffControl("P", (0.0,))
    np.testing.assert_allclose(q.evolve(q.PSI_INITIAL, c), q.PSI_INITIAL, atol=1e-15)


def test_off_field_keeps_product_state():
    for t in (0.1, 1.0, 7.3):
        assert q.concurrence(q.evolve(q.PSI_00, BangOffControl("0", (t,)))) < 1e-15


def test_evolve_pn_at_short_duration_matches_expm():
    c = BangOffControl("PN", (0.1, 0.1))
    ref = (scipy.linalg.expm(-1j * q.build_hamiltonian(-4.0) * 0.1)
           @ scipy.linalg.expm(-1j * q.build_hamiltonian(4.0) * 0.1) @ q.PSI_INITIAL)
    out = q.evolve(q.PSI_INITIAL, c)
    np.testing.assert_allclose(out, ref, atol=1e-13)
    assert q.fidelity(out, q.PSI_TARGET) == pytest.approx(0.270963, abs=1e-6)


def test_evolve_propagates_validation():
    with pytest.raises(ValueError):
        q.evolve(q.PSI_00, BangOffControl("PN", (0.1, -0.1)))


def test_evolve_matches_expm_product():
    rng = np.random.default_rng(5)
    c = BangOffControl("P0NP0N0", tuple(rng.uniform(0, 0.6, 7)))
    psi = q.PSI_INITIAL
    for hx, dt in zip(c.fields, c.durations):
        psi = scipy.linalg.expm(-1j * q.build_hamiltonian(hx) * dt) @ psi
    np.testing.assert_allclose(q.evolve(q.PSI_INITIAL, c), psi, atol=1e-13)


# -- gradients -----------------------------------------------------------

def test_gradient_of_empty_segment():
    c = BangOffControl("P", (0.0,))
    _, g = q.evolve_with_segment_gradients(q.PSI_INITIAL, c)
    np.testing.assert_allclose(g[0], -1j * q.build_hamiltonian(4.0) @ q.PSI_INITIAL, atol=1e-15)


def _fd_state(control, k, h=1e-6):
    d = list(control.durations)
    up, dn = d.copy(), d.copy()
    up[k] += h
    dn[k] -= h
    a = q.evolve(q.PSI_INITIAL, BangOffControl(control.control_type, up))
    b = q.evolve(q.PSI_INITIAL, BangOffControl(control.control_type, dn))
    return (a - b) / (2 * h)


def test_state_gradients_match_finite_differences():
    rng = np.random.default_rng(11)
    c = BangOffControl("P0N", tuple(rng.uniform(0.1, 0.8, 3)))
    _, g = q.evolve_with_segment_gradients(q.PSI_INITIAL, c)
    for k in range(3):
        fd = _fd_state(c, k)
        assert np.linalg.norm(g[k] - fd) / np.linalg.norm(g[k]) < 1e-6


def _random_control(rng, min_dur=1e-3):
    ns = rng.integers(0, 10)
    letters = [rng.choice(list("P0N"))]
    for _ in range(ns):
        letters.append(rng.choice([c for c in "P0N" if c != letters[-1]]))
    return BangOffControl("".join(letters), tuple(rng.uniform(min_dur, 0.5, ns + 1)))


def _fd_cost(kind, c, k, h=1e-6):
    d = np.array(c.durations)
    up, dn = d.copy(), d.copy()
    up[k] += h
    dn[k] -= h
    fu = objective_and_gradient(kind, BangOffControl(c.control_type, tuple(up)))[0]
    fdn = objective_and_gradient(kind, BangOffControl(c.control_type, tuple(dn)))[0]
    return (fu - fdn) / (2 * h)


@pytest.mark.parametrize("kind", list(Objective))
def test_cost_gradients_match_finite_differences(kind):
    rng = np.random.default_rng(17 if kind is Objective.STATE_PREP else 19)
    for _ in range(100):
        c = _random_control(rng)
        _, g = objective_and_gradient(kind, c)
        fd = np.array([_fd_cost(kind, c, k) for k in range(len(g))])
        scale = max(np.linalg.norm(g), 1e-3)
        assert np.linalg.norm(g - fd) / scale < 1e-6


# -- functionals ---------------------------------------------------------

def test_fidelity_examples():
    assert q.fidelity(q.PSI_00, q.PSI_00) == pytest.approx(1.0, abs=1e-15)
    assert q.fidelity(q.PSI_00, q.basis_state("11")) == 0.0
    assert q.fidelity(q.PSI_00, PHI_PLUS) == pytest.approx(0.5, abs=1e-15)


def test_concurrence_examples():
    assert q.concurrence(q.PSI_00) == 0.0
    assert q.concurrence(PHI_PLUS) == pytest.approx(1.0, abs=1e-15)
    assert q.concurrence(np.full(4, 0.5, dtype=complex)) == pytest.approx(0.0, abs=1e-15)


def test_bloch_examples():
    assert q.reduced_bloch(q.PSI_00) == (0.0, 0.0, 1.0)
    np.testing.assert_allclose(q.reduced_bloch(PHI_PLUS), [0, 0, 0], atol=1e-15)
    plus_y = np.kron([1, 1j], [1, 0]) / math.sqrt(2)
    np.testing.assert_allclose(q.reduced_bloch(plus_y), [0, 1, 0], atol=1e-15)
    plus_x = np.kron([1, 1], [1, 0]) / math.sqrt(2)
    np.testing.assert_allclose(q.reduced_bloch(plus_x), [1, 0, 0], atol=1e-15)


def test_bell_examples():
    b = q.bell_coefficients(q.PSI_00)
    assert b.c1 == pytest.approx(1 / math.sqrt(2))
    assert b.c2 == pytest.approx(1 / math.sqrt(2))
    assert b.c3 == 0 and b.singlet_residual == 0
    b = q.bell_coefficients(PSI_PLUS)
    assert b.c3 == pytest.approx(1.0)
    assert abs(b.c1) + abs(b.c2) + abs(b.singlet_residual) < 1e-15


@settings(max_examples=300, deadline=None)
@given(states())
def test_functional_ranges(psi):
    assert 0 <= q.concurrence(psi) <= 1 + 1e-12
    assert 0 <= q.fidelity(psi, q.PSI_TARGET) <= 1 + 1e-12
    r = q.reduced_bloch(psi)
    assert r.x ** 2 + r.y ** 2 + r.z ** 2 <= 1 + 1e-12
    b = q.bell_coefficients(psi)
    total = sum(abs(c) ** 2 for c in b)
    assert abs(total - 1) < 1e-12
    # a pure two-qubit state has |r|^2 + C^2 = 1
    assert abs(r.x ** 2 + r.y ** 2 + r.z ** 2 + q.concurrence(psi) ** 2 - 1) < 1e-12


# -- symmetry and conservation properties --------------------------------

@settings(max_examples=1000, deadline=None)
@given(controls(), states())
def test_norm_and_unitarity(c, psi):
    out = q.evolve(psi, c)
    assert abs(np.linalg.norm(out) - 1) < 1e-12
    for hx, dt in zip(c.fields, c.durations):
        u = q.propagator(hx, dt)
        assert np.max(np.abs(u.conj().T @ u - np.eye(4))) < 1e-12


@settings(max_examples=200, deadline=None)
@given(controls())
def test_flip_preserves_state_prep_fidelity(c):
    a = q.fidelity(q.evolve(q.PSI_INITIAL, c), q.PSI_TARGET)
    b = q.fidelity(q.evolve(q.PSI_INITIAL, flip(c)), q.PSI_TARGET)
    assert abs(a - b) < 1e-12


@settings(max_examples=200, deadline=None)
@given(controls())
def test_negation_preserves_concurrence(c):
    a = q.concurrence(q.evolve(q.PSI_00, c))
    b = q.concurrence(q.evolve(q.PSI_00, negate(c)))
    assert abs(a - b) < 1e-12


@settings(max_examples=200, deadline=None)
@given(controls())
def test_canonicalize_preserves_evolution(c):
    a = q.evolve(q.PSI_INITIAL, c)
    b = q.evolve(q.PSI_INITIAL, canonicalize(c))
    assert np.linalg.norm(a - b) < 1e-12


@settings(max_examples=20, deadline=None)
@given(controls(max_duration=0.8), st.floats(0.01, 0.3))
def test_triplet_invariance_along_trajectories(c, step):
    for s in q.sample_trajectory(q.PSI_00, c, step):
        assert abs(s.bell.singlet_residual) < 1e-12


# -- trajectories --------------------------------------------------------

def test_trajectory_includes_endpoint_and_matches_evolve():
    c = BangOffControl("0", (math.pi / 2,))
    samples = q.sample_trajectory(q.PSI_INITIAL, c, math.pi / 4)
    assert [s.time for s in samples] == [0.0, math.pi / 4, math.pi / 2]
    for s in samples:
        direct = q.evolve(q.PSI_INITIAL, BangOffControl("0", (s.time,)))
        np.testing.assert_allclose(s.state, direct, atol=1e-14)
        assert s.concurrence == pytest.approx(q.concurrence(direct), abs=1e-14)


def test_trajectory_across_segments():
    c = BangOffControl("P0N0", (0.40858, 0.52057, 8.1384e-3, 0.84135))
    samples = q.sample_trajectory(q.PSI_00, c, 0.07)
    assert samples[-1].time == c.total_duration
    assert np.all(np.diff([s.time for s in samples]) > 0)
    np.testing.assert_allclose(samples[-1].state, q.evolve(q.PSI_00, c), atol=1e-13)
    for s in samples[1:-1]:
        edges = np.cumsum((0,) + c.durations)
        k = np.searchsorted(edges, s.time, side="right") - 1
        partial = list(c.durations[:k]) + [s.time - edges[k]]
        direct = q.evolve(q.PSI_00, BangOffControl(c.control_type[:k + 1], tuple(partial)))
        np.testing.assert_allclose(s.state, direct, atol=1e-13)


def test_trajectory_rejects_bad_step():
    with pytest.raises(ValueError):
        q.sample_trajectory(q.PSI_00, BangOffControl("P", (1.0,)), 0.0)


def test_fidelity_under_off_field_at_half_pi():
    # computed, not assumed: the free evolution value at T = pi/2
    f = q.fidelity(q.evolve(q.PSI_INITIAL, BangOffControl("0", (math.pi / 2,))), q.PSI_TARGET)
    ref = abs(np.vdot(q.PSI_TARGET, scipy.linalg.expm(-1j * q.build_hamiltonian(0) * math.pi / 2)
                      @ q.PSI_INITIAL)) ** 2
    assert f == pytest.approx(ref, abs=1e-14)
