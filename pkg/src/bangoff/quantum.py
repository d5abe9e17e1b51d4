"""Exact dynamics of the symmetrically coupled two-qubit model.

States are length-4 complex arrays on the basis |00>, |01>, |10>, |11>.
The Hamiltonian is

    H(hx) = -2 g S1z S2z - hz (S1z + S2z) - hx (S1x + S2x),   S = sigma / 2,

with g = hz = 1.  Every segment of a bang-off control has a constant field,
so its propagator is V exp(-i Lambda dt) V^T from a real spectral
decomposition and no time stepping is involved anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .controls import LEVELS, BangOffControl, validate

G = 1.0
HZ = 1.0

_SX = np.array([[0.0, 1.0], [1.0, 0.0]]) / 2
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]]) / 2
_I2 = np.eye(2)
S1Z = np.kron(_SZ, _I2)
S2Z = np.kron(_I2, _SZ)
SX_TOTAL = np.kron(_SX, _I2) + np.kron(_I2, _SX)
ZZ = np.diag([1.0, -1.0, -1.0, 1.0])

_DIAGONAL_PART = -2 * G * S1Z @ S2Z - HZ * (S1Z + S2Z)

DEGENERACY_GAP = 1e-10


class DegenerateGroundStateError(ValueError):
    pass


def jacobi_eigh(a, tol=1e-15, max_sweeps=64):
    """Eigen-decomposition of a small real symmetric matrix by cyclic Jacobi.

    Returns ``(w, v)`` with ascending eigenvalues ``w`` and orthonormal
    eigenvector columns ``v``.  Sweeps stop once every off-diagonal entry is
    below ``tol`` (relative to the matrix scale, floored at 1).
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(1.0, float(np.max(np.abs(a))))
    for _ in range(max_sweeps):
        off = np.max(np.abs(a - np.diag(np.diag(a))))
        if off < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                a[p, q] = a[q, p] = 0.0
                v = v @ rot
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def build_hamiltonian(hx: float) -> np.ndarray:
    """4x4 real symmetric Hamiltonian for a constant control field ``hx``."""
    if not np.isfinite(hx):
        raise ValueError(f"field value must be finite, got {hx!r}")
    return _DIAGONAL_PART - hx * SX_TOTAL


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def _decompose(hx: float) -> SpectralDecomposition:
    w, v = jacobi_eigh(build_hamiltonian(hx))
    w.setflags(write=False)
    v.setflags(write=False)
    return SpectralDecomposition(w, v)


# filled eagerly so concurrent readers never race on initialisation
_CACHE = {float(hx): _decompose(hx) for hx in LEVELS.values()}


def spectral_decomposition(hx: float) -> SpectralDecomposition:
    hit = _CACHE.get(float(hx))
    return hit if hit is not None else _decompose(hx)


def ground_state(hx: float) -> np.ndarray:
    """Normalised ground state of H(hx); the largest amplitude is made real positive."""
    dec = spectral_decomposition(hx)
    w = dec.eigenvalues
    if w[1] - w[0] < DEGENERACY_GAP:
        raise DegenerateGroundStateError(
            f"ground level of H({hx}) is degenerate (gap {w[1] - w[0]:.3g})"
        )
    g = dec.eigenvectors[:, 0].astype(complex)
    k = int(np.argmax(np.abs(g)))
    g *= np.conj(g[k]) / abs(g[k])
    g /= np.linalg.norm(g)
    return g


def basis_state(label: str) -> np.ndarray:
    psi = np.zeros(4, dtype=complex)
    psi[int(label, 2)] = 1.0
    return psi


PSI_00 = basis_state("00")
PSI_INITIAL = ground_state(-2.0)
PSI_TARGET = ground_state(2.0)


def propagator(hx: float, dt: float) -> np.ndarray:
    """exp(-i H(hx) dt) for a constant field."""
    if dt < 0:
        raise ValueError(f"segment duration must be non-negative, got {dt!r}")
    dec = spectral_decomposition(hx)
    v = dec.eigenvectors
    return (v * np.exp(-1j * dec.eigenvalues * dt)) @ v.T


def _apply(dec: SpectralDecomposition, dt: float, psi: np.ndarray) -> np.ndarray:
    v = dec.eigenvectors
    return v @ (np.exp(-1j * dec.eigenvalues * dt) * (v.T @ psi))


def evolve(state, control: BangOffControl) -> np.ndarray:
    """Final state after applying the control's segments left to right."""
    validate(control)
    psi = np.asarray(state, dtype=complex)
    for hx, dt in zip(control.fields, control.durations):
        psi = _apply(spectral_decomposition(hx), dt, psi)
    return psi


def evolve_with_segment_gradients(state, control: BangOffControl):
    """Final state and d(final)/d(t_k) for every segment duration.

    One forward sweep stores the intermediate states; one backward sweep
    accumulates the tail products U_n ... U_{k+1}.  Returns ``(psi_f, grads)``
    with ``grads`` of shape ``(n_segments, 4)``.
    """
    validate(control)
    fields = control.fields
    durations = control.durations
    n = len(durations)
    psi = np.asarray(state, dtype=complex)
    after = []
    for hx, dt in zip(fields, durations):
        psi = _apply(spectral_decomposition(hx), dt, psi)
        after.append(psi)
    grads = np.empty((n, 4), dtype=complex)
    tail = np.eye(4, dtype=complex)
    for k in range(n - 1, -1, -1):
        # U_k commutes with H_k, so -i H_k may act after U_k
        grads[k] = tail @ (-1j * (build_hamiltonian(fields[k]) @ after[k]))
        tail = tail @ propagator(fields[k], durations[k])
    return psi, grads


def fidelity(final, target) -> float:
    return float(abs(np.vdot(target, final)) ** 2)


def concurrence(state) -> float:
    a, b, c, d = state
    return float(2 * abs(a * d - b * c))


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float


class BellCoefficients(NamedTuple):
    c1: complex  # |Phi+>
    c2: complex  # |Phi->
    c3: complex  # |Psi+>
    singlet_residual: complex


def reduced_density_matrix(state) -> np.ndarray:
    """State of qubit 1 after tracing out qubit 2."""
    psi = np.asarray(state, dtype=complex).reshape(2, 2)
    return psi @ psi.conj().T


def reduced_bloch(state) -> BlochVector:
    rho = reduced_density_matrix(state)
    return BlochVector(
        float(2 * rho[0, 1].real),
        float(-2 * rho[0, 1].imag),
        float((rho[0, 0] - rho[1, 1]).real),
    )


_R2 = 1 / math.sqrt(2)
BELL_BASIS = np.array([
    [_R2, 0, 0, _R2],    # Phi+
    [_R2, 0, 0, -_R2],   # Phi-
    [0, _R2, _R2, 0],    # Psi+
    [0, _R2, -_R2, 0],   # Psi- (singlet)
], dtype=complex)


def bell_coefficients(state) -> BellCoefficients:
    c = BELL_BASIS.conj() @ np.asarray(state, dtype=complex)
    return BellCoefficients(complex(c[0]), complex(c[1]), complex(c[2]), complex(c[3]))


@dataclass(frozen=True)
class TrajectorySample:
    time: float
    state: np.ndarray
    bloch: BlochVector
    bell: BellCoefficients
    concurrence: float


def sample_trajectory(initial, control: BangOffControl, sample_step: float) -> list[TrajectorySample]:
    """States at t = 0, step, 2 step, ..., T (T always included).

    Each sample is reached by exact propagation from the previous sample, so
    sub-segment pieces are spectral propagators too.
    """
    if not sample_step > 0:
        raise ValueError("sample_step must be positive")
    validate(control)
    T = control.total_duration
    n_steps = int(math.floor(T / sample_step + 1e-9))
    times = [k * sample_step for k in range(n_steps + 1)]
    if T - times[-1] > 1e-12 * max(1.0, T):
        times.append(T)
    else:
        times[-1] = T
    edges = np.concatenate([[0.0], np.cumsum(control.durations)])
    fields = control.fields

    def make(t, psi):
        return TrajectorySample(t, psi, reduced_bloch(psi), bell_coefficients(psi), concurrence(psi))

    psi = np.asarray(initial, dtype=complex)
    samples = [make(times[0], psi)]
    now = 0.0
    for t_next in times[1:]:
        # advance from `now` to `t_next` across whichever segments lie between
        for k in range(len(fields)):
            lo = max(edges[k], now)
            hi = min(edges[k + 1], t_next)
            if hi > lo:
                psi = _apply(spectral_decomposition(fields[k]), hi - lo, psi)
        now = t_next
        samples.append(make(t_next, psi))
    return samples
