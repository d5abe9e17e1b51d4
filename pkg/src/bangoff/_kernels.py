"""Compiled inner loops for the duration optimiser.

Everything here works on plain arrays so numba can compile it:

* ``idx``   -- level index per segment (0 = P, 1 = 0, 2 = N)
* ``W, V``  -- eigenvalues / real eigenvectors of the three level Hamiltonians
* ``Hs``    -- the three Hamiltonians themselves
* ``kind``  -- 0 for infidelity 1 - |<target|psi>|^2, 1 for 1 - concurrence
* ``tie``   -- parameter index per segment; the simplex map is
               t_k = T u[tie[k]]^2 / sum_j u[tie[j]]^2

``tie = arange(n)`` is the ordinary free-duration case.
"""

import numpy as np
from numba import njit

INFIDELITY = 0
INCONCURRENCE = 1


@njit(cache=True, nogil=True)
def _apply(Wj, Vj, dt, psi):
    c = np.zeros(4, np.complex128)
    for m in range(4):
        s = 0j
        for r in range(4):
            s += Vj[r, m] * psi[r]
        c[m] = s * np.exp(-1j * Wj[m] * dt)
    out = np.zeros(4, np.complex128)
    for r in range(4):
        s = 0j
        for m in range(4):
            s += Vj[r, m] * c[m]
        out[r] = s
    return out


@njit(cache=True, nogil=True)
def cost_grad_t(idx, t, psi0, target, kind, W, V, Hs, grad):
    """Cost and d(cost)/d(t_k), written into ``grad``."""
    n = idx.shape[0]
    states = np.empty((n, 4), np.complex128)
    psi = psi0.copy()
    for k in range(n):
        psi = _apply(W[idx[k]], V[idx[k]], t[k], psi)
        states[k] = psi
    cov = np.empty(4, np.complex128)
    if kind == INFIDELITY:
        ov = 0j
        for m in range(4):
            ov += np.conj(target[m]) * psi[m]
            cov[m] = np.conj(target[m])
        cost = 1.0 - (ov.real * ov.real + ov.imag * ov.imag)
        coef = -2.0 * np.conj(ov)
    else:
        f = psi[0] * psi[3] - psi[1] * psi[2]
        af = abs(f)
        cost = 1.0 - 2.0 * af
        # d f = cov . d psi
        cov[0] = psi[3]
        cov[1] = -psi[2]
        cov[2] = -psi[1]
        cov[3] = psi[0]
        coef = -2.0 * np.conj(f) / af if af > 0.0 else 0j
    for k in range(n - 1, -1, -1):
        j = idx[k]
        s = 0j
        for r in range(4):
            h = 0j
            for m in range(4):
                h += Hs[j, r, m] * states[k, m]
            s += cov[r] * h
        grad[k] = (coef * (-1j) * s).real
        # covector pulled back through U_k; U_k is symmetric so cov U_k = U_k cov
        cov = _apply(W[j], V[j], t[k], cov)
    return cost


@njit(cache=True, nogil=True)
def simplex_map(u, tie, T):
    n = tie.shape[0]
    t = np.empty(n)
    q = 0.0
    for k in range(n):
        w = u[tie[k]] * u[tie[k]]
        t[k] = w
        q += w
    for k in range(n):
        t[k] = T * t[k] / q
    return t


@njit(cache=True, nogil=True)
def cost_grad_u(u, tie, T, idx, psi0, target, kind, W, V, Hs, gu):
    n = tie.shape[0]
    q = 0.0
    for k in range(n):
        q += u[tie[k]] * u[tie[k]]
    t = simplex_map(u, tie, T)
    gt = np.empty(n)
    cost = cost_grad_t(idx, t, psi0, target, kind, W, V, Hs, gt)
    s = 0.0
    for k in range(n):
        s += gt[k] * t[k]
    s /= T
    for j in range(u.shape[0]):
        gu[j] = 0.0
    for k in range(n):
        gu[tie[k]] += gt[k] - s
    for j in range(u.shape[0]):
        gu[j] *= 2.0 * T * u[j] / q
    return cost


@njit(cache=True, nogil=True)
def bfgs(u0, tie, T, idx, psi0, target, kind, W, V, Hs, gtol, ftol, maxiter):
    """Quasi-Newton descent in the unconstrained simplex parameters.

    Armijo backtracking line search; the inverse-Hessian update is skipped
    when the curvature condition fails.  Stops when the gradient inf-norm
    drops below ``gtol`` or the cost decrease stays below ``ftol`` for three
    consecutive steps.  Returns ``(u, cost, converged, iterations)``.
    """
    n = u0.shape[0]
    x = u0.copy()
    g = np.zeros(n)
    gn = np.zeros(n)
    f = cost_grad_u(x, tie, T, idx, psi0, target, kind, W, V, Hs, g)
    Hinv = np.eye(n)
    converged = False
    stalls = 0
    it = 0
    while it < maxiter:
        if np.max(np.abs(g)) < gtol:
            converged = True
            break
        p = -(Hinv @ g)
        slope = p @ g
        if slope >= 0.0:
            Hinv = np.eye(n)
            p = -g.copy()
            slope = p @ g
        step = 1.0
        accepted = False
        for _ in range(60):
            xn = x + step * p
            fn = cost_grad_u(xn, tie, T, idx, psi0, target, kind, W, V, Hs, gn)
            if fn <= f + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # no descent left at machine precision
            converged = np.max(np.abs(g)) < 1e3 * gtol or f < ftol
            break
        s = xn - x
        y = gn - g
        sy = s @ y
        decrease = f - fn
        if sy > 0.0:
            if it == 0:
                Hinv = np.eye(n) * (sy / (y @ y))
            rho = 1.0 / sy
            Hy = Hinv @ y
            Hinv = (Hinv - rho * (np.outer(s, Hy) + np.outer(Hy, s))
                    + (rho * rho * (y @ Hy) + rho) * np.outer(s, s))
        x = xn
        f = fn
        g[:] = gn
        it += 1
        if decrease < ftol:
            stalls += 1
            if stalls >= 3:
                converged = True
                break
        else:
            stalls = 0
    return x, f, converged, it


@njit(cache=True, nogil=True)
def multistart(starts, tie, T, idx, psi0, target, kind, W, V, Hs, gtol, ftol, maxiter):
    """Run ``bfgs`` from every row of ``starts``; returns per-start results."""
    n_starts = starts.shape[0]
    xs = np.empty_like(starts)
    costs = np.empty(n_starts)
    conv = np.zeros(n_starts, np.bool_)
    for i in range(n_starts):
        x, f, c, _ = bfgs(starts[i], tie, T, idx, psi0, target, kind, W, V, Hs, gtol, ftol, maxiter)
        xs[i] = x
        costs[i] = f
        conv[i] = c
    return xs, costs, conv
