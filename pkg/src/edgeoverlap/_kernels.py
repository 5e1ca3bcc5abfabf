"""Hot numeric loops: permutation overlap scoring and the Bloch-sphere RK4 step.

Every kernel exists twice: a numba ``@njit`` version and a plain numpy
version with identical semantics. The module-level names point at the numba
build unless numba is missing or ``EDGEOVERLAP_NO_NUMBA=1`` is set in the
environment (read once, at import).
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_DISABLED = os.environ.get("EDGEOVERLAP_NO_NUMBA", "0") not in ("", "0")
USE_NUMBA = numba is not None and not NUMBA_DISABLED

# feedback modes for the linear correction term
FEEDBACK_CLOSED_FORM = 0
FEEDBACK_ENDPOINTS = 1


# --------------------------------------------------------------------------
# edge overlap over a batch of permutations
# --------------------------------------------------------------------------

def overlap_counts_numpy(adj1, edges2, perms, chunk=1 << 18):
    """EO(G1, p(G2)) for every row ``p`` of ``perms``.

    ``edges2`` is a (k, 2) array of the edges of G2; the overlap of a
    permutation is the number of those edges that land on edges of G1.
    """
    perms = np.asarray(perms)
    out = np.zeros(perms.shape[0], dtype=np.int64)
    if edges2.shape[0] == 0:
        return out
    a = edges2[:, 0]
    b = edges2[:, 1]
    for start in range(0, perms.shape[0], chunk):
        block = perms[start:start + chunk]
        out[start:start + chunk] = adj1[block[:, a], block[:, b]].sum(axis=1)
    return out


def _overlap_counts_loop(adj1, edges2, perms):
    n_perm = perms.shape[0]
    n_edge = edges2.shape[0]
    out = np.zeros(n_perm, dtype=np.int64)
    for r in range(n_perm):
        acc = 0
        for e in range(n_edge):
            acc += adj1[perms[r, edges2[e, 0]], perms[r, edges2[e, 1]]]
        out[r] = acc
    return out


# --------------------------------------------------------------------------
# Gross-Pitaevskii flow on the Bloch sphere with the x-axis correction
# --------------------------------------------------------------------------

def _closed_form_cos_half(c0, g, t):
    ch = np.cosh(0.5 * g * t)
    sh = np.sinh(0.5 * g * t)
    return (c0 * ch - sh) / (ch - c0 * sh)


def rk4_bloch_numpy(points, n_steps, dt, g, c0, corr_sign, feedback, record):
    """Fixed-step RK4 for dr/dt = g z (-y, x, 0) + w(t) x_hat cross r.

    ``w(t) = corr_sign * (g/2) * cos(alpha(t)/2)``. With closed-form feedback
    ``cos(alpha/2)`` follows the analytic endpoint law started from ``c0``;
    with endpoint feedback it is read from rows 0 and 1 of the state.
    Returns the final points and, when ``record`` is set, the trajectory
    with shape (n_steps + 1, k, 3).
    """
    p = np.array(points, dtype=np.float64)
    traj = np.empty((n_steps + 1 if record else 0, p.shape[0], 3))
    if record:
        traj[0] = p

    def deriv(q, t):
        if feedback == FEEDBACK_ENDPOINTS:
            dot = q[0, 0] * q[1, 0] + q[0, 1] * q[1, 1] + q[0, 2] * q[1, 2]
            c = np.sqrt(max(0.0, 0.5 * (1.0 + dot)))
        else:
            c = _closed_form_cos_half(c0, g, t)
        w = corr_sign * 0.5 * g * c
        x, y, z = q[:, 0], q[:, 1], q[:, 2]
        d = np.empty_like(q)
        d[:, 0] = -g * z * y
        d[:, 1] = g * z * x - w * z
        d[:, 2] = w * y
        return d

    t = 0.0
    for step in range(n_steps):
        k1 = deriv(p, t)
        k2 = deriv(p + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = deriv(p + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = deriv(p + dt * k3, t + dt)
        p = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = (step + 1) * dt
        if record:
            traj[step + 1] = p
    return p, traj


def _rk4_bloch_loop(points, n_steps, dt, g, c0, corr_sign, feedback, record):
    k = points.shape[0]
    p = points.copy()
    traj = np.empty((n_steps + 1 if record else 0, k, 3))
    if record:
        for i in range(k):
            for j in range(3):
                traj[0, i, j] = p[i, j]
    ks = np.empty((4, k, 3))
    tmp = np.empty((k, 3))
    weights = (0.0, 0.5, 0.5, 1.0)
    for step in range(n_steps):
        t0 = step * dt
        for stage in range(4):
            h = weights[stage] * dt
            for i in range(k):
                for j in range(3):
                    if stage == 0:
                        tmp[i, j] = p[i, j]
                    else:
                        tmp[i, j] = p[i, j] + h * ks[stage - 1, i, j]
            t = t0 + h
            if feedback == 1:
                dot = tmp[0, 0] * tmp[1, 0] + tmp[0, 1] * tmp[1, 1] + tmp[0, 2] * tmp[1, 2]
                c = np.sqrt(max(0.0, 0.5 * (1.0 + dot)))
            else:
                ch = np.cosh(0.5 * g * t)
                sh = np.sinh(0.5 * g * t)
                c = (c0 * ch - sh) / (ch - c0 * sh)
            w = corr_sign * 0.5 * g * c
            for i in range(k):
                x = tmp[i, 0]
                y = tmp[i, 1]
                z = tmp[i, 2]
                ks[stage, i, 0] = -g * z * y
                ks[stage, i, 1] = g * z * x - w * z
                ks[stage, i, 2] = w * y
        for i in range(k):
            for j in range(3):
                p[i, j] += (dt / 6.0) * (ks[0, i, j] + 2.0 * ks[1, i, j]
                                         + 2.0 * ks[2, i, j] + ks[3, i, j])
        if record:
            for i in range(k):
                for j in range(3):
                    traj[step + 1, i, j] = p[i, j]
    return p, traj


if numba is not None:
    overlap_counts_numba = numba.njit(cache=True)(_overlap_counts_loop)
    rk4_bloch_numba = numba.njit(cache=True)(_rk4_bloch_loop)
else:  # pragma: no cover
    overlap_counts_numba = None
    rk4_bloch_numba = None


def overlap_counts(adj1, edges2, perms):
    adj1 = np.ascontiguousarray(adj1, dtype=np.int64)
    edges2 = np.ascontiguousarray(edges2, dtype=np.int64).reshape(-1, 2)
    perms = np.ascontiguousarray(perms, dtype=np.int64)
    if USE_NUMBA:
        return overlap_counts_numba(adj1, edges2, perms)
    return overlap_counts_numpy(adj1, edges2, perms)


def rk4_bloch(points, n_steps, dt, g, c0, corr_sign, feedback, record):
    points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    if feedback == FEEDBACK_ENDPOINTS and points.shape[0] < 2:
        raise ValueError("endpoint feedback needs both endpoints as rows 0 and 1")
    args = (int(n_steps), float(dt), float(g), float(c0), float(corr_sign),
            int(feedback), bool(record))
    if USE_NUMBA:
        return rk4_bloch_numba(points, *args)
    return rk4_bloch_numpy(points, *args)
