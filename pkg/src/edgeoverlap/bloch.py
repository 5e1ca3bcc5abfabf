"""Candidate-qubit geometry and nonlinear (Gross-Pitaevskii) evolution on the Bloch sphere."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels

# Orientation of the candidate arc before evolution: midpoint on the equator
# (polar angle PHI) and the arc tilted by GAMMA from the line of latitude.
# CORRECTION_SIGN is the sense of the x-axis correcting rotation. These were
# fixed by calibrate_orientation(); see tests/test_bloch.py for the check.
PHI = math.pi / 2
GAMMA = math.pi / 4
CORRECTION_SIGN = 1.0


class EvolutionError(RuntimeError):
    pass


@dataclass(frozen=True)
class CandidateQubit:
    """Real single-qubit state a0|0> + a1|1> with a0, a1 >= 0."""

    a0: float
    a1: float

    def __post_init__(self):
        if self.a0 < 0 or self.a1 < 0:
            raise ValueError("candidate amplitudes must be nonnegative")
        if abs(self.a0 ** 2 + self.a1 ** 2 - 1.0) > 1e-9:
            raise ValueError(f"candidate not normalized: {self.a0}, {self.a1}")

    @property
    def p1(self) -> float:
        return self.a1 * self.a1

    def bloch(self) -> np.ndarray:
        return np.array([2 * self.a0 * self.a1, 0.0, self.a0 ** 2 - self.a1 ** 2])


@dataclass(frozen=True)
class BlochPoint:
    x: float
    y: float
    z: float

    @classmethod
    def of(cls, v) -> "BlochPoint":
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def norm(self) -> float:
        return math.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2)


@dataclass(frozen=True)
class EvolutionParams:
    g: float = 1.0
    dt: float | None = None
    phi: float = PHI
    gamma: float = GAMMA
    corr_sign: float = CORRECTION_SIGN
    feedback: str = "closed_form"

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError("nonlinearity g must be positive")
        if self.dt is not None and not 0 < self.dt <= 0.01 / self.g:
            raise ValueError(f"step {self.dt} violates dt <= 0.01/g = {0.01 / self.g}")
        if self.feedback not in ("closed_form", "endpoints"):
            raise ValueError(f"unknown feedback mode {self.feedback!r}")

    def steps_for(self, duration: float) -> tuple[int, float]:
        """Step count and exact step size that land on ``duration``."""
        dt = self.dt if self.dt is not None else min(0.01 / self.g, duration / 2000)
        n_steps = max(1, math.ceil(duration / dt - 1e-9))
        return n_steps, duration / n_steps


# --------------------------------------------------------------------------
# candidate states
# --------------------------------------------------------------------------

def _check_m(m, nfact):
    if not 0 <= m <= nfact:
        raise ValueError(f"candidate index {m} outside [0, {nfact}]")


def candidate_state(m: int, nfact: int) -> CandidateQubit:
    """m-th candidate: amplitudes proportional to ((nfact - m), m)."""
    _check_m(m, nfact)
    r = math.hypot(nfact - m, m)
    return CandidateQubit((nfact - m) / r, m / r)


def candidate_inner(m, nfact) -> float:
    """Overlap of the m-th candidate with |0>."""
    _check_m(m, nfact)
    return (nfact - m) / math.sqrt(nfact ** 2 - 2 * nfact * m + 2 * m ** 2)


def postselect_prob(m, nfact) -> float:
    _check_m(m, nfact)
    y = m / nfact
    return 1 - 2 * y + 2 * y * y


def alpha0(s, nfact) -> float:
    """Bloch angle between the 0th and s-th candidates (s may be fractional)."""
    _check_m(s, nfact)
    return 2.0 * math.atan2(s, nfact - s)


def evolution_time(s, nfact, g: float = 1.0) -> float:
    """Time that makes the 0th and s-th candidates orthogonal."""
    if not 0 < s <= nfact:
        raise ValueError(f"evolution time needs 0 < s <= {nfact}, got {s}")
    if not g > 0:
        raise ValueError("g must be positive")
    return (2.0 / g) * math.log(1.0 / math.tan(alpha0(s, nfact) / 4.0))


def closed_form_alpha(t, alpha0_, g) -> float:
    """cos(alpha(t)/2) for the evolved endpoint pair."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    c0 = math.cos(alpha0_ / 2)
    ch, sh = math.cosh(g * t / 2), math.sinh(g * t / 2)
    den = ch - c0 * sh
    num = c0 * ch - sh
    # the pair is orthogonal at num == 0 and the formula stops describing it after
    if den <= 0 or num < -1e-12 * ch:
        raise ValueError("t lies beyond the orthogonality time")
    return num / den


def closed_form_mu(t, mu0, g) -> float:
    """Same law for the symmetric sub-arc subtending mu0."""
    return closed_form_alpha(t, mu0, g)


# --------------------------------------------------------------------------
# orientation
# --------------------------------------------------------------------------

def _arc_frame(a0_angle):
    mid = np.array([math.sin(a0_angle / 2), 0.0, math.cos(a0_angle / 2)])
    tan = np.array([math.cos(a0_angle / 2), 0.0, -math.sin(a0_angle / 2)])
    return np.column_stack([mid, tan, np.cross(mid, tan)])


def _target_frame(phi, gamma):
    mid = np.array([math.sin(phi), 0.0, math.cos(phi)])
    north = np.array([-math.cos(phi), 0.0, math.sin(phi)])
    tan = math.cos(gamma) * np.array([0.0, 1.0, 0.0]) + math.sin(gamma) * north
    return np.column_stack([mid, tan, np.cross(mid, tan)])


def orientation_matrix(s, nfact, params: EvolutionParams = EvolutionParams()) -> np.ndarray:
    """Rotation taking the 0..s candidate sub-arc to the launch position."""
    return _target_frame(params.phi, params.gamma) @ _arc_frame(alpha0(s, nfact)).T


def orient_arc(q: CandidateQubit, s, nfact, params: EvolutionParams = EvolutionParams()) -> BlochPoint:
    return BlochPoint.of(orientation_matrix(s, nfact, params) @ q.bloch())


# --------------------------------------------------------------------------
# evolution
# --------------------------------------------------------------------------

def evolve_nonlinear(points, duration: float, alpha0_: float,
                     params: EvolutionParams = EvolutionParams(), trajectory: bool = False):
    """Integrate the corrected flow for ``duration``.

    ``points`` is a (k, 3) array; with endpoint feedback rows 0 and 1 must be
    the two endpoints. Returns ``(final, times, traj)`` where ``traj`` is
    None unless requested.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if np.any(np.abs(np.linalg.norm(pts, axis=1) - 1.0) > 1e-9):
        raise EvolutionError("starting points must lie on the unit sphere")
    if duration <= 0:
        times = np.zeros(1)
        return pts.copy(), times, (pts[None].copy() if trajectory else None)
    n_steps, dt = params.steps_for(duration)
    mode = _kernels.FEEDBACK_ENDPOINTS if params.feedback == "endpoints" else _kernels.FEEDBACK_CLOSED_FORM
    final, traj = _kernels.rk4_bloch(pts, n_steps, dt, params.g, math.cos(alpha0_ / 2),
                                     params.corr_sign, mode, trajectory)
    check = traj if trajectory else final[None]
    drift = float(np.max(np.abs(np.linalg.norm(check, axis=2) - 1.0)))
    if drift > 1e-6:
        raise EvolutionError(f"norm drift {drift:.2e} exceeds 1e-6")
    times = np.arange(n_steps + 1) * dt if trajectory else np.array([duration])
    return final, times, (traj if trajectory else None)


def hilbert_overlap(p, q) -> np.ndarray:
    """|<psi_p|psi_q>| for Bloch vectors p and q (broadcasts over leading axes)."""
    dot = np.sum(np.asarray(p) * np.asarray(q), axis=-1)
    return np.sqrt(np.clip(0.5 * (1.0 + dot), 0.0, None))


def final_rotation(e0, e1) -> np.ndarray:
    """Rotation sending e0 to the north pole (and hence antipodal e1 to the south)."""
    e0 = np.asarray(e0, dtype=float)
    e1 = np.asarray(e1, dtype=float)
    if np.linalg.norm(e0 + e1) > 1e-5:
        raise EvolutionError("endpoints are not antipodal")
    axis = e0 - e1
    axis = axis / np.linalg.norm(axis)
    z = np.array([0.0, 0.0, 1.0])
    v = np.cross(axis, z)
    c = float(axis @ z)
    if np.linalg.norm(v) < 1e-15:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1.0 + c)


def final_orient(p, e0, e1) -> CandidateQubit:
    """Measurement-ready qubit for evolved point ``p`` once e0 -> |0>, e1 -> |1>."""
    p = np.asarray(p, dtype=float)
    rot = final_rotation(e0, e1)
    if np.array_equal(p, np.asarray(e0)):
        return CandidateQubit(1.0, 0.0)
    if np.array_equal(p, np.asarray(e1)):
        return CandidateQubit(0.0, 1.0)
    z = float((rot @ (p / np.linalg.norm(p)))[2])
    z = min(1.0, max(-1.0, z))
    return CandidateQubit(math.sqrt((1 + z) / 2), math.sqrt((1 - z) / 2))


def measure(q: CandidateQubit, rng: np.random.Generator) -> int:
    return int(rng.random() < q.p1)


def measure_ensemble(q: CandidateQubit, rng: np.random.Generator, size: int) -> int:
    """Number of ones among ``size`` independent copies of ``q``."""
    return int(np.count_nonzero(rng.random(size) < q.p1))


# --------------------------------------------------------------------------
# the launch / evolve / reorient sequence for one candidate
# --------------------------------------------------------------------------

def launch_points(ms, s, nfact, params: EvolutionParams = EvolutionParams()) -> np.ndarray:
    """Oriented Bloch vectors of the 0th, s-th and each requested candidate."""
    rot = orientation_matrix(s, nfact, params)
    rows = [candidate_state(0, nfact).bloch(), candidate_state(s, nfact).bloch()]
    rows += [candidate_state(m, nfact).bloch() for m in ms]
    return (rot @ np.array(rows).T).T


@lru_cache(maxsize=4096)
def evolve_candidate(m: int, s: int, nfact: int, params: EvolutionParams = EvolutionParams()) -> CandidateQubit:
    """Oriented, evolved and reoriented m-th candidate for the 0..s sub-arc."""
    pts = launch_points([m], s, nfact, params)
    final, _, _ = evolve_nonlinear(pts, evolution_time(s, nfact, params.g), alpha0(s, nfact), params)
    return final_orient(final[2], final[0], final[1])


def endpoint_history(s, nfact, params: EvolutionParams = EvolutionParams()):
    """Integrated vs closed-form endpoint overlap over [0, T].

    Returns ``(times, integrated, closed_form)``.
    """
    a0 = alpha0(s, nfact)
    duration = evolution_time(s, nfact, params.g)
    pts = launch_points([], s, nfact, params)
    _, times, traj = evolve_nonlinear(pts, duration, a0, params, trajectory=True)
    integrated = hilbert_overlap(traj[:, 0], traj[:, 1])
    c0 = math.cos(a0 / 2)
    ch, sh = np.cosh(params.g * times / 2), np.sinh(params.g * times / 2)
    closed = np.clip((c0 * ch - sh) / (ch - c0 * sh), 0.0, None)
    return times, integrated, closed


def calibrate_orientation(cases=((1, 120), (7, 120), (60, 120), (119, 120), (3, 24)), g: float = 1.0) -> dict:
    """Pick the arc tilt and correction sense whose endpoint overlap follows the closed form.

    Tries gamma in {pi/4, 3pi/4} with both correction senses and reports the
    worst deviation of each over ``cases`` (pairs ``(s, nfact)``).
    """
    rows = []
    for gamma in (math.pi / 4, 3 * math.pi / 4):
        for sign in (1.0, -1.0):
            params = EvolutionParams(g=g, gamma=gamma, corr_sign=sign)
            worst = 0.0
            for s, nfact in cases:
                _, got, want = endpoint_history(s, nfact, params)
                worst = max(worst, float(np.max(np.abs(got - want))))
            rows.append({"phi": PHI, "gamma": gamma, "corr_sign": sign, "max_residual": worst})
    best = min(rows, key=lambda r: r["max_residual"])
    return {"chosen": best, "candidates": rows}


def trajectory_csv(m, s, nfact, params: EvolutionParams = EvolutionParams()) -> str:
    """CSV ``t,x,y,z,inner`` for the m-th candidate; ``inner`` is the endpoint overlap."""
    pts = launch_points([m], s, nfact, params)
    _, times, traj = evolve_nonlinear(pts, evolution_time(s, nfact, params.g),
                                      alpha0(s, nfact), params, trajectory=True)
    inner = hilbert_overlap(traj[:, 0], traj[:, 1])
    lines = ["t,x,y,z,inner"]
    for t, p, c in zip(times, traj[:, 2], inner):
        lines.append(f"{t:.9g},{p[0]:.12g},{p[1]:.12g},{p[2]:.12g},{c:.12g}")
    return "\n".join(lines) + "\n"
