"""Numerical checks of the zooming bounds, the halfway lemma, the time budget and epsilon_n."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np

from . import bloch
from .graphs import Graph, eo_distribution, histogram_csv

SQRT_2_3 = math.sqrt(2.0 / 3.0)
INV_SQRT2 = 1.0 / math.sqrt(2.0)
S3_BOUND = 2.0 * math.sqrt(2.0) / 3.0
S5_BOUND = 18.0 * math.sqrt(2.0) / 29.0
# Several bounds are attained with equality (s = n!/2, s = n!); this absorbs
# the rounding of the double-precision chain.
BOUND_SLACK = 1e-12
SUITABILITY_EPS = 0.05
ZOOM_LIMIT = 8


class AnalysisError(ValueError):
    pass


# --------------------------------------------------------------------------
# zoom overlap chain
# --------------------------------------------------------------------------

def _half_angle(y):
    """Hilbert-space angle of the candidate at fractional index y = m/n!."""
    return np.arctan2(y, 1.0 - y)


def zoom_overlap_from_k(y, ky):
    """cos(theta(T)/2) for sub-arc fraction ``y`` and candidate fraction ``ky``.

    Vectorised over numpy arrays. ``ky`` is the zoom candidate's index over n!.
    """
    y = np.asarray(y, dtype=float)
    ky = np.asarray(ky, dtype=float)
    half_a0 = _half_angle(y)
    theta0 = 2.0 * _half_angle(ky)
    ca = np.cos(half_a0)
    cm0 = np.cos(half_a0 - theta0)
    cmu = (cm0 - ca) / (1.0 - cm0 * ca)
    cmu = np.clip(cmu, -1.0, 1.0)
    return 0.5 * (np.sqrt(1.0 + cmu) + np.sqrt(1.0 - cmu))


def zoom_overlap(n: int, s: int, envelope: str | None = None) -> float:
    """Overlap with |0> of the floor(s/2)-th candidate after evolving for T(s/n!).

    ``envelope`` replaces floor(s/2) by the continuous ``"lower"`` (s/2) or
    ``"upper"`` ((s-1)/2) substitutes.
    """
    nfact = math.factorial(n)
    if not 1 <= s <= nfact:
        raise AnalysisError(f"s = {s} outside [1, {nfact}]")
    ks = {None: s // 2, "lower": s / 2, "upper": (s - 1) / 2}.get(envelope, -1)
    if ks == -1:
        raise AnalysisError(f"unknown envelope {envelope!r}")
    return float(zoom_overlap_from_k(s / nfact, ks / nfact))


def _zoom_sweep(n):
    nfact = math.factorial(n)
    s = np.arange(1, nfact + 1, dtype=float)
    y = s / nfact
    return (s.astype(np.int64), zoom_overlap_from_k(y, np.floor(s / 2) / nfact),
            zoom_overlap_from_k(y, (s / 2) / nfact), zoom_overlap_from_k(y, ((s - 1) / 2) / nfact))


def upper_bound(n: int, s: int) -> float | None:
    """Per-s upper bound on the zoom overlap (None where no bound is claimed)."""
    if s < 2:
        return None
    if s % 2 == 0:
        return SQRT_2_3
    if s == 3:
        return S3_BOUND
    if s == 5:
        return S5_BOUND
    if n >= 5:
        return SQRT_2_3 + epsilon_n(5)
    return None


@dataclass
class ZoomBoundReport:
    n: int
    s: list[int]
    values: list[float]
    lower_envelope: list[float]
    upper_envelope: list[float]
    violations: list[dict] = field(default_factory=list)
    epsilon_n: float | None = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"n": self.n, "ok": self.ok, "epsilon_n": self.epsilon_n,
                "violations": self.violations,
                "values": {str(s): v for s, v in zip(self.s, self.values)}}


def verify_zoomok(n: int) -> ZoomBoundReport:
    if not 3 <= n <= ZOOM_LIMIT:
        raise AnalysisError(f"zoom sweep needs 3 <= n <= {ZOOM_LIMIT}, got {n}")
    s_arr, vals, lo, hi = _zoom_sweep(n)
    violations = []
    for s, v in zip(s_arr.tolist(), vals.tolist()):
        if s < 2:
            continue
        if v < INV_SQRT2 - BOUND_SLACK:
            violations.append({"s": s, "value": v, "bound": INV_SQRT2, "kind": "lower"})
        ub = upper_bound(n, s)
        if ub is not None and v > ub + BOUND_SLACK:
            violations.append({"s": s, "value": v, "bound": ub, "kind": "upper"})
    return ZoomBoundReport(n, s_arr.tolist(), vals.tolist(), lo.tolist(), hi.tolist(), violations,
                           epsilon_n(n) if n >= 5 else None)


# --------------------------------------------------------------------------
# epsilon_n: the closed-form maximum of the odd branch, evaluated at s = n!/2 - 2
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _odd_branch_max(n: int) -> mpmath.mpf:
    with mpmath.workdps(50):
        N = mpmath.mpf(math.factorial(n))
        r = mpmath.sqrt(32 / N ** 2 + 2)
        den = N * (N * (N * (3 * N - 20) + 60) - 192) + 576
        a = ((2 * r + 3) * N ** 4 - 4 * (4 * r + 5) * N ** 3 + 12 * (2 * r + 5) * N ** 2 - 192 * N + 576) / den
        b = ((3 - 2 * r) * N ** 4 + 4 * (4 * r - 5) * N ** 3 + 12 * (5 - 2 * r) * N ** 2 - 192 * N + 576) / den
        return (mpmath.sqrt(a) + mpmath.sqrt(b)) / 2


def epsilon_n(n: int) -> float:
    """Excess of the odd-s maximum over sqrt(2/3)."""
    if n < 5:
        raise AnalysisError("epsilon_n is defined for n >= 5")
    with mpmath.workdps(50):
        return float(_odd_branch_max(n) - mpmath.sqrt(mpmath.mpf(2) / 3))


# --------------------------------------------------------------------------
# halfway lemma and time budget
# --------------------------------------------------------------------------

def verify_halfway(n: int, s: int) -> tuple[float, bool]:
    """Index s' of the candidate halfway (in angle) to the s-th; checks s' >= s/2."""
    nfact = math.factorial(n)
    if not 1 <= s <= nfact:
        raise AnalysisError(f"s = {s} outside [1, {nfact}]")
    y = s / nfact
    s_prime = nfact * y / (1.0 + math.sqrt(1.0 - 2 * y + 2 * y * y))
    ok = s_prime >= s / 2 - 1e-12 * s
    # geometric restatement: the floor(s/2)-th state is no further than half the angle
    ok = ok and math.atan2(s // 2, nfact - s // 2) <= math.atan2(s, nfact - s) / 2 + 1e-15
    return s_prime, ok


def time_budget(n: int, s: int, g: float = 1.0) -> tuple[float, float, bool]:
    """Total evolution time over a zoom from s down to 1, and its logarithmic bound."""
    if n < 2:
        raise AnalysisError("time budget needs n >= 2")
    nfact = math.factorial(n)
    if not 1 <= s <= nfact:
        raise AnalysisError(f"s = {s} outside [1, {nfact}]")
    total = math.fsum(bloch.evolution_time(s >> i, nfact, g) for i in range(s.bit_length()))
    bound = (2.0 / g) * math.log(2 * s) * (math.log2(nfact / math.sqrt(s)) + 1.0)
    return total, bound, total <= bound


def timecost_sweep(n_values=range(2, 9), g: float = 1.0) -> list[dict]:
    """Every (n, s) where the time budget fails; empty when the bound holds."""
    bad = []
    for n in n_values:
        for s in range(1, math.factorial(n) + 1):
            total, bound, ok = time_budget(n, s, g)
            if not ok:
                bad.append({"n": n, "s": s, "total": total, "bound": bound})
    return bad


# --------------------------------------------------------------------------
# small-n suitability table
# --------------------------------------------------------------------------

def is_suitable(value: float, eps: float = SUITABILITY_EPS) -> bool:
    return INV_SQRT2 - BOUND_SLACK <= value < 1.0 - eps


@lru_cache(maxsize=None)
def suitability_table(max_n: int = 5, eps: float = SUITABILITY_EPS) -> dict[tuple[int, int], dict]:
    """Zoom overlap and suitability of the floor(s/2)-th candidate for every (n, s).

    With the default ``max_n = 5`` this is the 1 + 2 + 6 + 24 + 120 = 153 pairs.
    """
    table = {}
    for n in range(1, max_n + 1):
        nfact = math.factorial(n)
        for s in range(1, nfact + 1):
            v = zoom_overlap(n, s)
            table[(n, s)] = {"value": v, "suitable": is_suitable(v, eps)}
    return table


def suitability_json(max_n: int = 5) -> str:
    table = suitability_table(max_n)
    return json.dumps({f"{n},{s}": row for (n, s), row in table.items()}, indent=1)


# --------------------------------------------------------------------------
# success-probability models (shared with the protocol)
# --------------------------------------------------------------------------

def per_round_overlap(n: int, model: str) -> float:
    """Upper bound on the zoom overlap used by the success estimate."""
    if model == "theorem":
        return S3_BOUND
    if model == "refined":
        return SQRT_2_3 + epsilon_n(n)
    raise AnalysisError(f"unknown success model {model!r}")


def success_estimate(n: int, omega: int, model: str = "theorem") -> float:
    """(1 - c^(2 omega))^log2(E_max) with E_max = n(n-1)/2."""
    if n < 5 or omega < 1:
        raise AnalysisError("success estimate needs n >= 5 and omega >= 1")
    c = per_round_overlap(n, model)
    return (1.0 - c ** (2 * omega)) ** math.log2(n * (n - 1) / 2)


# --------------------------------------------------------------------------
# figure data
# --------------------------------------------------------------------------

def _csv(header, rows) -> str:
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(f"{v:.12g}" if isinstance(v, float) else str(v) for v in row))
    return "\n".join(out) + "\n"


def figure_data(name: str, **params) -> tuple[str, int]:
    """CSV text and data-row count for one of the named figure series.

    evsbij: g1, g2 graphs. alldat: n. en: n_values. psucc: n_values, policy.
    """
    if name == "evsbij":
        g1: Graph = params["g1"]
        g2: Graph = params["g2"]
        hist = eo_distribution(g1, g2)
        return histogram_csv(hist), len(hist)
    if name == "alldat":
        s, vals, lo, hi = _zoom_sweep(params["n"])
        rows = list(zip(s.tolist(), vals.tolist(), lo.tolist(), hi.tolist()))
        return _csv(["s", "value", "lower", "upper"], rows), len(rows)
    if name == "en":
        rows = [(n, epsilon_n(n)) for n in params.get("n_values", range(5, 10))]
        return _csv(["n", "epsilon"], rows), len(rows)
    if name == "psucc":
        from .protocol import omega_auto  # local: protocol depends on this module
        policy = params.get("policy", "heuristic")
        rows = []
        for n in params.get("n_values", range(5, 31)):
            omega = math.ceil(10 * math.log(math.log(n))) if policy == "heuristic" else omega_auto(n, "theorem")
            p_ref = success_estimate(n, omega, "refined")
            p_thm = success_estimate(n, omega, "theorem")
            rows.append((n, omega, p_ref, p_thm, int(p_ref > 0.5)))
        return _csv(["n", "omega", "p_refined", "p_theorem", "above_half"], rows), len(rows)
    raise AnalysisError(f"unknown figure {name!r}")
