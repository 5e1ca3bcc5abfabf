"""Procedures A/B, the threshold binary search, omega policies and the Durr-Hoyer baseline."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import analysis, bloch, circuit
from .graphs import Graph, count_exceeding, max_threshold

SMALL_N = 4
POLICIES = ("theorem", "heuristic")
MODES = ("montecarlo", "analytic")
DH_LAMBDA = 1.2


class ProtocolError(ValueError):
    pass


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """Independent stream for one trial, derived from the master seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, trial])))


@dataclass(frozen=True)
class RunConfig:
    g: float = 1.0
    omega: int | str = "auto"
    policy: str = "theorem"
    seed: int = 0
    backend: str = "structured"
    trials: int = 1
    assume_postselection: bool = True
    mode: str = "montecarlo"
    allow_small: bool = False
    feedback: str = "closed_form"

    def __post_init__(self):
        if not self.g > 0:
            raise ProtocolError("g must be positive")
        if self.omega != "auto" and (not isinstance(self.omega, int) or self.omega < 1):
            raise ProtocolError(f"omega must be a positive integer or 'auto', got {self.omega!r}")
        if self.policy not in POLICIES:
            raise ProtocolError(f"unknown omega policy {self.policy!r}")
        if self.backend not in circuit.BACKENDS:
            raise ProtocolError(f"unknown backend {self.backend!r}")
        if self.mode not in MODES:
            raise ProtocolError(f"unknown mode {self.mode!r}")
        if self.trials < 1:
            raise ProtocolError("trials must be >= 1")

    def params(self) -> bloch.EvolutionParams:
        return bloch.EvolutionParams(g=self.g, feedback=self.feedback)

    def resolve_omega(self, n: int) -> int:
        if self.omega != "auto":
            return int(self.omega)
        return omega_auto(max(n, 5), self.policy)


@dataclass
class TraceRow:
    round: int
    E: int
    s: int
    zeros: int
    ones: int
    verdict: str


@dataclass
class RunReport:
    E_returned: int
    omega: int
    trace: list[TraceRow] = field(default_factory=list)
    postselection_retries: int = 0
    linear_gate_proxy: int = 0
    nonlinear_time_total: float = 0.0
    predicate_calls: int = 0

    def to_json(self) -> dict:
        d = asdict(self)
        d["trace"] = [asdict(r) for r in self.trace]
        return d

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "E", "s", "zeros", "ones", "verdict"])
        for r in self.trace:
            w.writerow([r.round, r.E, r.s, r.zeros, r.ones, r.verdict])
        return buf.getvalue()


# --------------------------------------------------------------------------
# omega and success estimates
# --------------------------------------------------------------------------

def success_probability_estimate(n: int, omega: int, model: str = "theorem") -> float:
    """Lower bound on the threshold-search success for ensemble size omega.

    ``model="theorem"`` uses the per-round overlap bound 2*sqrt(2)/3;
    ``model="refined"`` uses sqrt(2/3) + epsilon_n.
    """
    return analysis.success_estimate(n, omega, model)


@lru_cache(maxsize=None)
def omega_auto(n: int, policy: str = "theorem") -> int:
    if n < 5:
        raise ProtocolError("omega policies are defined for n >= 5")
    if policy == "theorem":
        log_e = math.log2(n * (n - 1) / 2)
        omega = 1
        while log_e * (8.0 / 9.0) ** omega >= 0.5:
            omega += 1
        return omega
    if policy == "heuristic":
        omega = math.ceil(10 * math.log(math.log(n)))
        if success_probability_estimate(n, omega, "refined") > 0.5:
            return omega
        return omega_auto(n, "theorem")
    raise ProtocolError(f"unknown omega policy {policy!r}")


# --------------------------------------------------------------------------
# procedures
# --------------------------------------------------------------------------

def _check_size(g1: Graph, g2: Graph, cfg: RunConfig):
    if g1.n != g2.n:
        raise ProtocolError(f"graphs differ in size: {g1.n} vs {g2.n}")
    limit = circuit.SIZE_LIMIT[cfg.backend]
    if g1.n > limit:
        raise ProtocolError(f"n = {g1.n} exceeds the {cfg.backend} backend limit of {limit}")
    if g1.n <= SMALL_N:
        if not cfg.allow_small:
            raise ProtocolError(f"n = {g1.n} < 5 needs allow_small (suitability-table mode)")
        table = analysis.suitability_table()
        bad = [s for s in range(2, math.factorial(g1.n) + 1) if not table[(g1.n, s)]["suitable"]]
        if bad:
            raise ProtocolError(f"zoom candidate unsuitable at n = {g1.n}, s = {bad}")


def marked_count(g1: Graph, g2: Graph, threshold: int, cfg: RunConfig) -> int:
    return circuit.cached_marking(g1, g2, threshold, cfg.backend).m_marked


def procedure_b(g1: Graph, g2: Graph, threshold: int, s: int, cfg: RunConfig) -> bloch.CandidateQubit:
    """Measurement-ready qubit for the current sub-arc 0..s.

    The marking circuit supplies m; the Bloch pipeline then orients,
    evolves for T(s/n!) and reorients. m may exceed s once the zoom has
    overshot; the evolution is still well defined and is used as is.
    """
    nfact = math.factorial(g1.n)
    if not 1 <= s <= nfact:
        raise ProtocolError(f"s = {s} outside [1, {nfact}]")
    m = marked_count(g1, g2, threshold, cfg)
    return bloch.evolve_candidate(m, s, nfact, cfg.params())


def _postselect(m, nfact, omega, rng, cfg) -> int:
    """Failed postselection attempts before omega successes."""
    if cfg.assume_postselection:
        return 0
    p = bloch.postselect_prob(m, nfact)
    return int(rng.negative_binomial(omega, p)) if p < 1.0 else 0


def procedure_a(g1: Graph, g2: Graph, threshold: int, cfg: RunConfig, rng: np.random.Generator,
                report: RunReport | None = None) -> bool:
    """True when the zoom detects m > 0 (some permutation has EO > threshold)."""
    _check_size(g1, g2, cfg)
    nfact = math.factorial(g1.n)
    omega = cfg.resolve_omega(g1.n)
    m = marked_count(g1, g2, threshold, cfg)
    s = nfact
    spent = 0.0
    while s >= 1:
        q = procedure_b(g1, g2, threshold, s, cfg)
        ones = bloch.measure_ensemble(q, rng, omega)
        spent += omega * bloch.evolution_time(s, nfact, cfg.g)
        if report is not None:
            retries = _postselect(m, nfact, omega, rng, cfg)
            report.postselection_retries += retries
            report.linear_gate_proxy += omega + retries
            verdict = "m>0" if ones else ("m=0" if s == 1 else "zoom")
            report.trace.append(TraceRow(len(report.trace), threshold, s, omega - ones, ones, verdict))
        if ones:
            break
        s //= 2
    if report is not None:
        report.nonlinear_time_total += spent
        _, bound, _ = analysis.time_budget(g1.n, nfact, cfg.g)
        if spent > omega * bound:
            raise ProtocolError(f"nonlinear time {spent} exceeds the budget {omega * bound}")
    return s >= 1


def zoom_sequence(nfact: int) -> list[int]:
    seq, s = [], nfact
    while s >= 1:
        seq.append(s)
        s //= 2
    return seq


def procedure_a_probability(g1: Graph, g2: Graph, threshold: int, cfg: RunConfig) -> float:
    """Exact probability that procedure_a reports m > 0."""
    _check_size(g1, g2, cfg)
    nfact = math.factorial(g1.n)
    omega = cfg.resolve_omega(g1.n)
    m = marked_count(g1, g2, threshold, cfg)
    if m == 0:
        return 0.0
    miss = 1.0
    for s in zoom_sequence(nfact):
        miss *= (1.0 - bloch.evolve_candidate(m, s, nfact, cfg.params()).p1) ** omega
    return 1.0 - miss


def binary_search(e_max: int, predicate: Callable[[int], bool]) -> tuple[int, int]:
    """Smallest E in [0, e_max] with predicate(E) false, assuming it is monotone.

    predicate(e_max) is never evaluated (no overlap can exceed E_max).
    Returns ``(E, calls)``.
    """
    lo, hi, calls = 0, e_max, 0
    while lo < hi:
        mid = (lo + hi) // 2
        calls += 1
        if predicate(mid):
            lo = mid + 1
        else:
            hi = mid
    return lo, calls


def algorithm2(g1: Graph, g2: Graph, cfg: RunConfig, trial: int = 0,
               predicate: Callable[[int], bool] | None = None) -> RunReport:
    """Claimed MEO by binary search over thresholds.

    ``predicate`` replaces procedure_a (for instance by the classical
    oracle); otherwise every call restarts the zoom from s = n!.
    """
    if g1.n != g2.n:
        raise ProtocolError(f"graphs differ in size: {g1.n} vs {g2.n}")
    if predicate is None:
        _check_size(g1, g2, cfg)
        omega = cfg.resolve_omega(g1.n)
    else:
        omega = 0
    report = RunReport(E_returned=0, omega=omega)
    rng = trial_rng(cfg.seed, trial)
    if predicate is None:
        def predicate(e):
            return procedure_a(g1, g2, e, cfg, rng, report)
    report.E_returned, report.predicate_calls = binary_search(max_threshold(g1, g2), predicate)
    return report


def oracle_predicate(g1: Graph, g2: Graph) -> Callable[[int], bool]:
    return lambda e: count_exceeding(g1, g2, e) > 0


def algorithm2_success_probability(g1: Graph, g2: Graph, cfg: RunConfig) -> float:
    """Probability that algorithm2 returns the true MEO.

    The search only lands on the truth if every m > 0 call on its path
    answers correctly (m = 0 calls are always correct).
    """
    prob = 1.0

    def pred(e):
        nonlocal prob
        if marked_count(g1, g2, e, cfg) > 0:
            prob *= procedure_a_probability(g1, g2, e, cfg)
            return True
        return False

    _check_size(g1, g2, cfg)
    binary_search(max_threshold(g1, g2), pred)
    return prob


# --------------------------------------------------------------------------
# Durr-Hoyer maximum finding
# --------------------------------------------------------------------------

def overlaps_by_code(g1: Graph, g2: Graph, backend: str) -> np.ndarray:
    """EO of every radix code, read off the marking circuit's threshold masks."""
    e_max = max_threshold(g1, g2)
    nfact = math.factorial(g1.n)
    eo = np.zeros(nfact, dtype=np.int64)
    for e in range(e_max):
        eo += circuit.cached_marking(g1, g2, e, backend).marked_mask
    return eo


def grover_state(marked: np.ndarray, rotations: int) -> np.ndarray:
    """Uniform superposition after ``rotations`` Grover iterations."""
    amp = np.full(marked.size, 1.0 / math.sqrt(marked.size))
    for _ in range(rotations):
        amp[marked] *= -1.0
        amp = 2.0 * amp.mean() - amp
    return amp


def grover_baseline(g1: Graph, g2: Graph, cfg: RunConfig, trial: int = 0) -> int:
    """Maximum edge overlap by Durr-Hoyer search over the n! permutation codes."""
    if g1.n != g2.n:
        raise ProtocolError(f"graphs differ in size: {g1.n} vs {g2.n}")
    if g1.n > SMALL_N:
        raise ProtocolError(f"the Grover baseline is limited to n <= {SMALL_N}")
    rng = trial_rng(cfg.seed, trial)
    nfact = math.factorial(g1.n)
    eo = overlaps_by_code(g1, g2, cfg.backend)
    budget = 22.5 * math.sqrt(nfact) + 1.4 * math.log(nfact) ** 2
    best = int(eo[rng.integers(nfact)])
    used = 0.0
    scale = 1.0
    while used < budget:
        marked = circuit.cached_marking(g1, g2, best, cfg.backend).marked_mask if best < max_threshold(g1, g2) \
            else np.zeros(nfact, dtype=bool)
        rotations = int(rng.integers(math.ceil(scale)))
        probs = grover_state(marked, rotations) ** 2
        pick = int(rng.choice(nfact, p=probs / probs.sum()))
        used += rotations + 1
        if eo[pick] > best:
            best = int(eo[pick])
            scale = 1.0
        else:
            scale = min(DH_LAMBDA * scale, math.sqrt(nfact))
    return best


def run_trials(g1: Graph, g2: Graph, cfg: RunConfig) -> list[RunReport]:
    return [algorithm2(g1, g2, cfg, trial=t) for t in range(cfg.trials)]


def report_lines(reports: list[RunReport]) -> str:
    return "".join(json.dumps(r.to_json(), sort_keys=True) + "\n" for r in reports)
