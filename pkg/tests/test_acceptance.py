"""Acceptance criteria 1-10, one PASS/FAIL line each.

Run under pytest (lines are repeated in the terminal summary) or directly:
``python3 tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
import pytest

from edgeoverlap import analysis, bloch, circuit, graphs, protocol, radix

RESULTS: list[str] = []


def record(num, title, ok, detail, elapsed, limit):
    within = elapsed <= limit
    status = "PASS" if ok and within else "FAIL"
    line = f"[{status}] criterion {num:>2}: {title} | {detail} | {elapsed:.2f}s (limit {limit:g}s)"
    RESULTS.append(line)
    print(line)
    assert ok, line
    assert within, line


def random_pairs(n, count, seed):
    rng = np.random.default_rng(seed)
    return [(graphs.random_graph(n, 0.5, rng), graphs.random_graph(n, 0.5, rng)) for _ in range(count)]


def test_c01_oracle_equivalence():
    t0 = time.perf_counter()
    bad = []
    for n in range(3, 9):
        for g1, g2 in random_pairs(n, 50, 1000 + n):
            rep = protocol.algorithm2(g1, g2, protocol.RunConfig(), predicate=protocol.oracle_predicate(g1, g2))
            if rep.E_returned != graphs.brute_force_meo(g1, g2)[0]:
                bad.append((n, g1.to_json(), g2.to_json()))
    record(1, "oracle-substituted search equals brute-force MEO", not bad,
           f"300 pairs, n=3..8, mismatches={len(bad)}", time.perf_counter() - t0, 60)


def test_c02_epsilon_constants():
    t0 = time.perf_counter()
    e5, e6 = analysis.epsilon_n(5), analysis.epsilon_n(6)
    ok = abs(e5 - 0.00907762) <= 1e-6 and abs(e6 - 0.00151206) <= 1e-6
    record(2, "epsilon_5 and epsilon_6", ok, f"eps5={e5:.8f} eps6={e6:.8f} tol=1e-6",
           time.perf_counter() - t0, 1)


def test_c03_theorem1_sweep():
    t0 = time.perf_counter()
    counts = {}
    for n in (5, 6):
        rep = analysis.verify_zoomok(n)
        counts[n] = len(rep.violations)
    record(3, "zoom overlap within [1/sqrt2, per-s upper bound]", not any(counts.values()),
           f"violations n5={counts[5]} n6={counts[6]} (slack {analysis.BOUND_SLACK:g})",
           time.perf_counter() - t0, 10)


def test_c04_radix_example():
    t0 = time.perf_counter()
    perm = [1, 3, 0, 5, 2, 4]
    code_ok = radix.code_string(radix.radix_encode(perm)) == "002143"
    trace = ["".join(map(str, t)) for t in radix.hall_trace(radix.parse_code("002143"), [1, 2, 3, 4, 5, 6])]
    trace_ok = trace == ["123456", "213456", "213456", "241356", "241356", "241635"]
    apply_ok = radix.hall_apply(radix.parse_code("002143")) == perm
    record(4, "worked radix example and P-cascade trace", code_ok and trace_ok and apply_ok,
           f"trace={'->'.join(trace)}", time.perf_counter() - t0, 1)


def test_c05_circuit_formula_agreement():
    t0 = time.perf_counter()
    nfact = 24
    worst_amp, worst_backend, bad_m, runs = 0.0, 0.0, 0, 0
    for g1, g2 in random_pairs(4, 20, 2024):
        for e in range(graphs.max_threshold(g1, g2) + 1):
            runs += 1
            stages_d = dict(circuit.pipeline_stages(g1, g2, e, "dense"))
            stages_s = dict(circuit.pipeline_stages(g1, g2, e, "structured"))
            for name in stages_d:
                diff = np.max(np.abs(stages_d[name].to_dense() - stages_s[name].to_dense()))
                worst_backend = max(worst_backend, float(diff))
            for backend in circuit.BACKENDS:
                s = circuit.run_marking_pipeline(g1, g2, e, backend)
                m = graphs.count_exceeding(g1, g2, e)
                bad_m += s.m_marked != m
                want = bloch.candidate_state(m, nfact)
                a0, a1 = s.raw_amplitudes
                worst_amp = max(worst_amp, abs(s.candidate.a0 - want.a0), abs(s.candidate.a1 - want.a1),
                                abs(a0 - (nfact - m) / nfact), abs(a1 - m / nfact))
    ok = worst_amp <= 1e-10 and worst_backend <= 1e-10 and bad_m == 0
    record(5, "marking circuit vs closed-form candidate", ok,
           f"{runs} (pair,E) runs, max amp err={worst_amp:.1e}, dense/structured={worst_backend:.1e}, "
           f"m mismatches={bad_m}", time.perf_counter() - t0, 60)


def test_c06_nonlinear_dynamics():
    t0 = time.perf_counter()
    worst, worst_end = 0.0, 0.0
    for s in range(1, 121):
        _, got, want = bloch.endpoint_history(s, 120)
        worst = max(worst, float(np.max(np.abs(got - want))))
        worst_end = max(worst_end, float(got[-1]))
    ok = worst <= 1e-6 and worst_end <= 1e-6
    record(6, "ODE endpoint overlap vs closed form, n=5", ok,
           f"max |ODE - closed form|={worst:.1e}, max overlap at T={worst_end:.1e}",
           time.perf_counter() - t0, 120)


def test_c07_lemma2_budget():
    t0 = time.perf_counter()
    bad = analysis.timecost_sweep(range(2, 9), g=1.0)
    record(7, "time budget holds for n=2..8, all s", not bad, f"violations={len(bad)}",
           time.perf_counter() - t0, 10)


def test_c08_end_to_end():
    t0 = time.perf_counter()
    cfg = protocol.RunConfig(omega="auto", policy="theorem")
    omega = cfg.resolve_omega(5)
    cases = [("path-5", graphs.path_graph(5), graphs.path_graph(5))]
    cases += [(f"random-{i}", g1, g2) for i, (g1, g2) in enumerate(random_pairs(5, 5, 77))]
    rates = []
    for name, g1, g2 in cases:
        truth = graphs.brute_force_meo(g1, g2)[0]
        hits = sum(protocol.algorithm2(g1, g2, cfg, trial=t).E_returned == truth for t in range(100))
        rates.append((name, hits / 100))
    ok = all(r >= 0.5 for _, r in rates)
    record(8, f"algorithm2 success >= 50% (omega={omega})", ok,
           ", ".join(f"{k}={v:.2f}" for k, v in rates), time.perf_counter() - t0, 600)


def test_c09_grover_baseline():
    t0 = time.perf_counter()
    cfg = protocol.RunConfig()
    cases = [("K3/K3", graphs.complete_graph(3), graphs.complete_graph(3)),
             ("K3/P3", graphs.complete_graph(3), graphs.path_graph(3)),
             ("P4/P4", graphs.path_graph(4), graphs.path_graph(4)),
             ("C4/S4", graphs.cycle_graph(4), graphs.star_graph(4))]
    cases += [(f"rand4-{i}", g1, g2) for i, (g1, g2) in enumerate(random_pairs(4, 3, 31))]
    rates = []
    for name, g1, g2 in cases:
        truth = graphs.brute_force_meo(g1, g2)[0]
        hits = sum(protocol.grover_baseline(g1, g2, cfg, trial=t) == truth for t in range(200))
        rates.append((name, hits / 200))
    ok = all(r > 0.5 for _, r in rates)
    record(9, "Durr-Hoyer baseline success > 50%, n=3,4", ok,
           ", ".join(f"{k}={v:.2f}" for k, v in rates), time.perf_counter() - t0, 300)


def test_c10_one_sided_error():
    t0 = time.perf_counter()
    cfg = protocol.RunConfig(omega="auto")
    pairs = [(graphs.path_graph(5), graphs.path_graph(5))] + random_pairs(5, 4, 55)
    calls = wrong = 0
    for i, (g1, g2) in enumerate(pairs):
        e = graphs.max_threshold(g1, g2)
        assert graphs.count_exceeding(g1, g2, e) == 0
        rng = protocol.trial_rng(10, i)
        for _ in range(2000):
            calls += 1
            wrong += protocol.procedure_a(g1, g2, e, cfg, rng)
    record(10, "m=0 never reported as m>0", wrong == 0, f"{calls} calls, m>0 verdicts={wrong}",
           time.perf_counter() - t0, 300)


if __name__ == "__main__":
    for fn in [v for k, v in sorted(globals().items()) if k.startswith("test_c")]:
        try:
            fn()
        except AssertionError:
            pass
