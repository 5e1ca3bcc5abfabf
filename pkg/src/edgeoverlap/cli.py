"""Command-line entry point: ``edgeoverlap <command> ...``.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, bloch, circuit, protocol
from .graphs import GraphError, brute_force_meo, count_exceeding, random_graph, read_graph, similarity


class UsageError(Exception):
    pass


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _omega(text: str):
    if text == "auto":
        return "auto"
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("omega must be an integer or 'auto'") from None
    if value < 1:
        raise argparse.ArgumentTypeError("omega must be >= 1")
    return value


def _n_range(text: str) -> list[int]:
    """``5`` or ``5..8`` (inclusive)."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [int(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad n range {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError(f"empty n range {text!r}")
    return values


def _emit(line: str):
    sys.stdout.write(line + "\n")


def _config(args) -> protocol.RunConfig:
    return protocol.RunConfig(g=args.g, omega=args.omega, policy=args.policy, seed=args.seed,
                              backend=args.backend, trials=args.trials,
                              assume_postselection=args.assume_postselection,
                              allow_small=args.allow_small)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_meo(args) -> int:
    g1, g2 = read_graph(args.graph1), read_graph(args.graph2)
    meo, count = brute_force_meo(g1, g2)
    _emit(json.dumps({"meo": meo, "optimal_count": count, "similarity": similarity(g1, g2)}))
    return 0


def cmd_simulate(args) -> int:
    g1, g2 = read_graph(args.graph1), read_graph(args.graph2)
    summary = circuit.run_marking_pipeline(g1, g2, args.E, args.backend)
    _emit(json.dumps(summary.to_json(), sort_keys=True))
    if args.dump:
        stages = dict(circuit.pipeline_stages(g1, g2, args.E, args.backend))
        if args.stage not in stages:
            raise UsageError(f"unknown stage {args.stage!r}; choose from {sorted(stages)}")
        text = circuit.dump_state(stages[args.stage])
        _write_or_print(text, args.out)
    return 0


def _trial(job):
    g1, g2, cfg, t = job
    return protocol.algorithm2(g1, g2, cfg, trial=t)


def cmd_run(args) -> int:
    g1, g2 = read_graph(args.graph1), read_graph(args.graph2)
    cfg = _config(args)
    if g1.n != g2.n:
        raise UsageError(f"graphs differ in size: {g1.n} vs {g2.n}")
    protocol._check_size(g1, g2, cfg)
    truth = brute_force_meo(g1, g2)[0]
    jobs = [(g1, g2, cfg, t) for t in range(cfg.trials)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_trial, jobs))
    else:
        reports = [_trial(j) for j in jobs]
    for t, rep in enumerate(reports):
        row = {"trial": t, **rep.to_json()}
        _emit(json.dumps(row, sort_keys=True))
    hits = sum(r.E_returned == truth for r in reports)
    summary = {"summary": True, "trials": cfg.trials, "omega": cfg.resolve_omega(g1.n),
               "policy": cfg.policy, "meo": truth, "success_rate": hits / cfg.trials}
    if args.analytic:
        summary["analytic_success"] = protocol.algorithm2_success_probability(g1, g2, cfg)
    _emit(json.dumps(summary, sort_keys=True))
    return 0


def cmd_baseline(args) -> int:
    g1, g2 = read_graph(args.graph1), read_graph(args.graph2)
    cfg = _config(args)
    truth = brute_force_meo(g1, g2)[0]
    results = [protocol.grover_baseline(g1, g2, cfg, trial=t) for t in range(cfg.trials)]
    for t, e in enumerate(results):
        _emit(json.dumps({"trial": t, "E_returned": e}))
    hits = sum(e == truth for e in results)
    _emit(json.dumps({"summary": True, "trials": cfg.trials, "meo": truth, "success_rate": hits / cfg.trials},
                     sort_keys=True))
    return 0


def _verify_circuit(n: int, seed: int) -> dict:
    if not 1 <= n <= circuit.SIZE_LIMIT["structured"]:
        raise UsageError(f"circuit suite needs 1 <= n <= {circuit.SIZE_LIMIT['structured']}")
    rng = np.random.default_rng(seed)
    problems = []
    checked = 0
    for _ in range(5):
        g1, g2 = random_graph(n, 0.5, rng), random_graph(n, 0.5, rng)
        for e in range(min(g1.edge_count, g2.edge_count) + 1):
            nfact = math.factorial(n)
            ref = circuit.run_marking_pipeline(g1, g2, e, "structured")
            want = bloch.candidate_state(ref.m_marked, nfact)
            checked += 1
            if ref.m_marked != count_exceeding(g1, g2, e):
                problems.append({"E": e, "issue": "marked count differs from oracle"})
            if abs(ref.candidate.a0 - want.a0) > 1e-10 or abs(ref.candidate.a1 - want.a1) > 1e-10:
                problems.append({"E": e, "issue": "candidate amplitudes differ from closed form"})
            if n <= circuit.SIZE_LIMIT["dense"]:
                dense = circuit.run_marking_pipeline(g1, g2, e, "dense")
                if np.max(np.abs(np.subtract(dense.raw_amplitudes, ref.raw_amplitudes))) > 1e-10:
                    problems.append({"E": e, "issue": "dense and structured backends disagree"})
    return {"checked": checked, "violations": problems}


def cmd_verify(args) -> int:
    n = args.n
    suite = args.suite
    if suite == "zoomok":
        if not 3 <= n <= analysis.ZOOM_LIMIT:
            raise UsageError(f"zoomok needs 3 <= n <= {analysis.ZOOM_LIMIT}")
        rep = analysis.verify_zoomok(n)
        report = {"violations": rep.violations, "epsilon_n": rep.epsilon_n, "count": len(rep.values)}
    elif suite == "halfway":
        if not 1 <= n <= 10:
            raise UsageError("halfway needs 1 <= n <= 10")
        bad = []
        for s in range(1, math.factorial(n) + 1):
            sp, ok = analysis.verify_halfway(n, s)
            if not ok:
                bad.append({"s": s, "s_prime": sp})
        report = {"violations": bad, "count": math.factorial(n)}
    elif suite == "timecost":
        if not 2 <= n <= 10:
            raise UsageError("timecost needs 2 <= n <= 10")
        report = {"violations": analysis.timecost_sweep([n], args.g)}
    elif suite == "epsilon":
        if n < 5:
            raise UsageError("epsilon needs n >= 5")
        eps = analysis.epsilon_n(n)
        pins = {5: 0.00907762, 6: 0.00151206}
        bad = []
        if n in pins and abs(eps - pins[n]) > 1e-6:
            bad.append({"n": n, "epsilon": eps, "expected": pins[n]})
        report = {"epsilon_n": eps, "violations": bad}
    elif suite == "circuit":
        report = _verify_circuit(n, args.seed)
    elif suite == "calibration":
        cal = bloch.calibrate_orientation(g=args.g)
        chosen = cal["chosen"]
        bad = [] if (chosen["gamma"] == bloch.GAMMA and chosen["corr_sign"] == bloch.CORRECTION_SIGN
                     and chosen["max_residual"] < 1e-6) else [chosen]
        report = {**cal, "violations": bad}
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown suite {suite!r}")
    report = {"suite": suite, "n": n, "ok": not report["violations"], **report}
    out = Path(args.out) if args.out else Path(f"verify_{suite}_n{n}.json")
    out.write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    _emit(json.dumps({"suite": suite, "n": n, "ok": report["ok"],
                      "violations": len(report["violations"]), "report": str(out)}))
    return 0 if report["ok"] else 1


def cmd_figure(args) -> int:
    name = args.name
    if name == "evsbij":
        if not (args.graph1 and args.graph2):
            raise UsageError("evsbij needs --graph1 and --graph2")
        text, rows = analysis.figure_data(name, g1=read_graph(args.graph1), g2=read_graph(args.graph2))
    elif name == "alldat":
        if len(args.n) != 1 or not 1 <= args.n[0] <= analysis.ZOOM_LIMIT:
            raise UsageError(f"alldat needs a single n in [1, {analysis.ZOOM_LIMIT}]")
        text, rows = analysis.figure_data(name, n=args.n[0])
    elif name == "en":
        if min(args.n) < 5:
            raise UsageError("en needs n >= 5")
        text, rows = analysis.figure_data(name, n_values=args.n)
    elif name == "psucc":
        if min(args.n) < 5:
            raise UsageError("psucc needs n >= 5")
        text, rows = analysis.figure_data(name, n_values=args.n, policy=args.policy)
    else:  # pragma: no cover
        raise UsageError(f"unknown figure {name!r}")
    _write_or_print(text, args.out)
    _emit(json.dumps({"figure": name, "rows": rows, "out": args.out}))
    return 0


def _write_or_print(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _add_protocol_flags(p):
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--omega", type=_omega, default="auto")
    p.add_argument("--policy", choices=protocol.POLICIES, default="theorem")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--backend", choices=circuit.BACKENDS, default="structured")
    p.add_argument("--assume-postselection", type=_bool, default=True)
    p.add_argument("--allow-small", action="store_true")
    p.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgeoverlap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("meo", help="exact maximum edge overlap and similarity")
    p.add_argument("graph1")
    p.add_argument("graph2")
    p.set_defaults(func=cmd_meo)

    p = sub.add_parser("simulate", help="run the marking circuit for one threshold")
    p.add_argument("graph1")
    p.add_argument("graph2")
    p.add_argument("--E", type=int, required=True)
    p.add_argument("--backend", choices=circuit.BACKENDS, default="structured")
    p.add_argument("--dump", action="store_true", help="print the register dump of --stage")
    p.add_argument("--stage", default="compare")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="nonlinear search (binary search over thresholds)")
    p.add_argument("graph1")
    p.add_argument("graph2")
    _add_protocol_flags(p)
    p.add_argument("--analytic", action="store_true", help="also report the exact success probability")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("baseline", help="Durr-Hoyer maximum search (n <= 4)")
    p.add_argument("graph1")
    p.add_argument("graph2")
    _add_protocol_flags(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("verify", help="numerical verification suites")
    p.add_argument("--suite", required=True,
                   choices=("zoomok", "halfway", "timecost", "epsilon", "circuit", "calibration"))
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("figure", help="CSV data behind the figures")
    p.add_argument("--name", required=True, choices=("evsbij", "alldat", "en", "psucc"))
    p.add_argument("--n", type=_n_range, default=[5])
    p.add_argument("--graph1")
    p.add_argument("--graph2")
    p.add_argument("--policy", choices=protocol.POLICIES, default="heuristic")
    p.add_argument("--out")
    p.set_defaults(func=cmd_figure)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "trials", 1) < 1 or getattr(args, "jobs", 1) < 1:
        parser.error("--trials and --jobs must be >= 1")
    try:
        return args.func(args)
    except (UsageError, GraphError, protocol.ProtocolError, analysis.AnalysisError,
            circuit.CircuitError, bloch.EvolutionError, ValueError, OSError) as exc:
        sys.stderr.write(f"edgeoverlap: error: {exc}\n")
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
