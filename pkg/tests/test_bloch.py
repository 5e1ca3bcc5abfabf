import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from edgeoverlap import bloch
from edgeoverlap.bloch import CandidateQubit, EvolutionError, EvolutionParams


def test_candidate_examples():
    assert bloch.candidate_state(0, 120) == CandidateQubit(1.0, 0.0)
    assert bloch.candidate_state(120, 120) == CandidateQubit(0.0, 1.0)
    half = bloch.candidate_state(60, 120)
    assert half.a0 == pytest.approx(1 / math.sqrt(2), abs=1e-15) and half.a1 == pytest.approx(half.a0)
    with pytest.raises(ValueError):
        bloch.candidate_state(121, 120)


def test_candidate_inner_expansion():
    assert bloch.candidate_inner(0, 100) == 1.0
    assert bloch.candidate_inner(100, 100) == 0.0
    y = 0.01
    exact = (1 - y) / math.sqrt(1 - 2 * y + 2 * y * y)
    assert bloch.candidate_inner(1, 100) == pytest.approx(exact, abs=1e-15)
    assert abs(exact - (1 - 0.5 * y * y)) < 1e-5


def test_postselect_prob():
    assert bloch.postselect_prob(0, 24) == 1.0
    assert bloch.postselect_prob(12, 24) == 0.5
    assert min(bloch.postselect_prob(m, 720) for m in range(721)) == 0.5


def test_alpha0_examples():
    assert bloch.alpha0(0, 24) == 0.0
    assert bloch.alpha0(24, 24) == pytest.approx(math.pi)
    assert bloch.alpha0(12, 24) == pytest.approx(math.pi / 2)
    for s in range(25):
        assert math.cos(bloch.alpha0(s, 24) / 2) == pytest.approx(bloch.candidate_inner(s, 24), abs=1e-14)


def test_evolution_time_examples():
    assert bloch.evolution_time(24, 24) == pytest.approx(0.0, abs=1e-15)
    assert bloch.evolution_time(12, 24) == pytest.approx(2 * math.log(1 + math.sqrt(2)), abs=1e-12)
    assert bloch.evolution_time(12, 24, g=2.0) == pytest.approx(math.log(1 + math.sqrt(2)), abs=1e-12)
    with pytest.raises(ValueError):
        bloch.evolution_time(0, 24)
    with pytest.raises(ValueError):
        bloch.evolution_time(1, 24, g=0)


@pytest.mark.parametrize("n", range(2, 7))
def test_evolution_time_log_bound_and_monotone(n):
    nfact = math.factorial(n)
    ts = [bloch.evolution_time(s, nfact) for s in range(1, nfact + 1)]
    assert all(a > b for a, b in zip(ts, ts[1:]))
    for s, t in zip(range(1, nfact + 1), ts):
        assert t <= 2 * math.log(2 * nfact / s) + 1e-12


def test_closed_form_alpha():
    a0 = math.pi / 2
    assert bloch.closed_form_alpha(0, a0, 1) == pytest.approx(math.cos(a0 / 2))
    t_end = bloch.evolution_time(12, 24)
    assert abs(bloch.closed_form_alpha(t_end, a0, 1)) < 1e-12
    v = bloch.closed_form_alpha(1.0, a0, 1.0)
    c, ch, sh = math.cos(a0 / 2), math.cosh(0.5), math.sinh(0.5)
    assert 0 < v < 1 / math.sqrt(2) and v == pytest.approx((c * ch - sh) / (ch - c * sh))
    with pytest.raises(ValueError):
        bloch.closed_form_alpha(t_end + 1.0, a0, 1)
    with pytest.raises(ValueError):
        bloch.closed_form_alpha(-1.0, a0, 1)


def test_closed_form_alpha_monotone():
    for a0 in np.linspace(0.05, math.pi - 0.05, 12):
        t_end = 2 * math.log(1 / math.tan(a0 / 4))
        vals = [bloch.closed_form_alpha(t, a0, 1.0) for t in np.linspace(0, t_end, 200)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_closed_form_mu_identity():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a0 = rng.uniform(0.01, math.pi - 0.01)
        mu0 = rng.uniform(0.0, a0)
        t = 2 * math.log(1 / math.tan(a0 / 4))
        ca, cm = math.cos(a0 / 2), math.cos(mu0 / 2)
        want = (cm - ca) / (1 - cm * ca)
        got = bloch.closed_form_mu(t, mu0, 1.0)
        assert abs(got - want) < 1e-12
    assert bloch.closed_form_mu(0.3, 1.1, 1.0) == bloch.closed_form_alpha(0.3, 1.1, 1.0)
    # a coincident pair never separates
    for t in (0.0, 0.7, 3.0):
        assert bloch.closed_form_mu(t, 0.0, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_orient_arc_geometry():
    nfact, s = 120, 40
    rot = bloch.orientation_matrix(s, nfact)
    assert np.allclose(rot @ rot.T, np.eye(3), atol=1e-14) and np.linalg.det(rot) == pytest.approx(1.0)
    p0 = bloch.orient_arc(bloch.candidate_state(0, nfact), s, nfact).array()
    ps = bloch.orient_arc(bloch.candidate_state(s, nfact), s, nfact).array()
    assert math.acos(np.clip(p0 @ ps, -1, 1)) == pytest.approx(bloch.alpha0(s, nfact), abs=1e-12)
    mid = (p0 + ps) / np.linalg.norm(p0 + ps)
    assert np.allclose(mid, [1.0, 0.0, 0.0], atol=1e-12)
    tangent = (ps - p0) / np.linalg.norm(ps - p0)
    assert np.allclose(tangent, [0, math.sqrt(0.5), math.sqrt(0.5)], atol=1e-12)
    q = bloch.candidate_state(13, nfact)
    back = rot.T @ bloch.orient_arc(q, s, nfact).array()
    assert np.allclose(back, q.bloch(), atol=1e-12)


def test_evolve_trivial_cases():
    pts = np.array([[0, 0, 1.0], [0, 0, -1.0]])
    final, times, traj = bloch.evolve_nonlinear(pts, 0.0, math.pi, trajectory=True)
    assert np.array_equal(final, pts) and traj.shape == (1, 2, 3)
    with pytest.raises(EvolutionError):
        bloch.evolve_nonlinear(np.array([[0, 0, 2.0]]), 1.0, 1.0)


def test_step_guard():
    with pytest.raises(ValueError):
        EvolutionParams(g=1.0, dt=0.02)
    with pytest.raises(ValueError):
        EvolutionParams(feedback="bogus")
    with pytest.raises(ValueError):
        EvolutionParams(g=-1.0)


@pytest.mark.parametrize("s", [1, 2, 5, 17, 60, 119])
def test_endpoint_overlap_follows_closed_form(s):
    times, got, want = bloch.endpoint_history(s, 120)
    assert np.max(np.abs(got - want)) < 1e-6
    assert got[-1] < 1e-6


def test_endpoint_feedback_self_consistent():
    params = EvolutionParams(feedback="endpoints")
    _, got, want = bloch.endpoint_history(9, 120, params)
    assert np.max(np.abs(got - want)) < 1e-6


def test_calibration_selects_documented_orientation():
    report = bloch.calibrate_orientation(cases=((1, 120), (30, 120), (119, 120)))
    best = report["chosen"]
    assert best["gamma"] == bloch.GAMMA and best["corr_sign"] == bloch.CORRECTION_SIGN
    assert best["max_residual"] < 1e-6
    others = [r for r in report["candidates"] if r is not best]
    assert all(r["max_residual"] > 0.1 for r in others)


def test_sphere_preserved():
    pts = bloch.launch_points(range(0, 121, 10), 120, 120)
    pts = bloch.launch_points(range(0, 61, 5), 60, 120)
    _, _, traj = bloch.evolve_nonlinear(pts, bloch.evolution_time(60, 120), bloch.alpha0(60, 120),
                                        trajectory=True)
    assert np.max(np.abs(np.linalg.norm(traj, axis=2) - 1)) < 1e-9


def test_step_halving_converged():
    coarse = bloch.evolve_candidate(3, 7, 120)
    fine = bloch.evolve_candidate(3, 7, 120, EvolutionParams(dt=0.5 * min(0.01, bloch.evolution_time(7, 120) / 2000)))
    assert abs(coarse.p1 - fine.p1) < 1e-8


def test_final_orient_examples():
    e0 = np.array([0.6, 0.8, 0.0])
    e1 = -e0
    assert bloch.final_orient(e0, e0, e1) == CandidateQubit(1.0, 0.0)
    assert bloch.final_orient(e1, e0, e1) == CandidateQubit(0.0, 1.0)
    mid = np.array([0.0, 0.0, 1.0])
    assert bloch.final_orient(mid, e0, e1).p1 == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(EvolutionError):
        bloch.final_orient(mid, e0, np.array([1.0, 0, 0]))


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_final_rotation_is_rotation(x, y, z):
    v = np.array([x, y, z])
    if np.linalg.norm(v) < 1e-3:
        return
    e0 = v / np.linalg.norm(v)
    r = bloch.final_rotation(e0, -e0)
    assert np.allclose(r @ r.T, np.eye(3), atol=1e-12)
    assert np.allclose(r @ e0, [0, 0, 1], atol=1e-12)


def test_evolved_endpoints_exact():
    for s in (1, 3, 60, 120):
        assert bloch.evolve_candidate(0, s, 120) == CandidateQubit(1.0, 0.0)
        assert bloch.evolve_candidate(s, s, 120).p1 == pytest.approx(1.0, abs=1e-5)


def test_inner_candidates_move_monotonically():
    p = [bloch.evolve_candidate(m, 40, 120).p1 for m in range(0, 41)]
    assert all(a < b for a, b in zip(p, p[1:]))


def test_measure_statistics():
    rng = np.random.default_rng(2024)
    zero, one = CandidateQubit(1.0, 0.0), CandidateQubit(0.0, 1.0)
    assert all(bloch.measure(zero, rng) == 0 for _ in range(1000))
    assert all(bloch.measure(one, rng) == 1 for _ in range(1000))
    plus = CandidateQubit(math.sqrt(0.5), math.sqrt(0.5))
    freq = bloch.measure_ensemble(plus, np.random.default_rng(7), 100_000) / 100_000
    assert 0.49 <= freq <= 0.51


def test_candidate_validation():
    with pytest.raises(ValueError):
        CandidateQubit(0.5, 0.5)
    with pytest.raises(ValueError):
        CandidateQubit(-1.0, 0.0)


def test_trajectory_csv():
    text = bloch.trajectory_csv(2, 7, 120)
    lines = text.strip().splitlines()
    assert lines[0] == "t,x,y,z,inner"
    last = [float(v) for v in lines[-1].split(",")]
    assert last[4] < 1e-6 and math.isclose(sum(v * v for v in last[1:4]), 1.0, abs_tol=1e-9)
