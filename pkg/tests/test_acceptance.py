"""Acceptance suite: one test per criterion, reported as PASS/FAIL lines at the end of the run."""

import itertools

import numpy as np
import pytest

from fframes import kernel
from fframes.constructions import (ConstraintSet, check_A1, check_A2, check_A3, check_dominance,
                                   check_solidity, construct_theta_ladder, shift_rows, tilde_norm)
from fframes.frames import (FrameSystem, LowerFrameInequalityError, dual_sequence,
                            estimate_frame_bounds, null_space_projector, verify_expansions)
from fframes.kernel import Lp, WeightedL2
from fframes.ladder import SpaceLadder, ThetaLadder, check_ladder_axioms
from fframes.models import (MODEL_NAMES, build_coordinate_model, build_hermite_model,
                            build_weighted_shift_model, hermite_weights, load_model)

crit = pytest.mark.criterion


def _models():
    return {name: load_model(name) for name in MODEL_NAMES}


@pytest.fixture(scope="module")
def models():
    return _models()


@crit(1, "constructed X levels s >= 1 have A_s = B_s = 1 (coordinate, weighted shift)")
def test_constructed_x_levels_are_tight():
    coord = build_coordinate_model()
    shift = build_weighted_shift_model()
    for frame in (coord.frame, shift.frame):
        for s in range(1, frame.S + 1):
            fb = estimate_frame_bounds(frame, s, samples=100)
            assert abs(fb.A - 1.0) <= 1e-10, (frame.label, s, fb)
            assert abs(fb.B - 1.0) <= 1e-10, (frame.label, s, fb)


@crit(2, "constructed Theta ladder on the Hermite model has A_s = B_s = 1 at every level")
def test_constructed_theta_is_tight_on_hermite():
    m = build_hermite_model()
    theta = construct_theta_ladder(m.x_ladder, m.frame)
    frame = FrameSystem(m.frame.rows, m.x_ladder, theta)
    for s in range(frame.S + 1):
        fb = estimate_frame_bounds(frame, s)
        assert fb.method == "svd"
        assert abs(fb.A - 1.0) <= 1e-10 and abs(fb.B - 1.0) <= 1e-10, (s, fb)


@crit(3, "full-sum expansion residuals <= 1e-8 on every model and level")
def test_expansions_on_every_model(models):
    for name, inst in models.items():
        for dual in (inst.dual, dual_sequence(inst.frame, 0)):
            rep = verify_expansions(inst.frame, dual, count=20, seed=0)
            assert max(rep.residual_primal) <= 1e-8, (name, rep.residual_primal)
            assert max(rep.residual_dual) <= 1e-8, (name, rep.residual_dual)


def _oracle_shift(c, weights):
    """Brute force over sign patterns of the active rows of the shift frame.

    Written directly for rows e_1, e_1, e_2, ..., e_N: under a fixed pattern
    each coordinate is confined to an interval, and the optimum is the point
    of the interval closest to 0.  Returns (value, full sign pattern).
    """
    n = len(weights)
    col = [0] + list(range(n))
    active = [i for i in range(len(c)) if c[i] != 0.0]
    best, best_sig = np.inf, None
    for sig in itertools.product((-1, 1), repeat=len(active)):
        lo, hi = np.full(n, -np.inf), np.full(n, np.inf)
        for i, s in zip(active, sig):
            j = col[i]
            if s > 0:
                lo[j] = max(lo[j], abs(c[i]))
            else:
                hi[j] = min(hi[j], -abs(c[i]))
        if np.any(lo > hi):
            continue
        z = np.clip(0.0, lo, hi)
        v = float(np.sqrt(np.sum((weights * z) ** 2)))
        if best_sig is None or v < best - 1e-12 * max(1.0, best):
            best, best_sig = v, sig
    full = [0] * len(c)
    for i, s in zip(active, best_sig):
        full[i] = s
    return best, tuple(full)


def _grid_shift(c, h=1e-5, radius=4.0):
    """Dense-grid minimum of |z|_2 over |g_i(z)| >= |c_i| on the shift frame.

    The objective is a sum over coordinates and each constraint involves
    one coordinate, so the minimum over the product grid is the sum of the
    per-coordinate grid minima.
    """
    n = len(c) - 1
    grid = np.arange(-radius, radius + h / 2, h)
    need = np.zeros(n)
    need[0] = max(abs(c[0]), abs(c[1]))
    need[1:] = np.abs(c[2:])
    total = 0.0
    for j in range(n):
        ok = np.abs(grid) >= need[j]
        total += np.min(grid[ok] ** 2)
    return np.sqrt(total)


@crit(4, "tilde_norm matches sign-pattern brute force and dense grid on the shift frame")
def test_tilde_oracles_on_shift_frame():
    rng = np.random.default_rng(2024)
    u = shift_rows(3)
    for c, want in (([1, 0, 0, 0], 1.0), ([1, 1, 0, 0], 1.0), ([1, 0, 1, 0], np.sqrt(2))):
        for method in ("auto", "bnb", "enumerate"):
            r = tilde_norm(ConstraintSet(np.array(c, float), u, Lp(2)), method=method)
            assert abs(r.value - want) <= 1e-9
    for k in range(50):
        m = int(rng.integers(3, 11))
        n = m - 1
        c = rng.uniform(-3, 3, m)
        if k % 5 == 0:
            c[rng.integers(0, m, 2)] = 0.0  # inactive rows and ties
        s = int(rng.integers(0, 4))
        weights = hermite_weights(n, 3)[s]
        cs = ConstraintSet(c, shift_rows(n), WeightedL2(weights))
        want, pattern = _oracle_shift(c, weights)
        for method in ("auto", "bnb", "enumerate"):
            r = tilde_norm(cs, method=method)
            assert r.status == "optimal"
            assert abs(r.value - want) <= 1e-9 * max(1.0, want), (k, method)
            assert r.sign_pattern == pattern, (k, method, r.sign_pattern, pattern)
        plain = tilde_norm(ConstraintSet(c, shift_rows(n), Lp(2)))
        assert abs(plain.value - _grid_shift(c)) <= 1e-4


@crit(5, "weighted shift: A1 closed-form certificate, A2 curves, A3 with A_s = 1")
def test_condition_suite_on_weighted_shift():
    frame = build_weighted_shift_model().frame
    for s in range(frame.S + 1):
        a1 = check_A1(frame, s, trials=1000)
        assert a1.verdict == "pass" and a1.details["certificate"] == "closed-form"
        a2 = check_A2(frame, s, trials=20)
        assert a2.verdict == "pass"
        for curve in a2.details["curves"]:
            assert all(b <= a + 1e-9 * max(1.0, curve[0]) for a, b in zip(curve, curve[1:]))
            assert curve[-1] == 0.0
        a3 = check_A3(frame, s)
        assert a3.verdict == "pass"
        assert abs(a3.estimate - 1.0) <= 1e-9 and abs(a3.details["bessel"] - 1.0) <= 1e-9


@crit(6, "tilde_norm(c) >= |||c||| on 500 samples per model")
def test_norm_dominance(models):
    for name, inst in models.items():
        rep = check_dominance(inst.frame, 0, samples=500)
        assert rep.passed and rep.estimate <= 1e-9, (name, rep.estimate)


@crit(7, "solidity on 500 dominated pairs per model")
def test_solidity(models):
    for name, inst in models.items():
        rep = check_solidity(inst.frame, 0, samples=500)
        assert rep.passed and rep.estimate <= 1e-9, (name, rep.estimate)


@crit(8, "ladder axioms on all four models; l^p ladder monotonicity exact")
def test_ladder_axioms(models):
    for name, inst in models.items():
        for lad in (inst.x_ladder, inst.theta_ladder):
            rep = check_ladder_axioms(lad)
            assert rep.passed, (name, lad.label, rep.monotonicity_violation)
    lp = models["lp_shift_invariant"].theta_ladder
    assert check_ladder_axioms(lp).monotonicity_violation == 0.0


@crit(9, "shift-frame l2 bounds equal (1, sqrt 2) against the SVD oracle")
def test_shift_frame_bounds():
    for n in (2, 5, 16, 64):
        rows = shift_rows(n)
        frame = FrameSystem(rows, SpaceLadder([Lp(2), Lp(2)], n), ThetaLadder([Lp(2), Lp(2)], n + 1))
        s = np.linalg.svd(rows, compute_uv=False)
        for level in (0, 1):
            fb = estimate_frame_bounds(frame, level)
            assert abs(fb.A - s[-1]) <= 1e-9 and abs(fb.B - s[0]) <= 1e-9
            assert abs(fb.A - 1.0) <= 1e-9 and abs(fb.B - np.sqrt(2)) <= 1e-9


@crit(10, "rank-deficient frames fail the lower inequality; Bessel systems leave the predicted floor")
def test_negative_controls():
    rows = np.array([[1.0, 0, 0], [0, 1, 0], [1, 1, 0], [0, 2, 0]])
    frame = FrameSystem(rows, SpaceLadder([Lp(2), WeightedL2([1, 2, 4])], 3),
                        ThetaLadder([Lp(2), Lp(1.5)], 4))
    for s in (0, 1):
        fb = estimate_frame_bounds(frame, s)
        assert fb.A == 0.0 and fb.note == "lower frame inequality fails"
    with pytest.raises(LowerFrameInequalityError):
        dual_sequence(frame)
    dual = dual_sequence(frame, force=True)
    tv = np.random.default_rng(3).standard_normal((20, 3))
    rep = verify_expansions(frame, dual, test_vectors=tv)
    assert not rep.passed
    p = null_space_projector(rows)
    for s in (0, 1):
        spec = frame.x_ladder.levels[s]
        floor = max(kernel.norm(p @ v, spec) / kernel.norm(v, spec) for v in tv)
        assert floor > 0.1
        assert abs(rep.predicted_floor[s] - floor) <= 1e-12
        assert abs(rep.residual_primal[s] - floor) <= 1e-9


@crit(11, "repeated preset runs give byte-identical reports apart from wall time")
def test_determinism(preset_runs):
    for name, (report, first, second) in preset_runs.items():
        assert first == second, name
        assert report.passed, name
