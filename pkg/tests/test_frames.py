import numpy as np
import pytest

from fframes import kernel
from fframes.constructions import shift_rows
from fframes.frames import (FrameSystem, LowerFrameInequalityError, analyze, check_range_closed,
                            dual_sequence, estimate_frame_bounds, null_space_projector,
                            verify_expansions)
from fframes.kernel import Lp, WeightedL2
from fframes.ladder import SpaceLadder, ThetaLadder, measure_lambda
from fframes.models import MODEL_NAMES, hermite_weights, load_model


def l2_frame(rows, S=1):
    rows = np.asarray(rows, float)
    m, n = rows.shape
    return FrameSystem(rows, SpaceLadder([Lp(2)] * (S + 1), n), ThetaLadder([Lp(2)] * (S + 1), m))


def weighted_shift_l2(N=4, S=2):
    x = SpaceLadder([WeightedL2(w) for w in hermite_weights(N, S)], N)
    return FrameSystem(shift_rows(N), x, ThetaLadder([Lp(2)] * (S + 1), N + 1))


def test_analyze_examples():
    f = l2_frame(shift_rows(4))
    assert np.array_equal(analyze(f, [1, 0, 0, 0]), [1, 1, 0, 0, 0])
    assert np.array_equal(analyze(f, [0, 1, 0, 0]), [0, 0, 1, 0, 0])
    v = np.array([3.0, -1, 2])
    assert np.array_equal(analyze(l2_frame(np.eye(3)), v), v)
    with pytest.raises(kernel.DimensionError):
        analyze(f, [1, 2])


def test_frame_validation():
    with pytest.raises(ValueError):
        l2_frame([[1, 0], [0, 0]])
    with pytest.raises(kernel.DimensionError):
        FrameSystem(np.eye(2), SpaceLadder([Lp(2)] * 2, 3), ThetaLadder([Lp(2)] * 2, 2))


def test_bounds_identity_and_shift():
    b = estimate_frame_bounds(l2_frame(np.eye(3)), 0)
    assert (b.A, b.B, b.tight, b.method) == (1.0, 1.0, True, "svd")
    b = estimate_frame_bounds(l2_frame(shift_rows(4)), 0)
    oracle = np.linalg.svd(shift_rows(4), compute_uv=False)
    assert b.B == pytest.approx(oracle[0], abs=1e-12) and b.B == pytest.approx(np.sqrt(2), abs=1e-12)
    assert b.A == pytest.approx(oracle[-1], abs=1e-12) and b.A == pytest.approx(1.0, abs=1e-12)
    assert not b.tight


def test_rank_deficient_bounds():
    f = l2_frame([[1, 1], [1, 1]])
    b = estimate_frame_bounds(f, 0)
    assert b.A == 0.0 and b.note == "lower frame inequality fails"
    fs = FrameSystem(np.array([[1.0, 1], [1, 1]]), SpaceLadder([Lp(2), Lp(2)], 2),
                     ThetaLadder([Lp(1.5), Lp(1.5)], 2))
    b = estimate_frame_bounds(fs, 0)
    assert b.A == 0.0 and b.note == "lower frame inequality fails"
    with pytest.raises(LowerFrameInequalityError, match="lower frame inequality fails"):
        dual_sequence(f)


def test_sampled_bounds_bracket_ratios():
    rows = np.random.default_rng(0).standard_normal((7, 4))
    f = FrameSystem(rows, SpaceLadder([Lp(2), Lp(1.5)], 4), ThetaLadder([Lp(1.5), Lp(1.2)], 7))
    b = estimate_frame_bounds(f, 0, samples=200, seed=0)
    assert b.method == "sampled-optimization" and b.inner_estimate
    # an independent dense sample cannot beat the refined extremes by much
    xs = np.random.default_rng(9).standard_normal((20000, 4))
    ratios = np.array([kernel.norm(rows @ x, Lp(1.5)) / kernel.norm(x, Lp(2)) for x in xs])
    assert ratios.min() >= b.A * (1 - 1e-3)
    assert ratios.max() <= b.B * (1 + 1e-3)


def test_bound_consistency_on_models():
    for name in MODEL_NAMES:
        m = load_model(name)
        rng = np.random.default_rng(1)
        for s in range(m.frame.S + 1):
            b = estimate_frame_bounds(m.frame, s)
            assert 0 < b.A <= b.B
            for f in rng.standard_normal((30, m.frame.N)):
                nf = m.x_ladder.norm(f, s)
                nc = m.theta_ladder.norm(m.frame.rows @ f, s)
                assert b.A * nf * (1 - 1e-8) <= nc <= b.B * nf * (1 + 1e-8)
            lam = measure_lambda(m.theta_ladder, s, samples=20)
            assert b.B <= lam * b.B + 1e-12


def test_dual_identity_and_shift():
    d = dual_sequence(l2_frame(np.eye(4)))
    assert np.allclose(d.vectors, np.eye(4))
    d = dual_sequence(l2_frame(shift_rows(4)))
    expected = np.zeros((4, 5))
    expected[0, 0] = expected[0, 1] = 0.5
    expected[1:, 2:] = np.eye(3)
    assert np.allclose(d.vectors, expected, atol=1e-14)
    assert np.allclose(d.vectors, np.linalg.pinv(shift_rows(4)), atol=1e-14)
    assert np.allclose(d.vectors @ shift_rows(4), np.eye(4), atol=1e-14)
    assert d.df_surrogate[0]["label"] == "DF-surrogate"


def test_reconstruction_identity():
    rng = np.random.default_rng(2)
    for name in MODEL_NAMES:
        m = load_model(name)
        for f in rng.standard_normal((10, m.frame.N)):
            assert np.allclose(m.dual.vectors @ analyze(m.frame, f), f, atol=1e-10)


def test_operator_norms_reported():
    f = weighted_shift_l2()
    d = dual_sequence(f)
    assert [k["level"] for k in d.operator_norms] == [0, 1, 2]
    assert all(k["method"] == "svd" and k["value"] > 0 for k in d.operator_norms)
    # |V c|_s <= K_s |c| on samples
    rng = np.random.default_rng(3)
    for k in d.operator_norms:
        s = k["level"]
        for c in rng.standard_normal((50, 5)):
            assert f.x_ladder.norm(d.vectors @ c, s) <= k["value"] * np.linalg.norm(c) * (1 + 1e-12)


def test_expansions_identity_and_shift():
    f = l2_frame(np.eye(3), S=2)
    rep = verify_expansions(f, dual_sequence(f))
    assert rep.passed and max(rep.residual_primal) <= 1e-12 and max(rep.residual_dual) <= 1e-12
    f = weighted_shift_l2(N=5, S=3)
    rep = verify_expansions(f, dual_sequence(f))
    assert max(rep.residual_primal) <= 1e-10
    assert all(len(c) == f.M for c in rep.partial_sums)
    assert all(c[-1] <= 1e-10 for c in rep.partial_sums)


def test_bessel_only_floor():
    # dead last coordinate: U has rank N - 1
    rows = np.array([[1.0, 0, 0], [1, 1, 0], [0, 1, 0]])
    f = FrameSystem(rows, SpaceLadder([Lp(2), WeightedL2([1, 2, 3])], 3),
                    ThetaLadder([Lp(2), Lp(2)], 3))
    with pytest.raises(LowerFrameInequalityError):
        dual_sequence(f)
    d = dual_sequence(f, force=True)
    tv = np.random.default_rng(4).standard_normal((15, 3))
    rep = verify_expansions(f, d, test_vectors=tv)
    assert not rep.passed
    p = null_space_projector(rows)
    for s in (0, 1):
        spec = f.x_ladder.levels[s]
        predicted = max(kernel.norm(p @ v, spec) / kernel.norm(v, spec) for v in tv)
        assert rep.predicted_floor[s] == pytest.approx(predicted, rel=1e-12)
        assert rep.residual_primal[s] >= predicted - 1e-12
        assert rep.residual_primal[s] == pytest.approx(predicted, rel=1e-9)
        assert rep.residual_primal[s] > 0.1


def test_range_closed():
    r = check_range_closed(l2_frame(shift_rows(4)))
    assert r.rank == 4
    for b in r.bounds:
        assert b["inverse_bound"] == pytest.approx(1 / b["A"])
    r = check_range_closed(l2_frame(np.eye(3)))
    assert r.rank == 3 and r.bounds[0]["inverse_bound"] == 1.0
    r = check_range_closed(l2_frame(np.array([[1.0, 0, 0], [0, 1, 0], [1, 1, 0]])))
    assert r.rank == 2
    assert r.bounds[0]["inverse_bound"] is None
    assert r.bounds[0]["note"] == "lower frame inequality fails"
