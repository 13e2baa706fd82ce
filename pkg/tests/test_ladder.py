import json

import numpy as np
import pytest

from fframes import kernel
from fframes.kernel import Lp, MatrixInduced, Sup, WeightedL2
from fframes.ladder import (SpaceLadder, ThetaLadder, check_ladder_axioms, ladder_from_dict,
                            measure_lambda, sample_vectors)
from fframes.models import hermite_weights, lp_exponents


def lp_ladder(S=3, N=8):
    return ThetaLadder([Lp(p) for p in lp_exponents(S)], N, label="lp")


def test_lp_ladder_passes_exactly():
    rep = check_ladder_axioms(lp_ladder())
    assert rep.passed
    assert rep.monotonicity_violation == 0.0
    assert rep.lambdas == [1.0] * 4


def test_weighted_ladder_passes():
    w = hermite_weights(6, 2)
    rep = check_ladder_axioms(SpaceLadder([WeightedL2(r) for r in w], 6))
    assert rep.passed
    assert rep.canonical_norms[2] == pytest.approx([1, 9, 25, 49, 81, 121])


def test_reversed_ladder_fails_with_witness():
    lad = ThetaLadder([Lp(p) for p in reversed(lp_exponents(3))], 8)
    rep = check_ladder_axioms(lad)
    assert not rep.passed
    assert rep.monotonicity_violation > 0
    w = rep.witness
    v = np.array(w["vector"])
    assert kernel.norm(v, lad.levels[w["level"]]) - kernel.norm(v, lad.levels[w["level"] + 1]) \
        == pytest.approx(rep.monotonicity_violation)


def test_needs_two_levels_and_matching_dims():
    with pytest.raises(ValueError):
        SpaceLadder([Lp(2)], 3)
    with pytest.raises(kernel.DimensionError):
        SpaceLadder([WeightedL2([1, 2]), WeightedL2([1, 3])], 3)
    with pytest.raises(ValueError):
        ThetaLadder([Lp(2), Lp(2)], 3, bk_constants=[1.0, 0.5])
    with pytest.raises(ValueError):
        check_ladder_axioms(lp_ladder(), samples=0)


def test_measure_lambda_solid_levels():
    lad = ThetaLadder([Lp(2), Sup()], 6)
    assert measure_lambda(lad, 0) == 1.0
    assert measure_lambda(lad, 1) == 1.0
    for p in (1.1, 1.5, 3.0, 7.0):
        assert measure_lambda(ThetaLadder([Lp(p), Lp(p)], 5), 0, samples=100) == 1.0


def test_measure_lambda_matrix_level():
    spec = MatrixInduced(np.array([[1.0, 1.0], [0.0, 1.0]]))
    lad = ThetaLadder([spec, spec], 2)
    got = measure_lambda(lad, 0, samples=500)
    # oracle: grid over the unit circle, prefix keeps the first coordinate
    t = np.linspace(0, 2 * np.pi, 200001)
    c = np.stack([np.cos(t), np.sin(t)], axis=1)
    full = np.linalg.norm(c @ spec.matrix.T, axis=1)
    pre = np.abs(c[:, 0]) * np.linalg.norm(spec.matrix[:, 0])
    oracle = np.max(pre / full)
    assert oracle > 1
    assert 1 < got <= oracle + 1e-9
    # c = (1, -1): |||(1,0)||| = 1, |||(1,-1)||| = 1
    assert kernel.norm([1, 0], spec) == 1.0 and kernel.norm([1, -1], spec) == 1.0
    with pytest.raises(IndexError):
        measure_lambda(lad, 5)


def test_coordinate_constants_exact_for_lp():
    rep = check_ladder_axioms(lp_ladder(S=1, N=4), samples=50)
    assert rep.coordinate_method[0] == ["dual-norm"] * 4
    assert rep.coordinate_constants[0] == pytest.approx([1.0] * 4)
    # sampled ratios never exceed the exact constant
    rng = np.random.default_rng(0)
    for c in rng.standard_normal((200, 4)):
        assert np.max(np.abs(c)) <= kernel.norm(c, Lp(1.5)) + 1e-12


def test_json_roundtrip():
    lad = ThetaLadder([Lp(2), Lp(1.5)], 5, [1.0, 1.0], label="t", notes=("x",))
    again = ladder_from_dict(json.loads(json.dumps(lad.to_dict())))
    assert isinstance(again, ThetaLadder) and again.label == "t" and again.notes == ("x",)
    v = np.arange(5.0)
    assert again.norm(v, 1) == lad.norm(v, 1)
    sl = SpaceLadder([WeightedL2([1, 1]), WeightedL2([1, 3])], 2, "x")
    assert isinstance(ladder_from_dict(sl.to_dict()), SpaceLadder)


def test_sample_vectors_deterministic():
    a = sample_vectors(np.random.default_rng(5), 4, 30)
    b = sample_vectors(np.random.default_rng(5), 4, 30)
    assert np.array_equal(a, b)
    assert np.array_equal(a[:4], np.eye(4))
    assert np.all(np.isfinite(a)) and np.all(np.abs(a).sum(axis=1) > 0)
