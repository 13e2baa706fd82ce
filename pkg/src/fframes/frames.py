"""Frame systems at finite truncation.

A :class:`FrameSystem` stores the functionals ``g_i`` as the rows of an
``M x N`` matrix ``U`` together with the X-side ladder (norms on R^N) and
the Theta-side ladder (norms on R^M).  The same rows are used at every
level: at a finite truncation the continuous extension of ``g_i`` to a
larger level is the functional itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla
from scipy.optimize import minimize

from . import kernel
from .ladder import SpaceLadder, ThetaLadder, sample_vectors
from .tolerances import DEFAULTS

__all__ = [
    "FrameSystem", "FrameBound", "DualSequence", "ExpansionReport", "RangeReport",
    "LowerFrameInequalityError", "analyze", "synthesize", "estimate_frame_bounds",
    "dual_sequence", "verify_expansions", "check_range_closed", "numerical_rank",
    "null_space_projector",
]

LOWER_FAILS = "lower frame inequality fails"


class LowerFrameInequalityError(ValueError):
    """Raised when a reconstruction operator is requested but A_s = 0."""

    def __init__(self, message=LOWER_FAILS):
        super().__init__(message)


@dataclass(frozen=True)
class FrameSystem:
    rows: np.ndarray
    x_ladder: SpaceLadder
    theta_ladder: ThetaLadder
    label: str = "frame"

    def __post_init__(self):
        rows = kernel.as_matrix(self.rows).copy()
        rows.setflags(write=False)
        if np.any(np.all(rows == 0.0, axis=1)):
            raise ValueError("frame has a zero functional")
        if self.x_ladder.truncation != rows.shape[1]:
            raise kernel.DimensionError("X ladder truncation must equal the number of columns")
        if self.theta_ladder.truncation != rows.shape[0]:
            raise kernel.DimensionError("Theta ladder truncation must equal the number of rows")
        if self.x_ladder.S != self.theta_ladder.S:
            raise ValueError("X and Theta ladders must have the same number of levels")
        object.__setattr__(self, "rows", rows)

    @property
    def M(self):
        return self.rows.shape[0]

    @property
    def N(self):
        return self.rows.shape[1]

    @property
    def S(self):
        return self.x_ladder.S

    def with_rows(self, rows, label=None):
        return FrameSystem(rows, self.x_ladder, self.theta_ladder, label or self.label)

    def to_dict(self):
        return {
            "label": self.label,
            "rows": self.rows.tolist(),
            "x_ladder": self.x_ladder.label,
            "theta_ladder": self.theta_ladder.label,
        }


def analyze(frame, f):
    """Coefficients ``(g_1(f), ..., g_M(f))``."""
    return frame.rows @ kernel.as_vector(f, frame.N)


def synthesize(dual, c):
    """``sum_i c_i f_i`` for the dual vectors stored column-wise."""
    return dual.vectors @ kernel.as_vector(c, dual.vectors.shape[1])


def numerical_rank(m, tol=None):
    tol = DEFAULTS["rank"] if tol is None else tol
    s = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


def null_space_projector(m, tol=None):
    """Orthogonal (l2) projector onto the null space of ``m``."""
    tol = DEFAULTS["rank"] if tol is None else tol
    _, s, vt = np.linalg.svd(m)
    r = int(np.sum(s > tol * max(1.0, s[0])))
    z = vt[r:]
    return z.T @ z


# ---------------------------------------------------------------------------
# frame bounds

@dataclass
class FrameBound:
    level: int
    A: float
    B: float
    method: str
    tight: bool = False
    samples: int = 0
    inner_estimate: bool = False
    note: str | None = None

    def to_dict(self):
        return {
            "level": self.level, "A": self.A, "B": self.B, "tight": self.tight,
            "method": self.method, "samples": self.samples,
            "inner_estimate": self.inner_estimate, "note": self.note,
        }


def _square_factor(spec, n):
    r = kernel.hilbert_factor(spec, n)
    return None if r is None else kernel._square_factor(r)


def _whitened(frame, s):
    """``R_theta U R_x^{-1}`` when both level-s norms are Hilbertian."""
    rx = _square_factor(frame.x_ladder.levels[s], frame.N)
    rt = _square_factor(frame.theta_ladder.levels[s], frame.M)
    if rx is None or rt is None:
        return None
    w = rt @ frame.rows
    return sla.solve_triangular(rx, w.T, trans="T").T


def _level_ratio(frame, s):
    xs = frame.x_ladder.levels[s]
    ts = frame.theta_ladder.levels[s]
    u = frame.rows

    def ratio(f):
        d = xs._evaluate(f)
        if d == 0.0:
            return np.nan
        return ts._evaluate(u @ f) / d
    return ratio


def _refine(fun, x0, sign):
    res = minimize(lambda x: sign * fun(x), x0, method="L-BFGS-B",
                   options={"maxiter": 40, "maxfun": 4000})
    value = fun(res.x)
    return value if np.isfinite(value) else None


def estimate_frame_bounds(frame, s, method="auto", samples=200, seed=0, refine=3, tol=None):
    """Frame bounds ``A_s, B_s`` of ``A |f|_s <= |||U f|||_s <= B |f|_s``.

    Parameters
    ----------
    method : {"auto", "svd", "sampled"}
        ``svd`` needs Hilbertian norms on both sides and is exact.  The
        sampled method evaluates the ratio at ``samples`` seeded vectors and
        locally refines the ``refine`` best candidates on each side; its
        result is an inner estimate (A from above, B from below).

    Returns
    -------
    FrameBound
        ``A == 0`` with note "lower frame inequality fails" when U has a
        nontrivial null space.
    """
    tol = DEFAULTS["tight"] if tol is None else tol
    if not 0 <= s <= frame.S:
        raise IndexError(f"level {s} outside 0..{frame.S}")
    w = _whitened(frame, s) if method in ("auto", "svd") else None
    if method == "svd" and w is None:
        raise ValueError("svd bounds need Hilbertian norms on both sides")

    if w is not None:
        sv = kernel.svd(w).s
        B = float(sv[0])
        A = float(sv[-1]) if w.shape[0] >= w.shape[1] else 0.0
        if A <= DEFAULTS["rank"] * max(1.0, B):
            return FrameBound(s, 0.0, B, "svd", note=LOWER_FAILS)
        return FrameBound(s, A, B, "svd", tight=abs(A - B) <= tol)

    ratio = _level_ratio(frame, s)
    rng = np.random.default_rng(seed)
    starts = sample_vectors(rng, frame.N, samples)
    values = np.array([ratio(f) for f in starts])
    order = np.argsort(values, kind="stable")
    lo, hi = float(values[order[0]]), float(values[order[-1]])
    for k in range(min(refine, len(order))):
        v = _refine(ratio, starts[order[k]], 1.0)
        if v is not None:
            lo = min(lo, v)
        v = _refine(ratio, starts[order[-1 - k]], -1.0)
        if v is not None:
            hi = max(hi, v)
    if numerical_rank(frame.rows) < frame.N:
        return FrameBound(s, 0.0, hi, "sampled-optimization", samples=samples,
                          inner_estimate=True, note=LOWER_FAILS)
    return FrameBound(s, lo, hi, "sampled-optimization", tight=abs(lo - hi) <= tol,
                      samples=samples, inner_estimate=True)


# ---------------------------------------------------------------------------
# dual sequences

@dataclass
class DualSequence:
    """Column ``i`` of ``vectors`` is ``f_i = V e_i``."""

    vectors: np.ndarray
    provenance: str
    level: int | None = None
    operator_norms: list = field(default_factory=list)
    df_surrogate: list = field(default_factory=list)

    def to_dict(self):
        return {
            "vectors": self.vectors.tolist(),
            "provenance": self.provenance,
            "level": self.level,
            "operator_norms": self.operator_norms,
            "df_surrogate": self.df_surrogate,
        }


def _operator_norm(v, x_spec, t_spec, n, m, rng, samples=100):
    """|V|_{Theta_s -> X_s}: exact for Hilbert norms, sampled lower estimate otherwise."""
    rx = _square_factor(x_spec, n)
    rt = _square_factor(t_spec, m)
    if rx is not None and rt is not None:
        k = rx @ sla.solve_triangular(rt, v.T, trans="T").T
        return {"value": float(kernel.svd(k).s[0]), "method": "svd"}
    best = 0.0
    for c in sample_vectors(rng, m, samples):
        d = t_spec._evaluate(c)
        if d > 0:
            best = max(best, x_spec._evaluate(v @ c) / d)
    return {"value": best, "method": "sampled"}


def _df_bounds(frame, v, s):
    """Bounds of gamma -> (gamma(f_i))_i measured in the dual norms at level s."""
    rx = _square_factor(frame.x_ladder.levels[s], frame.N)
    rt = _square_factor(frame.theta_ladder.levels[s], frame.M)
    if rx is None or rt is None:
        return None
    # |gamma|_{X*} = |rx^{-T} gamma|, |eta|_{Theta*} = |rt^{-T} eta|, eta = V^T gamma
    k = sla.solve_triangular(rt, v.T @ rx.T, trans="T")
    sv = kernel.svd(k).s
    return {"level": s, "A": float(sv[-1]), "B": float(sv[0]), "label": "DF-surrogate"}


def dual_sequence(frame, s=0, force=False, seed=0):
    """Dual vectors ``f_i = V e_i`` with V a left inverse of U.

    When the level-s Theta norm is Hilbertian, V is the pseudo-inverse in the
    whitened geometry, i.e. reconstruction after orthogonal projection onto
    R(U).  Otherwise the plain l2 pseudo-inverse is used and its operator
    norms ``|V|_{Theta_s -> X_s}`` are estimated per level.

    Raises
    ------
    LowerFrameInequalityError
        U is rank deficient (A_s = 0) and ``force`` is False.
    """
    u = frame.rows
    if numerical_rank(u) < frame.N and not force:
        raise LowerFrameInequalityError()
    rt = kernel.hilbert_factor(frame.theta_ladder.levels[s], frame.M)
    if rt is not None:
        v = np.linalg.pinv(rt @ u) @ rt
        provenance = "pseudo-inverse (whitened)"
    else:
        v = np.linalg.pinv(u)
        provenance = "pseudo-inverse (l2)"
    rng = np.random.default_rng(seed)
    norms, df = [], []
    for t in range(frame.S + 1):
        k = _operator_norm(v, frame.x_ladder.levels[t], frame.theta_ladder.levels[t],
                           frame.N, frame.M, rng)
        k["level"] = t
        norms.append(k)
        df.append(_df_bounds(frame, v, t))
    return DualSequence(v, provenance, s, norms, df)


# ---------------------------------------------------------------------------
# expansions

@dataclass
class ExpansionReport:
    levels: list
    residual_primal: list
    residual_dual: list
    dual_method: list
    partial_sums: list
    predicted_floor: list
    passed: bool

    def to_dict(self):
        return {
            "levels": self.levels,
            "residual_primal": self.residual_primal,
            "residual_dual": self.residual_dual,
            "dual_method": self.dual_method,
            "partial_sums": self.partial_sums,
            "predicted_floor": self.predicted_floor,
            "passed": self.passed,
        }


def _dual_residual(r, gamma, spec):
    try:
        num, exact = kernel.dual_norm(r, spec)
        den, _ = kernel.dual_norm(gamma, spec)
        return num / den, "dual-norm" if exact else "dual-norm upper bound"
    except NotImplementedError:
        return float(np.linalg.norm(r) / np.linalg.norm(gamma)), "l2"


def verify_expansions(frame, dual, test_vectors=None, test_functionals=None,
                      count=20, seed=0, tol=None):
    """Residuals of ``f = sum g_i(f) f_i`` and ``g = sum g(f_i) g_i`` per level.

    Test vectors are normalized to unit norm at each level, so residuals are
    relative.  Test functionals (rows, acting on R^N) default to the
    coordinate functionals and are normalized in the level dual norm.

    Returns
    -------
    ExpansionReport
        ``passed`` iff every full-sum residual is at most ``tol``
        (default 1e-8).  ``predicted_floor`` is the largest level norm of
        the part of a unit test vector lying in the null space of U, which
        bounds the primal residual from below when U is only a Bessel map.
    """
    tol = DEFAULTS["expansion"] if tol is None else tol
    u, fv = frame.rows, dual.vectors
    if fv.shape != (frame.N, frame.M):
        raise kernel.DimensionError("dual vectors do not match the frame")
    rng = np.random.default_rng(seed)
    tv = sample_vectors(rng, frame.N, count) if test_vectors is None else np.atleast_2d(test_vectors)
    tg = np.eye(frame.N) if test_functionals is None else np.atleast_2d(test_functionals)
    coeffs = tv @ u.T                     # row k: U f_k
    p_null = null_space_projector(u)
    # partial[k, n] = f_k - sum_{i<=n} g_i(f_k) f_i
    terms = coeffs[:, :, None] * fv.T[None, :, :]
    partial = tv[:, None, :] - np.cumsum(terms, axis=1)

    primal, dualres, methods, curves, floors = [], [], [], [], []
    levels = list(range(frame.S + 1))
    for s in levels:
        spec = frame.x_ladder.levels[s]
        scale = np.array([spec._evaluate(f) for f in tv])
        curve = [max(spec._evaluate(partial[k, n]) / scale[k] for k in range(len(tv)))
                 for n in range(frame.M)]
        curves.append(curve)
        primal.append(curve[-1])
        floors.append(max(spec._evaluate(p_null @ f) / scale[k] for k, f in enumerate(tv)))
        worst, method = 0.0, "dual-norm"
        for g in tg:
            r = g - u.T @ (fv.T @ g)
            val, method = _dual_residual(r, g, spec)
            worst = max(worst, val)
        dualres.append(worst)
        methods.append(method)
    passed = max(primal) <= tol and max(dualres) <= tol
    return ExpansionReport(levels, primal, dualres, methods, curves, floors, bool(passed))


# ---------------------------------------------------------------------------
# range

@dataclass
class RangeReport:
    rank: int
    N: int
    closed: str
    bounds: list

    def to_dict(self):
        return {"rank": self.rank, "N": self.N, "closed": self.closed, "bounds": self.bounds}


def check_range_closed(frame, samples=200, seed=0):
    """Rank of U and the level-wise inverse bounds ``|U_s^{-1}| <= 1/A_s``."""
    rank = numerical_rank(frame.rows)
    bounds = []
    for s in range(frame.S + 1):
        fb = estimate_frame_bounds(frame, s, samples=samples, seed=seed)
        bounds.append({
            "level": s, "A": fb.A,
            "inverse_bound": None if fb.A == 0.0 else 1.0 / fb.A,
            "note": fb.note,
        })
    return RangeReport(rank, frame.N, "structural (finite rank)", bounds)
