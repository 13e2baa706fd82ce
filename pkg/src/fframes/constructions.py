"""Building one ladder from another through a frame, and the solid norm
defined by a constrained infimum.

The central object is the constrained-infimum norm

    tilde(c) = inf { |f| : |g_i(f)| >= |c_i| for all i },

whose feasible set is a union of polyhedra, one per sign pattern of the
active constraints.  :func:`tilde_norm` solves it exactly by depth-first
branch and bound over sign patterns, each node being a least-distance
problem handled by :func:`fframes.kernel.least_norm_solve`'s engine.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from . import kernel
from .frames import (FrameSystem, LowerFrameInequalityError, estimate_frame_bounds,
                     numerical_rank, verify_expansions)
from .kernel import NormSpec, register_spec, spec_from_dict
from .ladder import SpaceLadder, ThetaLadder, measure_lambda, sample_vectors
from .tolerances import DEFAULTS

__all__ = [
    "ConstraintSet", "TildeNormResult", "TildeNorm", "ConditionReport", "tilde_norm",
    "normalize_frame", "NormalizedFrame", "check_A1", "check_A2", "check_A3",
    "check_dominance", "check_solidity", "construct_x_ladder", "construct_theta_ladder",
    "cb_test_via_biorthogonal", "construct_theta_from_expansion", "off_range_distance",
    "shift_rows", "BiorthogonalityError", "ExpansionError", "BRANCH_LIMIT",
]

BRANCH_LIMIT = 20


class BiorthogonalityError(ValueError):
    def __init__(self, message="biorthogonality violated"):
        super().__init__(message)


class ExpansionError(ValueError):
    pass


def shift_rows(n):
    """Rows of the shift frame on R^n: e_1, e_1, e_2, ..., e_n (n + 1 rows)."""
    eye = np.eye(n)
    return np.vstack([eye[:1], eye])


# ---------------------------------------------------------------------------
# constrained-infimum norm

@dataclass(frozen=True)
class ConstraintSet:
    """The set ``{f : |g_i(f)| >= |c_i|}`` together with the norm to minimize."""

    c: np.ndarray
    rows: np.ndarray
    objective: NormSpec

    def __post_init__(self):
        rows = kernel.as_matrix(self.rows)
        c = kernel.as_vector(self.c, rows.shape[0])
        if self.objective.dim is not None and self.objective.dim != rows.shape[1]:
            raise kernel.DimensionError("objective norm does not act on the frame's domain")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "c", c)

    @classmethod
    def for_frame(cls, c, frame, s=0):
        return cls(c, frame.rows, frame.x_ladder.levels[s])


@dataclass
class TildeNormResult:
    value: float
    minimizer: np.ndarray
    sign_pattern: tuple
    branches_explored: int
    status: str
    method: str

    def to_dict(self):
        return {
            "value": self.value,
            "minimizer": self.minimizer.tolist(),
            "sign_pattern": list(self.sign_pattern),
            "branches_explored": self.branches_explored,
            "status": self.status,
            "method": self.method,
        }


class _Problem:
    """Active constraints mapped to the whitened variable ``y = R f``."""

    def __init__(self, cs, feas_tol):
        n = cs.rows.shape[1]
        r = kernel.hilbert_factor(cs.objective, n)
        if r is None:
            raise ValueError(f"objective {cs.objective!r} is not Hilbertian")
        self.rt = kernel._square_factor(r)
        self.active = np.flatnonzero(np.abs(cs.c) > 0.0)
        self.h = np.abs(cs.c[self.active])
        g = cs.rows[self.active]
        C = sla.solve_triangular(self.rt, g.T, trans="T").T
        self.norms = kernel._row_norms(C)
        # scaling a row together with its |c_i| leaves the set unchanged; unit
        # rows make every feasibility test below relative
        live = self.norms > 0.0
        C[live] /= self.norms[live, None]
        self.h[live] /= self.norms[live]
        self.C = C
        self.n = n
        self.m = cs.rows.shape[0]
        self.feas_tol = feas_tol
        self.cs = cs

    def solve(self, signs, warm=None):
        """Optimum under ``signs`` on the leading rows, as ``(y, state)``.

        ``warm`` is the state of a solve for a prefix of ``signs``.
        """
        k = len(signs)
        if k == 0:
            return np.zeros(self.n), None
        sig = np.asarray(signs, float)[:, None]
        return kernel._ldp_solve(sig * self.C[:k], self.h[:k], self.feas_tol, warm)

    def result(self, y, pattern, explored, status, method):
        f = sla.solve_triangular(self.rt, y)
        full = np.zeros(self.m, dtype=int)
        full[self.active] = pattern
        return TildeNormResult(kernel.norm(f, self.cs.objective), f, tuple(int(x) for x in full),
                               explored, status, method)


def _separable(p):
    """Closed form when every active row touches one coordinate and R is diagonal.

    Then the problem splits per coordinate: ``|y_j| >= max h_i / |C_ij|``.
    Each coordinate's sign is chosen so that its first constraint reads -1,
    which is the lexicographically smallest optimal pattern.
    """
    if np.any(p.rt - np.diag(np.diag(p.rt))):
        return None
    nz = p.C != 0.0
    if not np.all(nz.sum(axis=1) == 1):
        return None
    cols = nz.argmax(axis=1)
    coef = p.C[np.arange(len(cols)), cols]
    y = np.zeros(p.n)
    for j in np.unique(cols):
        on = cols == j
        first = np.flatnonzero(on)[0]
        y[j] = -np.sign(coef[first]) * np.max(p.h[on] / np.abs(coef[on]))
    pattern = np.sign(coef * y[cols]).astype(int)
    return y, pattern


def _better(value, best, tie):
    if not np.isfinite(best):
        return True
    return value < best - tie * max(1.0, best)


def tilde_norm(cs, method="auto", node_limit=10**6, tie=None, feas_tol=None):
    """Minimal objective norm over ``{f : |g_i(f)| >= |c_i|}``.

    Parameters
    ----------
    cs : ConstraintSet
    method : {"auto", "separable", "bnb", "enumerate"}
        ``auto`` uses the per-coordinate closed form when every active row is
        a scaled coordinate functional and the objective is diagonal, and
        branch and bound otherwise.  ``enumerate`` solves every sign pattern
        and is limited to ``BRANCH_LIMIT`` active constraints.
    node_limit : int
        Branch-and-bound node cap; hitting it yields status "best-found".

    Returns
    -------
    TildeNormResult
        Ties between sign patterns (relative ``tie``) resolve to the
        lexicographically smallest pattern with -1 < +1; coordinates with
        ``c_i == 0`` carry sign 0.
    """
    tie = DEFAULTS["tie"] if tie is None else tie
    feas_tol = DEFAULTS["feasibility"] if feas_tol is None else feas_tol
    p = _Problem(cs, feas_tol)
    k = len(p.active)
    if k == 0:
        return p.result(np.zeros(p.n), [], 1, "optimal", "trivial")
    if np.any(p.norms == 0.0):
        # a zero functional cannot reach a nonzero |c_i|
        return p.result(np.zeros(p.n), [0] * k, 0, "infeasible", method)

    if method in ("auto", "separable"):
        sep = _separable(p)
        if sep is not None:
            return p.result(sep[0], sep[1], 1, "optimal", "separable")
        if method == "separable":
            raise ValueError("constraints are not separable")

    if method == "enumerate":
        if k > BRANCH_LIMIT:
            raise ValueError(f"{k} active constraints exceed the enumeration limit {BRANCH_LIMIT}")
        best, best_y, best_sig, explored = np.inf, None, None, 0
        for sig in itertools.product((-1, 1), repeat=k):
            explored += 1
            try:
                y = p.solve(sig)[0]
            except kernel.InfeasibleError:
                continue
            v = float(np.linalg.norm(y))
            if _better(v, best, tie):
                best, best_y, best_sig = v, y, sig
        if best_y is None:
            return p.result(np.zeros(p.n), [0] * k, explored, "infeasible", "enumerate")
        return p.result(best_y, best_sig, explored, "optimal", "enumerate")

    if method not in ("auto", "bnb"):
        raise ValueError(f"unknown method {method!r}")

    state = {"best": np.inf, "y": None, "sig": None, "nodes": 0, "capped": False}

    def visit(sig, y, warm):
        state["nodes"] += 1
        if state["nodes"] > node_limit:
            state["capped"] = True
            return
        j = len(sig)
        rest = p.C[j:] @ y
        slack_tol = feas_tol * max(1.0, float(np.linalg.norm(y)))
        if np.all(np.abs(rest) >= p.h[j:] - slack_tol):
            # relaxed optimum already meets the remaining constraints; it is the
            # unique optimum of this subtree and fixes the remaining signs
            v = float(np.linalg.norm(y))
            if _better(v, state["best"], tie):
                tail = np.where(rest < 0, -1, 1)
                state.update(best=v, y=y, sig=tuple(sig) + tuple(int(t) for t in tail))
            return
        # y is the projection of 0 onto the current polyhedron, so any point z
        # of it has |z|^2 >= |y|^2 + |z - y|^2; reaching constraint i costs at
        # least its distance from y
        rho = float(np.linalg.norm(y))
        deficit = np.maximum(p.h[j:] - np.abs(rest), 0.0)
        if not _better(np.hypot(rho, deficit.max()), state["best"], tie):
            return
        # f -> -f flips every sign, so some optimum has -1 on the first
        # active constraint, and that one is lexicographically smaller
        for sgn in ((-1,) if j == 0 else (-1, 1)):
            child = sig + (sgn,)
            gap = p.h[j] - sgn * rest[0]
            if gap <= slack_tol:
                yc, wc = y, warm  # the new constraint is already met
            else:
                if not _better(np.hypot(rho, gap), state["best"], tie):
                    continue
                try:
                    yc, wc = p.solve(child, warm)
                except kernel.InfeasibleError:
                    continue
                if not _better(float(np.linalg.norm(yc)), state["best"], tie):
                    continue
            visit(child, yc, wc)
            if state["capped"]:
                return

    visit((), np.zeros(p.n), None)
    if state["y"] is None:
        status = "best-found" if state["capped"] else "infeasible"
        return p.result(np.zeros(p.n), [0] * k, state["nodes"], status, "bnb")
    status = "best-found" if state["capped"] else "optimal"
    return p.result(state["y"], state["sig"], state["nodes"], status, "bnb")


@register_spec
@dataclass(frozen=True, eq=False)
class TildeNorm(NormSpec):
    """Norm on R^M given by :func:`tilde_norm` for fixed rows and objective.

    ``base`` optionally records the sequence-space norm the rows were
    normalized against; :func:`check_dominance` compares with it.
    """

    rows: np.ndarray
    objective: NormSpec
    base: NormSpec | None = None
    kind = "tilde"

    def __post_init__(self):
        rows = kernel._frozen(self.rows, 2)
        if np.any(np.all(rows == 0.0, axis=1)):
            raise ValueError("tilde norm needs nonzero rows")
        if kernel.hilbert_factor(self.objective, rows.shape[1]) is None:
            raise ValueError("tilde norm objective must be Hilbertian")
        object.__setattr__(self, "rows", rows)

    @property
    def dim(self):
        return self.rows.shape[0]

    def _evaluate(self, v):
        return tilde_norm(ConstraintSet(v, self.rows, self.objective)).value

    def params(self):
        return {
            "rows": self.rows.tolist(),
            "objective": self.objective.to_dict(),
            "base": None if self.base is None else self.base.to_dict(),
        }

    @classmethod
    def from_params(cls, params):
        base = params.get("base")
        return cls(params["rows"], spec_from_dict(params["objective"]),
                   None if base is None else spec_from_dict(base))

    def __repr__(self):
        return f"TildeNorm({self.rows.shape[0]}x{self.rows.shape[1]}, {self.objective!r})"


# ---------------------------------------------------------------------------
# condition reports

@dataclass
class ConditionReport:
    condition: str
    level: int
    verdict: str
    witness: dict | None = None
    estimate: float | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verdict in ("pass", "sampled-pass")

    def to_dict(self):
        return {
            "condition": self.condition,
            "level": self.level,
            "verdict": self.verdict,
            "witness": self.witness,
            "estimate": self.estimate,
            "details": self.details,
        }


def _single_level(rows, x_spec, t_spec):
    m, n = rows.shape
    return FrameSystem(rows, SpaceLadder((x_spec, x_spec), n, "x"),
                       ThetaLadder((t_spec, t_spec), m, label="theta"))


@dataclass
class NormalizedFrame:
    rows: np.ndarray
    scale: float
    B: float
    max_row_norm: float

    def to_dict(self):
        return {"scale": self.scale, "B": self.B, "max_row_norm": self.max_row_norm}


def _base_theta(frame, s, base):
    if base is not None:
        return base
    spec = frame.theta_ladder.levels[s]
    if isinstance(spec, TildeNorm):
        return spec.base if spec.base is not None else kernel.Lp(2.0)
    return spec


def normalize_frame(frame, s=0, base=None, samples=200, seed=0):
    """Divide the rows by ``max(1, B_s, max_i |g_i|_{X_s*})``.

    After scaling the system is Bessel with bound at most 1 and every
    functional has dual norm at most 1; the factor is returned so reports
    can record it.
    """
    x_spec = frame.x_ladder.levels[s]
    t_spec = _base_theta(frame, s, base)
    B = estimate_frame_bounds(_single_level(frame.rows, x_spec, t_spec), 0,
                              samples=samples, seed=seed).B
    gnorm = max(kernel.dual_norm(g, x_spec)[0] for g in frame.rows)
    scale = max(1.0, B, gnorm)
    return NormalizedFrame(frame.rows / scale, scale, B, gnorm)


def _coordinate_pattern(rows, objective):
    """(columns, coefficients) when each row is a scaled coordinate functional
    and the objective factor is diagonal; otherwise None."""
    nz = rows != 0.0
    if not np.all(nz.sum(axis=1) == 1):
        return None
    r = kernel.hilbert_factor(objective, rows.shape[1])
    if r is None or r.shape[0] != r.shape[1] or np.any(r - np.diag(np.diag(r))):
        return None
    cols = nz.argmax(axis=1)
    return cols, rows[np.arange(rows.shape[0]), cols]


def _closed_form_r(pattern, cd, n):
    """Coordinatewise r with |g_i(r)| >= |(c+d)_i|: r_j = max_i |(c+d)_i| / |k_i|."""
    cols, coef = pattern
    r = np.zeros(n)
    for i, j in enumerate(cols):
        r[j] = max(r[j], abs(cd[i]) / abs(coef[i]))
    return r


def check_A1(frame, level=0, trials=1000, seed=0, tol=None):
    """Sampled check that ``M^{c+d}`` contains r with ``|r| <= |f| + |h|``.

    Pairs are drawn as ``c_i = u_i g_i(f)``, ``d_i = v_i g_i(h)`` with
    ``u, v`` uniform on [-1, 1], so ``f`` is feasible for c and ``h`` for d.
    The first trial uses ``c = d = 0``.  When every row is a scaled
    coordinate functional and the level norm is diagonal, r is the
    coordinatewise closed form and the verdict is "pass"; otherwise r is the
    minimizer of ``tilde_norm(c + d)`` and the verdict is "sampled-pass".
    """
    tol = DEFAULTS["compare"] if tol is None else tol
    spec = frame.x_ladder.levels[level]
    u_rows = frame.rows
    pattern = _coordinate_pattern(u_rows, spec)
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for t in range(trials):
        f = rng.standard_normal(frame.N)
        h = rng.standard_normal(frame.N)
        scale = 0.0 if t == 0 else 1.0
        c = scale * rng.uniform(-1, 1, frame.M) * (u_rows @ f)
        d = scale * rng.uniform(-1, 1, frame.M) * (u_rows @ h)
        cd = c + d
        if pattern is not None:
            r = _closed_form_r(pattern, cd, frame.N)
        else:
            r = tilde_norm(ConstraintSet(cd, u_rows, spec)).minimizer
        infeasible = float(np.max(np.abs(cd) - np.abs(u_rows @ r)))
        bound = kernel.norm(f, spec) + kernel.norm(h, spec)
        excess = kernel.norm(r, spec) - bound
        worst = max(worst, excess)
        if excess > tol * max(1.0, bound) or infeasible > DEFAULTS["feasibility"]:
            return ConditionReport("A1", level, "fail", {
                "trial": t, "c": c.tolist(), "d": d.tolist(), "f": f.tolist(),
                "h": h.tolist(), "r": r.tolist(), "excess": excess,
                "constraint_violation": infeasible}, worst)
    verdict = "pass" if pattern is not None else "sampled-pass"
    return ConditionReport("A1", level, verdict, None, worst, {
        "trials": trials, "seed": seed,
        "certificate": "closed-form" if pattern is not None else "tilde-minimizer"})


def check_A2(frame, level=0, trials=20, seed=0, eps_grid=(1.0, 1e-1, 1e-2, 1e-3), tol=None):
    """Tail curves ``k -> tilde_norm(c^{(k)})`` where the first k entries are zeroed.

    At a finite truncation ``k = M`` always reaches 0, so the content of the
    report is the curve itself: it must be non-increasing and end at 0.
    ``first_k`` lists, per trial, the least k with value below each epsilon.
    """
    tol = DEFAULTS["compare"] if tol is None else tol
    spec = frame.x_ladder.levels[level]
    rng = np.random.default_rng(seed)
    curves, first_k = [], []
    for t in range(trials):
        c = rng.standard_normal(frame.M)
        curve = []
        for k in range(frame.M + 1):
            tail = c.copy()
            tail[:k] = 0.0
            curve.append(tilde_norm(ConstraintSet(tail, frame.rows, spec)).value)
        curves.append(curve)
        first_k.append([next(k for k, v in enumerate(curve) if v < eps) for eps in eps_grid])
        rise = max(b - a for a, b in zip(curve, curve[1:]))
        if rise > tol * max(1.0, curve[0]) or curve[-1] != 0.0:
            return ConditionReport("A2", level, "fail",
                                   {"trial": t, "c": c.tolist(), "curve": curve}, rise)
    return ConditionReport("A2", level, "pass", None, None, {
        "trials": trials, "seed": seed, "eps_grid": list(eps_grid),
        "first_k": first_k, "curves": curves})


def check_A3(frame, level=0, trials=200, seed=0, floor=None):
    """Lower bound of ``tilde_norm(U f) / |f|_s`` over sampled f.

    ``estimate`` is the smallest observed ratio; the largest is reported as
    ``bessel`` and never exceeds 1 because f itself is feasible.
    """
    floor = DEFAULTS["a3_floor"] if floor is None else floor
    spec = frame.x_ladder.levels[level]
    rng = np.random.default_rng(seed)
    lo, hi, arg = np.inf, 0.0, None
    for f in sample_vectors(rng, frame.N, trials):
        ratio = tilde_norm(ConstraintSet(frame.rows @ f, frame.rows, spec)).value / kernel.norm(f, spec)
        if ratio < lo:
            lo, arg = ratio, f
        hi = max(hi, ratio)
    details = {"trials": trials, "seed": seed, "floor": floor, "bessel": hi}
    if lo >= floor:
        return ConditionReport("A3", level, "pass", None, lo, details)
    return ConditionReport("A3", level, "fail", {"f": arg.tolist(), "ratio": lo}, lo, details)


def check_dominance(frame, level=0, samples=500, seed=0, base=None, tol=None):
    """``tilde_norm(c) >= |||c|||`` after normalizing the frame to Bessel bound 1."""
    tol = DEFAULTS["compare"] if tol is None else tol
    spec = frame.x_ladder.levels[level]
    t_spec = _base_theta(frame, level, base)
    nf = normalize_frame(frame, level, t_spec, seed=seed)
    rng = np.random.default_rng(seed)
    worst, witness = -np.inf, None
    for c in sample_vectors(rng, frame.M, samples):
        gap = kernel.norm(c, t_spec) - tilde_norm(ConstraintSet(c, nf.rows, spec)).value
        if gap > worst:
            worst, witness = gap, c
    verdict = "sampled-pass" if worst <= tol else "fail"
    return ConditionReport("dominance", level, verdict,
                           None if verdict != "fail" else {"c": witness.tolist(), "gap": worst},
                           worst, {"samples": samples, "seed": seed, "normalization": nf.to_dict()})


def check_solidity(frame, level=0, samples=500, seed=0, tol=None):
    """``|d_i| <= |c_i|`` for all i implies ``tilde_norm(d) <= tilde_norm(c)``."""
    tol = DEFAULTS["compare"] if tol is None else tol
    spec = frame.x_ladder.levels[level]
    rng = np.random.default_rng(seed)
    worst, witness = -np.inf, None
    for c in sample_vectors(rng, frame.M, samples):
        d = rng.uniform(-1, 1, frame.M) * c
        gap = (tilde_norm(ConstraintSet(d, frame.rows, spec)).value
               - tilde_norm(ConstraintSet(c, frame.rows, spec)).value)
        if gap > worst:
            worst, witness = gap, (c, d)
    verdict = "sampled-pass" if worst <= tol else "fail"
    return ConditionReport("solidity", level, verdict,
                           None if verdict != "fail" else {"c": witness[0].tolist(),
                                                           "d": witness[1].tolist()},
                           worst, {"samples": samples, "seed": seed})


# ---------------------------------------------------------------------------
# ladder constructions

def construct_x_ladder(theta, frame, x0=None, samples=200, seed=0):
    """X ladder with ``|f|_s = |||U f|||_s`` for s >= 1 and ``x0`` at s = 0.

    ``frame`` is a FrameSystem or just the ``M x N`` row matrix (then ``x0``
    is required).

    The level-0 frame bounds ``A_0 <= B_0`` of U from ``x0`` into
    ``theta.levels[0]`` are measured first.  If ``A_0 < 1`` the level-0 norm
    is replaced by ``A_0 |f|_0`` so that the chain
    ``|f|_1 >= |||Uf|||_0 >= A_0 |f|_0`` makes the ladder monotone.

    Raises
    ------
    LowerFrameInequalityError
        U is not injective, so the constructed norms would be degenerate.
    """
    if isinstance(frame, FrameSystem):
        rows = frame.rows
        x0 = frame.x_ladder.levels[0] if x0 is None else x0
    elif x0 is None:
        raise ValueError("x0 is required when the frame is given as a matrix")
    else:
        rows = kernel.as_matrix(frame)
    m, n = rows.shape
    if theta.truncation != m:
        raise kernel.DimensionError("Theta ladder must act on the frame's coefficient space")
    if numerical_rank(rows) < n:
        raise LowerFrameInequalityError()
    fb = estimate_frame_bounds(_single_level(rows, x0, theta.levels[0]), 0,
                               samples=samples, seed=seed)
    if fb.A == 0.0:
        raise LowerFrameInequalityError()
    notes = [f"level-0 bounds A0={fb.A!r} B0={fb.B!r} ({fb.method})"]
    if fb.A < 1.0 - DEFAULTS["tight"]:
        x0 = kernel.MatrixInduced(fb.A * np.eye(n), x0)
        notes.append(f"level-0 norm rescaled by A0={fb.A!r}")
    levels = [x0] + [kernel.MatrixInduced(rows, t) for t in theta.levels[1:]]
    return SpaceLadder(levels, n, f"x-from-{theta.label}", tuple(notes))


def off_range_distance(frame, c):
    """l2 distance of c from the range of U."""
    c = kernel.as_vector(c, frame.M)
    return float(np.linalg.norm(c - frame.rows @ (np.linalg.pinv(frame.rows) @ c)))


def construct_theta_ladder(x, frame, lambda_samples=50, seed=0):
    """Theta ladder with ``|||U f|||_s = |f|_s``.

    A general c is measured as ``sqrt(|U^+ c|_s^2 + |c - U U^+ c|_2^2)``:
    on the range of U the second term vanishes, and off the range it adds
    the l2 distance to the range so that the level is a norm on all of R^M.

    Raises
    ------
    LowerFrameInequalityError
        U has rank below N.
    """
    rows = frame.rows if isinstance(frame, FrameSystem) else kernel.as_matrix(frame)
    m, n = rows.shape
    if x.truncation != n:
        raise kernel.DimensionError("X ladder must act on the frame's domain")
    if numerical_rank(rows) < n:
        raise LowerFrameInequalityError()
    pinv = np.linalg.pinv(rows)
    q = np.eye(m) - rows @ pinv
    q = None if np.max(np.abs(q)) <= DEFAULTS["rank"] else q
    levels = [kernel.MatrixInduced(pinv, spec, complement=q) for spec in x.levels]
    cb = q is None or bool(np.all(np.linalg.norm(q, axis=0) <= DEFAULTS["rank"]))
    notes = (f"canonical vectors in range: {cb}",
             "off-range vectors: norm of the range component combined with the l2 distance")
    draft = ThetaLadder(levels, m, label=f"theta-from-{x.label}")
    bk = [measure_lambda(draft, s, lambda_samples, seed) for s in range(draft.S + 1)]
    return ThetaLadder(levels, m, bk, f"theta-from-{x.label}", notes)


def cb_test_via_biorthogonal(frame, dual, x=None, samples=50, seed=0, tol=None):
    """Schauder-basis surrogate for a biorthogonal pair, one report per level.

    Measures the partial-sum residuals ``|f - sum_{i<=n} g_i(f) f_i|_s`` and
    the norms of the prefix projections ``P_n = sum_{i<=n} f_i g_i``.

    Raises
    ------
    BiorthogonalityError
        ``g_i(f_j) != delta_ij`` beyond the tolerance.
    """
    tol = DEFAULTS["expansion"] if tol is None else tol
    x = frame.x_ladder if x is None else x
    u, fv = frame.rows, dual.vectors
    gram = u @ fv
    if gram.shape[0] != gram.shape[1] or np.max(np.abs(gram - np.eye(gram.shape[0]))) > DEFAULTS["biorthogonality"]:
        raise BiorthogonalityError()
    rng = np.random.default_rng(seed)
    tv = sample_vectors(rng, frame.N, samples)
    reports = []
    for s, spec in enumerate(x.levels):
        r = kernel.hilbert_factor(spec, frame.N)
        rt = None if r is None else kernel._square_factor(r)
        consts, curve = [], []
        for n in range(1, frame.M + 1):
            p = fv[:, :n] @ u[:n]
            if rt is not None:
                k = rt @ sla.solve_triangular(rt, p.T, trans="T").T
                consts.append(float(kernel.svd(k).s[0]))
            else:
                consts.append(max(spec._evaluate(p @ f) / spec._evaluate(f) for f in tv))
            curve.append(max(spec._evaluate(f - p @ f) / spec._evaluate(f) for f in tv))
        constant = max(consts)
        ok = curve[-1] <= tol and np.isfinite(constant)
        reports.append(ConditionReport(
            "CB", s, "pass" if ok else "fail",
            None if ok else {"final_residual": curve[-1]}, constant,
            {"residual_curve": curve, "prefix_norms": consts,
             "method": "svd" if rt is not None else "sampled"}))
    return reports


def construct_theta_from_expansion(x, frame, dual, samples=50, seed=0):
    """Theta ladder ``|||c|||_s = max_n |sum_{i<=n} c_i f_i|_s``.

    Raises
    ------
    ExpansionError
        The expansion ``f = sum g_i(f) f_i`` does not hold, or some f_i is 0.
    """
    report = verify_expansions(FrameSystem(frame.rows, x, frame.theta_ladder, frame.label), dual)
    if not report.passed:
        raise ExpansionError("expansion identity fails; cannot build the sequence space")
    if np.any(np.all(dual.vectors == 0.0, axis=0)):
        raise ExpansionError("dual sequence contains a zero vector")
    levels = [kernel.PrefixSup(dual.vectors, spec) for spec in x.levels]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for c in sample_vectors(rng, frame.M, samples):
        for s, spec in enumerate(x.levels):
            worst = max(worst, spec._evaluate(dual.vectors @ c) - levels[s]._evaluate(c))
    notes = (f"dominates synthesis norm: max excess {worst!r}",)
    return ThetaLadder(levels, frame.M, None, f"theta-expansion-{x.label}", notes)
