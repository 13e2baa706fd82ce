"""Dense linear algebra and norm evaluation shared by every other module.

Vectors are plain 1-D float64 numpy arrays (coefficient vectors); matrices
are 2-D float64 arrays in row-major layout.  Norms are described by small
immutable :class:`NormSpec` objects so that ladders store closed-form norms
rather than tabulated values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg as sla

__all__ = [
    "NormSpec", "Lp", "WeightedL2", "Sup", "MatrixInduced", "PrefixSup",
    "norm", "dual_norm", "hilbert_factor", "is_hilbert", "spec_from_dict",
    "register_spec", "as_vector", "as_matrix", "svd", "SVDResult",
    "Constraints", "least_norm_solve", "SolverError", "InfeasibleError",
    "ConvergenceError", "DimensionError",
]


class DimensionError(ValueError):
    """Vector length does not match the dimension a norm was built for."""


class SolverError(RuntimeError):
    pass


class InfeasibleError(SolverError):
    """The constraint region is empty."""


class ConvergenceError(SolverError):
    """The solver stopped without reaching a feasible optimum."""


def _frozen(a, ndim):
    a = np.array(a, dtype=float)
    if a.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite entries")
    a.setflags(write=False)
    return a


def as_vector(v, n=None):
    """Validate a coefficient vector (finite, 1-d, optional length ``n``)."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    if n is not None and v.shape[0] != n:
        raise DimensionError(f"vector has length {v.shape[0]}, expected {n}")
    return v


def as_matrix(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or min(m.shape) < 1:
        raise ValueError(f"expected a non-empty matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


# ---------------------------------------------------------------------------
# norm descriptors

_REGISTRY = {}


def register_spec(cls):
    _REGISTRY[cls.kind] = cls
    return cls


class NormSpec:
    """Base class.  Subclasses define ``kind``, ``dim`` and ``_evaluate``."""

    kind = "abstract"

    @property
    def dim(self):
        return None

    def _evaluate(self, v):
        raise NotImplementedError

    def __call__(self, v):
        return norm(v, self)

    def params(self):
        raise NotImplementedError

    def to_dict(self):
        return {"kind": self.kind, "params": self.params()}

    @classmethod
    def from_params(cls, params):
        raise NotImplementedError


def _l2(v):
    # np.linalg.norm squares without scaling and overflows past ~1e154
    m = np.max(np.abs(v), initial=0.0)
    if m == 0.0 or not np.isfinite(m):
        return float(m)
    return float(m * np.linalg.norm(v / m))


def _row_norms(a):
    """Scale-safe Euclidean norms of the rows of ``a``."""
    m = np.max(np.abs(a), axis=1, initial=0.0)
    safe = np.where(m > 0.0, m, 1.0)
    return m * np.linalg.norm(a / safe[:, None], axis=1)


@register_spec
@dataclass(frozen=True, eq=False)
class Lp(NormSpec):
    """The l^p norm, 1 < p < inf."""

    p: float
    kind = "lp"

    def __post_init__(self):
        p = float(self.p)
        if not (1.0 < p < np.inf):
            raise ValueError(f"Lp requires 1 < p < inf, got {self.p}")
        object.__setattr__(self, "p", p)

    def _evaluate(self, v):
        a = np.abs(v)
        m = a.max(initial=0.0)
        if m == 0.0:
            return 0.0
        if self.p == 2.0:
            return _l2(v)
        return float(m * np.sum((a / m) ** self.p) ** (1.0 / self.p))

    def params(self):
        return {"p": self.p}

    @classmethod
    def from_params(cls, params):
        return cls(params["p"])

    def __repr__(self):
        return f"Lp({self.p:g})"


@register_spec
@dataclass(frozen=True, eq=False)
class WeightedL2(NormSpec):
    """sqrt(sum_i (w_i v_i)^2) with all weights >= 1."""

    weights: np.ndarray
    kind = "weighted_l2"

    def __post_init__(self):
        w = _frozen(self.weights, 1)
        if w.size == 0 or np.any(w < 1.0):
            raise ValueError("WeightedL2 weights must all be >= 1")
        object.__setattr__(self, "weights", w)

    @property
    def dim(self):
        return self.weights.shape[0]

    def _evaluate(self, v):
        return _l2(self.weights * v)

    def params(self):
        return {"weights": self.weights.tolist()}

    @classmethod
    def from_params(cls, params):
        return cls(params["weights"])

    def __repr__(self):
        return f"WeightedL2(n={self.dim})"


@register_spec
@dataclass(frozen=True, eq=False)
class Sup(NormSpec):
    kind = "sup"

    def _evaluate(self, v):
        return float(np.abs(v).max(initial=0.0))

    def params(self):
        return {}

    @classmethod
    def from_params(cls, params):
        return cls()

    def __repr__(self):
        return "Sup()"


@register_spec
@dataclass(frozen=True, eq=False)
class MatrixInduced(NormSpec):
    """``v -> inner(K v)``, optionally combined with an l2 complement term.

    With ``complement`` Q the value is ``sqrt(inner(K v)**2 + |Q v|_2**2)``.
    This is a norm whenever the stacked map ``[K; Q]`` is injective.
    """

    matrix: np.ndarray
    inner: NormSpec = Lp(2.0)
    complement: np.ndarray | None = None
    kind = "matrix"

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix, 2))
        if self.inner.dim is not None and self.inner.dim != self.matrix.shape[0]:
            raise DimensionError("inner norm dimension does not match matrix rows")
        if self.complement is not None:
            q = _frozen(self.complement, 2)
            if q.shape[1] != self.matrix.shape[1]:
                raise DimensionError("complement must act on the same space")
            object.__setattr__(self, "complement", q)

    @property
    def dim(self):
        return self.matrix.shape[1]

    def _evaluate(self, v):
        value = self.inner._evaluate(self.matrix @ v)
        if self.complement is None:
            return value
        return float(np.hypot(value, _l2(self.complement @ v)))

    def params(self):
        return {
            "matrix": self.matrix.tolist(),
            "inner": self.inner.to_dict(),
            "complement": None if self.complement is None else self.complement.tolist(),
        }

    @classmethod
    def from_params(cls, params):
        inner = spec_from_dict(params["inner"]) if params.get("inner") else Lp(2.0)
        comp = params.get("complement")
        return cls(params["matrix"], inner, None if comp is None else comp)

    def __repr__(self):
        extra = ", complement" if self.complement is not None else ""
        return f"MatrixInduced({self.matrix.shape[0]}x{self.matrix.shape[1]}, {self.inner!r}{extra})"


@register_spec
@dataclass(frozen=True, eq=False)
class PrefixSup(NormSpec):
    """``c -> max_n inner(sum_{i<=n} c_i f_i)`` for columns f_i of ``vectors``."""

    vectors: np.ndarray
    inner: NormSpec = Lp(2.0)
    kind = "prefix_sup"

    def __post_init__(self):
        f = _frozen(self.vectors, 2)
        if np.any(np.all(f == 0.0, axis=0)):
            raise ValueError("PrefixSup needs nonzero vectors")
        object.__setattr__(self, "vectors", f)

    @property
    def dim(self):
        return self.vectors.shape[1]

    def _evaluate(self, v):
        partial = np.cumsum(self.vectors * v, axis=1)
        return max(self.inner._evaluate(partial[:, n]) for n in range(partial.shape[1]))

    def params(self):
        return {"vectors": self.vectors.tolist(), "inner": self.inner.to_dict()}

    @classmethod
    def from_params(cls, params):
        return cls(params["vectors"], spec_from_dict(params["inner"]))

    def __repr__(self):
        return f"PrefixSup({self.vectors.shape[0]}x{self.vectors.shape[1]}, {self.inner!r})"


def spec_from_dict(d):
    """Inverse of ``NormSpec.to_dict``."""
    try:
        cls = _REGISTRY[d["kind"]]
    except KeyError:
        raise ValueError(f"unknown norm kind {d.get('kind')!r}") from None
    return cls.from_params(d.get("params", {}))


def norm(v, spec):
    """Evaluate ``spec`` at ``v``.

    Raises :class:`DimensionError` if ``v`` does not match the dimension of a
    weighted or matrix-induced spec.
    """
    v = as_vector(v, spec.dim)
    return float(spec._evaluate(v))


def is_hilbert(spec):
    """True when the norm is ``|R v|_2`` for some matrix R."""
    if isinstance(spec, Lp):
        return spec.p == 2.0
    if isinstance(spec, WeightedL2):
        return True
    if isinstance(spec, MatrixInduced):
        return is_hilbert(spec.inner)
    return False


def hilbert_factor(spec, n):
    """Return R with ``norm(v, spec) == |R v|_2`` on R^n, or None."""
    if spec.dim is not None and spec.dim != n:
        raise DimensionError(f"norm acts on R^{spec.dim}, not R^{n}")
    if isinstance(spec, Lp) and spec.p == 2.0:
        return np.eye(n)
    if isinstance(spec, WeightedL2):
        return np.diag(spec.weights)
    if isinstance(spec, MatrixInduced):
        inner = hilbert_factor(spec.inner, spec.matrix.shape[0])
        if inner is None:
            return None
        r = inner @ spec.matrix
        if spec.complement is not None:
            r = np.vstack([r, spec.complement])
        return r
    return None


def _square_factor(r):
    """Upper-triangular Rt with |R v| = |Rt v|; raises if R is not injective."""
    n = r.shape[1]
    if r.shape[0] < n:
        raise ValueError("factor has fewer rows than columns; not a norm")
    rt = sla.qr(r, mode="r")[0][:n]
    d = np.abs(np.diag(rt))
    if d.min() <= 1e-13 * max(d.max(), 1.0):
        raise ValueError("factor is not injective; not a norm")
    return rt


def dual_norm(gamma, spec):
    """Dual norm of the functional ``f -> gamma . f``.

    Returns ``(value, exact)``.  Closed forms are exact; for a
    matrix-induced norm whose inner norm is not Hilbertian the value is an
    upper bound obtained from one admissible representation
    ``gamma = K^T eta``.
    """
    gamma = as_vector(gamma, spec.dim)
    n = gamma.shape[0]
    if isinstance(spec, Lp):
        q = spec.p / (spec.p - 1.0)
        return Lp(q)._evaluate(gamma), True
    if isinstance(spec, Sup):
        return float(np.abs(gamma).sum()), True
    r = hilbert_factor(spec, n)
    if r is not None:
        rt = _square_factor(r)
        z = sla.solve_triangular(rt, gamma, trans="T")
        return _l2(z), True
    if isinstance(spec, MatrixInduced):
        k = spec.matrix
        eta = np.linalg.lstsq(k.T, gamma, rcond=None)[0]
        if np.linalg.norm(k.T @ eta - gamma) > 1e-10 * max(1.0, np.linalg.norm(gamma)):
            raise ValueError("matrix-induced norm is degenerate")
        value, _ = dual_norm(eta, spec.inner)
        return value, False
    raise NotImplementedError(f"no dual norm for {spec!r}")


# ---------------------------------------------------------------------------
# singular values

class SVDResult(NamedTuple):
    s: np.ndarray
    u: np.ndarray
    vt: np.ndarray


def svd(m):
    """Thin SVD with singular values in descending order."""
    m = as_matrix(m)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return SVDResult(s, u, vt)


# ---------------------------------------------------------------------------
# least-norm problems

@dataclass(frozen=True)
class Constraints:
    """Affine constraints ``G x >= h`` and ``A x == b``."""

    G: np.ndarray | None = None
    h: np.ndarray | None = None
    A: np.ndarray | None = None
    b: np.ndarray | None = None

    @classmethod
    def ge(cls, G, h):
        return cls(G=np.atleast_2d(np.asarray(G, float)), h=np.atleast_1d(np.asarray(h, float)))


class _LDPState(NamedTuple):
    """Where a least-distance solve stopped: iterate, active rows, multipliers
    and the factors ``C[act].T = q @ rr``."""

    y: np.ndarray
    act: tuple
    u: np.ndarray
    q: np.ndarray
    rr: np.ndarray


def _ldp(C, d, feas_tol=1e-9):
    """Least-distance problem ``min |y|_2 s.t. C y >= d``; see :func:`_ldp_solve`."""
    return _ldp_solve(C, d, feas_tol)[0]


def _ldp_solve(C, d, feas_tol=1e-9, warm=None):
    """Least-distance problem ``min |y|_2 s.t. C y >= d``, returning ``(y, state)``.

    Dual active-set method (Goldfarb and Idnani) for the identity Hessian.
    Starting from y = 0, the most violated constraint is added; the step
    moves y along the part of its normal orthogonal to the active normals
    while keeping the multipliers nonnegative, dropping an active constraint
    when its multiplier reaches zero.  A violated constraint that cannot be
    reached (its normal lies in the span of the active ones and no active
    constraint can be released) certifies infeasibility.

    Rows are scaled to unit length, and a constraint counts as met when its
    slack is at least ``-feas_tol * max(1, |y|)``.

    ``warm`` is the state returned for a problem made of the leading rows of
    ``C``; the iteration resumes from it, which is how branch and bound adds
    one constraint at a time cheaply.
    """
    m, n = C.shape
    if m == 0:
        return np.zeros(n), None
    rn = _row_norms(C)
    dead = rn == 0.0
    if np.any(d[dead] > feas_tol):
        raise InfeasibleError("constraint with zero row and positive bound")
    if np.any(dead):
        warm = None  # row indices shift once dead rows are dropped
        C = C[~dead]
        d = d[~dead]
        rn = rn[~dead]
    C = C / rn[:, None]
    d = d / rn
    m = C.shape[0]

    if warm is None:
        y = np.zeros(n)
        act, u = [], np.zeros(0)
        # orthonormal basis q of the active normals, C[act].T = q @ rr
        q, rr = np.zeros((n, 0)), np.zeros((0, 0))
    else:
        y, act, u, q, rr = warm.y, list(warm.act), warm.u, warm.q, warm.rr
    for _ in range(10 * (m + n) + 50):
        slack = C @ y - d
        p = int(np.argmin(slack))
        if slack[p] >= -feas_tol * max(1.0, np.linalg.norm(y)):
            return y, _LDPState(y, tuple(act), u, q, rr)
        up = 0.0
        while True:
            normal = C[p]
            w = q.T @ normal
            z = normal - q @ w
            w2 = q.T @ z  # second pass keeps z orthogonal to the active normals
            z -= q @ w2
            w += w2
            r = sla.solve_triangular(rr, w, check_finite=False) if act else w
            zz = float(z @ z)
            # full step: reach constraint p along z (normals have unit length,
            # so |z| is the sine of the angle to the active span)
            t2 = (d[p] - normal @ y) / zz if zz > 1e-22 else np.inf
            # partial step: first active multiplier to hit zero
            pos = r > 1e-14
            if np.any(pos):
                ratios = np.where(pos, u / np.where(pos, r, 1.0), np.inf)
                k = int(np.argmin(ratios))
                t1 = ratios[k]
            else:
                k, t1 = -1, np.inf
            t = min(t1, t2)
            if not np.isfinite(t):
                raise InfeasibleError("inequality constraints are inconsistent")
            if np.isfinite(t2):
                y = y + t * z
            u = u - t * r
            up += t
            if t2 <= t1:
                # z is the next Gram-Schmidt direction, so the factors grow by a column
                rho = np.sqrt(zz)
                q = np.column_stack([q, z / rho])
                grown = np.zeros((len(act) + 1, len(act) + 1))
                grown[:-1, :-1] = rr
                grown[:-1, -1] = w
                grown[-1, -1] = rho
                rr = grown
                act.append(p)
                u = np.append(u, up)
                break
            del act[k]
            u = np.delete(u, k)
            if act:
                q, rr = np.linalg.qr(C[act].T)
            else:
                q, rr = np.zeros((n, 0)), np.zeros((0, 0))
    raise ConvergenceError("least-distance solve did not converge")
    return y


def least_norm_solve(constraints, objective, feas_tol=1e-9):
    """Minimize a Hilbertian norm over an affine polyhedron.

    Parameters
    ----------
    constraints : Constraints
        ``G x >= h`` and/or ``A x == b``.
    objective : NormSpec
        Must satisfy ``is_hilbert``; weighted l2 and l2 are the usual cases.

    Returns
    -------
    x : ndarray
        The (unique) minimizer.  Inequalities hold up to ``feas_tol`` times
        ``max(1, |x|)`` in the whitened coordinates, with each row scaled
        to unit length.

    Raises
    ------
    InfeasibleError
        The feasible region is empty.
    ConvergenceError
        The active-set iteration did not terminate.
    """
    G, h, A, b = constraints.G, constraints.h, constraints.A, constraints.b
    n = next(m.shape[1] for m in (G, A) if m is not None) if (G is not None or A is not None) else objective.dim
    if n is None:
        raise ValueError("cannot infer the dimension of the problem")
    r = hilbert_factor(objective, n)
    if r is None:
        raise ValueError(f"objective {objective!r} is not Hilbertian")
    rt = _square_factor(r)

    def to_y(M):
        # rows of M R^{-1}
        return sla.solve_triangular(rt, np.asarray(M, float).T, trans="T").T

    y0 = np.zeros(n)
    Z = np.eye(n)
    if A is not None:
        Ay = to_y(A)
        b = np.asarray(b, float)
        y0 = np.linalg.lstsq(Ay, b, rcond=None)[0]
        if np.linalg.norm(Ay @ y0 - b) > feas_tol * max(1.0, np.linalg.norm(b)):
            raise InfeasibleError("equality constraints are inconsistent")
        _, s, vt = np.linalg.svd(Ay)
        rank = int(np.sum(s > 1e-12 * max(s.max(initial=0.0), 1.0)))
        Z = vt[rank:].T
    if G is not None and G.shape[0] > 0:
        Gy = to_y(G)
        z = _ldp(Gy @ Z, np.asarray(h, float) - Gy @ y0, feas_tol)
        y = y0 + Z @ z
    else:
        y = y0
    return sla.solve_triangular(rt, y)
