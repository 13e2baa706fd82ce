"""Graded families of norms on a common truncated coefficient space.

A ladder is a list of :class:`~fframes.kernel.NormSpec` objects indexed
``s = 0..S`` that must be pointwise nondecreasing in ``s``.  At a finite
truncation every level is a norm on the whole space, so the nesting and
density requirements of an infinite-dimensional ladder reduce to the
monotonicity check plus a (trivially satisfied) finite-span guard.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .kernel import NormSpec, spec_from_dict
from .tolerances import DEFAULTS

__all__ = [
    "SpaceLadder", "ThetaLadder", "AxiomReport", "check_ladder_axioms",
    "measure_lambda", "sample_vectors", "ladder_from_dict",
]


def _check_levels(levels, truncation):
    levels = tuple(levels)
    if len(levels) < 2:
        raise ValueError("a ladder needs at least two levels (S >= 1)")
    if truncation < 1:
        raise ValueError("truncation must be positive")
    for s, spec in enumerate(levels):
        if not isinstance(spec, NormSpec):
            raise TypeError(f"level {s} is not a NormSpec")
        if spec.dim is not None and spec.dim != truncation:
            raise kernel.DimensionError(
                f"level {s} acts on R^{spec.dim}, ladder truncation is {truncation}")
    return levels


@dataclass(frozen=True)
class SpaceLadder:
    """Norms ``|f|_s`` on X-side coefficient vectors of length ``truncation``."""

    levels: tuple
    truncation: int
    label: str = "x"
    notes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "levels", _check_levels(self.levels, self.truncation))
        object.__setattr__(self, "notes", tuple(self.notes))

    @property
    def S(self):
        return len(self.levels) - 1

    def norm(self, v, s):
        return kernel.norm(v, self.levels[s])

    def to_dict(self):
        return {
            "label": self.label,
            "kind": "space",
            "truncation": self.truncation,
            "levels": [spec.to_dict() for spec in self.levels],
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class ThetaLadder:
    """Sequence-space norms ``|||c|||_s`` plus claimed BK constants ``lambda_s``."""

    levels: tuple
    truncation: int
    bk_constants: tuple = None
    label: str = "theta"
    notes: tuple = ()

    def __post_init__(self):
        levels = _check_levels(self.levels, self.truncation)
        object.__setattr__(self, "levels", levels)
        bk = self.bk_constants
        bk = (1.0,) * len(levels) if bk is None else tuple(float(b) for b in bk)
        if len(bk) != len(levels) or any(b < 1.0 for b in bk):
            raise ValueError("bk_constants must be one value >= 1 per level")
        object.__setattr__(self, "bk_constants", bk)
        object.__setattr__(self, "notes", tuple(self.notes))

    @property
    def S(self):
        return len(self.levels) - 1

    def norm(self, c, s):
        return kernel.norm(c, self.levels[s])

    def to_dict(self):
        return {
            "label": self.label,
            "kind": "theta",
            "truncation": self.truncation,
            "levels": [spec.to_dict() for spec in self.levels],
            "bk_constants": list(self.bk_constants),
            "notes": list(self.notes),
        }


def ladder_from_dict(d):
    """Rebuild a ladder from the dictionary produced by ``to_dict``."""
    levels = [spec_from_dict(x) for x in d["levels"]]
    if d.get("kind", "space") == "theta":
        return ThetaLadder(levels, int(d["truncation"]), d.get("bk_constants"),
                           d.get("label", "theta"), tuple(d.get("notes", ())))
    return SpaceLadder(levels, int(d["truncation"]), d.get("label", "x"),
                       tuple(d.get("notes", ())))


def sample_vectors(rng, n, count):
    """Deterministic mix of test vectors of length ``n``.

    Canonical vectors and the all-ones vector come first, then Gaussian,
    sparse and heavy-tailed samples, so small sample counts still probe
    the coordinate directions.
    """
    fixed = [np.eye(n)[i] for i in range(n)] + [np.ones(n), (-1.0) ** np.arange(n)]
    out = fixed[:count]
    kinds = ("gauss", "sparse", "cauchy")
    k = 0
    while len(out) < count:
        kind = kinds[k % 3]
        if kind == "gauss":
            v = rng.standard_normal(n)
        elif kind == "sparse":
            v = rng.standard_normal(n) * (rng.random(n) < 0.3)
            if not v.any():
                v[rng.integers(n)] = 1.0
        else:
            v = rng.standard_cauchy(n)
            v /= np.abs(v).max()
        out.append(v)
        k += 1
    return np.array(out)


@dataclass
class AxiomReport:
    label: str
    kind: str
    samples: int
    seed: int
    monotonicity: list = field(default_factory=list)
    monotonicity_violation: float = 0.0
    witness: list | None = None
    lambdas: list | None = None
    coordinate_constants: list = field(default_factory=list)
    coordinate_method: list = field(default_factory=list)
    canonical_norms: list = field(default_factory=list)
    density_residual: float = 0.0
    passed: bool = True

    def to_dict(self):
        return {
            "label": self.label,
            "kind": self.kind,
            "samples": self.samples,
            "seed": self.seed,
            "monotonicity": self.monotonicity,
            "monotonicity_violation": self.monotonicity_violation,
            "witness": self.witness,
            "lambdas": self.lambdas,
            "coordinate_constants": self.coordinate_constants,
            "coordinate_method": self.coordinate_method,
            "canonical_norms": self.canonical_norms,
            "density_residual": self.density_residual,
            "passed": self.passed,
        }


def measure_lambda(theta, s, samples=200, seed=0):
    """Largest observed ratio ``|||prefix_n(c)|||_s / |||c|||_s``, at least 1.

    Sampled, so the result is a lower estimate of the true BK constant.
    """
    if not 0 <= s <= theta.S:
        raise IndexError(f"level {s} outside 0..{theta.S}")
    spec = theta.levels[s]
    n = theta.truncation
    rng = np.random.default_rng(seed)
    best = 1.0
    for c in sample_vectors(rng, n, samples):
        full = kernel.norm(c, spec)
        if full == 0.0:
            continue
        prefix = np.zeros(n)
        for k in range(n - 1):
            prefix[k] = c[k]
            best = max(best, kernel.norm(prefix, spec) / full)
    return best


def _coordinate_constant(spec, i, n, vectors, values):
    """Bound on ``|c_i| / |||c|||``: exact via the dual norm when available."""
    e = np.zeros(n)
    e[i] = 1.0
    try:
        value, exact = kernel.dual_norm(e, spec)
        if exact:
            return value, "dual-norm"
    except NotImplementedError:
        pass
    mask = values > 0
    sampled = np.max(np.abs(vectors[mask, i]) / values[mask])
    return float(sampled), "sampled"


def check_ladder_axioms(ladder, samples=500, seed=0, lambda_samples=50, tol=None):
    """Sampled check of the ladder axioms.

    Parameters
    ----------
    ladder : SpaceLadder or ThetaLadder
    samples : int
        Number of test vectors per level pair.
    seed : int
    lambda_samples : int
        Vectors used by :func:`measure_lambda` (Theta ladders only).
    tol : float, optional
        Allowed monotonicity violation, default from the tolerance table.

    Returns
    -------
    AxiomReport
        ``passed`` is True iff the largest observed ``|v|_s - |v|_{s+1}`` is
        at most ``tol``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    tol = DEFAULTS["monotonicity"] if tol is None else tol
    n = ladder.truncation
    rng = np.random.default_rng(seed)
    vectors = sample_vectors(rng, n, samples)
    values = np.array([[kernel.norm(v, spec) for spec in ladder.levels] for v in vectors])

    is_theta = isinstance(ladder, ThetaLadder)
    report = AxiomReport(ladder.label, "theta" if is_theta else "space", samples, seed)
    worst = 0.0
    for s in range(ladder.S):
        gap = values[:, s] - values[:, s + 1]
        k = int(np.argmax(gap))
        v = max(0.0, float(gap[k]))
        report.monotonicity.append(v)
        if v > worst:
            worst = v
            report.witness = {"level": s, "vector": vectors[k].tolist(),
                              "lower": float(values[k, s]), "upper": float(values[k, s + 1])}
    report.monotonicity_violation = worst

    for s, spec in enumerate(ladder.levels):
        report.canonical_norms.append([kernel.norm(e, spec) for e in np.eye(n)])
        # finite canonical spans reproduce every vector; kept as a regression guard
        recon = vectors @ np.eye(n)
        report.density_residual = max(
            report.density_residual,
            max(kernel.norm(v - r, spec) for v, r in zip(vectors, recon)))
        if is_theta:
            consts, methods = zip(*(_coordinate_constant(spec, i, n, vectors, values[:, s])
                                    for i in range(n)))
            report.coordinate_constants.append(list(consts))
            report.coordinate_method.append(list(methods))
    if is_theta:
        report.lambdas = [measure_lambda(ladder, s, lambda_samples, seed) for s in range(ladder.S + 1)]

    finite = all(np.isfinite(x) and x > 0 for row in report.canonical_norms for x in row)
    report.passed = bool(worst <= tol and finite and report.density_residual <= tol)
    return report
