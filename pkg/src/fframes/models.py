"""Ready-made (ladder, frame) instances.

* ``hermite``: coefficients in an orthonormal eigenbasis of an operator with
  eigenvalues 2n + 1; level s weighs coordinate i by ``(2i - 1)^s``.
* ``weighted_shift``: weighted l2 ladder with the shift frame
  ``e_1, e_1, e_2, ..., e_N`` and the constrained-infimum sequence norms.
* ``lp_shift_invariant``: circular translates of a generator on Z_N with
  ``l^{p_s}`` coefficient norms, ``p_s = 1 + 1/(s+1)``.
* ``coordinate``: identity frame on a given Theta ladder.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernel
from .constructions import (TildeNorm, construct_theta_ladder, construct_x_ladder,
                            shift_rows)
from .frames import DualSequence, FrameSystem, dual_sequence
from .ladder import SpaceLadder, ThetaLadder

__all__ = [
    "HermiteModel", "WeightedShiftModel", "LpShiftModel", "CoordinateModel",
    "ModelInstance", "build_hermite_model", "build_weighted_shift_model",
    "build_lp_shift_model", "build_coordinate_model", "hermite_weights",
    "lp_exponents", "dual_generator", "lp_shift_dual", "load_model", "MODEL_NAMES",
]

MODEL_NAMES = ("hermite", "weighted_shift", "lp_shift_invariant", "coordinate")


class HermiteModel(NamedTuple):
    x_ladder: SpaceLadder
    frame: FrameSystem
    dual: DualSequence


class WeightedShiftModel(NamedTuple):
    x_ladder: SpaceLadder
    theta_ladder: ThetaLadder
    frame: FrameSystem


class LpShiftModel(NamedTuple):
    x_ladder: SpaceLadder
    theta_ladder: ThetaLadder
    frame: FrameSystem


class CoordinateModel(NamedTuple):
    x_ladder: SpaceLadder
    frame: FrameSystem


def hermite_weights(N, S):
    """Table ``a[s, i-1] = (2i - 1)^s`` for i = 1..N, s = 0..S."""
    odd = 2.0 * np.arange(1, N + 1) - 1.0
    return np.array([odd ** s for s in range(S + 1)])


def lp_exponents(S):
    return [1.0 + 1.0 / (s + 1) for s in range(S + 1)]


def _check_sizes(N, S):
    if N < 1 or S < 1:
        raise ValueError("need N >= 1 and S >= 1")


def _with_dual_norms(frame, vectors, provenance):
    ref = dual_sequence(frame, 0)
    return DualSequence(np.asarray(vectors, float), provenance, None,
                        ref.operator_norms, ref.df_surrogate)


def build_hermite_model(N=8, S=3):
    """Hermite-coefficient ladder with the coordinate frame and canonical dual."""
    _check_sizes(N, S)
    w = hermite_weights(N, S)
    x = SpaceLadder([kernel.WeightedL2(row) for row in w], N, "hermite")
    rows = np.eye(N)
    theta = construct_theta_ladder(x, rows)
    frame = FrameSystem(rows, x, theta, "hermite-coordinates")
    return HermiteModel(x, frame, _with_dual_norms(frame, np.eye(N), "closed-form"))


def _validate_weights(weights, N, S):
    w = np.asarray(weights, float)
    if w.shape != (S + 1, N):
        raise ValueError(f"weights must have shape {(S + 1, N)}, got {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 1.0):
        raise ValueError("weights must be finite and >= 1")
    if np.any(np.diff(w, axis=0) < 0.0):
        raise ValueError("weights must be nondecreasing in s")
    return w


def build_weighted_shift_model(weights=None, N=8, S=3):
    """Weighted l2 ladder, shift frame, and constrained-infimum Theta levels.

    Parameters
    ----------
    weights : array of shape (S+1, N), optional
        ``a[s, i-1]``, each >= 1 and nondecreasing in s.  Defaults to
        :func:`hermite_weights`.
    """
    _check_sizes(N, S)
    w = hermite_weights(N, S) if weights is None else _validate_weights(weights, N, S)
    x = SpaceLadder([kernel.WeightedL2(row) for row in w], N, "weighted-l2")
    rows = shift_rows(N)
    levels = [TildeNorm(rows, spec, base=kernel.Lp(2.0)) for spec in x.levels]
    theta = ThetaLadder(levels, N + 1, None, "tilde",
                        ("levels are constrained-infimum norms; solid, so lambda_s = 1",))
    frame = FrameSystem(rows, x, theta, "shift")
    return WeightedShiftModel(x, theta, frame)


def dual_generator(phi):
    """Generator psi with ``f = sum_k <f, phi_k> psi_k`` on Z_N.

    ``psi_hat = phi_hat / |phi_hat|^2``.

    Raises
    ------
    ValueError
        The discrete Fourier symbol of ``phi`` vanishes somewhere.
    """
    phi = kernel.as_vector(phi)
    sym = np.fft.fft(phi)
    mag = np.abs(sym)
    if mag.min() <= 1e-12 * max(1.0, mag.max()):
        raise ValueError("generator symbol vanishes; no dual generator")
    return np.real(np.fft.ifft(sym / mag ** 2))


def _translates(v):
    return np.array([np.roll(v, k) for k in range(len(v))])


def lp_shift_dual(phi):
    """Dual vectors ``f_k = psi(. - k)`` as columns."""
    return DualSequence(_translates(dual_generator(phi)).T, "closed-form (Fourier division)")


def build_lp_shift_model(phi=None, S=3):
    """Circular shift-invariant model with ``l^{p_s}`` coefficient ladder.

    Row k of the frame is ``phi(. - k)``, so ``g_k(f) = <f, phi(. - k)>``.
    The X ladder is obtained from the Theta ladder by pulling back through
    the analysis map, starting from l2 at level 0.
    """
    phi = np.array([1.0, 0.5, 0, 0, 0, 0, 0, 0]) if phi is None else kernel.as_vector(phi)
    N = len(phi)
    _check_sizes(N, S)
    dual_generator(phi)  # refuse a vanishing symbol before building anything
    rows = _translates(phi)
    theta = ThetaLadder([kernel.Lp(p) for p in lp_exponents(S)], N, None, "lp-ladder",
                        ("single dual generator shared by every level; "
                         "independence of psi from p is structural here",))
    x = construct_x_ladder(theta, rows, x0=kernel.Lp(2.0))
    frame = FrameSystem(rows, x, theta, "circular-translates")
    return LpShiftModel(x, theta, frame)


def build_coordinate_model(theta=None, N=8, S=3):
    """Identity frame on ``theta``; the constructed X ladder reproduces it."""
    if theta is None:
        _check_sizes(N, S)
        theta = ThetaLadder([kernel.Lp(p) for p in lp_exponents(S)], N, None, "lp-ladder")
    rows = np.eye(theta.truncation)
    x = construct_x_ladder(theta, rows, x0=theta.levels[0])
    return CoordinateModel(x, FrameSystem(rows, x, theta, "coordinates"))


@dataclass
class ModelInstance:
    """Uniform view used by the CLI: every model with a dual sequence."""

    name: str
    x_ladder: SpaceLadder
    theta_ladder: ThetaLadder
    frame: FrameSystem
    dual: DualSequence
    params: dict

    def to_dict(self):
        return {
            "name": self.name,
            "params": self.params,
            "x_ladder": self.x_ladder.to_dict(),
            "theta_ladder": self.theta_ladder.to_dict(),
            "frame": self.frame.to_dict(),
        }


def load_model(name, truncation=None, levels=None, params=None):
    """Build a model by name.

    ``levels`` is the number of levels S + 1; ``params`` may hold
    ``weights`` (weighted_shift) or ``phi`` (lp_shift_invariant).
    """
    params = dict(params or {})
    N = 8 if truncation is None else int(truncation)
    S = 3 if levels is None else int(levels) - 1
    if name == "hermite":
        m = build_hermite_model(N, S)
        return ModelInstance(name, m.x_ladder, m.frame.theta_ladder, m.frame, m.dual, params)
    if name == "weighted_shift":
        m = build_weighted_shift_model(params.get("weights"), N, S)
        return ModelInstance(name, m.x_ladder, m.theta_ladder, m.frame,
                             dual_sequence(m.frame, 0), params)
    if name == "lp_shift_invariant":
        phi = params.get("phi")
        if phi is None:
            phi = np.zeros(N)
            phi[:2] = (1.0, 0.5)
        m = build_lp_shift_model(phi, S)
        return ModelInstance(name, m.x_ladder, m.theta_ladder, m.frame,
                             _with_dual_norms(m.frame, lp_shift_dual(phi).vectors,
                                              "closed-form (Fourier division)"), params)
    if name == "coordinate":
        m = build_coordinate_model(None, N, S)
        return ModelInstance(name, m.x_ladder, m.frame.theta_ladder, m.frame,
                             dual_sequence(m.frame, 0), params)
    raise ValueError(f"unknown model {name!r}; expected one of {MODEL_NAMES}")
