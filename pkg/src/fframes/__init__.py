"""Frames for graded ladders of normed spaces at finite truncation."""

from . import constructions, frames, kernel, ladder, models
from .constructions import (ConstraintSet, TildeNorm, check_A1, check_A2, check_A3,
                            construct_theta_ladder, construct_x_ladder, tilde_norm)
from .frames import (FrameSystem, analyze, dual_sequence, estimate_frame_bounds,
                     verify_expansions)
from .kernel import Lp, MatrixInduced, Sup, WeightedL2, norm
from .ladder import SpaceLadder, ThetaLadder, check_ladder_axioms

__version__ = "0.1.0"
