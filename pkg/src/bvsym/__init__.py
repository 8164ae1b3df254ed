"""Gradient symmetrization of BV functions and numerical checks of the
associated rearrangement and Saint-Venant inequalities."""

from bvsym.geometry import BallSpec, Polygon, schwarz_ball, unit_ball_measure
from bvsym.rearrange import MeasuredSample, StepFunction, decreasing_rearrangement
from bvsym.bvcalc import BVFunction1D, RadialBVFunction, StieltjesMeasure
from bvsym.symmetrize import SymmetrizedProfile, u_star_from_parts, u_star_of_bv

__version__ = "0.1.0"

__all__ = [
    "BallSpec",
    "Polygon",
    "schwarz_ball",
    "unit_ball_measure",
    "MeasuredSample",
    "StepFunction",
    "decreasing_rearrangement",
    "BVFunction1D",
    "RadialBVFunction",
    "StieltjesMeasure",
    "SymmetrizedProfile",
    "u_star_from_parts",
    "u_star_of_bv",
]
