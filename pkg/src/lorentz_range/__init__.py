"""Numerical lab for the optimal Lorentz range of the Calderon operator,
the Hilbert transform and triangular truncation."""
from .calderon import CalderonImage, apply_S, apply_Sd, eval_S_of_step, hilbert_of_step
from .concave import ConcaveFn, check_concave_increasing, least_concave_majorant
from .errors import TailDivergent
from .optimal_range import (criterion_G, criterion_continuous, criterion_discrete, psi_from_phi,
                            psi_table, witness_general, witness_indicator)
from .rearrangement import DecreasingStep, IntervalSet, Seq, StepFn, lorentz_norm, rearrange

__version__ = "0.1.0"
