"""Robust loop shaping of a piezo stage with linear and reset (CgLp) control.

Modules
-------
freq_core
    Frequency-response evaluators, Bode grids and crossover search.
describing
    Describing functions of the first-order reset element and CgLp, loop
    harmonics and pseudo-sensitivity.
robust_tuning
    Phase-band gain placement for the linear loop and grid tuning of CgLp.
reset_sim
    Fixed-step hybrid simulation of the closed loops.
"""

from .freq_core import LinearControllerParams, PlantModel
from .describing import CgLpController

__version__ = "0.1.0"

__all__ = ["PlantModel", "LinearControllerParams", "CgLpController"]
