"""Linear frequency-domain primitives.

Every element is a frequency-response evaluator: a callable taking
frequencies in Hz (scalar or array) and returning complex gains.  Angular
frequency is internal only.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "PlantModel", "LinearControllerParams", "ComplexOrderParams",
    "FrequencyResponseSystem", "BodeGrid", "LoopMetrics",
    "BracketError", "AssumptionWarning",
    "eval_plant", "eval_notch", "eval_pi2", "eval_complex_order",
    "plant_system", "notch_system", "pi2_system", "linear_controller_system",
    "complex_order_system", "bode", "crossover", "unwrap_deg",
]

TWO_PI = 2.0 * math.pi


class BracketError(ValueError):
    """Raised when |L| - 1 does not change sign on the search bracket."""


class AssumptionWarning(UserWarning):
    """|L| was found non-monotone on the crossover bracket."""


@dataclass(frozen=True)
class PlantModel:
    """Piezo stage: first-order amplifier in series with a resonant mechanism.

    ``kappa_max`` is the upper end of the DC-gain uncertainty interval
    ``[1, kappa_max]`` applied to the mechanical stage.
    """

    K_e: float = 10.0
    f_e: float = 935.0
    K_m: float = 0.4986
    f_m: float = 747.0
    xi_m: float = 0.0089
    kappa_max: float = 1.6165

    def __post_init__(self):
        for name in ("K_e", "f_e", "K_m", "f_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.xi_m < 1:
            raise ValueError("xi_m must lie in (0, 1)")
        if not self.kappa_max >= 1:
            raise ValueError("kappa_max must be >= 1")

    def check_kappa(self, kappa: float) -> float:
        kappa = float(kappa)
        # small slack so grids built with logspace do not trip on rounding
        if not (1.0 - 1e-12 <= kappa <= self.kappa_max * (1 + 1e-12)):
            raise ValueError(
                f"kappa={kappa} outside [1, {self.kappa_max}]")
        return kappa


@dataclass(frozen=True)
class LinearControllerParams:
    """Second-order PI plus notch, with the loop proportional gain ``K_P``."""

    f_i: float = 300.0
    f_i_prime: float = 40.0
    xi_N: float = 1.0
    K_P: float = 0.1303

    def __post_init__(self):
        for name in ("f_i", "f_i_prime", "xi_N", "K_P"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class ComplexOrderParams:
    gamma_tilde: float
    f_r_tilde: float

    def __post_init__(self):
        if not -1 <= self.gamma_tilde <= 1:
            raise ValueError("gamma_tilde must lie in [-1, 1]")
        if not self.f_r_tilde > 0:
            raise ValueError("f_r_tilde must be positive")


def _as_freq(f, allow_zero=True):
    arr = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("frequency must be finite")
    if allow_zero and np.any(arr < 0):
        raise ValueError("frequency must be non-negative")
    if not allow_zero and np.any(arr <= 0):
        raise ZeroDivisionError("frequency must be strictly positive")
    return arr


def _second_order(s, wn, xi):
    return (s / wn) ** 2 + 2.0 * xi / wn * s + 1.0


def _ret(arr, scalar_in):
    return complex(arr) if scalar_in else arr


def eval_plant(f, kappa: float, model: PlantModel):
    """Complex gain of the uncertain plant in um/V.

    Parameters
    ----------
    f : float or array_like
        Frequency in Hz (>= 0).
    kappa : float
        DC-gain multiplier of the mechanical stage, within
        ``[1, model.kappa_max]``.
    model : PlantModel
    """
    kappa = model.check_kappa(kappa)
    fa = _as_freq(f)
    s = 1j * TWO_PI * fa
    pe = model.K_e / (s / (TWO_PI * model.f_e) + 1.0)
    pm = model.K_m / _second_order(s, TWO_PI * model.f_m, model.xi_m)
    return _ret(pe * kappa * pm, np.ndim(f) == 0)


def eval_notch(f, model: PlantModel, xi_N: float):
    """Notch cancelling the plant resonance and re-damping it with ``xi_N``."""
    fa = _as_freq(f)
    s = 1j * TWO_PI * fa
    wm = TWO_PI * model.f_m
    out = _second_order(s, wm, model.xi_m) / _second_order(s, wm, xi_N)
    return _ret(out, np.ndim(f) == 0)


def eval_pi2(f, f_i: float, f_i_prime: float):
    fa = _as_freq(f, allow_zero=False)
    s = 1j * TWO_PI * fa
    out = (1.0 + TWO_PI * f_i / s) * (1.0 + TWO_PI * f_i_prime / s)
    return _ret(out, np.ndim(f) == 0)


def eval_complex_order(f, params: ComplexOrderParams):
    """Pure phase operator exp(j (1 - g)/2 atan(f / f_r))."""
    fa = _as_freq(f)
    expo = 0.5 * (1.0 - params.gamma_tilde) * np.arctan(fa / params.f_r_tilde)
    return _ret(np.exp(1j * expo), np.ndim(f) == 0)


@dataclass(frozen=True)
class FrequencyResponseSystem:
    """Immutable evaluator ``f [Hz] -> complex gain``.

    Systems compose by multiplication (series connection) and scale by
    real or complex constants.
    """

    func: Callable = field(repr=False)
    name: str = "system"

    def __call__(self, f):
        return self.func(f)

    def __mul__(self, other):
        if isinstance(other, FrequencyResponseSystem):
            a, b = self.func, other.func
            return FrequencyResponseSystem(lambda f: a(f) * b(f),
                                           f"{self.name}*{other.name}")
        if isinstance(other, (int, float, complex)):
            a, c = self.func, other
            return FrequencyResponseSystem(lambda f: c * a(f),
                                           f"{other}*{self.name}")
        return NotImplemented

    __rmul__ = __mul__


def plant_system(model: PlantModel, kappa: float = 1.0) -> FrequencyResponseSystem:
    model.check_kappa(kappa)
    return FrequencyResponseSystem(lambda f: eval_plant(f, kappa, model),
                                   f"P(kappa={kappa:g})")


def notch_system(model: PlantModel, xi_N: float) -> FrequencyResponseSystem:
    return FrequencyResponseSystem(lambda f: eval_notch(f, model, xi_N), "C_N")


def pi2_system(f_i: float, f_i_prime: float) -> FrequencyResponseSystem:
    return FrequencyResponseSystem(lambda f: eval_pi2(f, f_i, f_i_prime), "C_PI")


def linear_controller_system(lin: LinearControllerParams,
                             model: PlantModel) -> FrequencyResponseSystem:
    """C = C_PI * C_N (without K_P)."""
    sys_ = pi2_system(lin.f_i, lin.f_i_prime) * notch_system(model, lin.xi_N)
    return FrequencyResponseSystem(sys_.func, "C")


def complex_order_system(params: ComplexOrderParams) -> FrequencyResponseSystem:
    return FrequencyResponseSystem(
        lambda f: eval_complex_order(f, params), "C_tilde")


def unwrap_deg(values) -> np.ndarray:
    """Phase in degrees, unwrapped to the nearest branch from the first sample."""
    return np.degrees(np.unwrap(np.angle(np.asarray(values))))


@dataclass
class BodeGrid:
    frequencies: np.ndarray
    magnitude_db: np.ndarray
    phase_deg: np.ndarray

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["freq_hz", "mag_db", "phase_deg"])
            for row in zip(self.frequencies, self.magnitude_db, self.phase_deg):
                w.writerow([f"{v:.10g}" for v in row])


def log_grid(f_lo: float, f_hi: float, points_per_decade: int) -> np.ndarray:
    if not (0 < f_lo < f_hi) or not np.isfinite(f_hi):
        raise ValueError("need 0 < f_lo < f_hi")
    n = int(math.ceil(points_per_decade * math.log10(f_hi / f_lo))) + 1
    return np.logspace(math.log10(f_lo), math.log10(f_hi), max(n, 2))


def bode(system, f_lo: float, f_hi: float, points_per_decade: int = 100) -> BodeGrid:
    if points_per_decade < 10:
        raise ValueError("points_per_decade must be >= 10")
    f = log_grid(f_lo, f_hi, points_per_decade)
    h = np.asarray(system(f))
    return BodeGrid(f, 20.0 * np.log10(np.abs(h)), unwrap_deg(h))


@dataclass
class LoopMetrics:
    f_c: float
    phi: float
    kappa: float = 1.0
    warnings: list = field(default_factory=list)


def _bisect_log(fun, lo, hi, rtol=1e-9, maxiter=200):
    """Bisection in log-frequency on a sign change of ``fun``."""
    flo = fun(lo)
    for _ in range(maxiter):
        mid = math.sqrt(lo * hi)
        fm = fun(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi / lo - 1.0 < rtol:
            break
    return math.sqrt(lo * hi)


def crossover(open_loop, f_lo: float, f_hi: float, kappa: float = 1.0,
              rtol: float = 1e-9) -> LoopMetrics:
    """Gain crossover of ``open_loop`` on ``[f_lo, f_hi]`` and its phase margin.

    A coarse 50 points/decade scan brackets the first downward crossing of
    |L| = 1, then bisection refines it to ``rtol`` in frequency.
    """
    grid = log_grid(f_lo, f_hi, 50)
    mag = np.abs(np.asarray(open_loop(grid)))
    notes = []
    if np.any(np.diff(mag) >= 0):
        msg = "open-loop magnitude is not strictly decreasing on the bracket"
        notes.append(msg)
        warnings.warn(msg, AssumptionWarning, stacklevel=2)
    above = mag > 1.0
    idx = np.nonzero(above[:-1] & ~above[1:])[0]
    if not above[0] or above[-1] or len(idx) == 0:
        raise BracketError(
            f"|L|-1 has no sign change on [{f_lo}, {f_hi}] Hz")
    k = idx[0]
    fc = _bisect_log(lambda f: abs(open_loop(f)) - 1.0, grid[k], grid[k + 1],
                     rtol=rtol)
    # phase continuous from the low end of the grid
    ph = unwrap_deg(np.append(open_loop(grid[:k + 1]), open_loop(fc)))[-1]
    phi = ph + 180.0
    # express margin on the principal branch near [-180, 180)
    phi = (phi + 180.0) % 360.0 - 180.0
    return LoopMetrics(fc, phi, kappa, notes)
