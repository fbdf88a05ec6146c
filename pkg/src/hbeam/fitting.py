"""Line-shape and trend fitting.

The Lorentzian fit is a small damped Gauss-Newton loop written out
explicitly so its behaviour (initialization, damping, convergence test)
is part of the package contract and reproducible to the bit across
platforms; line centers extracted this way feed directly into the power
extrapolations, so the fit is deliberately boring and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LorentzianFit:
    """Least-squares Lorentzian parameters with linearized uncertainties."""

    center: float
    fwhm: float
    amplitude: float
    offset: float
    parameter_uncertainties: tuple[float, float, float, float]
    residual_norm: float
    converged: bool


@dataclass(frozen=True)
class TrendFit:
    """Polynomial trend, coefficients in increasing order (constant first)."""

    coefficients: tuple[float, ...]
    uncertainties: tuple[float, ...]
    fit_range: tuple[float, float]
    degree: int


def lorentzian(x: np.ndarray, center: float, fwhm: float, amplitude: float,
               offset: float) -> np.ndarray:
    """offset + amplitude * (G/2)^2 / ((x - center)^2 + (G/2)^2)."""
    half = 0.5 * fwhm
    return offset + amplitude * half ** 2 / ((x - center) ** 2 + half ** 2)


def _jacobian(x: np.ndarray, center: float, fwhm: float, amplitude: float
              ) -> np.ndarray:
    half = 0.5 * fwhm
    d = x - center
    den = d ** 2 + half ** 2
    shape = half ** 2 / den
    cols = np.empty((x.size, 4))
    cols[:, 0] = amplitude * half ** 2 * 2.0 * d / den ** 2
    cols[:, 1] = amplitude * half * d ** 2 / den ** 2
    cols[:, 2] = shape
    cols[:, 3] = 1.0
    return cols


def _initial_guess(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    offset = float(y.min())
    amplitude = float(y.max() - y.min())
    peak = int(np.argmax(y))
    center = float(x[peak])
    half_level = offset + 0.5 * amplitude
    above = y >= half_level
    if above.any():
        lo = int(np.argmax(above))
        hi = int(len(y) - 1 - np.argmax(above[::-1]))
        fwhm = float(x[hi] - x[lo])
    else:
        fwhm = 0.0
    if fwhm <= 0.0:
        fwhm = float(x[-1] - x[0]) / 4.0
    return np.array([center, fwhm, amplitude, offset])


def fit_lorentzian(detunings: np.ndarray, signal: np.ndarray,
                   max_iterations: int = 200) -> LorentzianFit:
    """Damped Gauss-Newton fit of a Lorentzian to a line.

    Initialization: offset from the minimum, amplitude from the span,
    center at the grid maximum, width from the half-maximum crossing
    distance.  Each iteration solves the linearized least-squares step;
    if the full step increases the cost beyond rounding the step is
    halved (damping floor 1e-6, after which the fit stops unconverged).
    Converged means the relative parameter change fell below 1e-13;
    the tight threshold keeps the fitted parameters equivariant under
    shifts and rescalings of the detuning axis to better than 1e-10.
    Uncertainties come from the linearized covariance scaled by the
    residual variance.
    """
    x = np.asarray(detunings, dtype=float)
    y = np.asarray(signal, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("detunings and signal must be equal-length 1-d arrays")
    if x.size < 5:
        raise ValueError("need at least 5 points to fit 4 parameters")

    p = _initial_guess(x, y)
    scale = np.array([max(p[1], 1.0), max(p[1], 1.0),
                      max(abs(p[2]), 1e-30), max(abs(p[2]), 1e-30)])
    residual = y - lorentzian(x, *p)
    cost = float(residual @ residual)
    converged = False

    for _ in range(max_iterations):
        jac = _jacobian(x, p[0], p[1], p[2])
        step, *_ = np.linalg.lstsq(jac, residual, rcond=None)
        damping = 1.0
        while True:
            trial = p + damping * step
            trial_residual = y - lorentzian(x, *trial)
            trial_cost = float(trial_residual @ trial_residual)
            # accept cost plateaus within rounding so the final Newton
            # contractions are not rejected over a single ulp
            if trial_cost <= cost * (1.0 + 1e-12) or damping < 1e-6:
                break
            damping *= 0.5
        if trial_cost > cost * (1.0 + 1e-12):
            break  # damping floor reached without improvement
        change = float(np.max(np.abs(damping * step) / scale))
        p, residual, cost = trial, trial_residual, trial_cost
        if change < 1e-13:
            converged = True
            break

    p[1] = abs(p[1])  # the model is even in the width
    jac = _jacobian(x, p[0], p[1], p[2])
    dof = x.size - 4
    residual_variance = cost / dof if dof > 0 else math.nan
    try:
        covariance = residual_variance * np.linalg.inv(jac.T @ jac)
        sigmas = tuple(float(s) for s in np.sqrt(np.abs(np.diag(covariance))))
    except np.linalg.LinAlgError:
        sigmas = (math.nan,) * 4
    return LorentzianFit(center=float(p[0]), fwhm=float(p[1]),
                         amplitude=float(p[2]), offset=float(p[3]),
                         parameter_uncertainties=sigmas,
                         residual_norm=math.sqrt(cost), converged=converged)


def fit_trend(powers: np.ndarray, values: np.ndarray, degree: int = 1,
              power_range: tuple[float, float] | None = None) -> TrendFit:
    """Ordinary least-squares polynomial of the given degree.

    ``power_range`` restricts the fit to points with
    power_range[0] <= power <= power_range[1]; coefficients are returned
    constant-first, in the units of the inputs (values per power^k).
    Uncertainties are the square roots of the diagonal of the
    residual-scaled covariance (nan when there are no spare degrees of
    freedom).
    """
    x = np.asarray(powers, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("powers and values must be equal-length 1-d arrays")
    if degree not in (1, 2):
        raise ValueError("degree must be 1 or 2")
    if power_range is None:
        power_range = (float(x.min()), float(x.max()))
    inside = (x >= power_range[0]) & (x <= power_range[1])
    xs, ys = x[inside], y[inside]
    if xs.size < degree + 1:
        raise ValueError(
            f"need at least {degree + 1} points in range, have {xs.size}")

    vander = np.vander(xs, degree + 1, increasing=True)
    coef, _, _, _ = np.linalg.lstsq(vander, ys, rcond=None)
    residual = ys - vander @ coef
    dof = xs.size - (degree + 1)
    if dof > 0:
        variance = float(residual @ residual) / dof
        covariance = variance * np.linalg.inv(vander.T @ vander)
        sigmas = tuple(float(s) for s in np.sqrt(np.abs(np.diag(covariance))))
    else:
        sigmas = (math.nan,) * (degree + 1)
    return TrendFit(coefficients=tuple(float(c) for c in coef),
                    uncertainties=sigmas,
                    fit_range=(float(power_range[0]), float(power_range[1])),
                    degree=degree)


def half_maximum_width(detunings: np.ndarray, signal: np.ndarray) -> float:
    """Model-free full width at half maximum by linear interpolation.

    The half level sits midway between the minimum and maximum of the
    signal; the crossings are interpolated on each side of the peak.
    Suitable for non-Lorentzian shapes (rectangular-pulse responses ring),
    where a model fit would bias the width.
    """
    x = np.asarray(detunings, dtype=float)
    y = np.asarray(signal, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size < 3:
        raise ValueError("need equal-length 1-d arrays with at least 3 points")
    peak = int(np.argmax(y))
    half = 0.5 * (y.min() + y.max())
    left = None
    for i in range(peak, 0, -1):
        if y[i - 1] < half <= y[i]:
            frac = (half - y[i - 1]) / (y[i] - y[i - 1])
            left = x[i - 1] + frac * (x[i] - x[i - 1])
            break
    right = None
    for i in range(peak, x.size - 1):
        if y[i] >= half > y[i + 1]:
            frac = (y[i] - half) / (y[i] - y[i + 1])
            right = x[i] + frac * (x[i + 1] - x[i])
            break
    if left is None or right is None:
        raise ValueError("signal does not cross its half maximum on both sides")
    return float(right - left)


def birge_ratio(values: np.ndarray, uncertainties: np.ndarray) -> float:
    """Scatter of a weighted mean in units of the stated uncertainties.

    sqrt(chi^2 / (n - 1)) about the inverse-variance-weighted mean: 1 when
    the scatter matches the error bars, larger when the values disagree
    beyond them.
    """
    v = np.asarray(values, dtype=float)
    u = np.asarray(uncertainties, dtype=float)
    if v.shape != u.shape or v.ndim != 1:
        raise ValueError("values and uncertainties must be equal-length 1-d arrays")
    if v.size < 2:
        raise ValueError("need at least two values")
    if np.any(u <= 0.0):
        raise ValueError("uncertainties must be positive")
    w = 1.0 / u ** 2
    mean = float((w * v).sum() / w.sum())
    chi2 = float((w * (v - mean) ** 2).sum())
    return math.sqrt(chi2 / (v.size - 1))
