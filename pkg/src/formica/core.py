"""Core domain types and the closed-form steering formulas.

A walker is described by a position on the unit torus and an orientation
on the circle.  Its angular drift combines the rotated gradient of a
chemical landscape with a curvature (Hessian) term weighted by the
anticipation rate; the drift derives from a scalar potential used by the
stationary-distribution analysis.  Everything in this module is a pure
function, and the types reduce their inputs to canonical representatives
eagerly so downstream numerics never see unreduced angles or positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(theta):
    """Reduce an angle (scalar or array) to [0, 2*pi). Total on any finite real."""
    out = np.mod(theta, TWO_PI)
    # np.mod can round up to the period for tiny negative inputs
    out = np.where(out >= TWO_PI, out - TWO_PI, out)
    return out if isinstance(theta, np.ndarray) else float(out)


def wrap_position(x):
    """Reduce a coordinate (scalar or array) to [0, 1) on the unit torus."""
    out = np.mod(x, 1.0)
    out = np.where(out >= 1.0, out - 1.0, out)
    return out if isinstance(x, np.ndarray) else float(out)


@dataclass(frozen=True)
class Angle:
    """Orientation on the 2*pi-periodic circle, stored reduced to [0, 2*pi)."""

    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", wrap_angle(float(self.value)))


@dataclass(frozen=True)
class TorusPoint:
    """Point on the unit torus, each coordinate stored reduced to [0, 1)."""

    x1: float
    x2: float

    def __post_init__(self):
        object.__setattr__(self, "x1", wrap_position(float(self.x1)))
        object.__setattr__(self, "x2", wrap_position(float(self.x2)))

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2])


@dataclass(frozen=True)
class HessianSym:
    """Symmetric 2x2 second-derivative block; only three entries are stored.

    Entries may be floats or equally shaped arrays (the formulas below
    broadcast), which keeps the per-particle hot path allocation-free.
    """

    a11: float
    a12: float
    a22: float

    @staticmethod
    def zero() -> "HessianSym":
        return HessianSym(0.0, 0.0, 0.0)

    @staticmethod
    def diag(a: float, b: float) -> "HessianSym":
        return HessianSym(a, 0.0, b)

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])


@dataclass(frozen=True)
class FieldProbe:
    """Field value, gradient and Hessian of a chemical field at one point."""

    c: float
    grad: np.ndarray
    hess: HessianSym

    def __post_init__(self):
        object.__setattr__(self, "grad", np.asarray(self.grad, dtype=float))
        if not (np.isfinite(self.c) and np.all(np.isfinite(self.grad))):
            raise ValueError("non-finite field probe")


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the coupled walker/field model.

    lam      constant walking speed (length/time)
    chi      reaction strength of the steering response
    tau      anticipation rate (length); weight of the curvature term
    sigma_x  spatial diffusion, sigma_theta angular diffusion,
    sigma_c  field diffusion
    gamma    field evaporation rate (1/time)
    mu       field deposition rate

    The antenna half-angle of the steering mechanism is absorbed into chi
    and is not a runtime parameter.  sigma_x and sigma_theta may be zero
    here (useful for deterministic test motion); every solver path and
    :func:`normalize_params` require them strictly positive.
    """

    lam: float
    chi: float
    tau: float
    sigma_x: float
    sigma_theta: float
    sigma_c: float
    gamma: float
    mu: float

    def __post_init__(self):
        problems = []
        if self.lam < 0:
            problems.append("lam must be >= 0")
        if self.chi < 0:
            problems.append("chi must be >= 0")
        if self.tau < 0:
            problems.append("tau must be >= 0")
        if self.sigma_x < 0:
            problems.append("sigma_x must be >= 0")
        if self.sigma_theta < 0:
            problems.append("sigma_theta must be >= 0")
        if not self.sigma_c > 0:
            problems.append("sigma_c must be > 0")
        if self.gamma < 0:
            problems.append("gamma must be >= 0")
        if not self.mu > 0:
            problems.append("mu must be > 0")
        if problems:
            raise ValueError("invalid model parameters: " + "; ".join(problems))


def _theta_value(theta):
    if isinstance(theta, Angle):
        return theta.value
    return theta


def unit_direction(theta) -> np.ndarray:
    """Unit direction (cos t, sin t) of an orientation; last axis has length 2."""
    t = np.asarray(_theta_value(theta), dtype=float)
    return np.stack([np.cos(t), np.sin(t)], axis=-1)


def unit_normal(theta) -> np.ndarray:
    """Left normal (-sin t, cos t); the derivative of :func:`unit_direction`."""
    t = np.asarray(_theta_value(theta), dtype=float)
    return np.stack([-np.sin(t), np.cos(t)], axis=-1)


def drift_B(theta, grad, hess: HessianSym, tau: float):
    """Angular drift at orientation theta over terrain (grad, hess).

    Returns n(t).grad + tau * n(t).(hess @ v(t)) with v the unit direction
    and n its left normal.  Linear in (grad, hess); broadcasts over arrays
    in theta, the gradient components and the Hessian entries.
    """
    t = np.asarray(_theta_value(theta), dtype=float)
    g = np.asarray(grad, dtype=float)
    p1, p2 = g[..., 0], g[..., 1]
    sin, cos = np.sin(t), np.cos(t)
    rot = 0.5 * (hess.a22 - hess.a11) * np.sin(2.0 * t) + hess.a12 * np.cos(2.0 * t)
    return -sin * p1 + cos * p2 + tau * rot


def potential_H(theta, grad, hess: HessianSym, tau: float):
    """Potential whose analytic theta-derivative equals :func:`drift_B`.

    Returns v(t).grad + (tau/2) * v(t).(hess @ v(t)); up to a constant it
    is the directional second-order approximation of the field one
    anticipation length ahead.
    """
    t = np.asarray(_theta_value(theta), dtype=float)
    g = np.asarray(grad, dtype=float)
    p1, p2 = g[..., 0], g[..., 1]
    quad = (
        0.5 * (hess.a11 + hess.a22)
        + 0.5 * (hess.a11 - hess.a22) * np.cos(2.0 * t)
        + hess.a12 * np.sin(2.0 * t)
    )
    return np.cos(t) * p1 + np.sin(t) * p2 + 0.5 * tau * quad


@dataclass(frozen=True)
class NormalizedParams:
    """Parameter set with unit diffusions plus the rescaling that produced it.

    ``params`` has sigma_x = sigma_theta = mu = 1 and sigma_c equal to the
    diffusion ratio of the original field and walkers.  The scale factors
    map between raw and normalized units:

        t_norm = time_scale  * t_raw      (time_scale  = sigma_theta)
        x_norm = space_scale * x_raw      (space_scale = sqrt(sigma_theta/sigma_x))
        c_raw  = field_scale * c_norm     (field_scale = mu)
    """

    params: ModelParams
    time_scale: float
    space_scale: float
    field_scale: float


def normalize_params(raw: ModelParams) -> NormalizedParams:
    """Rescale time, space and field so both walker diffusions and the
    deposition rate become 1.

    The surviving coefficients are lam/sqrt(sigma_x*sigma_theta) for the
    speed, chi*mu/sqrt(sigma_theta*sigma_x) for the reaction strength,
    tau*sqrt(sigma_theta/sigma_x) for the anticipation rate,
    gamma/sigma_theta for the evaporation and sigma_c/sigma_x for the
    field diffusion.  Idempotent on already-normalized inputs.
    """
    if raw.sigma_x <= 0 or raw.sigma_theta <= 0:
        raise ValueError("normalization requires sigma_x > 0 and sigma_theta > 0")
    root = math.sqrt(raw.sigma_theta / raw.sigma_x)
    geo = math.sqrt(raw.sigma_x * raw.sigma_theta)
    params = ModelParams(
        lam=raw.lam / geo,
        chi=raw.chi * raw.mu / geo,
        tau=raw.tau * root,
        sigma_x=1.0,
        sigma_theta=1.0,
        sigma_c=raw.sigma_c / raw.sigma_x,
        gamma=raw.gamma / raw.sigma_theta,
        mu=1.0,
    )
    return NormalizedParams(
        params=params,
        time_scale=raw.sigma_theta,
        space_scale=root,
        field_scale=raw.mu,
    )
