"""g-and-h and g-and-k quantile distributions.

Both are defined through their quantile function

    q(lam) = A + B (1 + c tanh(g z / 2)) z psi(z),   z = Phi^{-1}(lam),

with ``psi = exp(h z^2 / 2)`` (g-and-h) or ``psi = (1 + z^2)^k`` (g-and-k)
and ``c = 0.8``.  The density at a quantile follows from the chain rule,
``f(q(lam)) = phi(z) / (dq/dz)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateQuantiles
from ..special import normal_pdf, normal_quantile
from .base import ModelSpec

__all__ = [
    "GHParams",
    "GKParams",
    "C_SKEW",
    "gq_quantile",
    "gq_density_at_quantile",
    "g_and_h_model",
    "g_and_k_model",
    "gq_start_grid",
    "gq_plugin_start",
]

C_SKEW = 0.8
GQ_BOX = ((-10.0, 10.0), (0.0, 10.0), (-10.0, 10.0), (0.0, 10.0))
GQ_TRUTH = (-0.7, 1.7, -0.4, 0.5)


@dataclass(frozen=True)
class GHParams:
    A: float
    B: float
    g: float
    h: float

    def as_array(self):
        return np.array([self.A, self.B, self.g, self.h])


@dataclass(frozen=True)
class GKParams:
    A: float
    B: float
    g: float
    k: float

    def as_array(self):
        return np.array([self.A, self.B, self.g, self.k])


def _unpack(params):
    if isinstance(params, (GHParams, GKParams)):
        return params.as_array()
    return np.asarray(params, dtype=float)


def _q_of_z(theta, z, family):
    a, b, g, tail = theta
    skew = 1.0 + C_SKEW * np.tanh(0.5 * g * z)
    psi = np.exp(0.5 * tail * z * z) if family == "h" else (1.0 + z * z) ** tail
    return a + b * skew * z * psi


def _dq_dz(theta, z, family):
    _, b, g, tail = theta
    th = np.tanh(0.5 * g * z)
    skew = 1.0 + C_SKEW * th
    dskew = 0.5 * C_SKEW * g * (1.0 - th * th)
    if family == "h":
        psi = np.exp(0.5 * tail * z * z)
        dzpsi = psi * (1.0 + tail * z * z)
    else:
        base = 1.0 + z * z
        psi = base ** tail
        dzpsi = psi + z * 2.0 * tail * z * base ** (tail - 1.0)
    return b * (dskew * z * psi + skew * dzpsi)


def gq_quantile(params, lam, family: str = "h"):
    """Quantile of the g-and-h (``family='h'``) or g-and-k (``'k'``) law."""
    th = _unpack(params)
    return _q_of_z(th, normal_quantile(lam), family)


def gq_density_at_quantile(params, lam, family: str = "h", analytic: bool = True, step: float = 1e-6):
    """Density evaluated at ``q(lam)``.

    With ``analytic=False`` the derivative ``dq/dz`` is taken by a central
    difference of width ``2 * step`` in z.

    Raises
    ------
    DegenerateQuantiles
        Where ``dq/dz <= 0`` (the parameters give a nonmonotone quantile).
    """
    th = _unpack(params)
    z = normal_quantile(lam)
    if analytic:
        deriv = _dq_dz(th, z, family)
    else:
        deriv = (_q_of_z(th, z + step, family) - _q_of_z(th, z - step, family)) / (2.0 * step)
    if np.any(~(deriv > 0)):
        raise DegenerateQuantiles("quantile function is not increasing at these parameters")
    return normal_pdf(z) / deriv


def _make(family: str) -> ModelSpec:
    tail = "h" if family == "h" else "k"

    def q(th, lam):
        return gq_quantile(th, lam, family)

    def dens(th, lam):
        return gq_density_at_quantile(th, lam, family)

    return ModelSpec(
        f"g-and-{tail}", ("A", "B", "g", tail), GQ_BOX, GQ_TRUTH, q, lambda th: 0.0,
        lambda th, n, rng: q(th, rng.random(n)),
        density_fn=dens, start_fn=lambda y: gq_plugin_start(y, family),
        prior_text="1(-10 <= A, g <= 10) 1(0 <= B, %s <= 10)" % tail)


def g_and_h_model() -> ModelSpec:
    return _make("h")


def g_and_k_model() -> ModelSpec:
    return _make("k")


def gq_plugin_start(y, family: str = "h"):
    """Quantile-based plug-in estimate of (A, B, g, h or k).

    Uses the median for A, the interquartile range for B, the log ratio of
    upper and lower octile spreads for g and the octile-to-quartile spread
    ratio for the tail parameter.  Rough, but it lands in the right basin.
    """
    y = np.sort(np.asarray(y, dtype=float))
    qs = np.quantile(y, [0.125, 0.25, 0.5, 0.75, 0.875])
    z25, z125 = normal_quantile(0.75), normal_quantile(0.875)
    a = qs[2]
    b = (qs[3] - qs[1]) / (2.0 * z25)
    up, lo = qs[4] - a, a - qs[0]
    g = 0.0
    if up > 0 and lo > 0:
        # tanh(g z / 2) ~ g z / 2 so (up - lo)/(up + lo) ~ c tanh(g z / 2)
        r = np.clip((up - lo) / (up + lo) / C_SKEW, -0.99, 0.99)
        g = 2.0 * np.arctanh(r) / z125
    spread = (qs[4] - qs[0]) / max(qs[3] - qs[1], 1e-12)
    ratio = spread / (z125 / z25)
    tail = 0.0
    if ratio > 1:
        if family == "h":
            tail = 2.0 * np.log(ratio) / (z125 ** 2 - z25 ** 2)
        else:
            tail = np.log(ratio) / np.log((1 + z125 ** 2) / (1 + z25 ** 2))
    b = b / max(np.exp(0.5 * tail * z25 ** 2) if family == "h" else (1 + z25 ** 2) ** tail, 1e-12)
    out = np.array([a, b, g, tail])
    lo_b = np.array([bx[0] for bx in GQ_BOX])
    hi_b = np.array([bx[1] for bx in GQ_BOX])
    return np.clip(out, lo_b, hi_b)


def gq_start_grid():
    """Grid of starting values ``A x B x g x tail`` clipped to the box."""
    grid = itertools.product((-1.0, 0.0, 1.0), (1.0, 10.0, 100.0), (-10.0, -1.0, 0.0, 1.0, 10.0), (0.0, 1.0, 10.0))
    lo = np.array([bx[0] for bx in GQ_BOX])
    hi = np.array([bx[1] for bx in GQ_BOX])
    pts = np.unique(np.clip(np.array(list(grid)), lo, hi), axis=0)
    return [p for p in pts]
