"""Pricing-model container: an underlying solvable diffusion plus the
measure-change data and the state-to-price map."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from ..spectral import SolvableDiffusion

__all__ = ["PricingModel", "doob_factor", "map_inverse"]


@dataclass
class PricingModel:
    """A solvable asset-price model S_t = F(X_t).

    ``underlying`` is the diffusion the spectral expansion runs on; densities
    of the asset model are obtained from it through the measure-change factor
    e^{-rho t} u(y)/u(x).  ``u`` is identically 1 (rho = 0) when no transform
    is involved.
    """

    name: str
    underlying: SolvableDiffusion
    rate: float
    rho: float
    u: Callable[[np.ndarray], np.ndarray]
    du_dx: Callable[[np.ndarray], np.ndarray]
    F: Callable[[np.ndarray], np.ndarray]
    F_prime: Callable[[np.ndarray], np.ndarray]
    diffusion_coef: Callable[[np.ndarray], np.ndarray]   # b(x) of the underlying
    default_n_terms: int
    params: dict
    x_inverse: Callable[[float], float] | None = None    # closed-form X, if any
    _x_cache: dict = field(default_factory=dict, repr=False)

    # ------------------------------------------------------------------ #

    def X(self, price: float) -> float:
        """Inverse map state = X(price), memoized."""
        key = float(price)
        hit = self._x_cache.get(key)
        if hit is not None:
            return hit
        x = map_inverse(self, key)
        self._x_cache[key] = x
        return x

    def local_vol(self, price: np.ndarray) -> np.ndarray:
        """sigma(S)/S evaluated through the state map."""
        price = np.asarray(price, dtype=float)
        x = np.array([self.X(float(s)) for s in np.atleast_1d(price)])
        sig = self.diffusion_coef(x) * self.F_prime(x)
        out = sig / np.atleast_1d(price)
        return out if price.ndim else float(out[0])

    def price_bounds(self) -> tuple[float, float]:
        lo_x, hi_x = self.underlying.interval
        lo = 0.0
        hi = math.inf
        if math.isfinite(hi_x):
            hi = float(self.F(np.asarray(hi_x * (1 - 1e-12))))
        return lo, hi


def doob_factor(model: PricingModel, t: float, x, y):
    """Measure-change factor e^{-rho t} u(y)/u(x); identically 1 for rho=0, u=1."""
    return math.exp(-model.rho * t) * model.u(np.asarray(y, dtype=float)) / model.u(
        np.asarray(x, dtype=float))


def map_inverse(model: PricingModel, price: float) -> float:
    """Monotone inversion of F to ~1e-13 relative (closed form when available)."""
    if model.x_inverse is not None:
        return float(model.x_inverse(price))
    lo_x, hi_x = model.underlying.interval
    lo_p, hi_p = model.price_bounds()
    if not (lo_p < price < hi_p):
        raise ValueError(f"price {price} outside model range ({lo_p}, {hi_p})")

    def g(x):
        return float(model.F(np.asarray(x))) - price

    # bracket: expand from a unit-scale window
    if math.isfinite(lo_x) and math.isfinite(hi_x):
        a = lo_x + 1e-13 * (hi_x - lo_x)
        b = hi_x - 1e-13 * (hi_x - lo_x)
    else:
        a, b = -1.0, 1.0
        if math.isfinite(lo_x):
            a = lo_x + 1e-12 if lo_x != 0 else 1e-12
        while g(a) > 0:
            a = lo_x + (a - lo_x) / 8 if math.isfinite(lo_x) else a * 2 - abs(b)
            if abs(a) > 1e18 or (math.isfinite(lo_x) and a - lo_x < 1e-300):
                raise ValueError("failed to bracket map inverse from below")
        while g(b) < 0:
            b = b * 8 if b > 0 else 1.0
            if b > 1e18:
                raise ValueError("failed to bracket map inverse from above")
    return brentq(g, a, b, xtol=1e-300, rtol=8.9e-16, maxiter=200)
