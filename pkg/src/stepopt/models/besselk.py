"""Bessel-K asset model: squared-Bessel underlying with an upper killing level."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.special as sc

from ..specfun import SpecialValue, bessel_j_zero
from ..spectral import SolvableDiffusion
from .base import PricingModel

__all__ = ["BesselKParams", "make_besselk", "SqbKilled"]


@dataclass(frozen=True)
class BesselKParams:
    mu: float            # Bessel order, > 0
    gamma0: float        # underlying drift constant, > 0
    rho: float           # measure-change rate, > 0
    c: float             # map scale (currency), > 0
    h: float             # upper killing level in the underlying state, > 0
    r: float             # risk-free rate

    def __post_init__(self):
        for name in ("mu", "gamma0", "rho", "c", "h", "r"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def nu2(self) -> float:
        # forced by mu = 2 gamma0 / nu^2 - 1
        return 2.0 * self.gamma0 / (self.mu + 1.0)


class SqbKilled(SolvableDiffusion):
    """Squared-Bessel diffusion on (0, h) with killing at the upper endpoint.

    The increasing solution is kept in the entire-in-lambda normalization
    E_mu(2 lam x / nu^2) with E_mu(w) = sum_k w^k / (k! Gamma(mu+k+1)), which
    stays real through lam = 0; negative lam evaluates through J/Y instead of
    I/K so no complex arguments ever appear.
    """

    def __init__(self, mu: float, nu2: float, h: float):
        self.mu = mu
        self.nu2 = nu2
        self.nu = math.sqrt(nu2)
        self.h = h
        self.interval = (0.0, h)
        self.boundary_left = "regular-killing" if mu < 1.0 else "exit"
        self.boundary_right = "regular-killing"
        self._jzeros: list[float] = []

    # -- entire-normalized Bessel block ------------------------------------ #

    def _E(self, order: float, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        out = np.empty_like(w)
        pos = w > 1e-10
        neg = w < -1e-10
        mid = ~(pos | neg)
        if np.any(pos):
            s = np.sqrt(w[pos])
            out[pos] = sc.iv(order, 2.0 * s) * s ** (-order)
        if np.any(neg):
            s = np.sqrt(-w[neg])
            out[neg] = sc.jv(order, 2.0 * s) * s ** (-order)
        if np.any(mid):
            out[mid] = (1.0 + w[mid] / (order + 1.0)) / sc.gamma(order + 1.0)
        return out

    def psi(self, lam, x) -> SpecialValue:
        lam = np.asarray(lam, dtype=float)
        x = np.asarray(x, dtype=float)
        v = self._E(self.mu, 2.0 * lam * x / self.nu2)
        return SpecialValue(v, np.zeros_like(v))

    def dpsi_dx(self, lam, x) -> SpecialValue:
        lam = np.asarray(lam, dtype=float)
        x = np.asarray(x, dtype=float)
        v = (2.0 * lam / self.nu2) * self._E(self.mu + 1.0, 2.0 * lam * x / self.nu2)
        return SpecialValue(v, np.zeros_like(v))

    def _phi_combo(self, lam, x, shifted_order: bool) -> np.ndarray:
        """Cylinder combination vanishing at h; shifted_order -> the mu+1 pair
        entering the x-derivative."""
        lam_b, x_b = np.broadcast_arrays(np.asarray(lam, dtype=float),
                                         np.asarray(x, dtype=float))
        out = np.empty_like(x_b)
        mu = self.mu
        sx = 2.0 * np.sqrt(2.0 * np.abs(lam_b) * x_b) / self.nu
        sh = 2.0 * np.sqrt(2.0 * np.abs(lam_b) * self.h) / self.nu
        pos = lam_b > 1e-14
        neg = lam_b < -1e-14
        mid = ~(pos | neg)
        if np.any(pos):
            a, bhh = sx[pos], sh[pos]
            if not shifted_order:
                out[pos] = sc.iv(mu, bhh) * sc.kv(mu, a) - sc.kv(mu, bhh) * sc.iv(mu, a)
            else:
                out[pos] = -(sc.iv(mu, bhh) * sc.kv(mu + 1, a)
                             + sc.kv(mu, bhh) * sc.iv(mu + 1, a))
        if np.any(neg):
            a, bhh = sx[neg], sh[neg]
            if not shifted_order:
                out[neg] = 0.5 * math.pi * (sc.jv(mu, a) * sc.yv(mu, bhh)
                                            - sc.yv(mu, a) * sc.jv(mu, bhh))
            else:
                out[neg] = -0.5 * math.pi * (sc.jv(mu + 1, a) * sc.yv(mu, bhh)
                                             - sc.yv(mu + 1, a) * sc.jv(mu, bhh))
        if np.any(mid):
            xr = x_b[mid]
            if not shifted_order:
                out[mid] = (0.5 / mu) * ((self.h / xr) ** (mu / 2.0)
                                         - (xr / self.h) ** (mu / 2.0))
            else:
                # continuous stand-in so dphi's lam->0 limit comes out right
                out[mid] = np.nan
        return out

    def phi(self, lam, x) -> SpecialValue:
        x_b = np.broadcast_arrays(np.asarray(lam, dtype=float),
                                  np.asarray(x, dtype=float))[1]
        v = self._phi_combo(lam, x, shifted_order=False) * x_b ** (-self.mu / 2.0)
        return SpecialValue(v, np.zeros_like(v))

    def dphi_dx(self, lam, x) -> SpecialValue:
        lam_b, x_b = np.broadcast_arrays(np.asarray(lam, dtype=float),
                                         np.asarray(x, dtype=float))
        sx = 2.0 * np.sqrt(2.0 * np.abs(lam_b) * x_b) / self.nu
        v = self._phi_combo(lam, x, shifted_order=True) * \
            x_b ** (-self.mu / 2.0) * sx / (2.0 * x_b)
        mid = np.abs(lam_b) <= 1e-14
        if np.any(mid):
            v = np.array(v, copy=True)
            v[mid] = -0.5 * self.h ** (self.mu / 2.0) * x_b[mid] ** (-self.mu - 1.0)
        return SpecialValue(v, np.zeros_like(v))

    # -- densities / constants --------------------------------------------- #

    def speed_density(self, x):
        x = np.asarray(x, dtype=float)
        return (2.0 / self.nu2) * x ** self.mu

    def scale_density(self, x):
        x = np.asarray(x, dtype=float)
        return x ** (-self.mu - 1.0)

    def wronskian_const(self, lam) -> SpecialValue:
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        v = np.empty_like(lam)
        pos = lam > 1e-14
        neg = lam < -1e-14
        mid = ~(pos | neg)
        if np.any(pos):
            lp = lam[pos]
            v[pos] = 0.5 * (2.0 * lp / self.nu2) ** (-self.mu / 2.0) * \
                sc.iv(self.mu, 2.0 * np.sqrt(2.0 * lp * self.h) / self.nu)
        if np.any(neg):
            ln = -lam[neg]
            v[neg] = 0.5 * (2.0 * ln / self.nu2) ** (-self.mu / 2.0) * \
                sc.jv(self.mu, 2.0 * np.sqrt(2.0 * ln * self.h) / self.nu)
        if np.any(mid):
            v[mid] = 0.5 * self.h ** (self.mu / 2.0) / sc.gamma(self.mu + 1.0)
        v = v if np.ndim(lam) else float(v)
        return SpecialValue(v, np.zeros_like(v))

    def base_eigenvalue(self, n: int) -> float:
        while len(self._jzeros) < n:
            self._jzeros.append(bessel_j_zero(self.mu, len(self._jzeros) + 1))
        j = self._jzeros[n - 1]
        return self.nu2 * j * j / (8.0 * self.h)

    def base_eigenvalues(self, n_max: int) -> np.ndarray:
        self.base_eigenvalue(n_max)
        return self.nu2 * np.asarray(self._jzeros[:n_max]) ** 2 / (8.0 * self.h)


def make_besselk(p: BesselKParams) -> PricingModel:
    nu2 = p.nu2
    nu = math.sqrt(nu2)
    diff = SqbKilled(p.mu, nu2, p.h)
    mu, rho, c, r = p.mu, p.rho, p.c, p.r

    def s_rho(x):
        return 2.0 * np.sqrt(2.0 * rho * np.asarray(x, dtype=float)) / nu

    def s_rr(x):
        return 2.0 * np.sqrt(2.0 * (rho + r) * np.asarray(x, dtype=float)) / nu

    def u(x):
        x = np.asarray(x, dtype=float)
        return x ** (-mu / 2.0) * sc.kv(mu, s_rho(x))

    def du_dx(x):
        x = np.asarray(x, dtype=float)
        s = s_rho(x)
        return -x ** (-mu / 2.0) * (s / (2.0 * x)) * sc.kv(mu + 1.0, s)

    def F(x):
        x = np.asarray(x, dtype=float)
        return c * sc.iv(mu, s_rr(x)) / sc.kv(mu, s_rho(x))

    def F_prime(x):
        x = np.asarray(x, dtype=float)
        s1, s0 = s_rr(x), s_rho(x)
        k = sc.kv(mu, s0)
        return (c / (2.0 * x)) * (s1 * sc.iv(mu + 1.0, s1) * k
                                  + s0 * sc.iv(mu, s1) * sc.kv(mu + 1.0, s0)) / k ** 2

    return PricingModel(
        name="besselk",
        underlying=diff,
        rate=r,
        rho=rho,
        u=u,
        du_dx=du_dx,
        F=F,
        F_prime=F_prime,
        diffusion_coef=lambda x: nu * np.sqrt(np.asarray(x, dtype=float)),
        default_n_terms=50,
        params={"mu": p.mu, "gamma0": p.gamma0, "rho": p.rho, "c": p.c,
                "h": p.h, "r": p.r},
    )
