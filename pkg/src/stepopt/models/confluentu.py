"""Confluent-U asset model: square-root underlying transformed by a Tricomi-U
generating function."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.special as sc

from ..specfun import SpecialValue, kummer_m, tricomi_u
from ..spectral import SolvableDiffusion
from .base import PricingModel

__all__ = ["ConfluentUParams", "make_confluentu", "CirUnderlying"]


@dataclass(frozen=True)
class ConfluentUParams:
    mu: float          # > 0
    c: float           # map scale (currency)
    rho: float         # measure-change rate
    nu: float          # underlying vol scale
    gamma1: float      # mean-reversion speed
    r: float           # risk-free rate

    def __post_init__(self):
        for name in ("mu", "c", "rho", "nu", "gamma1", "r"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def upsilon(self) -> float:
        return self.rho / self.gamma1

    @property
    def kappa(self) -> float:
        return 2.0 * self.gamma1 / self.nu ** 2


class CirUnderlying(SolvableDiffusion):
    """Mean-reverting square-root diffusion with positive gamma0, gamma1."""

    def __init__(self, mu: float, gamma1: float, nu: float):
        self.mu = mu
        self.gamma1 = gamma1
        self.nu = nu
        self.kappa = 2.0 * gamma1 / nu ** 2
        self.b = mu + 1.0
        self.interval = (0.0, math.inf)
        self.boundary_left = "regular-killing" if mu < 1.0 else "exit"
        self.boundary_right = "natural"

    def psi(self, lam, x) -> SpecialValue:
        a = np.asarray(lam, dtype=float) / self.gamma1
        return kummer_m(a, self.b, self.kappa * np.asarray(x, dtype=float))

    def dpsi_dx(self, lam, x) -> SpecialValue:
        a = np.asarray(lam, dtype=float) / self.gamma1
        z = self.kappa * np.asarray(x, dtype=float)
        v = self.kappa * (a / self.b) * sc.hyp1f1(a + 1.0, self.b + 1.0, z)
        return SpecialValue(v, np.zeros_like(v))

    def phi(self, lam, x) -> SpecialValue:
        a = np.asarray(lam, dtype=float) / self.gamma1
        return tricomi_u(a, self.b, self.kappa * np.asarray(x, dtype=float))

    def dphi_dx(self, lam, x) -> SpecialValue:
        a = np.asarray(lam, dtype=float) / self.gamma1
        z = self.kappa * np.asarray(x, dtype=float)
        du = tricomi_u(a + 1.0, self.b + 1.0, z)
        return SpecialValue(-self.kappa * a * du.value, du.scale_log)

    def speed_density(self, x):
        x = np.asarray(x, dtype=float)
        return (self.kappa / self.gamma1) * x ** self.mu * np.exp(-self.kappa * x)

    def scale_density(self, x):
        x = np.asarray(x, dtype=float)
        return x ** (-self.mu - 1.0) * np.exp(self.kappa * x)

    def wronskian_const(self, lam) -> SpecialValue:
        arg = np.asarray(lam, dtype=float) / self.gamma1
        v = sc.gammasgn(arg) * self.kappa ** (-self.mu) * sc.gamma(self.b)
        return SpecialValue(v, -sc.gammaln(arg))

    def base_eigenvalue(self, n: int) -> float:
        return self.gamma1 * (n - 1)

    def base_eigenvalues(self, n_max: int) -> np.ndarray:
        return self.gamma1 * np.arange(0, n_max, dtype=float)


def make_confluentu(p: ConfluentUParams) -> PricingModel:
    diff = CirUnderlying(p.mu, p.gamma1, p.nu)
    kap, ups, b = p.kappa, p.upsilon, p.mu + 1.0
    a_m = ups + p.r / p.gamma1
    c = p.c

    def u(x):
        return sc.hyperu(ups, b, kap * np.asarray(x, dtype=float))

    def du_dx(x):
        return -ups * kap * sc.hyperu(ups + 1.0, b + 1.0, kap * np.asarray(x, dtype=float))

    def F(x):
        z = kap * np.asarray(x, dtype=float)
        return c * sc.hyp1f1(a_m, b, z) / sc.hyperu(ups, b, z)

    def F_prime(x):
        z = kap * np.asarray(x, dtype=float)
        uu = sc.hyperu(ups, b, z)
        num = ((a_m / b) * sc.hyp1f1(a_m + 1.0, b + 1.0, z) * uu
               + ups * sc.hyp1f1(a_m, b, z) * sc.hyperu(ups + 1.0, b + 1.0, z))
        return c * kap * num / uu ** 2

    return PricingModel(
        name="confluentu",
        underlying=diff,
        rate=p.r,
        rho=p.rho,
        u=u,
        du_dx=du_dx,
        F=F,
        F_prime=F_prime,
        diffusion_coef=lambda x: p.nu * np.sqrt(np.asarray(x, dtype=float)),
        default_n_terms=300,
        params={"mu": p.mu, "c": p.c, "rho": p.rho, "nu": p.nu,
                "gamma1": p.gamma1, "r": p.r},
    )
