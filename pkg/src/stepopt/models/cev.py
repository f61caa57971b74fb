"""Constant-elasticity-of-variance model, mapped to a square-root diffusion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.special as sc

from ..specfun import SpecialValue, kummer_m, tricomi_u
from ..spectral import SolvableDiffusion
from .base import PricingModel

__all__ = ["CevParams", "make_cev", "CevCir"]


@dataclass(frozen=True)
class CevParams:
    delta: float          # scale of sigma(S) = delta * S^(beta+1)
    beta: float           # elasticity, negative
    r: float              # risk-free rate

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.beta >= 0:
            raise ValueError("beta must be negative")
        if self.r <= 0:
            raise ValueError("r must be positive")


class CevCir(SolvableDiffusion):
    """Square-root diffusion the CEV model maps onto.

    Parameters follow the mapping nu=2, gamma0 = 2 + 1/beta, gamma1 = 2 r beta
    (gamma1 < 0, mu = 1/(2 beta) < 0); fundamental solutions are confluent
    hypergeometric in |mu|, |gamma1|.  psi carries a (|gamma1|/2)^{|mu|}
    normalization so the Wronskian constant is exactly
    Gamma(1+|mu|)/Gamma(1+lam/|gamma1|).
    """

    def __init__(self, p: CevParams):
        self.gamma1 = 2.0 * p.r * p.beta
        self.mu = 1.0 / (2.0 * p.beta)
        self.amu = abs(self.mu)
        self.ag1 = abs(self.gamma1)
        self.b = 1.0 + self.amu
        self.q = self.ag1 / 2.0
        self.interval = (0.0, math.inf)
        self.boundary_left = "regular-killing" if -1.0 < self.mu < 0.0 else "exit"
        self.boundary_right = "natural"

    # fundamental pair ---------------------------------------------------- #

    def _prefactor_log(self, x):
        return self.amu * np.log(self.q * np.asarray(x, dtype=float)) \
            + self.gamma1 * np.asarray(x, dtype=float) / 2.0

    def psi(self, lam, x) -> SpecialValue:
        a = 1.0 + np.asarray(lam, dtype=float) / self.ag1
        m = kummer_m(a, self.b, self.q * np.asarray(x, dtype=float))
        return SpecialValue(m.value, m.scale_log + self._prefactor_log(x) + 0.0 * m.value)

    def dpsi_dx(self, lam, x) -> SpecialValue:
        x = np.asarray(x, dtype=float)
        a = 1.0 + np.asarray(lam, dtype=float) / self.ag1
        z = self.q * x
        m = sc.hyp1f1(a, self.b, z)
        dm = (a / self.b) * sc.hyp1f1(a + 1.0, self.b + 1.0, z)
        v = (self.amu / x + self.gamma1 / 2.0) * m + self.q * dm
        return SpecialValue(v, self._prefactor_log(x) + 0.0 * v)

    def phi(self, lam, x) -> SpecialValue:
        x = np.asarray(x, dtype=float)
        a = 1.0 + np.asarray(lam, dtype=float) / self.ag1
        u = tricomi_u(a, self.b, self.q * x)
        pre = self.amu * np.log(x) + self.gamma1 * x / 2.0
        return SpecialValue(u.value, u.scale_log + pre)

    def dphi_dx(self, lam, x) -> SpecialValue:
        x = np.asarray(x, dtype=float)
        a = 1.0 + np.asarray(lam, dtype=float) / self.ag1
        z = self.q * x
        u = tricomi_u(a, self.b, z)
        du = tricomi_u(a + 1.0, self.b + 1.0, z)
        t1 = SpecialValue((self.amu / x + self.gamma1 / 2.0) * u.value, u.scale_log)
        t2 = SpecialValue(-a * self.q * du.value, du.scale_log)
        out = t1 + t2
        pre = self.amu * np.log(x) + self.gamma1 * x / 2.0
        return SpecialValue(out.value, out.scale_log + pre)

    # densities / constants ------------------------------------------------ #

    def speed_density(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * x ** self.mu * np.exp(-self.gamma1 * x / 2.0)

    def scale_density(self, x):
        x = np.asarray(x, dtype=float)
        return x ** (-self.mu - 1.0) * np.exp(self.gamma1 * x / 2.0)

    def wronskian_const(self, lam) -> SpecialValue:
        arg = 1.0 + np.asarray(lam, dtype=float) / self.ag1
        return SpecialValue(sc.gammasgn(arg) * sc.gamma(self.b), -sc.gammaln(arg))

    def base_eigenvalue(self, n: int) -> float:
        return self.ag1 * n

    def base_eigenvalues(self, n_max: int) -> np.ndarray:
        return self.ag1 * np.arange(1, n_max + 1, dtype=float)


def make_cev(p: CevParams) -> PricingModel:
    """Assemble the CEV pricing model (identity measure change, closed-form map)."""
    diff = CevCir(p)
    two_beta = 2.0 * p.beta
    c_map = (p.delta ** 2 * p.beta ** 2)
    pexp = -1.0 / two_beta

    def F(x):
        return (c_map * np.asarray(x, dtype=float)) ** pexp

    def F_prime(x):
        x = np.asarray(x, dtype=float)
        return pexp * c_map ** pexp * x ** (pexp - 1.0)

    def x_inverse(price: float) -> float:
        return price ** (-two_beta) / c_map

    ones = lambda x: np.ones_like(np.asarray(x, dtype=float))
    zeros = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return PricingModel(
        name="cev",
        underlying=diff,
        rate=p.r,
        rho=0.0,
        u=ones,
        du_dx=zeros,
        F=F,
        F_prime=F_prime,
        diffusion_coef=lambda x: 2.0 * np.sqrt(np.asarray(x, dtype=float)),
        default_n_terms=150,
        params={"delta": p.delta, "beta": p.beta, "r": p.r},
        x_inverse=x_inverse,
    )
