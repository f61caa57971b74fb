"""
Model-agnostic Sturm-Liouville machinery for occupation-time killing.

Provides:
* SolvableDiffusion      -- interface a concrete diffusion must implement
* OccupationSide         -- BELOW / ABOVE level
* EigenvalueSet          -- deformed eigenvalues + residue scales
* GreenQuery             -- arguments for the occupation-killed resolvent
* cross_wronskian        -- W[f_l1, g_l2](x) from analytic x-derivatives
* base_green             -- resolvent kernel of the plain diffusion
* occupation_green       -- four-case resolvent with occupation killing
* find_eigenvalues       -- bracketed zeros of the cross-Wronskian in lambda
* dlambda_cross_wronskian-- central-difference lambda derivative
* spectral_term          -- n-th eigenfunction product of the killed density
* occupation_density     -- truncated expansion of the killed transition PDF
* occupation_density_dx  -- its analytic x-derivative
* DensityExpansion       -- cached per-(side, alpha, level, x) evaluator

The expansion work happens on the underlying diffusion; measure-change
factors for transformed asset models are applied by the pricing layer.
"""

from __future__ import annotations

import enum
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .specfun import SpecialValue

__all__ = [
    "SolvableDiffusion",
    "OccupationSide",
    "EigenvalueSet",
    "GreenQuery",
    "SpectralError",
    "BracketError",
    "cross_wronskian",
    "base_green",
    "occupation_green",
    "find_eigenvalues",
    "dlambda_cross_wronskian",
    "spectral_term",
    "occupation_density",
    "occupation_density_dx",
    "DensityExpansion",
]

_ALPHA_ZERO_TOL = 1e-12
_COALESCENCE_REL = 1e-7
_COALESCENCE_OFFSET = 1e-5


class SpectralError(RuntimeError):
    pass


class BracketError(SpectralError):
    """A sign change could not be isolated for some eigenvalue index."""


class OccupationSide(enum.Enum):
    """Which side of the level accrues occupation time (and killing)."""

    BELOW = "below"   # A^{-}: time spent at or below the level
    ABOVE = "above"   # A^{+}: time spent above the level


class SolvableDiffusion(ABC):
    """A diffusion with known increasing/decreasing eigensolutions.

    psi/phi solve (G f)(x) = lam f(x) with the boundary conditions that make
    psi increasing and phi decreasing for lam > 0.  All evaluators must
    broadcast over numpy arrays in both lam and x and return SpecialValue.
    """

    #: open state interval (l, r)
    interval: tuple[float, float]
    #: boundary classification at l and r (informational)
    boundary_left: str = "unspecified"
    boundary_right: str = "unspecified"

    @abstractmethod
    def psi(self, lam, x) -> SpecialValue: ...

    @abstractmethod
    def phi(self, lam, x) -> SpecialValue: ...

    @abstractmethod
    def dpsi_dx(self, lam, x) -> SpecialValue: ...

    @abstractmethod
    def dphi_dx(self, lam, x) -> SpecialValue: ...

    @abstractmethod
    def speed_density(self, x): ...

    @abstractmethod
    def scale_density(self, x): ...

    @abstractmethod
    def wronskian_const(self, lam) -> SpecialValue:
        """W[phi_lam, psi_lam](x) / s(x), independent of x."""

    @abstractmethod
    def base_eigenvalue(self, n: int) -> float:
        """Closed-form n-th zero (in lambda) of wronskian_const(-lambda)."""

    def base_eigenvalues(self, n_max: int) -> np.ndarray:
        return np.array([self.base_eigenvalue(n) for n in range(1, n_max + 1)])


@dataclass
class GreenQuery:
    x: float
    y: float
    lam: float
    alpha: float
    level: float
    side: OccupationSide


@dataclass
class EigenvalueSet:
    """First N eigenvalues of the occupation-killed generator.

    ``values`` are the increasing simple zeros (in lambda-tilde) of the side's
    cross-Wronskian at the level; ``residue_scales`` the lambda-derivative of
    that cross-Wronskian evaluated at -lambda_n (log-scaled).
    """

    side: OccupationSide
    alpha: float
    level: float
    values: np.ndarray
    residue_scales: SpecialValue
    count: int
    base_values: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    # phi/psi proportionality constants, only populated on the alpha = 0 path
    base_ratios: SpecialValue | None = None


# --------------------------------------------------------------------------- #
# Wronskians and Green's functions
# --------------------------------------------------------------------------- #

def _fn_pair(model: SolvableDiffusion, kind: str):
    if kind == "psi":
        return model.psi, model.dpsi_dx
    if kind == "phi":
        return model.phi, model.dphi_dx
    raise ValueError(f"unknown fundamental-solution kind {kind!r}")


def cross_wronskian(f_kind: str, lam1, g_kind: str, lam2, x,
                    model: SolvableDiffusion) -> SpecialValue:
    """W[f_{lam1}, g_{lam2}](x) = f g' - g f' with analytic derivatives."""
    f, df = _fn_pair(model, f_kind)
    g, dg = _fn_pair(model, g_kind)
    return f(lam1, x) * dg(lam2, x) + (-(g(lam2, x) * df(lam1, x)))


def base_green(model: SolvableDiffusion, lam: float, x: float, y: float) -> float:
    """Resolvent kernel W^{-1} m(y) psi(x^y) phi(x v y) of the plain diffusion."""
    lo, hi = min(x, y), max(x, y)
    g = model.psi(lam, lo) * model.phi(lam, hi) / model.wronskian_const(lam)
    return float(g.to_float()) * model.speed_density(y)


def _side_params(side: OccupationSide, lam_tilde, alpha: float):
    """(below-region parameter, above-region parameter) at lambda = -lam_tilde."""
    if side is OccupationSide.BELOW:
        return -lam_tilde + alpha, -lam_tilde
    return -lam_tilde, -lam_tilde + alpha


def _eigen_wronskian(model: SolvableDiffusion, side: OccupationSide,
                     alpha: float, level: float, lam_tilde) -> SpecialValue:
    """Cross-Wronskian whose zeros (in lam_tilde) are the deformed eigenvalues."""
    pb, pa = _side_params(side, np.asarray(lam_tilde, dtype=float), alpha)
    return cross_wronskian("phi", pa, "psi", pb, level, model)


def dlambda_cross_wronskian(model: SolvableDiffusion, side: OccupationSide,
                            level: float, lam: float, alpha: float) -> float:
    """Central difference d/dlambda of the side's cross-Wronskian at lambda.

    Step h = max(1e-6, 1e-6 |lambda|); lambda here is the resolvent variable,
    i.e. the derivative is taken at lam (not at -lam).
    """
    return float(_dlambda_eigen_sv(model, side, level,
                                   np.asarray([-lam]), alpha).to_float()[0])


def _dlambda_eigen_sv(model: SolvableDiffusion, side: OccupationSide, level: float,
                      lam_tilde: np.ndarray, alpha: float) -> SpecialValue:
    """d/dlambda of the eigen cross-Wronskian at lambda = -lam_tilde (vector)."""
    h = np.maximum(1e-6, 1e-6 * np.abs(lam_tilde))
    wp = _eigen_wronskian(model, side, alpha, level, lam_tilde + h)
    wm = _eigen_wronskian(model, side, alpha, level, lam_tilde - h)
    diff = wp + (-wm)
    # w is parametrized by lam_tilde = -lambda, so flip the sign of the slope
    return SpecialValue(-diff.value / (2.0 * h), diff.scale_log)


def occupation_green(model: SolvableDiffusion, q: GreenQuery) -> float:
    """Occupation-killed resolvent kernel, piecewise in (x, level, y)."""
    x, y, lam, alpha, ell = q.x, q.y, q.lam, q.alpha, q.level
    if alpha == 0.0:
        return base_green(model, lam, x, y)
    if q.side is OccupationSide.BELOW:
        p_lo, p_hi = lam + alpha, lam
    else:
        p_lo, p_hi = lam, lam + alpha
    w_den = cross_wronskian("phi", p_hi, "psi", p_lo, ell, model)
    if abs(float(w_den.value)) < 1e-300:
        raise SpectralError("cross-Wronskian vanishes at the queried lambda (pole)")
    m_y = model.speed_density(y)
    if x <= ell and y <= ell:
        num = cross_wronskian("phi", p_lo, "phi", p_hi, ell, model)
        corr = (num / w_den) * model.psi(p_lo, x) * model.psi(p_lo, y) / model.wronskian_const(p_lo)
        return base_green(model, p_lo, x, y) + float(corr.to_float()) * m_y
    if x >= ell and y >= ell:
        num = cross_wronskian("psi", p_lo, "psi", p_hi, ell, model)
        corr = (num / w_den) * model.phi(p_hi, x) * model.phi(p_hi, y) / model.wronskian_const(p_hi)
        return base_green(model, p_hi, x, y) + float(corr.to_float()) * m_y
    s_ell = model.scale_density(ell)
    if x <= ell <= y:
        val = model.psi(p_lo, x) * model.phi(p_hi, y) / w_den
    else:
        val = model.phi(p_hi, x) * model.psi(p_lo, y) / w_den
    return s_ell * float(val.to_float()) * m_y


# --------------------------------------------------------------------------- #
# Eigenvalue search
# --------------------------------------------------------------------------- #

def _scan_partition(base: np.ndarray, alpha: float, refinements: int = 2) -> np.ndarray:
    grid = np.unique(np.concatenate([[1e-12], base, base + alpha]))
    for _ in range(refinements):
        grid = np.unique(np.concatenate([grid, 0.5 * (grid[1:] + grid[:-1])]))
    return grid


def _collect_roots(model, side, alpha, level, grid) -> list[float]:
    w = _eigen_wronskian(model, side, alpha, level, grid)
    sgn = np.sign(w.value)
    logmag = w.log_abs()
    roots = []
    for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]:
        ref = max(logmag[i], logmag[i + 1])

        def f(t, _ref=ref):
            wv = _eigen_wronskian(model, side, alpha, level, np.asarray([t]))
            return float(wv.value[0] * np.exp(wv.scale_log[0] - _ref))

        roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-14, rtol=8.9e-16))
    return sorted(roots)


def find_eigenvalues(model: SolvableDiffusion, side: OccupationSide, alpha: float,
                     level: float, n_terms: int) -> EigenvalueSet:
    """First ``n_terms`` zeros of the side's cross-Wronskian, with residue scales.

    Zeros are bracketed on the union partition of the base spectrum and its
    alpha-shift (each deformed eigenvalue sits in [lam_n, lam_n + alpha]);
    a 10x finer uniform rescan handles any bracket miss.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    margin = max(12, n_terms // 4)
    base = model.base_eigenvalues(n_terms + margin)

    if alpha <= _ALPHA_ZERO_TOL:
        values = base[:n_terms].copy()
        resid = _base_residue_scales(model, values)
        ratios = _base_phi_psi_ratios(model, values, level)
        return EigenvalueSet(side=side, alpha=0.0, level=level, values=values,
                             residue_scales=resid, count=n_terms,
                             base_values=values.copy(), base_ratios=ratios,
                             diagnostics={"mode": "base"})

    grid = _scan_partition(base, alpha)
    roots = _collect_roots(model, side, alpha, level, grid)
    lo_ok = base[:n_terms] - 1e-9 * np.maximum(1.0, base[:n_terms])
    hi_ok = base[:n_terms] + alpha + 1e-9 * np.maximum(1.0, base[:n_terms] + alpha)
    if len(roots) < n_terms or not np.all(
            (np.array(roots[:n_terms]) >= lo_ok) & (np.array(roots[:n_terms]) <= hi_ok)):
        # escalation: 10x finer uniform scan between consecutive base points
        fine = [np.linspace(a, b, 11) for a, b in zip(grid[:-1], grid[1:])]
        grid = np.unique(np.concatenate(fine))
        roots = _collect_roots(model, side, alpha, level, grid)
    if len(roots) < n_terms:
        raise BracketError(
            f"isolated only {len(roots)} of {n_terms} eigenvalue brackets "
            f"(side={side.value}, alpha={alpha}, level={level})")
    values = np.array(roots[:n_terms])
    if not np.all(np.diff(values) > 0):
        raise SpectralError("eigenvalues not strictly increasing")
    resid = _dlambda_eigen_sv(model, side, level, values, alpha)
    return EigenvalueSet(side=side, alpha=alpha, level=level, values=values,
                         residue_scales=resid, count=n_terms,
                         base_values=base[:n_terms].copy(),
                         diagnostics={"mode": "deformed", "scan_points": len(grid)})


def _base_residue_scales(model: SolvableDiffusion, values: np.ndarray) -> SpecialValue:
    """d/dlambda of wronskian_const at -lambda_n (the alpha = 0 residue scale)."""
    h = np.maximum(1e-6, 1e-6 * np.abs(values))
    wp = model.wronskian_const(-values + h)
    wm = model.wronskian_const(-values - h)
    diff = wp + (-wm)
    return SpecialValue(diff.value / (2.0 * h), diff.scale_log)


def _base_phi_psi_ratios(model: SolvableDiffusion, values: np.ndarray,
                         level: float) -> SpecialValue:
    """phi_{-lam_n} / psi_{-lam_n} proportionality constants.

    At a base eigenvalue the two solutions are proportional; the ratio is
    evaluated at whichever probe point keeps |psi| largest to stay clear of
    eigenfunction nodes.
    """
    lo, hi = model.interval
    probes = [level]
    span = level - lo if math.isfinite(lo) else level
    probes += [level + 0.43 * span, max(level - 0.57 * span, lo + 0.07 * span)]
    if math.isfinite(hi):
        probes.append(lo + 0.81 * (hi - lo) if math.isfinite(lo) else 0.81 * hi)
    vals = np.empty_like(values)
    scls = np.empty_like(values)
    for i, lt in enumerate(values):
        best = None
        for p in probes:
            ps = model.psi(-lt, p)
            ph = model.phi(-lt, p)
            mag = ps.log_abs()
            if best is None or mag > best[0]:
                best = (mag, ph.value / ps.value, ph.scale_log - ps.scale_log)
        vals[i], scls[i] = best[1], best[2]
    return SpecialValue(vals, scls)


# --------------------------------------------------------------------------- #
# Spectral density expansion
# --------------------------------------------------------------------------- #

class DensityExpansion:
    """Occupation-killed transition density p~(t; x, .) as a truncated expansion.

    Precomputes, for fixed (model, eigs, x), the per-term coefficients that
    multiply the y-side fundamental solutions, so y-vector evaluations cost
    one special-function sweep per term.
    """

    def __init__(self, model: SolvableDiffusion, eigs: EigenvalueSet, x: float):
        self.model = model
        self.eigs = eigs
        self.x = float(x)
        self._build()

    # -- construction ----------------------------------------------------- #

    def _build(self) -> None:
        model, eigs, x = self.model, self.eigs, self.x
        lt = eigs.values
        ell = eigs.level
        if eigs.alpha <= _ALPHA_ZERO_TOL:
            # plain-diffusion residues: (A_n / W'(-lam_n)) psi_n(x) psi_n(y)
            coef = eigs.base_ratios / eigs.residue_scales
            fx = model.psi(-lt, x)
            cy = coef * fx
            self.p_below = -lt
            self.p_above = -lt
            self.coef_below = cy
            self.coef_above = cy
            self.base_mode = True
            return
        self.base_mode = False
        pb, pa = _side_params(eigs.side, lt, eigs.alpha)
        self.p_below, self.p_above = pb, pa
        C = self._guarded_residue_scales()
        s_ell = model.scale_density(ell)
        if x <= ell:
            fx = model.psi(pb, x)
            w_phiphi = cross_wronskian("phi", pb, "phi", pa, ell, model)
            self.coef_below = (w_phiphi / (C * model.wronskian_const(pb))) * fx
            self.coef_above = SpecialValue(s_ell, 0.0) / C * fx
        else:
            fx = model.phi(pa, x)
            w_psipsi = cross_wronskian("psi", pb, "psi", pa, ell, model)
            self.coef_below = SpecialValue(s_ell, 0.0) / C * fx
            self.coef_above = (w_psipsi / (C * model.wronskian_const(pa))) * fx

    def _guarded_residue_scales(self) -> SpecialValue:
        """Residue scales with the coalescence guard.

        When a deformed eigenvalue collides with a base one, the coefficient
        formula is a 0/0 limit; per design the lambda-derivative is then taken
        at small symmetric offsets and averaged.
        """
        eigs, model = self.eigs, self.model
        lt = eigs.values
        C = eigs.residue_scales
        base = np.concatenate([eigs.base_values, eigs.base_values + eigs.alpha])
        near = np.zeros(len(lt), dtype=bool)
        for i, v in enumerate(lt):
            if np.any(np.abs(base - v) < _COALESCENCE_REL * max(v, 1e-30)):
                near[i] = True
        if not np.any(near):
            return C
        vals = np.array(C.value, dtype=float, copy=True)
        scls = np.array(C.scale_log, dtype=float, copy=True)
        for i in np.nonzero(near)[0]:
            off = _COALESCENCE_OFFSET * max(lt[i], 1e-30)
            cp = _dlambda_eigen_sv(model, eigs.side, eigs.level,
                                   np.asarray([lt[i] + off]), eigs.alpha)
            cm = _dlambda_eigen_sv(model, eigs.side, eigs.level,
                                   np.asarray([lt[i] - off]), eigs.alpha)
            avg = cp.scale_by(0.5) + cm.scale_by(0.5)
            vals[i] = np.atleast_1d(avg.value)[0]
            scls[i] = np.atleast_1d(avg.scale_log)[0]
        return SpecialValue(vals, scls)

    # -- evaluation -------------------------------------------------------- #

    def _term_matrix(self, y: np.ndarray, n_terms: int, t: float,
                     use_dx: bool = False) -> np.ndarray:
        """(n_terms, len(y)) matrix of e^{-lam_n t} phi~_n(x) phi~_n(y);
        the speed-density weight is NOT included here."""
        eigs = self.eigs
        sl = slice(0, n_terms)
        lt = eigs.values[sl]
        out = np.zeros((len(lt), len(y)))
        below = y <= eigs.level if not self.base_mode else np.ones(len(y), dtype=bool)
        decay = -lt[:, None] * t
        model = self.model
        if np.any(below):
            fy = model.psi(np.asarray(self.p_below)[sl, None], y[None, below])
            c = self.coef_below
            out[:, below] = (np.asarray(c.value)[sl, None] * fy.value
                             * np.exp(np.asarray(c.scale_log)[sl, None]
                                      + fy.scale_log + decay))
        if np.any(~below):
            fy = model.phi(np.asarray(self.p_above)[sl, None], y[None, ~below])
            c = self.coef_above
            out[:, ~below] = (np.asarray(c.value)[sl, None] * fy.value
                              * np.exp(np.asarray(c.scale_log)[sl, None]
                                       + fy.scale_log + decay))
        return out

    def density(self, t: float, y, n_terms: int | None = None,
                return_diagnostic: bool = False):
        """p~(t; x, y) for a vector of y, truncated to n_terms."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        n = self.eigs.count if n_terms is None else min(n_terms, self.eigs.count)
        mat = self._term_matrix(y, n, t)
        dens = self.model.speed_density(y) * mat.sum(axis=0)
        if return_diagnostic:
            last = np.max(np.abs(mat[-1])) * np.max(self.model.speed_density(y))
            return dens, last
        return dens

    def density_dx(self, t: float, y, n_terms: int | None = None):
        """Analytic d/dx of density at the cached x, same truncation."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        n = self.eigs.count if n_terms is None else min(n_terms, self.eigs.count)
        other = self._dx_clone()
        mat = other._term_matrix(y, n, t)
        return self.model.speed_density(y) * mat.sum(axis=0)

    def _dx_clone(self) -> "DensityExpansion":
        """A shallow twin whose x-side factor is the x-derivative."""
        clone = object.__new__(DensityExpansion)
        clone.model, clone.eigs = self.model, self.eigs
        clone.x = self.x
        clone.base_mode = self.base_mode
        clone.p_below, clone.p_above = self.p_below, self.p_above
        model, eigs, x = self.model, self.eigs, self.x
        lt = eigs.values
        if self.base_mode:
            coef = eigs.base_ratios / eigs.residue_scales
            dfx = model.dpsi_dx(-lt, x)
            cy = coef * dfx
            clone.coef_below = cy
            clone.coef_above = cy
            return clone
        pb, pa = self.p_below, self.p_above
        C = self._guarded_residue_scales()
        ell = eigs.level
        s_ell = model.scale_density(ell)
        if x <= ell:
            dfx = model.dpsi_dx(pb, x)
            w_phiphi = cross_wronskian("phi", pb, "phi", pa, ell, model)
            clone.coef_below = (w_phiphi / (C * model.wronskian_const(pb))) * dfx
            clone.coef_above = SpecialValue(s_ell, 0.0) / C * dfx
        else:
            dfx = model.dphi_dx(pa, x)
            w_psipsi = cross_wronskian("psi", pb, "psi", pa, ell, model)
            clone.coef_below = SpecialValue(s_ell, 0.0) / C * dfx
            clone.coef_above = (w_psipsi / (C * model.wronskian_const(pa))) * dfx
        return clone


def spectral_term(model: SolvableDiffusion, eigs: EigenvalueSet, n: int,
                  x: float, y: float) -> float:
    """phi~_n(x) phi~_n(y), the n-th eigenfunction product (1-indexed)."""
    if not 1 <= n <= eigs.count:
        raise ValueError(f"term index {n} outside 1..{eigs.count}")
    exp_ = DensityExpansion(model, eigs, x)
    mat = exp_._term_matrix(np.asarray([float(y)]), n, t=0.0)
    return float(mat[n - 1, 0])


def occupation_density(model: SolvableDiffusion, eigs: EigenvalueSet, t: float,
                       x: float, y, n_terms: int | None = None,
                       return_diagnostic: bool = False):
    """m(y) * sum_n e^{-lam_n t} phi~_n(x) phi~_n(y), truncated."""
    if t <= 0:
        raise ValueError("t must be positive")
    return DensityExpansion(model, eigs, x).density(
        t, y, n_terms=n_terms, return_diagnostic=return_diagnostic)


def occupation_density_dx(model: SolvableDiffusion, eigs: EigenvalueSet, t: float,
                          x: float, y, n_terms: int | None = None):
    """Term-by-term d/dx of occupation_density using analytic derivatives."""
    if t <= 0:
        raise ValueError("t must be positive")
    return DensityExpansion(model, eigs, x).density_dx(t, y, n_terms=n_terms)
