"""Linearized flow around a water wave background and its paradifferential core.

Linearized unknowns are the diagonal pair ``(w, r)`` with ``r = q - R w``,
held as point values.  Backgrounds are :class:`~holowaves.waterwave.DerivedFields`
records.  Paraproduct coefficients that are real (``b`` and ``1 + a``) use the
symmetrized quantization ``(T + T^*)/2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import paracalc as pc
from .spectral import HoloField, MeanModeError, PeriodicGrid, TAU_HOLO
from .waterwave import DELTA_J, DerivedFields, check_gap

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LinState:
    grid: PeriodicGrid
    w: np.ndarray
    r: np.ndarray
    t: float = 0.0

    def fields(self, tol: float = TAU_HOLO):
        return (
            HoloField.from_values(self.grid, self.w, tol=tol),
            HoloField.from_values(self.grid, self.r, tol=tol),
        )


@dataclass(frozen=True, eq=False)
class LinSources:
    """Auxiliary source fields ``m``, ``n`` and the lower order terms ``G0``, ``K0``."""

    m: np.ndarray
    n: np.ndarray
    G0: np.ndarray
    K0: np.ndarray


def _check_bg(bg: DerivedFields, delta_J: float = DELTA_J) -> None:
    check_gap(bg.Wa, delta_J)


def lin_sources(bg: DerivedFields, w: np.ndarray, r: np.ndarray) -> LinSources:
    _check_bg(bg)
    g = bg.grid
    Wa, R, J = bg.Wa, bg.R, bg.J
    wa, ra = g.d(w), g.d(r)
    dR = ra + bg.Ra * w
    m = dR / J + np.conj(R) * wa / (1 + Wa) ** 2
    n = np.conj(R) * dR / (1 + Wa)
    G0 = (1 + Wa) * (g.P(np.conj(m)) + g.Pbar(m))
    K0 = g.Pbar(n) - g.P(np.conj(n))
    return LinSources(m, n, G0, K0)


def rhs_linearized(bg: DerivedFields, w: np.ndarray, r: np.ndarray):
    """``(w_t, r_t)`` of the linearized equations, positive modes removed.

    The transport form is evaluated point-wise and the positive modes dropped
    at the end; the exact linearized flow is holomorphic, so this agrees with
    projecting every term while leaving the zero mode as the equations give it.
    """
    g = bg.grid
    src = lin_sources(bg, w, r)
    Wab = np.conj(bg.Wa)
    wa, ra = g.d(w), g.d(r)
    wt = -bg.b * wa - (ra + bg.Ra * w) / (1 + Wab) + src.G0
    rt = -bg.b * ra + 1j * (1 + bg.a) * w / (1 + bg.Wa) + src.K0
    return g.holo(wt), g.holo(rt)


def rhs_paralin(bg: DerivedFields, w: np.ndarray, r: np.ndarray):
    """``(w_t, r_t)`` of the paradifferential flow."""
    _check_bg(bg)
    g = bg.grid
    T = lambda f, h: pc.para_low_high(g, f, h)
    Ts = lambda f, h: pc.para_sym(g, f, h)
    Yb = np.conj(bg.Y)
    wa, ra = g.d(w), g.d(r)
    wt = -Ts(bg.b, wa) - T(1 - Yb, ra) - T((1 - Yb) * bg.Ra, w)
    rt = -Ts(bg.b, ra) + 1j * T(1 - bg.Y, Ts(1 + bg.a, w))
    return g.holo(wt), g.holo(rt)


def energy_paralin0(bg: DerivedFields, w: np.ndarray, r: np.ndarray) -> float:
    """``int Re(T~_{1+a} w conj(w)) + Im(r conj(r_alpha))``."""
    g = bg.grid
    ra = g.d(r)
    dens = pc.para_sym(g, 1 + bg.a, w) * np.conj(w) + (r * np.conj(ra) - np.conj(r) * ra) / 2j
    return float(g.integrate(dens).real)


def weighted_vars(bg: DerivedFields, w: np.ndarray, r: np.ndarray, s: float):
    """Leading weighted variables ``(T_Phi |D|^s w, T_Phi |D|^s r)`` with ``Phi = J^-s``."""
    if s < 0:
        raise ValueError("weight exponent s must be non-negative")
    _check_bg(bg)
    g = bg.grid
    phi = bg.J ** (-s)
    ws, rs = g.absd(w, s), g.absd(r, s)
    out = pc.para_low_high(g, phi, ws), pc.para_low_high(g, phi, rs)
    base = pc.l2_norm(g, ws) + pc.l2_norm(g, rs)
    if base > 0:
        diff = pc.l2_norm(g, out[0] - ws) + pc.l2_norm(g, out[1] - rs)
        log.debug("weighted_vars deviation ratio %.3e", diff / base)
    return out


def lift_to_diff(bg: DerivedFields, w: np.ndarray, r: np.ndarray):
    """Map a linearized ``(w, r)`` to the differentiated linearization."""
    g = bg.grid
    return g.d(w), (g.d(r) + bg.Ra * w) / (1 + bg.Wa)


def _require_mean_free(g: PeriodicGrid, v: np.ndarray, what: str, rtol: float) -> None:
    c = g.fft(v)
    scale = np.linalg.norm(c)
    if scale > 0 and abs(c[0]) > rtol * scale:
        raise MeanModeError(f"{what} has mean {c[0]:.3e}; cannot invert d/dalpha")


def map_diff_to_lin(bg: DerivedFields, w_hat: np.ndarray, r_hat: np.ndarray):
    """Paradifferential inverse of :func:`lift_to_diff`."""
    g = bg.grid
    _require_mean_free(g, w_hat, "w_hat", 1e-12)
    w = g.inv_d(w_hat)
    integrand = pc.para_low_high(g, 1 + bg.Wa, r_hat) - pc.para_low_high(g, bg.Ra, w)
    _require_mean_free(g, integrand, "r integrand", 1e-10)
    return w, g.inv_d(integrand)


def nf_correction_lin(bg: DerivedFields, w: np.ndarray, r: np.ndarray):
    """First quadratic normal form correction ``(w1, r1)`` of the linearized flow."""
    _check_bg(bg)
    g = bg.grid
    X, Xb = bg.X, np.conj(bg.X)
    T = lambda f, h: pc.para_low_high(g, f, h)
    Pi = lambda f, h: pc.para_balanced(g, f, h, project=True)
    wa, ra = g.d(w), g.d(r)
    w1 = -g.d(T(w, X) + Pi(w, X)) - Pi(wa, Xb)
    r1 = -(T(ra, X) + Pi(ra, X)) - Pi(ra, Xb)
    return w1, r1
