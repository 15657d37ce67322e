"""Water wave states, coefficient fields, right-hand sides, energies and normal forms.

Unknowns are ``(W, Q)`` with ``W = Z - alpha`` (full system) or the
differentiated pair ``(Wa, R) = (W_alpha, Q_alpha / (1 + W_alpha))``.
Rational expressions are evaluated point-wise on the grid.  Right-hand sides
are returned with their positive modes removed; the zero mode is kept as
computed, since the equations themselves fix the gauge of the means.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import paracalc as pc
from .paracalc import DegenerateSurfaceError
from .spectral import HoloField, PeriodicGrid, TAU_HOLO, make_grid

log = logging.getLogger(__name__)

DELTA_J = 0.5


@dataclass(frozen=True, eq=False)
class FullState:
    """``(W, Q)`` at time ``t``, as point values on ``grid``."""

    grid: PeriodicGrid
    W: np.ndarray
    Q: np.ndarray
    t: float = 0.0
    coeff_cache: dict | None = field(default=None, repr=False)

    def fields(self, tol: float = TAU_HOLO):
        """Validated holomorphic views ``(W, Q)``."""
        W = HoloField.from_values(self.grid, self.W, tol=tol)
        Q = HoloField.from_values(self.grid, self.Q, tol=tol)
        if abs(W.mean().real) > 1e-10:
            raise ValueError(f"mean(W) must be purely imaginary, got {W.mean():.3e}")
        if abs(Q.mean().imag) > 1e-10:
            raise ValueError(f"mean(Q) must be real, got {Q.mean():.3e}")
        return W, Q

    def to_diff(self) -> "DiffState":
        g = self.grid
        Wa = g.d(self.W)
        return DiffState(g, Wa, g.holo(g.d(self.Q) / (1 + Wa)), self.t)

    def scaled(self, eps: float) -> "FullState":
        return FullState(self.grid, eps * self.W, eps * self.Q, self.t)


@dataclass(frozen=True, eq=False)
class DiffState:
    """``(Wa, R)`` at time ``t``, as point values on ``grid``."""

    grid: PeriodicGrid
    Wa: np.ndarray
    R: np.ndarray
    t: float = 0.0
    coeff_cache: dict | None = field(default=None, repr=False)

    def fields(self, tol: float = TAU_HOLO):
        Wa = HoloField.from_values(self.grid, self.Wa, tol=tol)
        R = HoloField.from_values(self.grid, self.R, tol=tol)
        if abs(Wa.mean()) > 1e-12 * max(1.0, np.linalg.norm(Wa.coeffs)):
            raise ValueError(f"mean(W_alpha) must vanish, got {Wa.mean():.3e}")
        return Wa, R

    def to_full(self, w_mean: complex = 0.0, q_mean: complex = 0.0) -> FullState:
        """Integrate back to ``(W, Q)`` with the given means."""
        g = self.grid
        W = g.inv_d(self.Wa) + w_mean
        Q = g.inv_d(self.R * (1 + self.Wa)) + q_mean
        return FullState(g, W, Q, self.t)

    def scaled(self, eps: float) -> "DiffState":
        return DiffState(self.grid, eps * self.Wa, eps * self.R, self.t)


@dataclass(frozen=True, eq=False)
class DerivedFields:
    """Coefficient fields of one state, all as point values.

    ``M`` follows the defining expression; ``M_rep1`` and ``M_rep2`` are the two
    alternative representations (projected products, and derivative form).
    """

    grid: PeriodicGrid
    Wa: np.ndarray
    R: np.ndarray
    W: np.ndarray
    Y: np.ndarray
    J: np.ndarray
    F: np.ndarray
    b: np.ndarray
    a: np.ndarray
    M: np.ndarray
    M_rep1: np.ndarray
    M_rep2: np.ndarray
    X: np.ndarray
    Ra: np.ndarray

    @property
    def min_gap(self) -> float:
        return float(np.min(np.abs(1 + self.Wa)))


def check_gap(Wa: np.ndarray, delta_J: float = DELTA_J) -> None:
    gap = float(np.min(np.abs(1 + Wa)))
    if not np.isfinite(gap) or gap < delta_J:
        raise DegenerateSurfaceError(f"min|1+W_alpha| = {gap:.4f} below delta_J = {delta_J}")


def derived_fields(state, delta_J: float = DELTA_J, w_imag_mean: float = 0.0) -> DerivedFields:
    """All coefficient fields of a :class:`FullState` or :class:`DiffState`.

    For a ``DiffState`` the undifferentiated ``W`` (needed for ``X`` only) is the
    zero-mean antiderivative of ``Wa`` plus ``i * w_imag_mean``.
    """
    g = state.grid
    if isinstance(state, FullState):
        W = state.W
        Wa = g.d(W)
        check_gap(Wa, delta_J)
        R = g.d(state.Q) / (1 + Wa)
    else:
        Wa, R = state.Wa, state.R
        check_gap(Wa, delta_J)
        W = g.inv_d(Wa) + 1j * w_imag_mean
    P, Pb, d = g.P, g.Pbar, g.d
    Wab, Rb = np.conj(Wa), np.conj(R)
    Ra = d(R)
    Rab = np.conj(Ra)
    J = np.abs(1 + Wa) ** 2
    Y = Wa / (1 + Wa)
    Yb = np.conj(Y)
    Ya = d(Y)
    Yab = np.conj(Ya)
    u = R / (1 + Wab)
    v = Rb / (1 + Wa)
    F = P(u - v)
    b = P(u) + Pb(v)
    a = 1j * (Pb(Rb * Ra) - P(R * Rab))
    M = Ra / (1 + Wab) + Rab / (1 + Wa) - d(b)
    M_rep1 = Pb(Rb * Ya - Ra * Yb) + P(R * Yab - Rab * Y)
    M_rep2 = d(Pb(Rb * Y) + P(R * Yb)) - (Rab * Y + Ra * Yb)
    X = pc.para_low_high(g, 1 - Y, W)
    return DerivedFields(g, Wa, R, W, Y, J, F, b, a, M, M_rep1, M_rep2, X, Ra)


def rhs_full_forms(state: FullState, delta_J: float = DELTA_J):
    """Both algebraic forms of the ``(W, Q)`` right-hand side, unprojected.

    Returns ``((W_t, Q_t), (W_t', Q_t'))``: the first from the transport form
    with ``F``, the second from the material-derivative form with ``b``.
    """
    g = state.grid
    W, Q = state.W, state.Q
    Wa = g.d(W)
    check_gap(Wa, delta_J)
    Qa = g.d(Q)
    J = np.abs(1 + Wa) ** 2
    F = g.P((Qa - np.conj(Qa)) / J)
    kin = np.abs(Qa) ** 2 / J
    Wt = -F * (1 + Wa)
    Qt = -F * Qa + 1j * W - g.P(kin)
    R = Qa / (1 + Wa)
    Rb = np.conj(R)
    b = g.P(R / (1 + np.conj(Wa))) + g.Pbar(Rb / (1 + Wa))
    Wt2 = -b * Wa - b + Rb
    Qt2 = -b * Qa + 1j * W + g.Pbar(kin)
    return (Wt, Qt), (Wt2, Qt2)


def rhs_full(state: FullState, delta_J: float = DELTA_J):
    """``(W_t, Q_t)`` for the full system, positive modes removed."""
    g = state.grid
    (Wt, Qt), _ = rhs_full_forms(state, delta_J)
    res = max(_rel_pos(g, Wt), _rel_pos(g, Qt))
    if res > 1e-9:
        log.debug("rhs_full holomorphy residual %.2e", res)
    return g.holo(Wt), g.holo(Qt)


def rhs_diff_forms(state: DiffState, delta_J: float = DELTA_J):
    """Differentiated right-hand side plus its ``Y``-form cross-check.

    Returns ``((Wa_t, R_t), (Y_t_chain, Y_t_direct), (R_t_direct))`` where
    ``Y_t_chain`` comes from ``Wa_t`` by the chain rule and ``Y_t_direct`` and
    ``R_t_direct`` from the ``Y``-form of the equations.
    """
    df = derived_fields(state, delta_J)
    g = state.grid
    Wa, R, b, a, M, Y = df.Wa, df.R, df.b, df.a, df.M, df.Y
    Ra = df.Ra
    Wat = -b * g.d(Wa) - (1 + Wa) * Ra / (1 + np.conj(Wa)) + (1 + Wa) * M
    Rt = -b * Ra + 1j * (Wa - a) / (1 + Wa)
    Yt_chain = Wat / (1 + Wa) ** 2
    Yt_direct = -b * g.d(Y) - np.abs(1 - Y) ** 2 * Ra + (1 - Y) * M
    Rt_direct = -b * Ra + 1j * (1 + a) * Y - 1j * a
    return (Wat, Rt), (Yt_chain, Yt_direct), Rt_direct


def rhs_diff(state: DiffState, delta_J: float = DELTA_J):
    """``(Wa_t, R_t)`` for the differentiated system, positive modes removed."""
    g = state.grid
    (Wat, Rt), _, _ = rhs_diff_forms(state, delta_J)
    return g.holo(Wat), g.holo(Rt)


def _rel_pos(g: PeriodicGrid, v: np.ndarray) -> float:
    c = g.fft(v)
    tot = np.linalg.norm(c)
    return 0.0 if tot == 0 else float(np.linalg.norm(c[g.k > 0]) / tot)


def linear_part(grid: PeriodicGrid, u: np.ndarray, v: np.ndarray):
    """Zero-background flow ``(u_t, v_t) = (-v_alpha, i u)``."""
    return -grid.d(v), 1j * u


# -- energies ----------------------------------------------------------------


def energy_full(state: FullState) -> float:
    """Conserved energy of the full system.

    ``int 2 (Im W)^2 (1 + Re W_alpha) + Im(Q conj(Q_alpha))``.  For zero-mean
    ``W`` this equals the holomorphic form
    ``int |W|^2 + Im(Q conj(Q_alpha)) - (conj(W)^2 W_alpha + W^2 conj(W_alpha))/2``;
    unlike that form it stays conserved while the flow moves ``Im mean(W)``,
    and its quadratic part is ``energy_lin0``.
    """
    g = state.grid
    W, Q = state.W, state.Q
    Wa, Qa = g.d(W), g.d(Q)
    dens = 2 * W.imag**2 * (1 + Wa.real) + (Q * np.conj(Qa) - np.conj(Q) * Qa) / 2j
    return _real_integral(g, dens)


def energy_lin0(grid: PeriodicGrid, w: np.ndarray, r: np.ndarray) -> float:
    """Quadratic energy ``int |w|^2 + Im(r conj(r_alpha))`` of the zero-background flow."""
    ra = grid.d(r)
    dens = np.abs(w) ** 2 + (r * np.conj(ra) - np.conj(r) * ra) / 2j
    return _real_integral(grid, dens)


def _real_integral(g: PeriodicGrid, dens: np.ndarray) -> float:
    val = g.integrate(dens)
    scale = g.integrate(np.abs(dens)) + 1e-300
    if abs(val.imag) > 1e-11 * max(1.0, scale):
        raise ValueError(f"energy integrand has imaginary part {val.imag:.3e}")
    return float(val.real)


# -- diagonal variables ---------------------------------------------------------


def diagonalize(grid: PeriodicGrid, w: np.ndarray, q: np.ndarray, R_bg: np.ndarray):
    """``(w, q) -> (w, q - R w)``."""
    return w, grid.holo(q - R_bg * w)


def undiagonalize(grid: PeriodicGrid, w: np.ndarray, r: np.ndarray, R_bg: np.ndarray):
    return w, grid.holo(r + R_bg * w)


# -- normal forms -------------------------------------------------------------


def normal_form_full(state: FullState) -> FullState:
    """Quadratic normal form variables ``W - 2P(Re W W_a)``, ``Q - 2P(Re W Q_a)``."""
    g = state.grid
    W, Q = state.W, state.Q
    ReW = W.real
    Wn = W - 2 * g.P(ReW * g.d(W))
    Qn = Q - 2 * g.P(ReW * g.d(Q))
    return FullState(g, Wn, Qn, state.t)


@dataclass(frozen=True, eq=False)
class NormalFormResult:
    state: DiffState
    Wa_corr: np.ndarray
    R_corr: np.ndarray
    ratio: float


def normal_form_diff(state: DiffState, s: float = 0.75, delta_J: float = DELTA_J) -> NormalFormResult:
    """Balanced normal form correction of the differentiated variables.

    The correction is ``(-d Pi(Wa, 2 Re X), -Pi(R_a, 2 Re X) - Pi(T_{1-conj Y} conj Wa, R))``
    with ``Pi`` followed by ``P``.  ``ratio`` records
    ``||correction||_{Hdot_s} / (A ||(Wa, R)||_{Hdot_s})``.
    """
    g = state.grid
    df = derived_fields(state, delta_J)
    Pi = lambda f, h: pc.para_balanced(g, f, h, project=True)
    reX2 = 2 * df.X.real
    Wa_c = -g.d(Pi(df.Wa, reX2))
    low = pc.para_low_high(g, 1 - np.conj(df.Y), np.conj(df.Wa))
    R_c = -Pi(df.Ra, reX2) - Pi(low, df.R)
    Wa_c, R_c = g.holo(Wa_c), g.holo(R_c)
    base = pc.pair_norm(g, df.Wa, df.R, s)
    A = pc.control_params(g, df.Wa, df.R, delta_J).A
    corr = pc.pair_norm(g, Wa_c, R_c, s)
    ratio = corr / (A * base) if A * base > 0 else 0.0
    out = DiffState(g, state.Wa + Wa_c, state.R + R_c, state.t)
    return NormalFormResult(out, Wa_c, R_c, ratio)


def taylor_check(df: DerivedFields) -> dict:
    """Realness of ``a`` and ``min(1 + a)`` over the nodes."""
    amax = float(np.max(np.abs(df.a)))
    is_real = float(np.max(np.abs(df.a.imag))) <= 1e-11 * (1 + amax)
    return {"is_real": bool(is_real), "min_one_plus_a": float(np.min(1 + df.a.real))}


def ytow_defect(df: DerivedFields) -> np.ndarray:
    """``T_{1+Wa} Y - T_{1-Y} Wa + Pi(Y, Wa)``, which vanishes identically."""
    g = df.grid
    T = lambda f, h: pc.para_low_high(g, f, h)
    return T(1 + df.Wa, df.Y) - T(1 - df.Y, df.Wa) + pc.para_balanced(g, df.Y, df.Wa)


# -- snapshot files -------------------------------------------------------------


def _pairs(grid: PeriodicGrid, values: np.ndarray, cached=None) -> list:
    c = grid.fft(values) if cached is None else cached
    order = grid.modes % grid.n
    return [[float(z.real), float(z.imag)] for z in c[order]]


def _unpairs(grid: PeriodicGrid, pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.shape != (grid.n, 2):
        raise ValueError(f"expected {grid.n} [re, im] pairs")
    c = np.zeros(grid.n, dtype=complex)
    c[grid.modes % grid.n] = arr[:, 0] + 1j * arr[:, 1]
    return c


def snapshot_dict(state) -> dict:
    """JSON-ready snapshot; coefficients listed for modes ``-n/2 .. n/2-1``."""
    g = state.grid
    cache = state.coeff_cache or {}
    if isinstance(state, FullState):
        return {
            "n": g.n,
            "t": float(state.t),
            "W_coeffs": _pairs(g, state.W, cache.get("W")),
            "Q_coeffs": _pairs(g, state.Q, cache.get("Q")),
        }
    return {
        "n": g.n,
        "t": float(state.t),
        "Wa_coeffs": _pairs(g, state.Wa, cache.get("Wa")),
        "R_coeffs": _pairs(g, state.R, cache.get("R")),
    }


def snapshot_from_dict(data: dict):
    g = make_grid(int(data["n"]))
    t = float(data["t"])
    if "W_coeffs" in data:
        cw, cq = _unpairs(g, data["W_coeffs"]), _unpairs(g, data["Q_coeffs"])
        return FullState(g, g.ifft(cw), g.ifft(cq), t, {"W": cw, "Q": cq})
    cw, cr = _unpairs(g, data["Wa_coeffs"]), _unpairs(g, data["R_coeffs"])
    return DiffState(g, g.ifft(cw), g.ifft(cr), t, {"Wa": cw, "R": cr})


def write_snapshot(state, path) -> None:
    Path(path).write_text(json.dumps(snapshot_dict(state)), encoding="utf-8")


def read_snapshot(path):
    return snapshot_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
