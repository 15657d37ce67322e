"""Dyadic Littlewood-Paley calculus on the periodic grid.

Bands ``j = 0..J`` with ``J = log2(n/2) - 1`` come from raised-cosine bumps in
``log2|k|``: band ``j >= 1`` lives in ``2^(j-1) < |k| < 2^(j+1)`` and peaks at
``|k| = 2^j``; band 0 holds the mean and ``|k| = 1``; the top band also absorbs
the tail up to ``n/2``.  The bumps are differences of nested cutoffs so they
sum to one at every mode.

Paraproducts use the separation ``SEP = 4``: ``T_f g = sum_k f_{<k-4} g_k``.
Low-frequency cutoffs always carry the mean of ``f``, so ``T_1 = I``.  The
balanced part is whatever the two paraproducts leave of ``fg``:
``Pi(f, g) = sum_{|j-k|<=4} f'_j g'_k - mean(f) mean(g)`` with ``f' = f - mean(f)``.

All functions here act on point-value arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import ConfigurationError, PeriodicGrid, absd_weights

SEP = 4

NORM_KINDS = ("L2", "Linf", "Hdot", "H", "BMO", "BMOs", "BesovInf2")


class DegenerateSurfaceError(ValueError):
    """``|1 + W_alpha|`` dropped below the corner gate."""


class DyadicPartition:
    """Raised-cosine Littlewood-Paley partition for one grid."""

    def __init__(self, grid: PeriodicGrid):
        self.grid = grid
        self.J = int(np.log2(grid.n // 2)) - 1
        absk = grid.absk.astype(float)
        logk = np.full(grid.n, -np.inf)
        logk[absk > 0] = np.log2(absk[absk > 0])
        chi = np.empty((self.J + 1, grid.n))
        for j in range(self.J):
            x = np.clip(logk - j, 0.0, 1.0)
            chi[j] = np.cos(0.5 * np.pi * x) ** 2
            chi[j][absk <= 2**j] = 1.0
            chi[j][absk >= 2 ** (j + 1)] = 0.0
        chi[self.J] = 1.0
        psi = np.empty_like(chi)
        psi[0] = chi[0]
        psi[1:] = chi[1:] - chi[:-1]
        self.psi = psi
        self.psi.setflags(write=False)
        # Zero-mean bands: band 0 without the mean.
        psi0 = psi.copy()
        psi0[0, grid.k == 0] = 0.0
        self.psi_nomean = psi0
        self.psi_nomean.setflags(write=False)

    @property
    def band_count(self) -> int:
        return self.J + 1

    def bands(self, v: np.ndarray, nomean: bool = False) -> np.ndarray:
        """All band projections ``P_j v`` stacked along axis 0."""
        table = self.psi_nomean if nomean else self.psi
        return np.fft.ifft(np.fft.fft(v)[None, :] * table, axis=-1)

    def check_band(self, j: int) -> None:
        if not 0 <= j <= self.J:
            raise IndexError(f"band index {j} outside 0..{self.J}")


@lru_cache(maxsize=None)
def partition(grid: PeriodicGrid) -> DyadicPartition:
    return DyadicPartition(grid)


def _low_cumsum(bands: np.ndarray) -> np.ndarray:
    """``low[k] = sum_{j < k - SEP} bands[j]`` for every band index ``k``."""
    nb = bands.shape[0]
    low = np.zeros_like(bands)
    csum = np.cumsum(bands, axis=0)
    for k in range(SEP + 1, nb):
        low[k] = csum[k - SEP - 1]
    return low


def lp_project(grid: PeriodicGrid, f: np.ndarray, j: int) -> np.ndarray:
    part = partition(grid)
    part.check_band(j)
    return grid.multiply(f, part.psi[j])


def lp_below(grid: PeriodicGrid, f: np.ndarray, k: int) -> np.ndarray:
    """``P_{<k} f``: bands strictly below ``k - SEP`` plus the mean."""
    part = partition(grid)
    sym = np.zeros(grid.n)
    for j in range(0, max(k - SEP, 0)):
        sym = sym + part.psi_nomean[j]
    sym[grid.k == 0] = 1.0
    return grid.multiply(f, sym)


def para_low_high(grid: PeriodicGrid, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Paraproduct ``T_f g``."""
    part = partition(grid)
    fb = part.bands(f, nomean=True)
    gb = part.bands(g, nomean=True)
    mf = np.mean(f)
    return mf * g + np.sum(_low_cumsum(fb) * gb, axis=0)


def para_adjoint(grid: PeriodicGrid, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``T_f^* g``, the L^2 adjoint of ``u -> T_f u``."""
    part = partition(grid)
    low = _low_cumsum(part.bands(np.conj(f), nomean=True))
    out = np.conj(np.mean(f)) * g
    prod = low * g[None, :]
    # P_k (conj(f)_{<k-4} g), summed over k.
    return out + np.sum(np.fft.ifft(np.fft.fft(prod, axis=-1) * part.psi_nomean, axis=-1), axis=0)


def para_sym(grid: PeriodicGrid, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Symmetrized paraproduct ``(T_f + T_f^*) g / 2``."""
    return 0.5 * (para_low_high(grid, f, g) + para_adjoint(grid, f, g))


def para_balanced(grid: PeriodicGrid, f: np.ndarray, g: np.ndarray, project: bool = False) -> np.ndarray:
    """Balanced paraproduct ``Pi(f, g)``, optionally followed by ``P``."""
    part = partition(grid)
    fb = part.bands(f, nomean=True)
    gb = part.bands(g, nomean=True)
    nb = fb.shape[0]
    csum = np.vstack([np.zeros((1, grid.n), complex), np.cumsum(fb, axis=0)])
    out = -np.mean(f) * np.mean(g) * np.ones(grid.n, dtype=complex)
    for k in range(nb):
        lo, hi = max(k - SEP, 0), min(k + SEP, nb - 1)
        out = out + (csum[hi + 1] - csum[lo]) * gb[k]
    if project:
        out = grid.P(out)
    return out


def paraproduct_parts(grid: PeriodicGrid, f: np.ndarray, g: np.ndarray):
    """``(T_f g, T_g f, Pi(f, g))`` from one shared partition."""
    return para_low_high(grid, f, g), para_low_high(grid, g, f), para_balanced(grid, f, g)


def pi_geq(grid: PeriodicGrid, f: np.ndarray, g: np.ndarray, k: int) -> np.ndarray:
    """Restricted diagonal sum ``sum_{j >= k} f_j g_j``."""
    part = partition(grid)
    if k > part.J:
        return np.zeros(grid.n, dtype=complex)
    fb = part.bands(f)
    gb = part.bands(g)
    return np.sum(fb[max(k, 0):] * gb[max(k, 0):], axis=0)


def square_function(grid: PeriodicGrid, f: np.ndarray) -> np.ndarray:
    return square_function_above(grid, f, -1)


def square_function_above(grid: PeriodicGrid, f: np.ndarray, k: int) -> np.ndarray:
    """``S_{>k} f = (sum_{j > k} |P_j f|^2)^(1/2)``; ``k = -1`` gives ``S f``."""
    part = partition(grid)
    fb = part.bands(f)
    return np.sqrt(np.sum(np.abs(fb[k + 1:]) ** 2, axis=0))


# -- norms -----------------------------------------------------------------


def _check_s(grid: PeriodicGrid, s: float) -> None:
    if abs(s) > np.log2(grid.n / 3):
        raise ConfigurationError(f"order s={s} not admissible on n={grid.n}")


def l2_norm(grid: PeriodicGrid, f: np.ndarray) -> float:
    return float(np.sqrt(grid.dalpha * np.sum(np.abs(f) ** 2)))


def hdot_norm(grid: PeriodicGrid, f: np.ndarray, s: float) -> float:
    c = grid.fft(f)
    return float(np.sqrt(2 * np.pi * np.sum(absd_weights(grid, 2 * s) * np.abs(c) ** 2)))


def h_norm(grid: PeriodicGrid, f: np.ndarray, s: float) -> float:
    c = grid.fft(f)
    w = (1.0 + grid.k.astype(float) ** 2) ** s
    return float(np.sqrt(2 * np.pi * np.sum(w * np.abs(c) ** 2)))


def bmo_norm(grid: PeriodicGrid, f: np.ndarray) -> float:
    """Square-function BMO over grid-aligned dyadic intervals.

    ``sup_k sup_{|Q| = 2pi 2^-k} (mean over Q of |S_{>k} f|^2)^(1/2)``, for
    intervals of at least four cells.
    """
    part = partition(grid)
    dens = np.cumsum(np.abs(part.bands(f)[::-1]) ** 2, axis=0)[::-1]
    # dens[j] = sum_{i >= j} |P_i f|^2
    best = 0.0
    k = 0
    while grid.n >> k >= 4:
        if k + 1 > part.J:
            break
        s2 = dens[k + 1]
        local = s2.reshape(2**k, grid.n >> k).mean(axis=1)
        best = max(best, float(local.max()))
        k += 1
    return float(np.sqrt(best))


def besov_inf2(grid: PeriodicGrid, f: np.ndarray, s: float) -> float:
    """``(sum_j (2^(js) ||P_j f||_inf)^2)^(1/2)`` on the mean-free part."""
    part = partition(grid)
    fb = part.bands(f, nomean=True)
    sup = np.max(np.abs(fb), axis=1)
    return float(np.sqrt(np.sum((2.0 ** (s * np.arange(part.band_count)) * sup) ** 2)))


def norm(grid: PeriodicGrid, f: np.ndarray, kind: str, s: float = 0.0) -> float:
    """Dispatch over ``L2, Linf, Hdot, H, BMO, BMOs, BesovInf2``."""
    if kind not in NORM_KINDS:
        raise ValueError(f"unknown norm {kind!r}")
    if kind in ("Hdot", "H", "BMOs", "BesovInf2"):
        _check_s(grid, s)
    if kind == "L2":
        return l2_norm(grid, f)
    if kind == "Linf":
        return float(np.max(np.abs(f)))
    if kind == "Hdot":
        return hdot_norm(grid, f, s)
    if kind == "H":
        return h_norm(grid, f, s)
    if kind == "BMO":
        return bmo_norm(grid, f)
    if kind == "BMOs":
        return bmo_norm(grid, grid.absd(f, s))
    return besov_inf2(grid, f, s)


# -- control parameters ------------------------------------------------------


@dataclass(frozen=True)
class ControlParams:
    A: float
    B: float
    A14: float
    Asharp: float

    def as_dict(self) -> dict:
        return {"A": self.A, "B": self.B, "A14": self.A14, "Asharp": self.Asharp}


def y_field(Wa: np.ndarray, delta_J: float = 0.5) -> np.ndarray:
    gap = np.min(np.abs(1 + Wa))
    if gap < delta_J:
        raise DegenerateSurfaceError(f"min|1+W_alpha| = {gap:.3f} < {delta_J}")
    return Wa / (1 + Wa)


def control_params(grid: PeriodicGrid, Wa: np.ndarray, R: np.ndarray, delta_J: float = 0.5) -> ControlParams:
    """Control norms ``A, B, A_{1/4}, A_sharp`` of a differentiated state."""
    Y = y_field(Wa, delta_J)
    hR = grid.absd(R, 0.5)
    A = (
        float(np.max(np.abs(Wa)))
        + float(np.max(np.abs(Y)))
        + max(float(np.max(np.abs(hR))), besov_inf2(grid, hR, 0.0))
    )
    B = bmo_norm(grid, grid.absd(Wa, 0.5)) + bmo_norm(grid, grid.d(R))
    A14 = besov_inf2(grid, Wa, 0.25) + besov_inf2(grid, R, 0.75)
    Asharp = hdot_norm(grid, Wa, 0.5) + l2_norm(grid, grid.d(R))
    return ControlParams(A, B, A14, Asharp)


def pair_norm(grid: PeriodicGrid, Wa: np.ndarray, R: np.ndarray, s: float, homogeneous: bool = True) -> float:
    """``|| L^s (Wa, R) ||`` in ``L^2 x Hdot^{1/2}`` with ``L = |D|`` or ``<D>``."""
    cw = grid.fft(Wa)
    cr = grid.fft(R)
    if homogeneous:
        w = absd_weights(grid, 2 * s)
    else:
        w = (1.0 + grid.k.astype(float) ** 2) ** s
    total = np.sum(w * np.abs(cw) ** 2) + np.sum(w * grid.absk * np.abs(cr) ** 2)
    return float(np.sqrt(2 * np.pi * total))


# -- para-Leibniz diagnostics -------------------------------------------------


def para_leibniz_errors(grid: PeriodicGrid, b, u, v, u_t, v_t):
    """Leibniz-rule defects of the para-material derivative ``T_Dt = d_t + T_b d_alpha``.

    Returns ``(E_p, E_p_tilde, E_pi, E_pi_tilde)``; the time derivatives of the
    bilinear expressions are expanded by the product rule from ``u_t, v_t``.
    """
    T = lambda f, g: para_low_high(grid, f, g)
    Pi = lambda f, g: para_balanced(grid, f, g)
    d = grid.d
    u_a, v_a = d(u), d(v)

    def tdt(x, x_t):
        return x_t + T(b, d(x))

    Tuv = T(u, v)
    Tuv_t = T(u_t, v) + T(u, v_t)
    Piuv = Pi(u, v)
    Piuv_t = Pi(u_t, v) + Pi(u, v_t)
    e_p = tdt(Tuv, Tuv_t) - T(tdt(u, u_t), v) - T(u, tdt(v, v_t))
    e_pt = tdt(Tuv, Tuv_t) - T(u_t + b * u_a, v) - T(u, tdt(v, v_t))
    e_pi = tdt(Piuv, Piuv_t) - Pi(tdt(u, u_t), v) - Pi(u, tdt(v, v_t))
    e_pit = tdt(Piuv, Piuv_t) - Pi(u_t + b * u_a, v) - Pi(u, tdt(v, v_t))
    return e_p, e_pt, e_pi, e_pit


# -- frequency envelopes ------------------------------------------------------


def band_pair_norms(grid: PeriodicGrid, Wa: np.ndarray, R: np.ndarray, s: float) -> np.ndarray:
    """``||P_j (Wa, R)||`` in the inhomogeneous pair norm of order ``s``, per band."""
    part = partition(grid)
    cw, cr = grid.fft(Wa), grid.fft(R)
    w = (1.0 + grid.k.astype(float) ** 2) ** s
    out = np.empty(part.band_count)
    for j in range(part.band_count):
        pw, pr = part.psi[j] * cw, part.psi[j] * cr
        out[j] = np.sqrt(2 * np.pi * (np.sum(w * np.abs(pw) ** 2) + np.sum(w * grid.absk * np.abs(pr) ** 2)))
    return out


def frequency_envelope(grid: PeriodicGrid, Wa: np.ndarray, R: np.ndarray, s: float, delta: float) -> np.ndarray:
    """Minimal envelope ``c_k = max_j 2^(-delta|j-k|) ||P_j (Wa, R)||``."""
    if not 0 < delta <= 0.25:
        raise ValueError(f"envelope slope delta must lie in (0, 1/4], got {delta}")
    d = band_pair_norms(grid, Wa, R, s)
    idx = np.arange(d.size)
    weights = 2.0 ** (-delta * np.abs(idx[:, None] - idx[None, :]))
    return np.max(weights * d[None, :], axis=1)
