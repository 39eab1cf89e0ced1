"""Round-trip operator blocks in the multipole basis.

For a fixed angular-momentum projection ``m`` the round trip (sphere
reflection, propagation down, plane reflection, propagation up) is the
real matrix::

    M[(l,P), (l',P')] = s_lP * int_1^inf dx exp(-2 xi_hat Lc x)
                        * (r_TE C^TE_lP C^TE_l'P' - r_TM C^TM_lP C^TM_l'P')

with ``x = kappa/xi_hat``, ``Lc = L + R`` the center-plane distance and
``C^TM_lE = C^TE_lM = tau_lm``, ``C^TM_lM = C^TE_lE = pi_lm``.
Relative to the Bohren-Huffman Mie amplitudes the sphere factors are
``s_lE = (-1)^(l+1) a_l`` and ``s_lM = (-1)^l b_l``: the ``(-1)^l`` comes from
the parity of the downgoing wave, and the extra minus on the magnetic row
makes electric and magnetic polarizabilities enter the trace with opposite
sign, as they must for a perfect mirror. For l = 1 these factors reproduce
the explicit electric-dipole elements, and summing the traces over m
reproduces the backscattering Mie series, which :mod:`tests` check.

Blocks are stored balanced, ``D^-1 M D`` with ``D = diag(sqrt|s|)``. That
similarity leaves determinants and traces unchanged and keeps every entry
inside double range, where the raw factors would over- and underflow at
large l.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from .fresnel import fresnel_x
from .materials import MaterialModel, permittivity
from .mie import mie_log_table

__all__ = [
    "AngularFunctions",
    "RoundTripBlock",
    "angular_functions",
    "angular_tables",
    "x_quadrature",
    "roundtrip_block",
    "roundtrip_blocks",
    "dipole_block_elements",
    "dump_block_csv",
]


class AngularFunctions(NamedTuple):
    pi_tilde: float
    tau_tilde: float


@lru_cache(maxsize=16)
def _gauss_legendre_unit(n: int):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w


def x_quadrature(n: int, scale: float):
    """Nodes and weights for ``int_1^inf dx f(x)``.

    Uses ``x = 1 + scale * t/(1-t)`` with Gauss-Legendre in ``t``; returns the
    log of the weights so callers can fold them into exponents.
    """
    t, w = _gauss_legendre_unit(n)
    x = 1.0 + scale * t / (1.0 - t)
    log_w = np.log(w * scale) - 2.0 * np.log1p(-t)
    return x, log_w


def angular_tables(m: int, lmax: int, x):
    """Scaled angular functions for l = max(1, m)..lmax at nodes ``x``.

    Returns ``(pi_hat, tau_hat, log_t)`` with
    ``pi_tilde[l] = pi_hat[l] * exp(l * log_t)`` and the same for tau. The
    factor ``t = x + sqrt(x^2 - 1)`` carries the exponential growth in l.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if m < 0 or m > lmax:
        raise ValueError(f"need 0 <= m <= lmax, got m={m}, lmax={lmax}")
    if np.any(x < 1.0):
        raise ValueError("angular functions need x >= 1")
    ell_min = max(1, m)
    n_l = lmax - ell_min + 1
    xm1 = (x - 1.0) * (x + 1.0)
    sq = np.sqrt(xm1)
    t = x + sq
    log_t = np.log(t)
    inv_t = 1.0 / t

    # R_l = Q_l^mu / sqrt(x^2-1), Q fully normalized, for mu = max(m, 1)
    mu = max(m, 1)
    log_c = 0.5 * math.log(2 * mu + 1) + 0.5 * gammaln(2 * mu + 1) - mu * math.log(2.0) - gammaln(mu + 1)
    if mu > 1:
        with np.errstate(divide="ignore"):
            r_start = np.exp(log_c + 0.5 * (mu - 1) * np.log(xm1) - mu * log_t)
    else:
        r_start = np.exp(log_c - mu * log_t)
    r = np.empty((lmax - mu + 2, x.size))  # r[k] holds l = mu - 1 + k
    r[0] = 0.0
    r[1] = r_start
    for ell in range(mu, lmax):
        a = math.sqrt((2 * ell + 1) * (2 * ell + 3) / ((ell + 1 - mu) * (ell + 1 + mu)))
        b = math.sqrt((2 * ell + 3) * (ell - mu) * (ell + mu) / ((2 * ell - 1) * (ell + 1 - mu) * (ell + 1 + mu)))
        k = ell - mu + 1
        r[k + 1] = (a * x * inv_t) * r[k] - (b * inv_t * inv_t) * r[k - 1]

    ells = np.arange(ell_min, lmax + 1)
    norm = 1.0 / np.sqrt(ells * (ells + 1.0))
    if m == 0:
        # tau_l0 = Q_l^1 = sqrt(x^2-1) R_l^(1); pi_l0 = 0
        pi_hat = np.zeros((n_l, x.size))
        tau_hat = sq * r[1:]
        return pi_hat, tau_hat, log_t
    cur = r[1:]
    prev = r[:-1]
    gam = np.sqrt((2 * ells + 1.0) * (ells - m) * (ells + m) / (2 * ells - 1.0))
    pi_hat = (m * norm)[:, None] * cur
    tau_hat = norm[:, None] * ((ells[:, None] * x) * cur - gam[:, None] * prev * inv_t)
    return pi_hat, tau_hat, log_t


def angular_functions(ell: int, m: int, x: float) -> AngularFunctions:
    """Normalized angular functions continued to ``x = kappa/xi_hat >= 1``.

    ``pi_tilde = Lam * m * P(x)/sqrt(x^2-1)`` and
    ``tau_tilde = Lam * sqrt(x^2-1) * dP/dx`` where ``P`` is the associated
    Legendre function ``(x^2-1)^(m/2) d^m P_l/dx^m`` and
    ``Lam^2 = (2l+1)(l-m)!/(l(l+1)(l+m)!)``.
    """
    if ell < 1 or not 0 <= m <= ell:
        raise ValueError(f"need l >= 1 and 0 <= m <= l, got l={ell}, m={m}")
    pi_hat, tau_hat, log_t = angular_tables(m, ell, np.array([float(x)]))
    scale = math.exp(ell * log_t[0])
    return AngularFunctions(float(pi_hat[-1, 0] * scale), float(tau_hat[-1, 0] * scale))


@dataclass
class RoundTripBlock:
    """Round-trip matrix for one m, ordered ``[E l_min..lmax, M l_min..lmax]``.

    ``matrix`` is the balanced form; ``log_scale`` holds ``log sqrt|s|`` per
    row so :meth:`raw` can undo the balancing when it fits in double range.
    """

    m: int
    ell_min: int
    lmax: int
    xi_hat: float
    matrix: np.ndarray
    log_scale: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def labels(self):
        ells = range(self.ell_min, self.lmax + 1)
        return [(ell, "E") for ell in ells] + [(ell, "M") for ell in ells]

    def raw(self) -> np.ndarray:
        d = self.log_scale
        with np.errstate(over="ignore", invalid="ignore"):
            return self.matrix * np.exp(d[:, None] - d[None, :])


def _sphere_factors(eps_sphere: float, size: float, lmax: int):
    """Log-magnitudes and signs of (s_lE, s_lM) for l = 1..lmax."""
    tab = mie_log_table(eps_sphere, size, lmax)
    ells = np.arange(1, lmax + 1)
    par = np.where(ells % 2 == 0, 1.0, -1.0)  # (-1)^l
    return tab.log_a, -par * tab.sign_a, tab.log_b, par * tab.sign_b


def _default_x_scale(xi_hat: float, center_distance: float) -> float:
    return 1.0 / (2.0 * xi_hat * center_distance)


def roundtrip_blocks(
    R: float,
    L: float,
    plane: MaterialModel,
    sphere: MaterialModel,
    xi_hat: float,
    ms,
    lmax: int,
    x_nodes: int = 80,
    x_scale: float | None = None,
):
    """Yield balanced :class:`RoundTripBlock` objects for each m in ``ms``.

    Quantities shared between different m (Mie amplitudes, Fresnel
    amplitudes, quadrature nodes) are evaluated once.
    """
    if not xi_hat > 0:
        raise ValueError(f"xi_hat must be positive, got {xi_hat}")
    if not (R > 0 and L > 0):
        raise ValueError(f"need R > 0 and L > 0, got R={R}, L={L}")
    lc = L + R
    eps_p = float(permittivity(plane, xi_hat))
    eps_s = float(permittivity(sphere, xi_hat))
    scale = _default_x_scale(xi_hat, lc) if x_scale is None else x_scale
    x, log_w = x_quadrature(x_nodes, scale)
    r_te, r_tm = fresnel_x(eps_p, x)
    # exp(-2 xi Lc x) folded into the weights
    log_w = log_w - 2.0 * xi_hat * lc * x

    log_a, sg_a, log_b, sg_b = _sphere_factors(eps_s, xi_hat * R, lmax)
    for m in ms:
        if m > lmax:
            raise ValueError(f"m={m} exceeds lmax={lmax}")
        ell_min = max(1, m)
        sl = slice(ell_min - 1, lmax)
        ells = np.arange(ell_min, lmax + 1)
        pi_hat, tau_hat, log_t = angular_tables(m, lmax, x)
        half_s = 0.5 * np.concatenate([log_a[sl], log_b[sl]])
        signs = np.concatenate([sg_a[sl], sg_b[sl]])
        expo = 0.5 * log_w[None, :] + ells[:, None] * log_t[None, :]
        with np.errstate(under="ignore"):
            fe = np.exp(0.5 * log_a[sl][:, None] + expo)
            fm = np.exp(0.5 * log_b[sl][:, None] + expo)
        # rows of the TE and TM projections: [E rows; M rows]
        c_te = np.vstack([fe * pi_hat, fm * tau_hat])
        c_tm = np.vstack([fe * tau_hat, fm * pi_hat])
        mat = (c_te * r_te) @ c_te.T - (c_tm * r_tm) @ c_tm.T
        mat *= signs[:, None]
        if not np.all(np.isfinite(mat)):
            raise FloatingPointError(f"non-finite round-trip entries at xi_hat={xi_hat}, m={m}")
        yield RoundTripBlock(m, ell_min, lmax, xi_hat, mat, half_s)


def roundtrip_block(
    R: float,
    L: float,
    plane: MaterialModel,
    sphere: MaterialModel,
    xi_hat: float,
    m: int,
    lmax: int,
    x_nodes: int = 80,
    x_scale: float | None = None,
) -> RoundTripBlock:
    """Single balanced round-trip block for projection ``m``."""
    return next(roundtrip_blocks(R, L, plane, sphere, xi_hat, [m], lmax, x_nodes, x_scale))


def dipole_block_elements(
    R: float,
    L: float,
    plane: MaterialModel,
    sphere: MaterialModel,
    xi_hat: float,
    distance: float | None = None,
    x_nodes: int = 200,
):
    """Electric-dipole round-trip elements ``(M_EE^(0), M_EE^(1))``.

    Direct quadrature of::

        M0 = -(3/2) a1/xi^3 int k^3 dk/kappa r_TM exp(-2 kappa d)
        M1 =  (3/4) a1/xi^3 int k dk/kappa (xi^2 r_TE - kappa^2 r_TM) exp(-2 kappa d)

    in the variable ``k`` (not the multipole machinery). The propagation
    distance ``d`` is the dipole-plane distance; it defaults to the sphere
    center ``L + R``, where the point dipole sits. ``a1`` is the full Mie
    amplitude.
    """
    d = L + R if distance is None else distance
    a1 = mie_log_table(float(permittivity(sphere, xi_hat)), xi_hat * R, 1)
    a1 = float(a1.sign_a[0] * math.exp(a1.log_a[0]))
    eps_p = float(permittivity(plane, xi_hat))
    # k = q/(1-q) * k_scale, Gauss-Legendre in q
    k_scale = 1.0 / (2.0 * d)
    q, w = _gauss_legendre_unit(x_nodes)
    k = k_scale * q / (1.0 - q)
    dk = w * k_scale / (1.0 - q) ** 2
    kappa = np.sqrt(xi_hat * xi_hat + k * k)
    r_te, r_tm = fresnel_x(eps_p, kappa / xi_hat)
    decay = np.exp(-2.0 * kappa * d)
    i0 = np.sum(dk * k**3 / kappa * r_tm * decay)
    i1 = np.sum(dk * k / kappa * (xi_hat**2 * r_te - kappa**2 * r_tm) * decay)
    m0 = -1.5 * a1 / xi_hat**3 * i0
    m1 = 0.75 * a1 / xi_hat**3 * i1
    return m0, m1


def dump_block_csv(block: RoundTripBlock, path) -> None:
    """Write a block as ``row,col,l_row,P_row,l_col,P_col,value`` lines."""
    labels = block.labels()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "l_row", "P_row", "l_col", "P_col", "value"])
        for i, (li, pi) in enumerate(labels):
            for j, (lj, pj) in enumerate(labels):
                w.writerow([i, j, li, pi, lj, pj, repr(float(block.matrix[i, j]))])
