"""Asymptotic and approximate models for the sphere-plane energy.

Small-sphere (dipole) energy, its retarded and non-retarded power laws, the
pairwise Hamaker forms for a finite sphere, the plane-plane Lifshitz energy
and the proximity-force short-distance law built on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import spence

from .constants import HBAR_C_EV_NM
from .energy import NumericsSpec
from .fresnel import fresnel_x
from .materials import Drude, MaterialModel, Sellmeier, default_plane, default_sphere, permittivity
from .mie import polarizability
from .roundtrip import x_quadrature

__all__ = [
    "Coefficients",
    "QuadratureError",
    "casimir_polder_integral",
    "coefficients",
    "power_laws",
    "hamaker_energies",
    "lifshitz_plane_plane",
    "pfa_energy",
    "c3_prime_fit",
    "pfa_energy_and_c3prime",
]


class QuadratureError(ArithmeticError):
    """Doubling the node count moved the result by more than the tolerance."""


@dataclass(frozen=True)
class Coefficients:
    """Power-law coefficients; ``c3``, ``c3_prime`` in eV and ``c4`` in eV nm."""

    c3: float
    c4: float
    c3_prime: float
    L_star: float
    alpha0: float


def _unit_gl(n: int):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w


def _half_line(n: int, scale: float):
    # int_0^inf with y = scale * u/(1-u)
    u, w = _unit_gl(n)
    return scale * u / (1.0 - u), w * scale / (1.0 - u) ** 2


# below this distance the material resonances, not 1/d, bound the xi range
_E1_SCALE_FLOOR_NM = 5.0


def _e1_natural(R, d, plane, sphere, n_xi, n_x):
    xs, ws = _half_line(n_xi, 1.0 / max(d, _E1_SCALE_FLOOR_NM))
    total = 0.0
    for xi, w in zip(xs, ws):
        alpha = polarizability(permittivity(sphere, xi))
        x, log_wx = x_quadrature(n_x, 1.0 / (2.0 * xi * d))
        r = fresnel_x(permittivity(plane, xi), x)
        inner = np.sum((np.abs(r.r_te) + (2.0 * x * x - 1.0) * np.abs(r.r_tm)) * np.exp(log_wx - 2.0 * xi * d * x))
        total += w * alpha * xi**3 * inner
    return -R**3 * total / (2.0 * math.pi)


def casimir_polder_integral(
    R: float,
    L: float,
    plane: MaterialModel | None = None,
    sphere: MaterialModel | None = None,
    num: NumericsSpec | None = None,
    distance: float | None = None,
    rtol: float = 1e-6,
) -> float:
    """Electric-dipole single-round-trip energy ``E_1`` in eV.

    ``E_1 = -(hbar c R^3 / 2 pi) int dxi alpha(xi) xi^3 int_1^inf dx
    (|r_TE| + (2x^2 - 1)|r_TM|) exp(-2 xi d x)``, with ``x = kappa/xi`` and
    ``alpha = (eps - 1)/(eps + 2)``.

    Parameters
    ----------
    R, L : float
        Sphere radius and surface-plane distance in nm.
    distance : float, optional
        Dipole-plane distance ``d``. Defaults to ``L``, which keeps the exact
        ``R^3`` scaling; pass ``L + R`` to place the dipole at the sphere
        center, the form that the exact energy approaches at small ``R``.
    rtol : float
        Allowed change when the node counts are doubled.

    Raises
    ------
    QuadratureError
        If the doubled-node estimate differs by more than ``rtol``.
    """
    if not (R > 0 and L > 0):
        raise ValueError(f"need R > 0 and L > 0, got R={R}, L={L}")
    plane = default_plane() if plane is None else plane
    sphere = default_sphere() if sphere is None else sphere
    num = NumericsSpec() if num is None else num
    d = L if distance is None else float(distance)
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d}")
    e = _e1_natural(R, d, plane, sphere, num.xi_nodes, num.x_nodes)
    e2 = _e1_natural(R, d, plane, sphere, 2 * num.xi_nodes, 2 * num.x_nodes)
    if abs(e2 - e) > rtol * abs(e2):
        raise QuadratureError(f"E_1 quadrature unresolved: {e} vs {e2}")
    return HBAR_C_EV_NM * e2


def _closed_form_parts(plane, sphere):
    if not isinstance(sphere, Sellmeier) or len(sphere.terms) != 1:
        raise ValueError("c3 closed form needs a single-term Sellmeier sphere")
    if not isinstance(plane, Drude):
        raise ValueError("c3 closed form needs a Drude plane")
    alpha0 = float(polarizability(sphere.static_eps))
    lam1 = sphere.terms[0][1]
    length = math.sqrt(2.0) * plane.lambda_p_nm + math.sqrt(1.0 - alpha0) * lam1
    return alpha0, length


def coefficients(
    plane: Drude | None = None,
    sphere: Sellmeier | None = None,
    with_c3_prime: bool = True,
) -> Coefficients:
    """Power-law coefficients for a Drude plane and a one-term Sellmeier sphere.

    ``c4 = 9 hbar c alpha0 / (32 pi^2)``,
    ``c3 = 3 hbar c alpha0 / (16 (sqrt(2) lambda_P + sqrt(1 - alpha0) lambda_1))``
    and ``L_star = c4/c3``. ``c3_prime`` comes from :func:`c3_prime_fit`
    (NaN when ``with_c3_prime`` is false).

    Raises
    ------
    ValueError
        For other material models, where the closed forms do not apply.
    """
    plane = default_plane() if plane is None else plane
    sphere = default_sphere() if sphere is None else sphere
    alpha0, length = _closed_form_parts(plane, sphere)
    c4 = 9.0 * HBAR_C_EV_NM * alpha0 / (32.0 * math.pi**2)
    c3 = 3.0 * HBAR_C_EV_NM * alpha0 / (16.0 * length)
    c3p = c3_prime_fit(plane, sphere) if with_c3_prime else math.nan
    return Coefficients(c3=c3, c4=c4, c3_prime=c3p, L_star=3.0 * length / (2.0 * math.pi**2), alpha0=alpha0)


def power_laws(coeff: Coefficients, R, L):
    """``(E_CP, E_vdW) = (-4 pi c4 R^3 / 3 L^4, -4 pi c3 R^3 / 3 L^3)`` in eV."""
    R = np.asarray(R, dtype=float)
    L = np.asarray(L, dtype=float)
    e_cp = -4.0 * math.pi * coeff.c4 * R**3 / (3.0 * L**4)
    e_vdw = -4.0 * math.pi * coeff.c3 * R**3 / (3.0 * L**3)
    return e_cp[()], e_vdw[()]


def hamaker_energies(coeff: Coefficients, R, L):
    """Pairwise volume sums of the two power laws, ``(E_vdW_bar, E_CP_bar)`` in eV.

    ``E_vdW_bar = -pi c3 (2R(L+R)/(L(L+2R)) - ln((L+2R)/L))`` and
    ``E_CP_bar = -4 pi c4 R^3 / (3 L^2 (L+2R)^2)``.
    """
    R = np.asarray(R, dtype=float)
    L = np.asarray(L, dtype=float)
    if np.any(R <= 0) or np.any(L <= 0):
        raise ValueError("R and L must be positive")
    rho = R / L
    # the bracket cancels to O(rho^3) for small rho; the series keeps it accurate
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = 2.0 * rho * (1.0 + rho) / (1.0 + 2.0 * rho) - np.log1p(2.0 * rho)
    series = (4.0 / 3.0) * rho**3 * (1.0 - 3.0 * rho + 7.2 * rho**2)
    bracket = np.where(rho < 1e-3, series, direct)
    e_vdw = -math.pi * coeff.c3 * bracket
    e_cp = -4.0 * math.pi * coeff.c4 * R**3 / (3.0 * L**2 * (L + 2.0 * R) ** 2)
    return e_vdw[()], e_cp[()]


def _plate_grid(plane, sphere, L, n_kappa, n_t):
    """Nodes ``(kappa, t)``, weights and the round-trip products ``r1 r2`` per polarization."""
    kappa, wk = _half_line(n_kappa, 1.0 / (2.0 * L))
    t, wt = _unit_gl(n_t)
    K, T = np.meshgrid(kappa, t, indexing="ij")
    xi = K * T
    x = 1.0 / T
    r1 = fresnel_x(permittivity(plane, xi), x)
    r2 = fresnel_x(permittivity(sphere, xi), x)
    w = np.outer(wk * kappa**2, wt)
    return K, w, r1.r_te * r2.r_te, r1.r_tm * r2.r_tm


def lifshitz_plane_plane(
    plane: MaterialModel | None = None,
    sphere: MaterialModel | None = None,
    L: float = 1.0,
    num: NumericsSpec | None = None,
) -> float:
    """Zero-temperature energy per area of two half-spaces, in eV/nm^2.

    ``E/A = (hbar c / 4 pi^2) int_0^inf kappa^2 dkappa int_0^1 dt
    sum_p ln(1 - r_p^(1) r_p^(2) exp(-2 kappa L))`` with ``xi = t kappa``; the
    second half-space has the sphere material.
    """
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    plane = default_plane() if plane is None else plane
    sphere = default_sphere() if sphere is None else sphere
    num = NumericsSpec() if num is None else num
    K, w, rr_te, rr_tm = _plate_grid(plane, sphere, L, 4 * num.xi_nodes, 2 * num.x_nodes)
    decay = np.exp(-2.0 * K * L)
    f = np.log1p(-rr_te * decay) + np.log1p(-rr_tm * decay)
    return HBAR_C_EV_NM * float(np.sum(w * f)) / (4.0 * math.pi**2)


def _li2(w):
    return spence(1.0 - w)


def pfa_energy(
    R: float,
    L: float,
    plane: MaterialModel | None = None,
    sphere: MaterialModel | None = None,
    num: NumericsSpec | None = None,
) -> float:
    """Proximity-force energy ``2 pi R int_L^inf (E/A)(z) dz`` in eV.

    The ``z`` integral is done in closed form per mode,
    ``int_L^inf ln(1 - w e^{-2 kappa z}) dz = -Li2(w e^{-2 kappa L}) / (2 kappa)``.
    """
    if not (R > 0 and L > 0):
        raise ValueError(f"need R > 0 and L > 0, got R={R}, L={L}")
    plane = default_plane() if plane is None else plane
    sphere = default_sphere() if sphere is None else sphere
    num = NumericsSpec() if num is None else num
    K, w, rr_te, rr_tm = _plate_grid(plane, sphere, L, 4 * num.xi_nodes, 2 * num.x_nodes)
    decay = np.exp(-2.0 * K * L)
    f = -(_li2(rr_te * decay) + _li2(rr_tm * decay)) / (2.0 * K)
    per_len = HBAR_C_EV_NM * float(np.sum(w * f)) / (4.0 * math.pi**2)
    return 2.0 * math.pi * R * per_len


def c3_prime_fit(
    plane: MaterialModel | None = None,
    sphere: MaterialModel | None = None,
    window: tuple = (0.2, 2.0),
    points: int = 12,
    degree: int = 3,
    num: NumericsSpec | None = None,
    max_spread: float = 0.01,
) -> float:
    """Short-distance coefficient ``c3' = -2 lim_{L->0} L^2 (E/A)(L)`` in eV.

    Fits a polynomial in ``L`` to ``L^2 E/A`` on a log-spaced grid over
    ``window`` (nm) and evaluates it at ``L = 0``.

    Raises
    ------
    QuadratureError
        If refitting on the lower half of the window moves the result by more
        than ``max_spread`` (relative), i.e. the window is not asymptotic.
    """
    num = NumericsSpec(xi_nodes=60, x_nodes=80) if num is None else num
    lo, hi = window
    if not 0 < lo < hi:
        raise ValueError(f"bad fit window {window}")

    def fit(a, b):
        Ls = np.geomspace(a, b, points)
        y = np.array([Lv * Lv * lifshitz_plane_plane(plane, sphere, Lv, num) for Lv in Ls])
        return -2.0 * np.polynomial.polynomial.polyfit(Ls, y, degree)[0]

    full = fit(lo, hi)
    half = fit(lo, math.sqrt(lo * hi))
    if abs(half - full) > max_spread * abs(full):
        raise QuadratureError(f"c3' fit not asymptotic over {window}: {full} vs {half}")
    return float(full)


def pfa_energy_and_c3prime(
    plane: MaterialModel | None = None,
    sphere: MaterialModel | None = None,
    R: float = 10.0,
    L: float = 1.0,
    num: NumericsSpec | None = None,
) -> tuple[float, float]:
    """``(E_PFA(R, L), c3')`` in eV; at ``L << R`` ``E_PFA ~ -pi c3' R / L``."""
    return pfa_energy(R, L, plane, sphere, num), c3_prime_fit(plane, sphere)
