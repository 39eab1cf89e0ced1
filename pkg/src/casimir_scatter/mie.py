"""Mie amplitudes of a homogeneous dielectric sphere at imaginary frequency.

The amplitudes follow the Bohren-Huffman definition, continued to imaginary
size parameter. With ``u_n(s) = s i_n(s)`` and ``v_n(s) = s k_n(s)`` built on
the modified spherical Bessel functions, and ``n = sqrt(eps)``::

    a_l = -(pi/2) (-1)^l u_l(s)/v_l(s) * (n D_u(s) - D_u(ns)) / (n D_v(s) - D_u(ns))
    b_l = -(pi/2) (-1)^l u_l(s)/v_l(s) * (D_u(s) - n D_u(ns)) / (D_v(s) - n D_u(ns))

where ``D_f = f'/f``. Everything is real. The ratio ``u_l/v_l`` grows like
``exp(2 s)`` and shrinks like ``s^(2l+1)``, so amplitudes are produced as
(log-magnitude, sign) pairs and only exponentiated on request.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

__all__ = [
    "MieAmplitude",
    "MieLogTable",
    "mie_log_table",
    "mie_amplitudes",
    "mie_small_radius",
    "polarizability",
    "bessel_i_ratios",
    "bessel_k_ratios",
    "MAX_ELL",
]

# beyond this the downward start index and the log sums get unreasonably long
MAX_ELL = 2000


class MieAmplitude(NamedTuple):
    ell: int
    a: float
    b: float


class MieLogTable(NamedTuple):
    """Amplitudes for l = 1..lmax as ``sign * exp(log_abs)``."""

    log_a: np.ndarray
    sign_a: np.ndarray
    log_b: np.ndarray
    sign_b: np.ndarray


def bessel_i_ratios(s: float, nmax: int) -> np.ndarray:
    """``rho[n] = i_n(s)/i_{n-1}(s)`` for n = 0..nmax (``rho[0]`` unused).

    Downward continued fraction ``rho_n = 1/((2n+1)/s + rho_{n+1})``, which is
    stable because ``i_n`` is the minimal solution going down in n.
    """
    n_top = int(math.ceil(math.sqrt((nmax + 1) ** 2 + 40.0 * s))) + 24
    nu = n_top + 0.5
    rho = s / (nu + math.sqrt(nu * nu + s * s))
    out = np.zeros(nmax + 1)
    for n in range(n_top, 0, -1):
        rho = 1.0 / ((2 * n + 1) / s + rho)
        if n <= nmax:
            out[n] = rho
    return out


def bessel_k_ratios(s: float, nmax: int) -> np.ndarray:
    """``sigma[n] = k_n(s)/k_{n-1}(s)`` for n = 1..nmax by upward recurrence."""
    out = np.zeros(nmax + 1)
    if nmax >= 1:
        sig = 1.0 + 1.0 / s
        out[1] = sig
        for n in range(2, nmax + 1):
            sig = (2 * n - 1) / s + 1.0 / sig
            out[n] = sig
    return out


def _check(eps: float, s: float, lmax: int):
    if not eps >= 1.0:
        raise ValueError(f"sphere permittivity must be >= 1, got {eps}")
    if not math.isfinite(eps):
        raise ValueError("infinite sphere permittivity is not supported")
    if not s > 0:
        raise ValueError(f"size parameter must be positive, got {s}")
    if lmax < 1:
        raise ValueError(f"ell_max must be >= 1, got {lmax}")
    if lmax > MAX_ELL:
        raise ValueError(f"ell_max={lmax} exceeds the supported range ({MAX_ELL})")


def mie_log_table(eps: float, s: float, lmax: int) -> MieLogTable:
    """Log-magnitudes and signs of ``a_l``, ``b_l`` for l = 1..lmax.

    Parameters
    ----------
    eps : float
        Sphere permittivity at the imaginary frequency, ``>= 1``.
    s : float
        Size parameter ``xi_hat * R``.
    lmax : int
        Highest multipole order.
    """
    _check(eps, s, lmax)
    n_idx = np.arange(1, lmax + 1)
    if eps == 1.0:
        zeros = np.zeros(lmax)
        return MieLogTable(np.full(lmax, -np.inf), zeros, np.full(lmax, -np.inf), zeros.copy())

    n = math.sqrt(eps)
    ns = n * s
    rho = bessel_i_ratios(s, lmax + 1)
    rho_in = bessel_i_ratios(ns, lmax + 1)
    sig = bessel_k_ratios(s, lmax)

    # D_u(z) = (l+1)/z + rho_{l+1}(z) keeps the cancelling leading terms analytic
    r1 = rho[2 : lmax + 2]
    r1_in = rho_in[2 : lmax + 2]
    du_in = (n_idx + 1) / ns + r1_in
    dv = -1.0 / sig[1:] - n_idx / s

    num_a = (n_idx + 1) * (eps - 1.0) / ns + n * r1 - r1_in
    den_a = n * dv - du_in
    num_b = r1 - n * r1_in
    den_b = dv - n * du_in

    log_sinh = s + math.log(-math.expm1(-2.0 * s) / 2.0)
    log_u = log_sinh + np.cumsum(np.log(rho[1 : lmax + 1]))
    log_v = math.log(math.pi / 2.0) - s + np.cumsum(np.log(sig[1:]))
    log_pref = math.log(math.pi / 2.0) + log_u - log_v
    parity = np.where(n_idx % 2 == 0, 1.0, -1.0)

    fa = num_a / den_a
    fb = num_b / den_b
    with np.errstate(divide="ignore"):
        log_a = log_pref + np.log(np.abs(fa))
        log_b = log_pref + np.log(np.abs(fb))
    sign_a = -parity * np.sign(fa)
    sign_b = -parity * np.sign(fb)
    if not (np.all(np.isfinite(log_pref)) and np.all(np.isfinite(fa)) and np.all(np.isfinite(fb))):
        raise FloatingPointError(f"non-finite Mie recurrence at eps={eps}, s={s}, lmax={lmax}")
    return MieLogTable(log_a, sign_a, log_b, sign_b)


def mie_amplitudes(eps: float, size: float, ell_max: int) -> list[MieAmplitude]:
    """Full Mie amplitudes ``a_l``, ``b_l`` for l = 1..ell_max.

    Raises
    ------
    FloatingPointError
        If an amplitude overflows double precision (very large ``size``);
        use :func:`mie_log_table` there.
    """
    tab = mie_log_table(eps, size, ell_max)
    with np.errstate(over="ignore"):
        a = tab.sign_a * np.exp(tab.log_a)
        b = tab.sign_b * np.exp(tab.log_b)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise FloatingPointError(f"Mie amplitudes overflow at size={size}; use mie_log_table")
    return [MieAmplitude(ell, float(ai), float(bi)) for ell, ai, bi in zip(range(1, ell_max + 1), a, b)]


def _double_factorial(k: int) -> float:
    return float(math.prod(range(k, 0, -2))) if k > 0 else 1.0


def mie_small_radius(eps: float, size: float, ell: int) -> MieAmplitude:
    """Leading small-size behaviour of ``a_l`` and ``b_l``.

    ``a_l ~ (-1)^l (l+1)/(l eps + l + 1) (eps-1) s^(2l+1) / ((2l+1)!! (2l-1)!!)``
    ``b_l ~ (-1)^(l+1) (eps-1) s^(2l+3) / ((2l+3)!! (2l+1)!!)``
    """
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    if not eps >= 1.0:
        raise ValueError(f"permittivity must be >= 1, got {eps}")
    if not size >= 0:
        raise ValueError(f"size must be non-negative, got {size}")
    sign = -1.0 if ell % 2 else 1.0
    a = (
        sign
        * (ell + 1) / (ell * eps + ell + 1)
        * (eps - 1.0) * size ** (2 * ell + 1)
        / (_double_factorial(2 * ell + 1) * _double_factorial(2 * ell - 1))
    )
    b = -sign * (eps - 1.0) * size ** (2 * ell + 3) / (
        _double_factorial(2 * ell + 3) * _double_factorial(2 * ell + 1)
    )
    return MieAmplitude(ell, a, b)


def polarizability(eps):
    """Reduced dipole polarizability ``(eps - 1)/(eps + 2)``; tends to 1 as eps -> inf."""
    eps = np.asarray(eps, dtype=float)
    with np.errstate(invalid="ignore"):
        alpha = np.where(np.isinf(eps), 1.0, (eps - 1.0) / (eps + 2.0))
    return alpha[()]
