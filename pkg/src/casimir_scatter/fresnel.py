"""Fresnel reflection on a homogeneous half-space at imaginary frequency.

Amplitudes are parameterized by ``x = kappa/xi_hat >= 1`` where
``kappa = sqrt(xi_hat^2 + k^2)``. Both are written in cancellation-free form,
so they stay accurate as ``eps -> 1`` and for very large Drude permittivities.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = ["FresnelPair", "fresnel", "fresnel_x"]


class FresnelPair(NamedTuple):
    r_te: float
    r_tm: float


def fresnel_x(eps, x):
    """Return ``(r_te, r_tm)`` for permittivity ``eps`` and ``x = kappa/xi_hat``.

    Broadcasts over arrays. ``eps = inf`` gives the perfect mirror ``(-1, 1)``.
    """
    eps = np.asarray(eps, dtype=float)
    x = np.asarray(x, dtype=float)
    em1 = eps - 1.0
    finite = np.isfinite(eps)
    em1_f = np.where(finite, em1, 0.0)
    eps_f = np.where(finite, eps, 1.0)
    q = np.sqrt(x * x + em1_f)
    r_te = -em1_f / (x + q) ** 2
    r_tm = em1_f * ((eps_f + 1.0) * x * x - 1.0) / (eps_f * x + q) ** 2
    r_te = np.where(finite, r_te, -1.0)
    r_tm = np.where(finite, r_tm, 1.0)
    return FresnelPair(r_te[()], r_tm[()])


def fresnel(eps: float, xi_hat: float, kappa: float) -> FresnelPair:
    """TE and TM reflection amplitudes of a half-space with permittivity ``eps``.

    ``r_te = (kappa - kappa_m)/(kappa + kappa_m)`` and
    ``r_tm = (eps kappa - kappa_m)/(eps kappa + kappa_m)`` with
    ``kappa_m = sqrt(kappa^2 + (eps - 1) xi_hat^2)``.

    Raises
    ------
    ValueError
        For ``eps < 1``, ``xi_hat <= 0`` or ``kappa < xi_hat``.
    """
    if not eps >= 1.0:
        raise ValueError(f"permittivity must be >= 1 at imaginary frequency, got {eps}")
    if not xi_hat > 0:
        raise ValueError(f"xi_hat must be positive, got {xi_hat}")
    if kappa < xi_hat:
        raise ValueError(f"kappa={kappa} < xi_hat={xi_hat} is unphysical")
    r_te, r_tm = fresnel_x(eps, kappa / xi_hat)
    return FresnelPair(float(r_te), float(r_tm))
