"""Post-processing of energy curves: force, logarithmic slopes and ratios."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .asymptotics import Coefficients, coefficients, hamaker_energies
from .energy import EnergyCache, EnergyResult, Geometry, NumericsSpec, casimir_energy_exact
from .materials import MaterialModel, default_plane, default_sphere

__all__ = [
    "Curve",
    "energy_curve",
    "slope_nu",
    "force",
    "slope_mu",
    "ratio_curves",
    "plateaus",
]


@dataclass
class Curve:
    """Energies ``E`` (eV) sampled at increasing abscissas (nm)."""

    abscissa: np.ndarray
    energy: np.ndarray
    meta: dict = field(default_factory=dict)
    results: list = field(default_factory=list)

    def __post_init__(self):
        self.abscissa = np.asarray(self.abscissa, dtype=float)
        self.energy = np.asarray(self.energy, dtype=float)
        if self.abscissa.shape != self.energy.shape or self.abscissa.ndim != 1:
            raise ValueError("abscissa and energy must be 1-D arrays of equal length")
        if np.any(np.diff(self.abscissa) <= 0):
            raise ValueError("abscissas must be strictly increasing")


def _as_arrays(curve, energy):
    if isinstance(curve, Curve):
        return curve.abscissa, curve.energy
    return np.asarray(curve, dtype=float), np.asarray(energy, dtype=float)


def slope_nu(curve, energy=None, check_monotonic: bool = True) -> np.ndarray:
    """Distance slope ``nu = -d ln|E| / d ln L``.

    Central differences in ``(ln L, ln|E|)`` on the (possibly non-uniform)
    grid, second-order one-sided at the ends.

    Parameters
    ----------
    curve : Curve or array_like
        A :class:`Curve`, or the distances when ``energy`` is given.
    energy : array_like, optional
        Energies when ``curve`` is a bare array.
    check_monotonic : bool
        Reject curves whose ``|E|`` is not strictly decreasing.

    Raises
    ------
    ValueError
        Fewer than 3 points, a non-negative energy, or (when checked) a
        non-monotonic ``|E|``.
    """
    L, E = _as_arrays(curve, energy)
    if L.size < 3:
        raise ValueError("need at least 3 points for a slope")
    if np.any(E >= 0):
        raise ValueError("energies must be strictly negative")
    if check_monotonic and np.any(np.diff(np.abs(E)) >= 0):
        raise ValueError("|E| is not strictly decreasing along the curve")
    return -np.gradient(np.log(-E), np.log(L), edge_order=2)


def force(curve, energy=None) -> np.ndarray:
    """Force ``F = -dE/dL = nu E / L`` in eV/nm (negative means attractive)."""
    L, E = _as_arrays(curve, energy)
    return slope_nu(L, E, check_monotonic=False) * E / L


def slope_mu(energy_of_radius: Callable[[float], float], R: float, h: float = 0.05) -> float:
    """Radius slope ``mu = d ln|E| / d ln R`` by a central difference at ``R e^{+-h}``."""
    if not R > 0:
        raise ValueError(f"R must be positive, got {R}")
    hi = energy_of_radius(R * math.exp(h))
    lo = energy_of_radius(R * math.exp(-h))
    if hi >= 0 or lo >= 0:
        raise ValueError("energies must be strictly negative")
    return (math.log(-hi) - math.log(-lo)) / (2.0 * h)


def energy_curve(
    R: float,
    distances: Sequence[float],
    plane: MaterialModel | None = None,
    sphere: MaterialModel | None = None,
    num: NumericsSpec | None = None,
    cache: EnergyCache | None = None,
    workers: int = 1,
    check_every: int = 0,
) -> Curve:
    """Exact energies at fixed radius over increasing distances.

    With ``check_every = k > 0`` every k-th point and the last one also run the
    refinement pass, so the convergence flags are filled on a sparse grid.
    Points may be evaluated concurrently; results are always collected in
    distance order.
    """
    plane = default_plane() if plane is None else plane
    sphere = default_sphere() if sphere is None else sphere
    num = NumericsSpec() if num is None else num
    distances = [float(L) for L in distances]
    n = len(distances)
    refine = [check_every > 0 and (i % check_every == 0 or i == n - 1) for i in range(n)]

    def one(i) -> EnergyResult:
        spec = replace(num, refine=True) if refine[i] else num
        return casimir_energy_exact(Geometry(R, distances[i]), plane, sphere, spec, cache)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(n)))
    else:
        results = [one(i) for i in range(n)]
    return Curve(
        abscissa=np.asarray(distances, dtype=float),
        energy=np.array([r.energy_ev for r in results]),
        meta={"R_nm": R},
        results=results,
    )


def ratio_curves(
    R: float,
    distances: Sequence[float],
    plane: MaterialModel | None = None,
    sphere: MaterialModel | None = None,
    num: NumericsSpec | None = None,
    cache: EnergyCache | None = None,
    coeff: Coefficients | None = None,
    curve: Curve | None = None,
) -> np.ndarray:
    """Rows ``(L, E/E_CP_bar, E/E_vdW_bar)`` of the exact energy over the Hamaker forms."""
    plane = default_plane() if plane is None else plane
    sphere = default_sphere() if sphere is None else sphere
    coeff = coefficients(plane, sphere, with_c3_prime=False) if coeff is None else coeff
    if curve is None:
        curve = energy_curve(R, distances, plane, sphere, num, cache)
    L = curve.abscissa
    e_vdw_bar, e_cp_bar = hamaker_energies(coeff, R, L)
    return np.column_stack([L, curve.energy / e_cp_bar, curve.energy / e_vdw_bar])


def plateaus(x, y, target: float, tol: float) -> list[tuple[float, float]]:
    """Maximal runs of consecutive points with ``|y - target| <= tol``, as ``(x_first, x_last)``."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(np.asarray(y, dtype=float) - target) <= tol
    runs = []
    start = None
    for i, flag in enumerate(inside):
        if flag and start is None:
            start = i
        if start is not None and (not flag or i == len(inside) - 1):
            stop = i if flag else i - 1
            runs.append((float(x[start]), float(x[stop])))
            start = None
    return runs
