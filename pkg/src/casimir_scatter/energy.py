"""Sphere-plane Casimir energy at zero temperature.

``E = (hbar c / pi) int_0^inf dxi_hat sum'_m ln det(1 - M^(m))`` where the
primed sum counts ``m = 0`` with weight 1/2 and every ``m >= 1`` once (the
``-m`` blocks are identical). The single round-trip approximation replaces
``ln det(1 - M)`` by ``-tr M``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.linalg import lu_factor

from .constants import HBAR_C_EV_NM
from .materials import MaterialModel, default_plane, default_sphere, material_to_dict
from .roundtrip import RoundTripBlock, roundtrip_blocks

__all__ = [
    "Geometry",
    "NumericsSpec",
    "EnergyResult",
    "SpectralRadiusError",
    "ell_max_policy",
    "log_det_contribution",
    "xi_integrand",
    "casimir_energy_exact",
    "casimir_energy_perturbative",
    "EnergyCache",
]

log = logging.getLogger(__name__)


class SpectralRadiusError(ArithmeticError):
    """``det(1 - M)`` came out non-positive."""


@dataclass(frozen=True)
class Geometry:
    """Sphere radius ``R`` and closest surface-plane distance ``L``, both in nm."""

    R: float
    L: float

    def __post_init__(self):
        if not (self.R > 0 and self.L > 0):
            raise ValueError(f"need R > 0 and L > 0, got R={self.R}, L={self.L}")

    @property
    def script_L(self) -> float:
        """Distance from the sphere center to the plane."""
        return self.L + self.R


def ell_max_policy(R: float, L: float, cap: int = 100) -> int:
    """Multipole cutoff ``max(10, ceil(8 R/L) + 10)``, capped at ``cap``."""
    return min(cap, max(10, math.ceil(8.0 * R / L) + 10))


@dataclass(frozen=True)
class NumericsSpec:
    """Discretization and tolerance settings.

    ``ell_max = None`` selects :func:`ell_max_policy`. ``refine`` runs a second
    evaluation with doubled ``ell_max``, ``xi_nodes`` and ``x_nodes`` to fill
    the error estimate (it does not replace the returned value).
    """

    ell_max: int | None = None
    m_rel_cutoff: float = 1e-7
    xi_nodes: int = 40
    x_nodes: int = 80
    target_rel_err: float = 1e-4
    xi_scale: float = 1.0
    refine: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.ell_max is not None and self.ell_max < 1:
            raise ValueError("ell_max must be >= 1")
        for name in ("m_rel_cutoff", "target_rel_err"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.xi_nodes < 2 or self.x_nodes < 2:
            raise ValueError("node counts must be >= 2")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def lmax_for(self, geom: Geometry) -> int:
        return self.ell_max if self.ell_max is not None else ell_max_policy(geom.R, geom.L)

    def key(self) -> dict:
        d = asdict(self)
        d.pop("workers")  # results do not depend on it
        return d


@dataclass
class EnergyResult:
    energy_ev: float
    energy_natural: float
    lmax_used: int
    m_used: int
    nodes_used: tuple
    rel_err_estimate: float
    converged: bool
    method: str = "exact"
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nodes_used"] = list(self.nodes_used)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EnergyResult":
        d = dict(d)
        d["nodes_used"] = tuple(d["nodes_used"])
        return cls(**d)


def log_det_contribution(block) -> float:
    """``ln det(1 - M)`` of a round-trip block via pivoted LU.

    Accepts a :class:`RoundTripBlock` or a bare square matrix.

    Raises
    ------
    SpectralRadiusError
        If the determinant is not positive.
    """
    mat = block.matrix if isinstance(block, RoundTripBlock) else np.asarray(block, dtype=float)
    n = mat.shape[0]
    lu, piv = lu_factor(np.eye(n) - mat, check_finite=True)
    diag = np.diag(lu)
    swaps = np.count_nonzero(piv != np.arange(n))
    sign = (-1) ** swaps * np.prod(np.sign(diag))
    if sign <= 0:
        raise SpectralRadiusError("det(1 - M) <= 0: round-trip spectral radius >= 1 or breakdown")
    return float(np.sum(np.log(np.abs(diag))))


def _block_value(block: RoundTripBlock, mode: str) -> float:
    if mode == "logdet":
        return log_det_contribution(block)
    return -float(np.trace(block.matrix))


def xi_integrand(
    geom: Geometry,
    plane: MaterialModel,
    sphere: MaterialModel,
    xi_hat: float,
    lmax: int,
    x_nodes: int = 80,
    m_rel_cutoff: float = 1e-7,
    mode: str = "logdet",
):
    """``sum'_m ln det(1 - M^(m))`` at one frequency, and the number of m used.

    The m-sum stops once two consecutive terms fall below
    ``m_rel_cutoff * |partial sum|``. With ``mode='trace'`` the log-det is
    replaced by ``-tr M``.
    """
    total = 0.0
    small = 0
    m_used = 0
    for block in roundtrip_blocks(geom.R, geom.L, plane, sphere, xi_hat, range(lmax + 1), lmax, x_nodes):
        term = _block_value(block, mode)
        if block.m == 0:
            term *= 0.5
        total += term
        m_used = block.m + 1
        if abs(term) < m_rel_cutoff * abs(total) or term == 0.0:
            small += 1
            if small >= 2:
                break
        else:
            small = 0
    return total, m_used


@lru_cache(maxsize=32)
def _unit_gauss_legendre(n: int):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w


def xi_nodes(geom: Geometry, n: int, xi_scale: float = 1.0):
    """Frequency nodes ``xi_hat = (c0/script_L) u/(1-u)`` and weights."""
    u, w = _unit_gauss_legendre(n)
    scale = xi_scale / geom.script_L
    return scale * u / (1.0 - u), w * scale / (1.0 - u) ** 2


def _integrate(geom, plane, sphere, num: NumericsSpec, lmax: int, mode: str):
    xs, ws = xi_nodes(geom, num.xi_nodes, num.xi_scale)

    def work(xi):
        # exp(-2 xi L) bounds the whole integrand; beyond ~1e-300 skip the node
        if 2.0 * xi * geom.L > 690.0:
            return 0.0, 0
        return xi_integrand(geom, plane, sphere, float(xi), lmax, num.x_nodes, num.m_rel_cutoff, mode)

    if num.workers > 1:
        with ThreadPoolExecutor(max_workers=num.workers) as pool:
            parts = list(pool.map(work, xs))
    else:
        parts = [work(xi) for xi in xs]
    # fixed summation order keeps results bit-reproducible across worker counts
    total = 0.0
    m_used = 0
    for (val, mu), w in zip(parts, ws):
        total += w * val
        m_used = max(m_used, mu)
    return total / math.pi, m_used


def _energy(geom, plane, sphere, num: NumericsSpec, mode: str) -> EnergyResult:
    lmax = num.lmax_for(geom)
    nat, m_used = _integrate(geom, plane, sphere, num, lmax, mode)
    rel_err = 0.0
    converged = True
    notes = []
    if num.refine:
        fine = replace(num, ell_max=2 * lmax, xi_nodes=2 * num.xi_nodes, x_nodes=2 * num.x_nodes, refine=False)
        nat_fine, _ = _integrate(geom, plane, sphere, fine, 2 * lmax, mode)
        rel_err = float(abs(nat_fine - nat) / abs(nat_fine)) if nat_fine != 0 else 0.0
        converged = bool(rel_err <= num.target_rel_err)
        if not converged:
            notes.append(f"refinement changed the energy by {rel_err:.3e} (target {num.target_rel_err:.1e})")
            log.warning("energy at R=%g L=%g not converged: %s", geom.R, geom.L, notes[-1])
    return EnergyResult(
        energy_ev=float(HBAR_C_EV_NM * nat),
        energy_natural=float(nat),
        lmax_used=lmax,
        m_used=int(m_used),
        nodes_used=(num.xi_nodes, num.x_nodes),
        rel_err_estimate=rel_err,
        converged=converged,
        method="exact" if mode == "logdet" else "perturbative",
        notes=notes,
    )


def casimir_energy_exact(
    geom: Geometry,
    plane: MaterialModel | None = None,
    sphere: MaterialModel | None = None,
    num: NumericsSpec | None = None,
    cache: "EnergyCache | None" = None,
) -> EnergyResult:
    """Exact scattering-formula energy, in eV and in units of ``hbar c / nm``.

    Raises
    ------
    SpectralRadiusError
        If a round-trip block has ``det(1 - M) <= 0``.
    """
    plane = default_plane() if plane is None else plane
    sphere = default_sphere() if sphere is None else sphere
    num = NumericsSpec() if num is None else num
    if cache is not None:
        return cache.get_or_compute(geom, plane, sphere, num, "logdet")
    return _energy(geom, plane, sphere, num, "logdet")


def casimir_energy_perturbative(
    geom: Geometry,
    plane: MaterialModel | None = None,
    sphere: MaterialModel | None = None,
    num: NumericsSpec | None = None,
    cache: "EnergyCache | None" = None,
) -> EnergyResult:
    """Single round-trip energy ``-(hbar c/pi) int sum'_m tr M^(m)``."""
    plane = default_plane() if plane is None else plane
    sphere = default_sphere() if sphere is None else sphere
    num = NumericsSpec() if num is None else num
    if cache is not None:
        return cache.get_or_compute(geom, plane, sphere, num, "trace")
    return _energy(geom, plane, sphere, num, "trace")


class EnergyCache:
    """One JSON record per input key under ``directory/<sha256>.json``.

    Writes go to a temporary file that is renamed into place, so concurrent
    writers never expose partial records.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(geom: Geometry, plane, sphere, num: NumericsSpec, mode: str) -> dict:
        return {
            "geometry": {"R_nm": geom.R, "L_nm": geom.L},
            "plane": material_to_dict(plane),
            "sphere": material_to_dict(sphere),
            "numerics": num.key(),
            "mode": mode,
        }

    @staticmethod
    def digest(key: dict) -> str:
        return hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()

    def path_for(self, key: dict) -> Path:
        return self.directory / f"{self.digest(key)}.json"

    def get_or_compute(self, geom, plane, sphere, num, mode) -> EnergyResult:
        key = self.key(geom, plane, sphere, num, mode)
        path = self.path_for(key)
        if path.exists():
            try:
                record = json.loads(path.read_text())
                if record.get("inputs") == json.loads(json.dumps(key)):
                    self.hits += 1
                    return EnergyResult.from_dict(record["result"])
            except (OSError, ValueError, KeyError, TypeError):
                log.warning("ignoring unreadable cache record %s", path)
        self.misses += 1
        result = _energy(geom, plane, sphere, num, mode)
        self._write(path, {"inputs": key, "result": result.to_dict()})
        return result

    def _write(self, path: Path, record: dict) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(record, fh, sort_keys=True)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def clear(self) -> int:
        n = 0
        if self.directory.is_dir():
            for p in self.directory.glob("*.json"):
                p.unlink()
                n += 1
        return n
