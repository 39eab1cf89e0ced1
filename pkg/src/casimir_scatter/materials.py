"""Dielectric response at imaginary frequency.

All models take the reduced frequency ``xi_hat = xi/c`` in 1/nm, so a
resonance at vacuum wavelength ``lam`` sits at ``2*pi/lam``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Union

import numpy as np

__all__ = [
    "Drude",
    "Sellmeier",
    "Vacuum",
    "DrudeParams",
    "SellmeierParams",
    "MaterialModel",
    "permittivity",
    "default_plane",
    "default_sphere",
    "material_to_dict",
    "material_from_dict",
    "load_material_config",
    "parse_key_value_config",
]


@dataclass(frozen=True)
class Drude:
    """Drude metal, ``eps = 1 + wp^2 / (xi (xi + gamma))``.

    Parameters
    ----------
    lambda_p_nm : float
        Plasma wavelength, ``wp = 2 pi c / lambda_p``.
    gamma_ratio : float
        Damping rate as a fraction of ``wp``.
    """

    lambda_p_nm: float = 136.0
    gamma_ratio: float = 0.0033

    def __post_init__(self):
        if not self.lambda_p_nm > 0:
            raise ValueError(f"lambda_p_nm must be positive, got {self.lambda_p_nm}")
        if not self.gamma_ratio >= 0:
            raise ValueError(f"gamma_ratio must be >= 0, got {self.gamma_ratio}")

    @property
    def omega_p(self) -> float:
        """Reduced plasma frequency in 1/nm."""
        return 2.0 * math.pi / self.lambda_p_nm

    @property
    def gamma(self) -> float:
        return self.gamma_ratio * self.omega_p

    def eps_minus_one(self, xi_hat):
        wp = self.omega_p
        with np.errstate(divide="ignore"):
            return wp * wp / (xi_hat * (xi_hat + self.gamma))


@dataclass(frozen=True)
class Sellmeier:
    """Undamped Sellmeier dielectric, ``eps = 1 + sum B_i w_i^2/(w_i^2 + xi^2)``.

    ``terms`` holds ``(B_i, lambda_i_nm)`` pairs.
    """

    terms: tuple = ((4.91, 106.0),)

    def __post_init__(self):
        terms = tuple((float(b), float(lam)) for b, lam in self.terms)
        if not terms:
            raise ValueError("Sellmeier model needs at least one term")
        for b, lam in terms:
            if not (b > 0 and lam > 0):
                raise ValueError(f"Sellmeier term needs B > 0 and lambda > 0, got {(b, lam)}")
        object.__setattr__(self, "terms", terms)

    @property
    def static_eps(self) -> float:
        return 1.0 + sum(b for b, _ in self.terms)

    def eps_minus_one(self, xi_hat):
        xi2 = np.square(xi_hat)
        out = 0.0
        for b, lam in self.terms:
            w2 = (2.0 * math.pi / lam) ** 2
            out = out + b * w2 / (w2 + xi2)
        return out


@dataclass(frozen=True)
class Vacuum:
    def eps_minus_one(self, xi_hat):
        return np.zeros_like(np.asarray(xi_hat, dtype=float))[()]


MaterialModel = Union[Drude, Sellmeier, Vacuum]

# names used by the parameter records of the model variants
DrudeParams = Drude
SellmeierParams = Sellmeier


def permittivity(model: MaterialModel, xi_hat):
    """Relative permittivity ``eps(i xi)`` at reduced frequency ``xi_hat`` (1/nm).

    Works elementwise on arrays. The Drude model diverges at ``xi_hat = 0``
    and returns ``inf`` there; callers must never integrate through that
    point.

    Raises
    ------
    ValueError
        If any ``xi_hat`` is negative.
    """
    xi = np.asarray(xi_hat, dtype=float)
    if np.any(xi < 0):
        raise ValueError("xi_hat must be non-negative")
    return 1.0 + model.eps_minus_one(xi[()] if xi.ndim == 0 else xi)


def default_plane() -> Drude:
    """Copper: lambda_P = 136 nm, gamma = 0.0033 wp."""
    return Drude()


def default_sphere() -> Sellmeier:
    """Diamond: single resonance B = 4.91 at 106 nm."""
    return Sellmeier()


def material_to_dict(model: MaterialModel) -> dict:
    name = type(model).__name__.lower()
    d = {"model": name}
    if isinstance(model, Sellmeier):
        d["terms"] = [list(t) for t in model.terms]
    elif isinstance(model, Drude):
        d.update(asdict(model))
    return d


def material_from_dict(d: dict) -> MaterialModel:
    name = d.get("model", "").lower()
    if name == "drude":
        return Drude(float(d.get("lambda_p_nm", 136.0)), float(d.get("gamma_ratio", 0.0033)))
    if name == "sellmeier":
        return Sellmeier(tuple(tuple(t) for t in d.get("terms", ((4.91, 106.0),))))
    if name == "vacuum":
        return Vacuum()
    raise ValueError(f"unknown material model {name!r}")


def parse_key_value_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _parse_terms(value: str) -> tuple:
    # "4.91,106; 0.5,200" or "4.91 106"
    terms = []
    for chunk in value.replace("[", "").replace("]", "").split(";"):
        nums = [float(v) for v in chunk.replace(",", " ").split()]
        if not nums:
            continue
        if len(nums) % 2:
            raise ValueError(f"Sellmeier terms need B,lambda pairs, got {chunk!r}")
        terms.extend(zip(nums[::2], nums[1::2]))
    return tuple(terms)


def _material_from_keys(cfg: dict, prefix: str, default: MaterialModel) -> MaterialModel:
    model = cfg.get(f"{prefix}.model")
    if model is None:
        return default
    model = model.lower()
    if model == "drude":
        return Drude(
            float(cfg.get(f"{prefix}.lambda_p_nm", 136.0)),
            float(cfg.get(f"{prefix}.gamma_ratio", 0.0033)),
        )
    if model == "sellmeier":
        terms = cfg.get(f"{prefix}.terms")
        return Sellmeier(_parse_terms(terms)) if terms else Sellmeier()
    if model == "vacuum":
        return Vacuum()
    raise ValueError(f"{prefix}.model: unknown material {model!r}")


def load_material_config(source) -> tuple[MaterialModel, MaterialModel]:
    """Read ``(plane, sphere)`` materials from a key-value config.

    ``source`` is a path or an already parsed dict. Missing sections fall back
    to the copper/diamond defaults.
    """
    cfg = source if isinstance(source, dict) else parse_key_value_config(Path(source).read_text())
    plane = _material_from_keys(cfg, "material.plane", default_plane())
    sphere = _material_from_keys(cfg, "material.sphere", default_sphere())
    return plane, sphere
