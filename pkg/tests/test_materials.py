import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from casimir_scatter.materials import (
    Drude,
    Sellmeier,
    Vacuum,
    default_plane,
    default_sphere,
    load_material_config,
    material_from_dict,
    material_to_dict,
    parse_key_value_config,
    permittivity,
)


def test_drude_closed_form():
    cu = default_plane()
    wp = 2 * math.pi / 136.0
    xi = 0.3 * wp
    expected = 1 + wp**2 / (xi * (xi + 0.0033 * wp))
    assert permittivity(cu, xi) == pytest.approx(expected, rel=1e-14)


def test_drude_diverges_at_zero():
    assert np.isinf(permittivity(default_plane(), 0.0))


def test_sellmeier_static_and_resonance():
    dia = default_sphere()
    assert permittivity(dia, 0.0) == pytest.approx(5.91, rel=1e-15)
    w1 = 2 * math.pi / 106.0
    # at xi = w1 the single term is at half strength
    assert permittivity(dia, w1) == pytest.approx(1 + 4.91 / 2, rel=1e-14)


def test_vacuum_is_one():
    np.testing.assert_array_equal(permittivity(Vacuum(), np.array([0.0, 1.0, 5.0])), 1.0)


def test_negative_frequency_rejected():
    with pytest.raises(ValueError):
        permittivity(default_sphere(), -1e-3)


@pytest.mark.parametrize("bad", [dict(lambda_p_nm=0.0), dict(lambda_p_nm=-1.0), dict(gamma_ratio=-0.1)])
def test_drude_validation(bad):
    with pytest.raises(ValueError):
        Drude(**bad)


def test_sellmeier_validation():
    with pytest.raises(ValueError):
        Sellmeier(())
    with pytest.raises(ValueError):
        Sellmeier(((-1.0, 100.0),))


@given(st.floats(1e-6, 1e3), st.floats(1e-6, 1e3))
def test_eps_real_above_one_and_decreasing(x1, x2):
    lo, hi = sorted((x1, x2))
    for model in (default_plane(), default_sphere()):
        e_lo, e_hi = permittivity(model, lo), permittivity(model, hi)
        assert e_hi >= 1.0
        assert e_lo >= e_hi


def test_vectorized_matches_scalar():
    xi = np.geomspace(1e-4, 10, 7)
    vec = permittivity(default_sphere(), xi)
    assert vec.shape == xi.shape
    for x, v in zip(xi, vec):
        assert permittivity(default_sphere(), x) == v


def test_dict_round_trip():
    for model in (default_plane(), default_sphere(), Vacuum(), Sellmeier(((1.0, 50.0), (2.0, 300.0)))):
        assert material_from_dict(material_to_dict(model)) == model


def test_config_parsing(tmp_path):
    path = tmp_path / "mat.cfg"
    path.write_text(
        "# materials\n"
        "material.plane.model = drude\n"
        "material.plane.lambda_p_nm = 140   # gold-ish\n"
        "material.sphere.model = sellmeier\n"
        "material.sphere.terms = 4.0,100; 0.5,300\n"
    )
    plane, sphere = load_material_config(path)
    assert plane == Drude(140.0, 0.0033)
    assert sphere.terms == ((4.0, 100.0), (0.5, 300.0))


def test_config_defaults_and_errors():
    plane, sphere = load_material_config({})
    assert plane == default_plane() and sphere == default_sphere()
    with pytest.raises(ValueError):
        load_material_config({"material.plane.model": "unobtainium"})
    with pytest.raises(ValueError):
        parse_key_value_config("no equals sign here")
