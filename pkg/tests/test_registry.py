import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathcal import (BasisFunction, DataError, DomainError, Factor, ModelSpec, Monomial, Scenario,
                     builtin_models, calibrate, eval_basis, fitted, get_model, recombine, to_alternative)
from pathcal.calibration import design_matrix
from pathcal.registry import ALTERNATIVE_GROUPINGS, from_config, to_config

import support

EXPECTED_N = {
    "ecc33": 10, "ecc33-alt": 4, "sui": 5, "sui-alt": 3, "sui-indoor": 5, "ufpa": 4, "ufpa-alt": 3,
    "ericsson": 6, "ericsson-alt": 3, "lee": 4, "lee-alt": 3, "winner2": 3, "winner2-alt": 3,
    "itur": 4, "itur-alt": 3,
}

MODELS = builtin_models()
NOMINAL = [m for m in MODELS if m.variant == "nominal"]
ALTERNATIVE = [m for m in MODELS if m.variant == "alternative"]


def test_builtin_names_and_sizes():
    assert {m.name: m.n for m in MODELS} == EXPECTED_N


def test_ecc33_leading_constant():
    ecc = get_model("ecc33")
    assert ecc.n == 10
    assert ecc.basis[0].monomials == (Monomial(92.4),)


def test_indoor_sui_constants():
    sui = get_model("sui-indoor")
    assert sui.basis[0].monomials == (Monomial(100.7412),)
    assert sui.basis[1].monomials == (Monomial(129.8875, (Factor("log10_d", 1, 100, unit="m"),)),)


def test_lee_alternative_basis():
    lee = get_model("lee-alt")
    km, mhz = "km", "MHz"
    assert lee.n == 3
    assert lee.basis[0].monomials == (Monomial(1.0),)
    assert lee.basis[1].monomials == (Monomial(123), Monomial(30.5, (Factor("log10_d", 1, 1.6, unit=km),)))
    assert lee.basis[2].monomials == (Monomial(30, (Factor("log10_f", 1, 900, unit=mhz),)), Monomial(-3.001))
    assert [b.ramp_slope for b in lee.basis] == [0.0, 0.0, 2.85]


@pytest.mark.parametrize("name, slopes", [
    ("ecc33-alt", [0.0, 0.09, 0.012, 0.031]),
    ("sui-alt", [0.0, 5.22, 0.95]),
    ("ufpa-alt", [0.0, 0.58, 0.0]),
    ("ericsson-alt", [0.0, 0.0, 0.58]),
    ("lee-alt", [0.0, 0.0, 2.85]),
    ("winner2-alt", [0.0, 0.0, 0.065]),
    ("itur-alt", [0.0, 0.0, 0.095]),
])
def test_ramp_attachment(name, slopes):
    assert [b.ramp_slope for b in get_model(name).basis] == slopes


def test_eval_basis_examples(scenario):
    assert eval_basis(get_model("ecc33").basis[0], 1234.0, scenario) == 92.4
    # d = 1 km in the model's own unit
    assert eval_basis(get_model("ecc33").basis[1], 1000.0, scenario) == 0.0
    ramp = BasisFunction("ramp", (), 0.09)
    assert eval_basis(ramp, 500.0, scenario, index=3) == pytest.approx(0.18, abs=1e-15)
    assert eval_basis(ramp, 500.0, scenario) == 0.0


def test_eval_basis_domain(scenario):
    with pytest.raises(DomainError):
        eval_basis(get_model("ecc33").basis[1], 0.0, scenario)
    with pytest.raises(DomainError):
        eval_basis(get_model("ecc33").basis[1], -5.0, scenario)
    with pytest.raises(ValueError):
        eval_basis(get_model("ecc33").basis[1], 5.0, scenario, index=0)


def test_unit_conversion(scenario):
    lee = get_model("lee")
    # log10(d[km] / 1.6) vanishes at 1600 m; log10(f[MHz]/900) at 900 MHz
    assert eval_basis(lee.basis[1], 1600.0, scenario) == 0.0
    assert eval_basis(lee.basis[2], 100.0, Scenario(900.0, 30, 1.5)) == 0.0
    # 30 / f[GHz] at 1800 MHz
    ufpa = get_model("ufpa")
    s = Scenario(1800.0, 6.2, 6.2)
    assert eval_basis(ufpa.basis[1], 100.0, s) == pytest.approx(-2.4 * 2 * 30 / 1.8, rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(
    model=st.sampled_from(MODELS),
    d=st.floats(1.0, 1e5),
    f=st.floats(100, 60000),
)
def test_index_one_equals_no_index(model, d, f):
    s = Scenario(f, 30.0, 1.5)
    for b in model.basis:
        assert eval_basis(b, d, s) == eval_basis(b, d, s, index=1)


def test_scenario_validation():
    with pytest.raises(DataError):
        Scenario(0.0, 30, 1.5)
    with pytest.raises(DataError):
        Scenario(1800, -1, 1.5)
    with pytest.raises(DataError):
        Scenario(1800, 30, float("nan"))


def test_factor_and_model_validation():
    with pytest.raises(DataError):
        Factor("log10_x")
    with pytest.raises(DataError):
        Factor("log10_d", power=1.5)
    with pytest.raises(DataError):
        Factor("log10_d", reference=0.0)
    with pytest.raises(DataError):
        Factor("log10_f", unit="km")
    one = BasisFunction("a", (Monomial(1.0),))
    with pytest.raises(DataError):
        ModelSpec("dup", "nominal", (one, one))
    with pytest.raises(DataError):
        ModelSpec("empty", "nominal", ())
    with pytest.raises(DataError):
        ModelSpec("alt", "alternative", (BasisFunction("a", (Monomial(2.0),)),))
    with pytest.raises(DataError):
        ModelSpec("x", "other", (one,))


def test_to_alternative_sui_builtin_grouping():
    sui = get_model("sui")
    grouping, ramps = ALTERNATIVE_GROUPINGS["sui"]
    alt = to_alternative(sui, grouping, ramps)
    assert alt.variant == "alternative"
    assert alt.basis[0].monomials == (Monomial(1.0),)
    second = alt.basis[1].monomials
    assert second[0] == Monomial(19.7412)
    assert second[1] == sui.basis[1].monomials[0]
    assert alt.basis[1].ramp_slope == 5.22
    assert alt == get_model("sui-alt")


def test_to_alternative_identity(log_model):
    alt = to_alternative(log_model, [[0], [1]], [0.0, 0.0])
    assert alt.basis == log_model.basis


def test_to_alternative_extracts_one_db():
    for name, literal in [("ecc33", 91.4), ("sui", 19.7412), ("ericsson", 35.2), ("lee", 123),
                          ("winner2", 45.8), ("itur", 5.0)]:
        assert get_model(f"{name}-alt").basis[1].monomials[0] == Monomial(literal)
    # UFPA's leading constant 1 is used up entirely
    ufpa_alt = get_model("ufpa-alt")
    assert all(not m.is_constant for m in ufpa_alt.basis[1].monomials)


def test_to_alternative_errors(log_model):
    sui = get_model("sui")
    with pytest.raises(ValueError, match="empty"):
        to_alternative(sui, [[0, 1, 2, 3, 4], []], [0, 0])
    with pytest.raises(ValueError, match="partition"):
        to_alternative(sui, [[0, 1], [1, 2, 3, 4]], [0, 0])
    with pytest.raises(ValueError, match="partition"):
        to_alternative(sui, [[0, 1], [2, 3]], [0, 0])
    with pytest.raises(ValueError, match="ramp"):
        to_alternative(sui, [[0, 1, 2, 3, 4]], [0, 0])
    with pytest.raises(ValueError, match="nominal"):
        to_alternative(get_model("sui-alt"), [[0], [1], [2]], [0, 0, 0])
    no_const = ModelSpec("nc", "nominal", (log_model.basis[1],))
    with pytest.raises(ValueError, match="constant"):
        to_alternative(no_const, [[0]], [0.0])


@pytest.mark.parametrize("name", sorted(ALTERNATIVE_GROUPINGS))
def test_zero_ramp_alternative_spans_nominal(name):
    nominal = get_model(name)
    grouping, _ = ALTERNATIVE_GROUPINGS[name]
    alt = to_alternative(nominal, grouping, [0.0] * len(grouping))
    for seed in range(5):
        data = support.random_dataset(nominal, seed)
        p_nom = fitted(nominal, calibrate(nominal, data, "svd"), data)
        p_alt = fitted(alt, calibrate(alt, data, "svd"), data)
        assert np.max(np.abs(p_nom - p_alt)) <= 1e-9


# rank of each nominal model at a fixed scenario: f/h-only terms are constant columns
# and the log-d terms are proportional, so only {1, log d, (log d)^2} survive for ECC33
NOMINAL_RANK = {"ecc33": 3, "sui": 2, "sui-indoor": 2, "ufpa": 2, "ericsson": 2, "lee": 2, "winner2": 2,
                "itur": 2}


@pytest.mark.parametrize("model", NOMINAL, ids=lambda m: m.name)
def test_nominal_design_rank_at_fixed_scenario(model):
    data = support.random_dataset(model, 3, m=30)
    assert np.linalg.matrix_rank(design_matrix(model, data).entries) == NOMINAL_RANK[model.name]


@pytest.mark.parametrize("model", ALTERNATIVE, ids=lambda m: m.name)
def test_alternative_design_full_rank(model):
    data = support.random_dataset(model, 3, m=30)
    assert np.linalg.matrix_rank(design_matrix(model, data).entries) == model.n


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
def test_config_round_trip(model):
    cfg = json.loads(json.dumps(to_config(model)))
    assert from_config(cfg) == model


def test_config_errors():
    with pytest.raises(DataError, match="basis"):
        from_config({"name": "x"})
    with pytest.raises(DataError):
        from_config({"name": "x", "basis": [{"label": "a", "monomials": [{"coefficient": 1,
                                                                           "factors": [{"primitive": "q"}]}]}]})


def test_get_model_resolution():
    assert get_model("LEE-ALT").name == "lee-alt"
    assert get_model("itur-").name == "itur-alt"
    with pytest.raises(DataError, match="sui, sui-alt, sui-indoor"):
        get_model("su")
    with pytest.raises(DataError, match="unknown"):
        get_model("hata")


def test_recombine_design(scenario):
    ecc = get_model("ecc33-alt")
    data = support.random_dataset(ecc, 11, m=12)
    r = support.random_invertible(np.random.default_rng(0), ecc.n)
    d0 = design_matrix(ecc, data).entries
    d1 = design_matrix(recombine(ecc, r), data).entries
    np.testing.assert_allclose(d1, d0 @ r, rtol=1e-12, atol=1e-12 * np.abs(d0).max())
    with pytest.raises(ValueError):
        recombine(ecc, np.eye(3))
