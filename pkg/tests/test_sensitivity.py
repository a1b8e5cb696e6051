from decimal import Decimal as D

import pytest

from semconfound import catalog
from semconfound.effects import EffectEstimate, infer_triple
from semconfound.sensitivity import (
    Scenario,
    SensitivityParams,
    SweepVerdict,
    UnbiasedEffectError,
    bias_factor,
    biased_kinds,
    correct,
    correction_signs,
    explain_away,
    implied_params,
    inclusive_range,
    scenario_from_model,
    sweep,
)

MO = Scenario.MEDIATOR_OUTCOME


@pytest.fixture
def ageing():
    # published standardized estimates for the age -> DTI -> g model
    return infer_triple(
        direct=EffectEstimate("direct", "-0.65", "-0.67", "-0.62"),
        indirect=EffectEstimate("indirect", "0.0077", "0.0077", "0.0078"),
    )


def est(e):
    return tuple(str(x.normalize()) if x != 0 else "0" for x in (e.point, e.ci_low, e.ci_high))


def test_bias_factor():
    assert bias_factor(SensitivityParams(-5, "0.13")) == D("-0.65")
    assert bias_factor(SensitivityParams("-2.5", "0.26")) == D("-0.65")
    assert bias_factor(SensitivityParams(0, "123.4")) == 0


def test_sign_table():
    assert correction_signs("exposure-mediator") == {"total": -1, "direct": 0, "indirect": -1}
    assert correction_signs("exposure-outcome") == {"total": -1, "direct": -1, "indirect": 0}
    assert correction_signs(MO) == {"total": 0, "direct": -1, "indirect": 1}
    assert biased_kinds(MO) == ("direct", "indirect")


@pytest.mark.parametrize(
    "gamma, direct, indirect",
    [
        ("-1", ("-0.52", "-0.54", "-0.49"), ("-0.1223", "-0.1223", "-0.1222")),
        ("1", ("-0.78", "-0.8", "-0.75"), ("0.1377", "0.1377", "0.1378")),
        ("-0.65", ("-0.5655", "-0.5855", "-0.5355"), ("-0.0768", "-0.0768", "-0.0767")),
        ("-5", ("0", "-0.02", "0.03"), ("-0.6423", "-0.6423", "-0.6422")),
    ],
)
def test_published_corrections(ageing, gamma, direct, indirect):
    fixed = correct(ageing, MO, SensitivityParams(gamma, "0.13"))
    assert est(fixed.direct) == direct
    assert est(fixed.indirect) == indirect
    assert fixed.total == ageing.total


def test_reversal_fixture_uses_negative_gamma(ageing):
    # a positive 0.3 would give +0.0227; the printed -0.0073 needs gamma = -0.3
    fixed = correct(ageing, MO, SensitivityParams("-0.3", "0.05"))
    assert est(fixed.indirect) == ("-0.0073", "-0.0073", "-0.0072")
    assert est(correct(ageing, MO, SensitivityParams("0.3", "0.05")).indirect)[0] == "0.0227"


def test_zero_bias_is_identity(ageing):
    for s in Scenario:
        assert correct(ageing, s, D(0)) == ageing


def test_other_scenarios(ageing):
    em = correct(ageing, "exposure-mediator", D("0.1"))
    assert em.direct == ageing.direct
    assert em.total.point == ageing.total.point - D("0.1")
    eo = correct(ageing, "exposure-outcome", D("0.1"))
    assert eo.indirect == ageing.indirect
    assert eo.direct.point == D("-0.75")


def test_explain_away():
    r = explain_away(EffectEstimate.exact("direct", "-0.65"), MO, shifts=["0.13", "0.26"])
    assert r.bias == D("-0.65")
    assert [g for _, g in r.factorizations] == [D(-5), D("-2.5")]
    r = explain_away(EffectEstimate.exact("indirect", "0.0077"), MO, shifts=["0.05"])
    assert r.bias == D("-0.0077")
    assert r.factorizations[0][1] == D("-0.154")
    assert explain_away(EffectEstimate.exact("direct", 0), MO).bias == 0
    with pytest.raises(UnbiasedEffectError):
        explain_away(EffectEstimate.exact("total", 1), MO)


def test_inclusive_range():
    assert inclusive_range("-1", "1", "0.5") == [D(x) for x in ("-1", "-0.5", "0", "0.5", "1")]
    assert len(inclusive_range(0, 1, "0.25")) == 5
    assert len(inclusive_range(0, "0.2", "0.1")) == 3
    assert inclusive_range("0.13", "0.13", 1) == [D("0.13")]
    with pytest.raises(ValueError):
        inclusive_range(1, 0, 1)
    with pytest.raises(ValueError):
        inclusive_range(0, 1, 0)


def test_sweep_verdicts(ageing):
    s = sweep(ageing, MO, ("-1", "1", "0.5"), ("0.13", "0.13", "1"))
    assert len(s.points) == 5
    assert s.verdicts["direct"].primary is SweepVerdict.SAME_DIRECTION
    assert s.verdicts["indirect"].primary is SweepVerdict.DIRECTION_REVERSED
    assert s.verdicts["indirect"].reversed and not s.verdicts["indirect"].contains_zero

    s = sweep(ageing, MO, ("-5", "-1", "1"), ("0.13", "0.13", "1"))
    assert s.verdicts["direct"].primary is SweepVerdict.CONTAINS_ZERO

    s = sweep(ageing, MO, (0, 0, 1), ("0", "1", "0.5"))
    assert all(p.triple == ageing for p in s.points)
    assert {v.primary for v in s.verdicts.values()} == {SweepVerdict.SAME_DIRECTION}


def test_sweep_grid_order(ageing):
    s = sweep(ageing, MO, (0, 1, "0.25"), (0, "0.2", "0.1"))
    assert len(s.points) == 15
    assert [(p.gamma, p.shift) for p in s.points[:4]] == [
        (0, 0), (0, D("0.1")), (0, D("0.2")), (D("0.25"), 0)
    ]


def test_scenario_from_model():
    assert scenario_from_model(*_doc("fig3a")) is Scenario.EXPOSURE_MEDIATOR
    assert scenario_from_model(*_doc("fig3b")) is Scenario.EXPOSURE_OUTCOME
    assert scenario_from_model(*_doc("fig3c")) is MO


def _doc(name):
    d = catalog.load_builtin(name)
    return d.model, d.roles


def test_implied_params_reproduce_population_bias():
    # the bias factor from model-implied parameters equals the population bias of the direct effect
    from semconfound.oracle import implied_covariance, population_regression

    doc = catalog.load_builtin("scenario3")
    p = implied_params(doc.model, doc.roles, "direct")
    plim = population_regression(implied_covariance(doc.model), "Y", ["C", "A", "M"])["A"]
    assert float(bias_factor(p)) == pytest.approx(plim - 0.6, abs=1e-12)
    assert "U->Y" in p.definition
