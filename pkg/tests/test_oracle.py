import numpy as np
import pytest

from helpers import cov_matrix, pcor_oracle, regression_oracle
from semconfound import catalog
from semconfound.model import PathModel
from semconfound.oracle import (
    SingularCovarianceError,
    asymptotic_edge_bias,
    implied_covariance,
    partial_correlation,
    population_regression,
)

S3 = catalog.load_builtin("scenario3").model


def test_edgeless_identity():
    m = PathModel.build(["X", "Y", "Z"])
    assert np.array_equal(implied_covariance(m).matrix, np.eye(3))


def test_scenario3_covariances():
    s = implied_covariance(S3)
    # Var(A) = .36 + 1; Cov(A, M) = .6 Cov(A, C) + .6 Var(A); Var(M) by expansion
    assert s["A", "A"] == pytest.approx(1.36, abs=1e-12)
    assert s["A", "M"] == pytest.approx(1.176, abs=1e-12)
    assert s["M", "M"] == pytest.approx(2.6416, abs=1e-12)
    np.testing.assert_allclose(s.matrix, cov_matrix(S3, S3.names), atol=1e-12)


def test_single_edge():
    c = 0.7
    s = implied_covariance(PathModel.build(["X", "Y"], [("X", "Y", c)]))
    assert s["Y", "Y"] == pytest.approx(c * c + 1)
    assert s["X", "Y"] == pytest.approx(c)


def _closed_form_y_on_cam():
    # 0.6 E[U | C, A, M] = (0.36 / 1.36)(M - 0.6C - 0.6A), substituted into Y's equation
    k = 0.36 / 1.36
    return {"C": -0.6 * k, "A": 0.6 - 0.6 * k, "M": 0.6 + k}


def test_population_regression_scenario3():
    s = implied_covariance(S3)
    got = population_regression(s, "Y", ["C", "A", "M"])
    want = _closed_form_y_on_cam()
    for k in want:
        assert got[k] == pytest.approx(want[k], abs=1e-12)
    assert [round(got[k], 6) for k in ("C", "A", "M")] == [-0.158824, 0.441176, 0.864706]
    two = population_regression(s, "Y", ["A", "M"])
    assert two == pytest.approx(regression_oracle(S3, "Y", ["A", "M"]), abs=1e-12)
    # the six-decimal figures are truncated, not rounded
    assert two["A"] == pytest.approx(0.408399, abs=1e-6)
    assert two["M"] == pytest.approx(0.821578, abs=1e-6)


def test_correct_specification_recovers_truth():
    m = PathModel.build(["X", "Z", "Y"], [("X", "Z", 0.4), ("X", "Y", -0.3), ("Z", "Y", 0.8)])
    got = population_regression(implied_covariance(m), "Y", ["X", "Z"])
    assert got == pytest.approx({"X": -0.3, "Z": 0.8}, abs=1e-12)


def test_edge_bias_scenario3():
    out = asymptotic_edge_bias(S3, {"Y": ("C", "A", "M"), "M": ("C", "A")})
    want = regression_oracle(S3, "Y", ["C", "A", "M"])
    assert out[("C", "Y")].bias == pytest.approx(want["C"] - 0.0, abs=1e-12)
    assert out[("A", "Y")].bias == pytest.approx(want["A"] - 0.6, abs=1e-12)
    assert out[("M", "Y")].bias == pytest.approx(want["M"] - 0.6, abs=1e-12)
    assert [round(out[(k, "Y")].bias, 6) for k in "CAM"] == [-0.158824, -0.158824, 0.264706]
    assert abs(out[("C", "M")].bias) < 1e-12 and abs(out[("A", "M")].bias) < 1e-12


def test_edge_bias_refuses_unmeasured_regressors():
    with pytest.raises(ValueError):
        asymptotic_edge_bias(S3, {"Y": ("U", "A")})


def test_asymptotic_edge_bias_unconfounded():
    m = PathModel.build(["X", "Z", "Y"], [("X", "Z", 0.4), ("X", "Y", -0.3), ("Z", "Y", 0.8)])
    out = asymptotic_edge_bias(m, {"Y": ("X", "Z"), "Z": ("X",)})
    assert all(abs(b.bias) < 1e-12 for b in out.values())


def test_partial_correlations():
    chain = PathModel.build(["X", "Z", "Y"], [("X", "Z", 0.6), ("Z", "Y", 0.6)])
    assert abs(partial_correlation(implied_covariance(chain), "X", "Y", ["Z"])) < 1e-12
    cut = S3.without_edges([("A", "Y")])
    r = partial_correlation(implied_covariance(S3), "A", "Y", ["C", "M"])
    assert abs(r) > 1e-3
    assert partial_correlation(implied_covariance(cut), "A", "Y", ["C", "M"]) == pytest.approx(
        pcor_oracle(cut, "A", "Y", ["C", "M"]), abs=1e-12
    )
    assert partial_correlation(implied_covariance(PathModel.build(["X", "Y"])), "X", "Y") == 0


def test_singular_regressors():
    m = PathModel.build(["X", "Z", "Y"], [("X", "Z", 1.0), ("X", "Y", 1.0)], {"Z": 1e-30})
    with pytest.raises(SingularCovarianceError):
        population_regression(implied_covariance(m), "Y", ["X", "Z"])
