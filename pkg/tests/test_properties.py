"""Property-based checks of the library's invariants."""

from decimal import Decimal

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from helpers import cov_matrix, random_model, random_query, regression_oracle
from semconfound import catalog
from semconfound.dsl import DSLError, parse, serialize
from semconfound.effects import EffectEstimate, EffectTriple, indirect_effect, total_effect
from semconfound.estimation import Dataset, fit_equations, standardize
from semconfound.graph import Verdict, classify_bias, d_connected, edge_identified
from semconfound.model import PathModel, Position, RoleAssignment, position_class, topological_order, validate
from semconfound.oracle import implied_covariance, partial_correlation, population_regression, reduced_form
from semconfound.sensitivity import Scenario, correct, explain_away
from semconfound.simulation import generate

seeds = st.integers(0, 2**32 - 1)
fast = settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def model_from(seed, **kw) -> PathModel:
    return random_model(np.random.default_rng(seed), **kw)


# -- model ---------------------------------------------------------------------

@fast
@given(seeds)
def test_topological_order_is_a_stable_linear_extension(seed):
    m = model_from(seed)
    assert validate(m) == []
    order = topological_order(m)
    assert sorted(order) == sorted(m.names)
    assert topological_order(m) == order
    pos = {v: i for i, v in enumerate(order)}
    assert all(pos[e.source] < pos[e.target] for e in m.edges)


@fast
@given(seeds)
def test_position_classes_hold_their_role_variables(seed):
    m = model_from(seed, max_nodes=7)
    order = topological_order(m)
    if len(order) < 3:
        return
    a, mid, y = order[0], order[len(order) // 2], order[-1]
    roles = RoleAssignment(a, y, mid)
    assert position_class(m, roles, a) is Position.EXPOSURE
    assert position_class(m, roles, mid) is Position.MEDIATOR
    assert position_class(m, roles, y) is Position.OUTCOME
    assert all(isinstance(position_class(m, roles, v), Position) for v in m.names)


# -- dsl --------------------------------------------------------------------------

names = st.from_regex(r"[A-Za-z_][A-Za-z0-9_.]{0,6}", fullmatch=True)
reals = st.floats(allow_nan=False, allow_infinity=False, width=64)


@st.composite
def documents(draw):
    vs = draw(st.lists(names, min_size=2, max_size=7, unique=True))
    kinds = [draw(st.sampled_from(["", " latent", " unmeasured"])) for _ in vs]
    lines = [f"var {v}{k}" for v, k in zip(vs, kinds)]
    for i, j in draw(st.sets(st.tuples(st.integers(0, len(vs) - 1), st.integers(0, len(vs) - 1)))):
        if i < j:
            coef = draw(st.none() | reals)
            lines.append(f"edge {vs[i]} -> {vs[j]}" + ("" if coef is None else f" = {coef!r}"))
    for v in vs:
        if draw(st.booleans()):
            lines.append(f"errvar {v} = {draw(st.floats(1e-300, 1e300))!r}")
    draw(st.randoms()).shuffle(lines)
    # roles need measured variables
    measured = [v for v, k in zip(vs, kinds) if not k]
    if len(measured) >= 2 and draw(st.booleans()):
        lines.append(f"role exposure {measured[0]}")
        lines.append(f"role outcome {measured[1]}")
        if len(measured) > 2:
            lines.append(f"role covariate {' '.join(measured[2:])}")
    return "\n".join(lines) + "\n"


@settings(max_examples=300, deadline=None)
@given(documents())
def test_parse_serialize_round_trip(text):
    try:
        doc = parse(text)
    except DSLError:
        return  # e.g. roles naming a latent variable as a covariate
    once = serialize(doc)
    again = parse(once)
    assert again == doc
    assert serialize(again) == once
    for e in doc.model.edges:
        got = again.model.edge(*e.key).coefficient
        assert (got is None and e.coefficient is None) or got.hex() == float(e.coefficient).hex()


@settings(max_examples=500, deadline=None)
@given(st.binary(max_size=200))
def test_parse_never_crashes_on_bytes(data):
    try:
        parse(data)
    except DSLError as exc:
        assert exc.line >= 1 and exc.column >= 1


# -- graph -------------------------------------------------------------------------

@fast
@given(seeds)
def test_witnesses_replay_open(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng)
    x, y, z = random_query(rng, m)
    conn = d_connected(m, x, y, z)
    if conn:
        w = conn.witness
        assert (w.source, w.sink) == (x, y)
        assert all(m.has_edge(s, t) for s, t in w.edges())
        assert w.is_open(m, z)
    else:
        assert conn.witness is None


@fast
@given(seeds)
def test_d_separation_implies_zero_partial_correlation(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng)
    x, y, z = random_query(rng, m)
    r = partial_correlation(implied_covariance(m), x, y, z)
    if not d_connected(m, x, y, z):
        assert abs(r) < 1e-7


@fast
@given(seeds)
def test_single_door_identification_is_exact(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng)
    if not m.edges:
        return
    e = m.edges[int(rng.integers(len(m.edges)))]
    allowed = [v for v in m.names if v not in m.descendants(e.target) and v not in e.key]
    z = [v for v in allowed if rng.random() < 0.5]
    if edge_identified(m, e, z):
        beta = population_regression(implied_covariance(m), e.target, z + [e.source])[e.source]
        assert beta == pytest.approx(e.coefficient, abs=1e-9)


@fast
@given(seeds)
def test_biased_verdicts_carry_witnesses(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng, max_nodes=7, density=0.6)
    order = topological_order(m)
    if len(order) < 4:
        return
    a, mid, y = order[1], order[2], order[-1]
    roles = RoleAssignment(a, y, mid, {order[0]})
    rep = classify_bias(m, roles, with_edges=False)
    for kind in ("total", "direct", "indirect"):
        assert (rep.verdict(kind) is Verdict.BIASED) == (kind in rep.witnesses)


# -- covariance oracle ---------------------------------------------------------------

@fast
@given(seeds)
def test_implied_covariance_is_a_covariance(seed):
    m = model_from(seed)
    s = implied_covariance(m)
    assert np.allclose(s.matrix, s.matrix.T, atol=1e-12, rtol=0)
    np.linalg.cholesky(s.matrix)
    errs = m.all_error_variances()
    assert all(s[v, v] >= errs[v] - 1e-12 for v in m.names)
    np.testing.assert_allclose(s.matrix, cov_matrix(m, s.names), atol=1e-10, rtol=1e-10)


@fast
@given(seeds)
def test_regression_on_true_parents_recovers_coefficients(seed):
    m = model_from(seed)
    s = implied_covariance(m)
    for v in m.names:
        ps = list(m.parents(v))
        if ps:
            got = population_regression(s, v, ps)
            for p in ps:
                assert got[p] == pytest.approx(m.edge(p, v).coefficient, abs=1e-9)


# -- effects -----------------------------------------------------------------------------

@fast
@given(seeds)
def test_total_effect_matches_reduced_form(seed):
    m = model_from(seed)
    names, inv = reduced_form(m)
    for a in m.names:
        for y in m.names:
            if a != y:
                assert total_effect(m, a, y) == pytest.approx(inv[names.index(y), names.index(a)], abs=1e-10)


@fast
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_single_mediator_sign_coherence(alpha, beta, c):
    m = PathModel.build(["A", "M", "Y"], [("A", "M", alpha), ("M", "Y", beta), ("A", "Y", c)])
    ind = indirect_effect(m, "A", "M", "Y")
    assert ind == pytest.approx(alpha * beta, abs=1e-12)
    if ind != 0:
        assert np.sign(ind) == np.sign(alpha) * np.sign(beta)


# -- sensitivity ------------------------------------------------------------------------------

dec = st.decimals(min_value=-10, max_value=10, places=6, allow_nan=False, allow_infinity=False)
halfwidths = st.decimals(min_value=0, max_value=1, places=6)


@st.composite
def triples(draw):
    d, i = draw(dec), draw(dec)
    hd, hi, ht = draw(halfwidths), draw(halfwidths), draw(halfwidths)
    t = d + i
    return EffectTriple(
        EffectEstimate("total", t, t - ht, t + ht),
        EffectEstimate("direct", d, d - hd, d + hd),
        EffectEstimate("indirect", i, i - hi, i + hi),
    )


@settings(max_examples=300, deadline=None)
@given(triples(), dec, st.sampled_from(list(Scenario)))
def test_corrections_are_exact_shifts(t, b, scenario):
    fixed = correct(t, scenario, b)
    assert abs(fixed.total.point - fixed.direct.point - fixed.indirect.point) <= Decimal("1e-12")
    for before, after in zip(t, fixed):
        assert after.width == before.width
    assert correct(fixed, scenario, -b) == t


@settings(max_examples=200, deadline=None)
@given(triples(), st.sampled_from(list(Scenario)), st.sampled_from(["total", "direct", "indirect"]),
       st.decimals(min_value=Decimal("0.01"), max_value=5, places=3))
def test_explain_away_hits_zero(t, scenario, kind, shift):
    from semconfound.sensitivity import SensitivityParams, UnbiasedEffectError

    try:
        r = explain_away(t.get(kind), scenario, kind, [shift])
    except UnbiasedEffectError:
        return
    s, g = r.factorizations[0]
    fixed = correct(t, scenario, SensitivityParams(g, s))
    assert abs(fixed.get(kind).point) <= Decimal("1e-12")


# -- estimation and simulation --------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(seeds)
def test_ols_matches_normal_equations(seed):
    m = model_from(seed, max_nodes=6)
    d = generate(m, 200, seed)
    for v in m.names:
        ps = list(m.parents(v))
        if not ps:
            continue
        fit = fit_equations(d, {v: ps})
        X = np.column_stack([np.ones(d.n)] + [d.column(p) for p in ps])
        beta = np.linalg.solve(X.T @ X, X.T @ d.column(v))
        got = [fit.coefficient(p, v) for p in ps]
        np.testing.assert_allclose(got, beta[1:], atol=1e-9, rtol=1e-8)


def test_fits_converge_to_population_values():
    m = catalog.load_builtin("scenario3").model
    target = population_regression(implied_covariance(m), "Y", ["C", "A", "M"])["A"]
    errs = []
    for n in (1000, 10000, 100000):
        fit = fit_equations(generate(m, n, 12).drop(["U"]), {"Y": ("C", "A", "M")})
        errs.append(abs(fit.coefficient("A", "Y") - target) * np.sqrt(n))
    # scaled errors stay O(1)
    assert max(errs) < 5


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_standardized_intercepts_vanish(seed):
    m = model_from(seed, max_nodes=5)
    d = standardize(generate(m, 300, seed))
    for v in m.names:
        ps = list(m.parents(v))
        if ps:
            eq = fit_equations(d, {v: ps}).equations[v]
            assert abs(eq.intercept) <= 3 * eq.intercept_se + 1e-12


def test_monte_carlo_covariances_agree():
    m = catalog.load_builtin("scenario3").model
    d = generate(m, 20000, 123)
    s = implied_covariance(m)
    sample = np.cov(d.values.T)
    for i, a in enumerate(d.columns):
        for j, b in enumerate(d.columns):
            # Var(s_ab) = (s_aa s_bb + s_ab^2) / (n - 1) for Gaussian data
            se = np.sqrt((s[a, a] * s[b, b] + s[a, b] ** 2) / (d.n - 1))
            assert abs(sample[i, j] - s[a, b]) < 5 * se


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_generation_is_deterministic_and_exclusion_is_post_hoc(seed):
    m = model_from(seed, max_nodes=5)
    a, b = generate(m, 20, seed), generate(m, 20, seed)
    assert a.values.tobytes() == b.values.tobytes()
    gone = m.names[0]
    kept = a.drop([gone])
    assert np.array_equal(kept.values, a.select([c for c in a.columns if c != gone]).values)


def test_regression_oracle_agrees_on_random_models():
    rng = np.random.default_rng(2)
    for _ in range(50):
        m = random_model(rng)
        x, y, z = random_query(rng, m)
        regs = z + [x]
        got = population_regression(implied_covariance(m), y, regs)
        want = regression_oracle(m, y, regs)
        for k in regs:
            assert got[k] == pytest.approx(want[k], abs=1e-9)


def test_dataset_rejects_nonfinite():
    with pytest.raises(ValueError):
        Dataset(("X",), np.array([[np.nan]]))
