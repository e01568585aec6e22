import dataclasses
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from logheston import simulate
from logheston.errors import InputError, PreconditionError
from logheston.simulate import EmpiricalInnovations, NormalInnovations, SvModelParams

from conftest import FITTED_VG, load_schema

jsonschema = pytest.importorskip("jsonschema")

FITTED = SvModelParams(0.346, 0.882, 3.67, -0.13, 0.24, FITTED_VG)


def _normal_model(**kw):
    base = dict(alpha=0.346, beta=0.882, theta=3.67, mu=-0.13, sigma=0.24, w_dist=NormalInnovations(0.148))
    base.update(kw)
    return SvModelParams(**base)


def test_reproducible_bit_for_bit():
    a = simulate.simulate_path(FITTED, 5000, 11)
    b = simulate.simulate_path(FITTED, 5000, 11)
    assert a.V.tobytes() == b.V.tobytes() and a.Q.tobytes() == b.Q.tobytes()
    c = simulate.simulate_path(FITTED, 5000, 12)
    assert a.V.tobytes() != c.V.tobytes()


def test_spawned_child_matches_standalone():
    child = np.random.SeedSequence(5).spawn(3)[2]
    a = simulate.simulate_path(FITTED, 1000, child)
    b = simulate.simulate_path(FITTED, 1000, np.random.SeedSequence(5, spawn_key=(2,)))
    assert a.Q.tobytes() == b.Q.tobytes()
    assert a.seed == {"entropy": 5, "spawn_key": [2]}


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_path_identities(seed):
    m = dataclasses.replace(FITTED, copula_rho=-0.45)
    p = simulate.simulate_path(m, 2000, seed)
    assert np.all(p.V > 0)
    # Q is recomputed bit-for-bit from the stored components
    assert (m.theta + p.V * (m.mu + p.Z)).tobytes() == p.Q.tobytes()
    np.testing.assert_allclose((p.Q - m.theta) / p.V - m.mu, p.Z, rtol=0, atol=1e-12 * np.max(np.abs(p.Q)))


def test_log_volatility_recursion():
    p = simulate.simulate_path(FITTED, 300, 3)
    lv = np.log(p.V)
    prev = np.concatenate([[FITTED.log_v0], lv[:-1]])
    np.testing.assert_allclose(lv, FITTED.alpha + FITTED.beta * prev + p.W, rtol=0, atol=1e-12)


def test_chunked_path_continuous(monkeypatch):
    monkeypatch.setattr(simulate, "CHUNK", 64)
    p = simulate.simulate_path(_normal_model(), 500, 8)
    lv = np.log(p.V)
    np.testing.assert_allclose(lv[1:], 0.346 + 0.882 * lv[:-1] + p.W[1:], rtol=0, atol=1e-12)


def test_stationary_log_moments():
    p = simulate.simulate_path(FITTED, 200_000, 4)
    lv = np.log(p.V[FITTED.default_burnin():])
    mean_w, var_w = FITTED_VG.a + FITTED_VG.c, FITTED_VG.b**2 + FITTED_VG.a**2 * FITTED_VG.nu
    mean_th = (FITTED.alpha + mean_w) / (1 - FITTED.beta)
    var_th = var_w / (1 - FITTED.beta**2)
    se = simulate.batch_means_stderr(lv)
    assert abs(lv.mean() - mean_th) < 4 * se
    assert lv.var() == pytest.approx(var_th, rel=0.05)


def test_moment_zero_and_domain():
    rep = simulate.stationary_moment_mc(FITTED, 0.0, n=10_000)
    assert rep.estimate == 1.0 and rep.mc_stderr == 0.0
    with pytest.raises(PreconditionError, match="MGF domain"):
        simulate.stationary_moment_mc(FITTED, 20.0)
    with pytest.raises(PreconditionError):
        simulate.stationary_moment_mc(FITTED, -20.0)


def test_moment_matches_lognormal_closed_form():
    m = _normal_model()
    rep = simulate.stationary_moment_mc(m, 2.0, n=200_000, reps=4, seed=1)
    mu_l = m.alpha / (1 - m.beta)
    var_l = 0.148**2 / (1 - m.beta**2)
    exact = math.exp(2 * mu_l + 2 * var_l)
    assert abs(rep.estimate - exact) < 4 * rep.mc_stderr
    assert rep.verdicts["stabilized"]


def test_lln_clt_degenerate():
    m = _normal_model(theta=0.0, mu=0.0, sigma=0.0)
    rep = simulate.lln_clt_experiment(m, T=(16, 64), reps=200, seed=0)
    assert rep.estimate == 0.0
    assert rep.verdicts["degenerate"] and rep.verdicts["clt_pass"] is None


@pytest.mark.slow
def test_lln_clt_gaussian_passes():
    rep = simulate.lln_clt_experiment(_normal_model(), reps=1000, seed=3)
    assert rep.verdicts["lln_pass"] and rep.verdicts["clt_pass"]


def test_lln_clt_requires_replicates():
    with pytest.raises(InputError):
        simulate.lln_clt_experiment(FITTED, reps=199)


def test_tail_no_pareto_for_light_model():
    m = _normal_model(w_dist=NormalInnovations(0.01), sigma=0.01)
    rep = simulate.tail_index_experiment(m, n=10**6, seed=2)
    assert rep.verdicts["note"] == "no Pareto tail detected"
    assert rep.verdicts["within_25pct"] is None


def test_tail_requires_long_path():
    with pytest.raises(InputError):
        simulate.tail_index_experiment(FITTED, n=999_999)


def test_copula_correlation_monotone_and_calibrated():
    xi = []
    for rho in (-0.8, -0.4, 0.0, 0.4, 0.8):
        p = simulate.simulate_path(dataclasses.replace(FITTED, copula_rho=rho), 100_000, 0)
        xi.append(np.corrcoef(p.Z, p.W)[0, 1])
    assert np.all(np.diff(xi) > 0)
    rho = simulate.calibrate_copula(FITTED, -0.44, seed=1)
    p = simulate.simulate_path(dataclasses.replace(FITTED, copula_rho=rho), 400_000, 9)
    assert np.corrcoef(p.Z, p.W)[0, 1] == pytest.approx(-0.44, abs=0.01)
    with pytest.raises(PreconditionError):
        simulate.calibrate_copula(_normal_model(), 1.5)


def test_copula_keeps_marginal():
    p = simulate.simulate_path(dataclasses.replace(FITTED, copula_rho=-0.5), 50_000, 6)
    from logheston.vargamma import vg_cdf

    assert sps.kstest(p.W, lambda x: vg_cdf(FITTED_VG, x)).pvalue > 0.001
    assert sps.kstest(p.Z / FITTED.sigma, "norm").pvalue > 0.001


def test_empirical_pool_resampling():
    pool = np.random.default_rng(0).standard_t(5, 461) * 0.1
    m = _normal_model(w_dist=EmpiricalInnovations(tuple(pool)))
    p = simulate.simulate_path(m, 20_000, 1)
    assert set(np.unique(p.W)) <= set(pool)
    assert sps.ks_2samp(p.W, pool).pvalue > 0.001
    lo, hi = simulate.mgf_domain(m.w_dist)
    assert lo < 0 < hi
    with pytest.raises(InputError):
        EmpiricalInnovations((1.0, 2.0))


def test_parameter_validation():
    for kw in ({"beta": 1.0}, {"beta": 0.0}, {"sigma": -0.1}, {"copula_rho": 1.0}, {"v0": 0.0}):
        with pytest.raises(InputError):
            _normal_model(**kw)
    with pytest.raises(InputError):
        NormalInnovations(-1.0)


@pytest.mark.parametrize("model", [FITTED, dataclasses.replace(FITTED, copula_rho=-0.45, v0=20.0),
                                   _normal_model(w_dist=EmpiricalInnovations((0.1, -0.2, 0.05, 0.3)))])
def test_model_json_roundtrip(model):
    doc = json.loads(json.dumps(model.to_dict()))
    jsonschema.validate(doc, load_schema("model"))
    assert SvModelParams.from_dict(doc) == model


def test_model_from_dict_errors():
    doc = FITTED.to_dict()
    doc["w_dist"] = {"kind": "stable"}
    with pytest.raises(InputError):
        SvModelParams.from_dict(doc)
    with pytest.raises(InputError):
        SvModelParams.from_dict({"alpha": 1.0})


def test_mc_report_schema():
    schema = load_schema("mc_report")
    m = _normal_model()
    reports = [simulate.stationary_moment_mc(m, 1.0, n=20_000, reps=2),
               simulate.lln_clt_experiment(m, T=(16, 64), reps=200),
               simulate.tail_index_experiment(m, n=10**6)]
    for rep in reports:
        jsonschema.validate(json.loads(rep.to_json()), schema)
