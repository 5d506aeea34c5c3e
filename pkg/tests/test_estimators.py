import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from smnorm import (FullTorus, GeometryError, Interval, ParameterError, grid_for_domain,
                    make_grid, params, parse_corpus_spec, sample)
from smnorm.estimators import (ESTIMATORS, DifferenceNorm, DyadicOscillationNorm,
                               LittlewoodPaleyNorm, OscillationNorm)
from smnorm.harness import evaluate


def _f(n=128, spec="random_smooth seed=2 cutoff=5"):
    return sample(parse_corpus_spec(spec), make_grid(1, n, True))


def test_params_roundtrip():
    est = OscillationNorm(s=0.6, N=3, base="avg")
    assert est.get_params()["N"] == 3
    est.set_params(v=math.inf)
    c = clone(est)
    assert c.get_params() == est.get_params()
    assert set(ESTIMATORS) == {"lp", "diff", "osc", "clubsuit"}


@pytest.mark.parametrize("route", ["lp", "diff", "osc", "clubsuit"])
def test_fit_matches_functional_api(route):
    f = _f()
    est = ESTIMATORS[route](s=0.7, u=4, p=2, N=2).fit(f)
    rep = evaluate(f, FullTorus(1), params(s=0.7, u=4, p=2, N=2), route)
    assert est.norm_ == rep.total
    assert est.base_ + est.seminorm_ == pytest.approx(est.norm_)
    assert est.window_ok_ and est.params_.tau == 1
    assert est.score(f) == -est.norm_
    prof = est.transform(f)
    assert prof.shape == (128,) and np.all(prof >= 0)


def test_array_input_and_domain_string():
    arr = np.cos(2 * np.pi * np.arange(64) / 64)
    a = LittlewoodPaleyNorm().fit(arr).norm_
    b = LittlewoodPaleyNorm().fit(_f(64, "trig_mode k=1")).norm_
    assert a == pytest.approx(b, rel=1e-14)
    g = grid_for_domain(Interval(0, 1), 64)
    f = sample(parse_corpus_spec("trig_mode k=1"), g)
    est = DifferenceNorm(domain="interval:0,1", base="avg").fit(f)
    assert est.report_.domain.startswith("interval")
    assert est.transform(f).shape == (64,)


def test_errors():
    with pytest.raises(NotFittedError):
        OscillationNorm().transform(_f())
    with pytest.raises(ParameterError):
        OscillationNorm().fit(np.ones((4, 8)))
    with pytest.raises(ParameterError):
        OscillationNorm().fit(np.array(["a"] * 16))
    with pytest.raises(ParameterError):
        OscillationNorm(u=1.0).fit(_f())
    g = grid_for_domain(Interval(0, 1), 64)
    with pytest.raises(GeometryError):
        DyadicOscillationNorm().fit(sample(parse_corpus_spec("trig_mode k=1"), g))
    with pytest.raises(ParameterError):
        OscillationNorm(domain=3.5).fit(_f())
