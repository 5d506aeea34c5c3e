"""scikit-learn style wrappers: ``fit`` measures a sampled function, ``transform`` returns its profile."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .core import (GeometryError, ParameterError, SampledFunction, SmoothnessParams,
                   ValidatedParams, make_grid, validate_params)
from .differences import diff_seminorm_profile
from .geometry import Domain, FullTorus, parse_domain
from .harness import evaluate
from .lp import lp_profile
from .morrey import default_ladder
from .oscillation import clubsuit_profile, osc_seminorm_profile


def check_sampled_function(X, domain: Domain | None = None) -> SampledFunction:
    """Accept a :class:`SampledFunction` or a square array on the unit torus.

    A bare array is placed on a periodic grid of side 1; its dimension is the
    array rank.
    """
    if isinstance(X, SampledFunction):
        f = X
    else:
        arr = np.asarray(X)
        if arr.ndim not in (1, 2) or len(set(arr.shape)) != 1:
            raise ParameterError(f"expected a 1d or square 2d array, got shape {arr.shape}")
        if arr.dtype.kind not in "fci":
            raise ParameterError(f"expected numeric samples, got dtype {arr.dtype}")
        f = SampledFunction(make_grid(arr.ndim, arr.shape[0], True), arr)
    if domain is not None:
        if isinstance(domain, FullTorus) and not f.grid.periodic:
            raise GeometryError("the torus needs a periodic grid")
        if getattr(domain, "d", f.grid.d) != f.grid.d:
            raise GeometryError("domain and grid dimensions differ")
    return f


def check_domain(domain, d: int) -> Domain:
    if domain is None:
        return FullTorus(d)
    if isinstance(domain, str):
        return parse_domain(domain, d)
    if isinstance(domain, Domain):
        return domain
    raise ParameterError(f"cannot interpret {domain!r} as a domain")


class _SmoothnessNorm(TransformerMixin, BaseEstimator):
    route = ""

    def __init__(self, s=0.5, u=2.0, p=2.0, q=2.0, v=2.0, N=2, T=1.0, R=1.0, domain=None,
                 base="plain", jmin=0, jmax=None):
        self.s = s
        self.u = u
        self.p = p
        self.q = q
        self.v = v
        self.N = N
        self.T = T
        self.R = R
        self.domain = domain
        self.base = base
        self.jmin = jmin
        self.jmax = jmax

    def _params(self, d: int) -> ValidatedParams:
        return validate_params(SmoothnessParams(s=self.s, u=self.u, p=self.p, q=self.q,
                                                v=self.v, N=self.N, T=self.T, R=self.R, d=d))

    def _setup(self, X):
        f = check_sampled_function(X)
        dom = check_domain(self.domain, f.grid.d)
        f = check_sampled_function(f, dom)
        ladder = default_ladder(f.grid, self.jmin, self.jmax)
        return f, dom, self._params(f.grid.d), ladder

    def fit(self, X, y=None):
        """Measure ``X``; sets ``report_``, ``norm_``, ``base_`` and ``seminorm_``."""
        f, dom, prm, ladder = self._setup(X)
        rep = evaluate(f, dom, prm, self.route, self.base, ladder)
        self.report_ = rep
        self.norm_ = rep.total
        self.base_ = rep.base
        self.seminorm_ = rep.seminorm
        self.window_ok_ = prm.window_ok
        self.params_ = prm
        return self

    def _check_fitted(self):
        if not hasattr(self, "report_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")

    def transform(self, X):
        """Node profile whose Morrey norm is the seminorm part (the full norm for lp and clubsuit)."""
        self._check_fitted()
        f, dom, prm, ladder = self._setup(X)
        return self._profile(f, dom, prm, ladder)

    def score(self, X, y=None):
        return -self.fit(X).norm_

    def _profile(self, f, dom, prm, ladder):  # pragma: no cover - abstract
        raise NotImplementedError


class LittlewoodPaleyNorm(_SmoothnessNorm):
    """Fourier reference norm on the torus."""

    route = "lp"

    def _profile(self, f, dom, prm, ladder):
        return lp_profile(f, prm)


class DifferenceNorm(_SmoothnessNorm):
    """Morrey norm plus the higher-order difference seminorm."""

    route = "diff"

    def _profile(self, f, dom, prm, ladder):
        return diff_seminorm_profile(f, dom, prm, ladder)


class OscillationNorm(_SmoothnessNorm):
    """Morrey norm plus the local oscillation seminorm."""

    route = "osc"

    def _profile(self, f, dom, prm, ladder):
        return osc_seminorm_profile(f, dom, prm, ladder)


class DyadicOscillationNorm(_SmoothnessNorm):
    """Dyadic oscillation square function on the torus (level-0 mass plus scaled residuals)."""

    route = "clubsuit"

    def _profile(self, f, dom, prm, ladder):
        return clubsuit_profile(f, prm)


ESTIMATORS = {
    "lp": LittlewoodPaleyNorm,
    "diff": DifferenceNorm,
    "osc": OscillationNorm,
    "clubsuit": DyadicOscillationNorm,
}

__all__ = [
    "check_sampled_function", "check_domain", "LittlewoodPaleyNorm", "DifferenceNorm",
    "OscillationNorm", "DyadicOscillationNorm", "ESTIMATORS",
]
