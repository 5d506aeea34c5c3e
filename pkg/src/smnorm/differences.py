"""Higher-order differences and the difference quasi-norms."""

from __future__ import annotations

import math
import time
from math import comb

import numpy as np

from .core import GeometryError, ParameterError, SampledFunction, ValidatedParams
from .geometry import (Domain, FullTorus, OffsetGather, admissible_steps, lattice_ball,
                       membership, offset_blocks)
from .morrey import RadiusLadder, base_term, default_ladder, morrey_norm_array
from .report import NormReport, grid_meta

LN2 = math.log(2.0)


def _power(a: np.ndarray, v: float) -> np.ndarray:
    """``a**v`` in place for nonnegative ``a``, with cheap paths for ``v`` in {1, 2}."""
    if v == 1:
        return a
    if v == 2:
        return np.square(a, out=a)
    return np.power(a, v, out=a)


def binomial_weights(N: int) -> np.ndarray:
    """Coefficients of ``f(x + k h)`` in the N-th difference, ``k = 0..N``."""
    return np.array([(-1) ** (N - k) * comb(N, k) for k in range(N + 1)], dtype=float)


def _step_offset(grid, h) -> np.ndarray:
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if h.size != grid.d:
        raise GeometryError(f"step must have {grid.d} components")
    rel = h / grid.spacing
    k = np.rint(rel)
    if np.any(np.abs(rel - k) > 1e-9):
        raise GeometryError(f"step {h} is not a grid displacement")
    return k.astype(int)


def _read(f: SampledFunction, index) -> complex:
    grid = f.grid
    idx = np.asarray(index)
    if grid.periodic:
        idx = idx % grid.n
    elif np.any((idx < 0) | (idx >= grid.n)):
        raise GeometryError("difference reads outside the grid")
    return f.values[tuple(idx)]


def delta_n(f: SampledFunction, x, h, N: int):
    """``sum_k (-1)**(N-k) C(N,k) f(x + k h)`` at the node ``x``."""
    if N < 1:
        raise ParameterError("order must be positive")
    x0 = np.asarray(f.grid.index_of(x))
    k = _step_offset(f.grid, h)
    w = binomial_weights(N)
    return sum(w[j] * _read(f, x0 + j * k) for j in range(N + 1))


def segment_inside(domain: Domain, x, h, N: int) -> bool:
    """Whether ``[x, x + N h]`` lies in the domain.

    Convex shapes only need the endpoints; otherwise ``4N + 1`` equispaced
    points on the segment are tested.
    """
    if isinstance(domain, FullTorus):
        return True
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if domain.convex:
        lam = np.array([0.0, float(N)])
    else:
        lam = np.linspace(0.0, float(N), 4 * N + 1)
    return bool(np.all(domain.contains(x[None, :] + lam[:, None] * h[None, :])))


def delta_n_domain(f: SampledFunction, domain: Domain, x, h, N: int):
    if not segment_inside(domain, x, h, N):
        return 0.0
    return delta_n(f, x, h, N)


def diff_local_mean(f: SampledFunction, domain: Domain, x, t: float, N: int, v: float) -> float:
    """``(t**-d * sum_{h in V^N(x,t)} |Delta^N_h f(x)|**v w)**(1/v)`` at one point."""
    grid = f.grid
    steps = admissible_steps(domain, grid, x, t, N)
    if len(steps) == 0:
        return 0.0
    vals = np.array([abs(delta_n(f, x, h, N)) for h in steps.steps])
    if math.isinf(v):
        return float(vals.max())
    return float((t ** -grid.d * np.sum(vals ** v * steps.weights)) ** (1.0 / v))


def difference_profile(f: SampledFunction, domain: Domain, N: int, v: float,
                       radii) -> np.ndarray:
    """Inner local means ``D_t(x)`` for every node and every radius in ``radii``.

    Returns shape ``(len(radii),) + grid.shape``; zero outside the domain and
    wherever no step is admissible.
    """
    grid = f.grid
    radii = np.asarray(radii, dtype=float)
    order = np.argsort(-radii, kind="stable")
    rs = radii[order]
    L, P = len(rs), grid.size
    mask = domain.mask(grid)
    torus = isinstance(domain, FullTorus)
    ks = lattice_ball(grid, rs[0], dedup=False)
    if not grid.periodic:
        ks = ks[np.all(np.abs(ks) * N <= grid.n - 1, axis=1)]
    # number of radii containing each step; nonincreasing along the sorted list
    k2 = (ks ** 2).sum(axis=1).astype(float)
    r2 = (rs / grid.spacing) ** 2
    counts = (k2[:, None] < r2[None, :] * (1 - 1e-9)).sum(axis=1)

    fg = OffsetGather(f.values, grid, 0)
    mg = None if torus else OffsetGather(mask, grid, False)
    w = binomial_weights(N)
    buckets = np.zeros((L, P))
    ells = np.arange(N + 1)
    for c in np.unique(counts):
        if c == 0:
            continue
        sel = ks[counts == c]
        for blk in offset_blocks(len(sel), P * (N + 1)):
            kb = sel[blk]
            delta = np.zeros((len(kb), P), dtype=fg.dtype)
            adm = np.ones((len(kb), P), dtype=bool)
            for ell in ells:
                shifted = ell * kb
                g = fg(shifted)
                g *= w[ell]
                delta += g
                if mg is not None and ell > 0:
                    adm &= mg(shifted)
            mag = np.abs(delta)
            if mg is not None:
                mag *= adm
            if math.isinf(v):
                np.maximum(buckets[c - 1], mag.max(axis=0), out=buckets[c - 1])
            else:
                buckets[c - 1] += _power(mag, v).sum(axis=0)
    # level i collects every bucket b >= i
    if math.isinf(v):
        acc = np.maximum.accumulate(buckets[::-1], axis=0)[::-1]
        prof = acc
    else:
        acc = np.cumsum(buckets[::-1], axis=0)[::-1]
        scale = (rs ** -grid.d * grid.cell_volume)[:, None]
        prof = np.maximum(acc * scale, 0.0) ** (1.0 / v)
    prof = np.where(mask.ravel()[None, :], prof, 0.0)
    out = np.empty_like(prof)
    out[order] = prof
    return out.reshape((L,) + grid.shape)


def time_radii(ladder: RadiusLadder, T: float) -> np.ndarray:
    idx = ladder.upto(T)
    if len(idx) == 0:
        raise ParameterError(
            f"T={T} is below the finest ladder radius {ladder.radii[-1]:.3g}")
    return ladder.radii[idx]


def dyadic_time_sum(profile: np.ndarray, radii: np.ndarray, s: float, q: float) -> np.ndarray:
    """``(sum_j [t_j**-s * profile_j]**q * ln 2)**(1/q)``, or the max over ``j`` for ``q = inf``."""
    scaled = profile * (radii ** -s).reshape((-1,) + (1,) * (profile.ndim - 1))
    if math.isinf(q):
        return scaled.max(axis=0)
    return (LN2 * np.sum(scaled ** q, axis=0)) ** (1.0 / q)


def diff_seminorm_profile(f: SampledFunction, domain: Domain, prm: ValidatedParams,
                          ladder: RadiusLadder | None = None) -> np.ndarray:
    ladder = ladder if ladder is not None else default_ladder(f.grid)
    radii = time_radii(ladder, prm.T)
    prof = difference_profile(f, domain, prm.N, prm.v, radii)
    return dyadic_time_sum(prof, radii, prm.s, prm.q)


def diff_seminorm(f: SampledFunction, domain: Domain, prm: ValidatedParams,
                  ladder: RadiusLadder | None = None) -> float:
    ladder = ladder if ladder is not None else default_ladder(f.grid)
    g = diff_seminorm_profile(f, domain, prm, ladder)
    return morrey_norm_array(g, f.grid, domain.mask(f.grid), prm.p, prm.u, ladder)


def diff_quasinorm(f: SampledFunction, domain: Domain, prm: ValidatedParams,
                   base: str = "plain", ladder: RadiusLadder | None = None) -> NormReport:
    t0 = time.perf_counter()
    ladder = ladder if ladder is not None else default_ladder(f.grid)
    b = base_term(f, domain, prm, base, ladder)
    sn = diff_seminorm(f, domain, prm, ladder)
    return NormReport("diff", b, sn, b + sn, base, prm.as_dict(), grid_meta(f.grid),
                      getattr(domain, "label", ""), time.perf_counter() - t0)


__all__ = [
    "binomial_weights", "delta_n", "delta_n_domain", "segment_inside", "diff_local_mean",
    "difference_profile", "time_radii", "dyadic_time_sum", "diff_seminorm_profile",
    "diff_seminorm", "diff_quasinorm", "membership",
]
