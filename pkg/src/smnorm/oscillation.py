"""Local polynomial projections, oscillations and the oscillation quasi-norms.

Polynomials live in ball-local coordinates ``z = (y - x) / t`` and are ordered
graded-lexicographically, so ``1, z`` in 1d and ``1, z1, z2, z1**2, z1 z2, z2**2``
in 2d.  The inner product on a ball is ``<f, g> = t**-d * sum f conj(g) w``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import GeometryError, ParameterError, SampledFunction, ValidatedParams
from .differences import _power, dyadic_time_sum, time_radii
from .geometry import (Domain, FullTorus, OffsetGather, _periodic_delta, ball_quadrature,
                       lattice_ball, offset_blocks)
from .morrey import RadiusLadder, base_term, default_ladder, local_average, morrey_norm_array
from .report import NormReport, grid_meta

# a new monomial whose component orthogonal to the earlier ones is shorter
# than RANK_TOL times its own length counts as dependent
RANK_TOL = 1e-6
ORTHO_TOL = 1e-8


class DegenerateBall(ArithmeticError):
    """Too few (or collinear) quadrature nodes for the requested order."""

    def __init__(self, rank: int, needed: int):
        super().__init__(f"ball supports rank {rank}, order needs {needed}")
        self.rank = rank
        self.needed = needed


@lru_cache(maxsize=None)
def monomial_exponents(d: int, N: int) -> tuple[tuple[int, ...], ...]:
    """Exponents ``alpha`` with ``|alpha| < N`` in graded lexicographic order."""
    out = []
    for deg in range(N):
        if d == 1:
            out.append((deg,))
        else:
            out.extend((deg - j, j) for j in range(deg + 1))
    return tuple(out)


def basis_size(d: int, N: int) -> int:
    return math.comb(N - 1 + d, d)


def order_for_rank(d: int, N: int, rank: int) -> int:
    """Largest order ``<= N`` whose polynomial space fits in ``rank`` dimensions."""
    n = N
    while n > 0 and basis_size(d, n) > rank:
        n -= 1
    return n


def monomials(z: np.ndarray, exps) -> np.ndarray:
    """Monomial matrix ``(len(z), len(exps))`` at local coordinates ``z`` of shape ``(m, d)``."""
    z = np.asarray(z, dtype=float).reshape(len(z), -1)
    cols = [np.prod(z ** np.asarray(a)[None, :], axis=1) for a in exps]
    return np.stack(cols, axis=1) if cols else np.zeros((len(z), 0))


def _local_coords(grid, x, idx: np.ndarray, t: float) -> np.ndarray:
    pts = np.asarray(grid.origin) + idx * grid.spacing if len(idx) else np.zeros((0, grid.d))
    return _periodic_delta(grid, pts - np.asarray(x, dtype=float)) / t


# ---------------------------------------------------------------------------
# single-ball path: Gram-Schmidt on the quadrature nodes


@dataclass(frozen=True)
class LocalPolyBasis:
    """Orthonormal polynomial basis on one discrete ball.

    ``coef[:, i]`` holds the monomial coefficients of the i-th basis element;
    ``values`` are the basis elements at the ball nodes.
    """

    x: tuple[float, ...]
    t: float
    N: int
    exponents: tuple[tuple[int, ...], ...]
    coef: np.ndarray
    nodes: np.ndarray          # (m, d) grid indices
    local: np.ndarray          # (m, d) ball-local coordinates
    weights: np.ndarray
    values: np.ndarray         # (m, |I|)
    residual: float
    sup_norms: np.ndarray

    @property
    def size(self) -> int:
        return len(self.exponents)

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    @property
    def pointwise_constant(self) -> float:
        """``c1 = sum_i max |p_i|**2``; bounds ``|Pi f(y)| <= c1 * t**-d * sum |f| w``."""
        return float(np.sum(self.sup_norms ** 2))

    @property
    def d(self) -> int:
        return self.nodes.shape[1]

    def inner(self, a: np.ndarray, b: np.ndarray):
        return self.t ** -self.d * np.sum(a * np.conj(b) * self.weights)

    def evaluate(self, y) -> np.ndarray:
        """Basis elements at arbitrary points ``y`` (absolute coordinates, no wrapping)."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        z = (y - np.asarray(self.x)) / self.t
        return monomials(z, self.exponents) @ self.coef


def build_local_basis(domain: Domain, grid, x, t: float, N: int) -> LocalPolyBasis:
    """Modified Gram-Schmidt (two passes) over the weighted monomials of the ball.

    Raises :class:`DegenerateBall` carrying the rank reached before the first
    dependent monomial.
    """
    if N < 1:
        raise ParameterError("order must be positive")
    if not t > 0:
        raise ParameterError("radius must be positive")
    x = tuple(np.atleast_1d(np.asarray(x, dtype=float)).tolist())
    quad = ball_quadrature(domain, grid, x, t)
    exps = monomial_exponents(grid.d, N)
    k = len(exps)
    if len(quad) == 0:
        raise DegenerateBall(0, k)
    z = _local_coords(grid, x, quad.indices, t)
    V = monomials(z, exps)
    sw = np.sqrt(t ** -grid.d * quad.weights)
    A = V * sw[:, None]
    Q = np.zeros_like(A)
    R = np.zeros((k, k))
    for i in range(k):
        a = A[:, i].copy()
        norm0 = np.linalg.norm(a)
        for _ in range(2):
            for j in range(i):
                c = Q[:, j] @ a
                R[j, i] += c
                a -= c * Q[:, j]
        nrm = np.linalg.norm(a)
        if norm0 == 0 or nrm < RANK_TOL * norm0:
            raise DegenerateBall(i, k)
        R[i, i] = nrm
        Q[:, i] = a / nrm
    coef = np.linalg.solve(R, np.eye(k)) if k else R
    P = V @ coef
    gram = (P * (t ** -grid.d * quad.weights)[:, None]).T @ P
    resid = float(np.max(np.abs(gram - np.eye(k))))
    if resid > ORTHO_TOL:
        raise DegenerateBall(k - 1, k)
    return LocalPolyBasis(x, float(t), int(N), exps, coef, quad.indices, z, quad.weights,
                          P, resid, np.max(np.abs(P), axis=0))


@dataclass(frozen=True)
class LocalPolynomial:
    """``sum_i coeffs[i] * p_i`` for an orthonormal local basis."""

    basis: LocalPolyBasis
    coeffs: np.ndarray

    @property
    def node_values(self) -> np.ndarray:
        return self.basis.values @ self.coeffs

    @property
    def monomial_coeffs(self) -> np.ndarray:
        """Coefficients in the ball-local monomials ``((y - x) / t)**alpha``."""
        return self.basis.coef @ self.coeffs

    def __call__(self, y) -> np.ndarray:
        return self.basis.evaluate(y) @ self.coeffs

    def __sub__(self, other: "LocalPolynomial") -> "LocalPolynomial":
        return LocalPolynomial(self.basis, self.coeffs - other.coeffs)


def _ball_values(f, basis: LocalPolyBasis) -> np.ndarray:
    if isinstance(f, LocalPolynomial):
        return f.node_values
    if isinstance(f, SampledFunction):
        f = f.values
    f = np.asarray(f)
    # ball nodes come in ascending row-major order, so a ball covering the
    # whole grid reads a flattened grid array unchanged
    if f.ndim == 1 and f.shape[0] == len(basis.weights):
        return f
    return f[tuple(basis.nodes.T)]


def project(f, basis: LocalPolyBasis) -> LocalPolynomial:
    """Orthogonal projection ``sum_i <f, p_i> p_i``.

    ``f`` may be a :class:`SampledFunction`, a full grid array, an array of
    ball-node values or a :class:`LocalPolynomial` on the same ball.
    """
    vals = _ball_values(f, basis)
    c = basis.values.T @ (vals * basis.weights) * basis.t ** -basis.d
    return LocalPolynomial(basis, c)


def _lv_mean(r: np.ndarray, weights: np.ndarray, t: float, d: int, v: float) -> float:
    if len(r) == 0:
        return 0.0
    a = np.abs(r)
    if math.isinf(v):
        return float(a.max())
    return float((t ** -d * np.sum(a ** v * weights)) ** (1.0 / v))


def osc_basis(f: SampledFunction, domain: Domain, x, t: float, N: int) -> LocalPolyBasis | None:
    """Basis of the largest feasible order ``<= N`` on the ball, or None when it is empty."""
    n = N
    while n >= 1:
        try:
            return build_local_basis(domain, f.grid, x, t, n)
        except DegenerateBall as exc:
            nxt = order_for_rank(f.grid.d, n, exc.rank)
            n = min(nxt, n - 1)
    return None


def osc(f: SampledFunction, domain: Domain, x, t: float, N: int, v: float) -> float:
    """``(t**-d * sum |f - Pi f|**v w)**(1/v)`` on ``B(x, t)`` in the domain; max for ``v = inf``."""
    basis = osc_basis(f, domain, x, t, N)
    if basis is None:
        return 0.0
    vals = _ball_values(f, basis)
    r = vals - project(vals, basis).node_values
    return _lv_mean(r, basis.weights, t, f.grid.d, v)


# ---------------------------------------------------------------------------
# all nodes at once: normal equations accumulated over offset blocks


def _rank_by_pivots(G: np.ndarray) -> np.ndarray:
    """Rank reached by Cholesky on ``G`` (shape ``(k, k, P)``) before a tiny pivot."""
    k, _, P = G.shape
    L = np.zeros_like(G)
    rank = np.full(P, k)
    alive = np.ones(P, dtype=bool)
    for i in range(k):
        piv = G[i, i] - np.sum(L[i, :i] ** 2, axis=0)
        diag = G[i, i]
        bad = alive & ~(piv > RANK_TOL ** 2 * diag) | alive & ~(diag > 0)
        rank[bad] = i
        alive &= ~bad
        lii = np.sqrt(np.where(alive, piv, 1.0))
        L[i, i] = lii
        for j in range(i + 1, k):
            L[j, i] = (G[j, i] - np.sum(L[j, :i] * L[i, :i], axis=0)) / lii
    return rank


def _fit_coefficients(f: SampledFunction, domain: Domain, t: float, N: int):
    """Monomial coefficients of the projection on every ball and the node offsets used."""
    grid = f.grid
    d, P = grid.d, grid.size
    ks = lattice_ball(grid, t, dedup=True)
    exps = monomial_exponents(d, N)
    k = len(exps)
    M = monomials(ks * grid.spacing / t, exps)
    torus = isinstance(domain, FullTorus)
    fg = OffsetGather(f.values, grid, 0)
    mg = None if torus else OffsetGather(domain.mask(grid), grid, False)
    iu = np.triu_indices(k)
    MM = M[:, iu[0]] * M[:, iu[1]]
    gflat = np.zeros((len(iu[0]), P))
    b = np.zeros((k, P), dtype=fg.dtype)
    for blk in offset_blocks(len(ks), P):
        F = fg(ks[blk])
        if mg is None:
            gflat += MM[blk].sum(axis=0)[:, None]
        else:
            W = mg(ks[blk]).astype(float)
            gflat += MM[blk].T @ W
            F = F * W
        b += M[blk].T @ F
    G = np.zeros((k, k, P))
    G[iu[0], iu[1]] = gflat
    G[iu[1], iu[0]] = gflat
    rank = _rank_by_pivots(G)
    order = np.array([order_for_rank(d, N, r) for r in range(k + 1)])[rank]
    coef = np.zeros((k, P), dtype=b.dtype)
    for n in range(1, N + 1):
        sel = np.flatnonzero(order == n)
        if len(sel) == 0:
            continue
        m = basis_size(d, n)
        Gs = np.moveaxis(G[:m, :m][:, :, sel], -1, 0)
        bs = b[:m, sel].T[..., None]
        coef[:m, sel] = np.linalg.solve(Gs, bs)[..., 0].T
    return ks, M, coef, fg, mg


def oscillation_profile(f: SampledFunction, domain: Domain, N: int, v: float,
                        radii) -> np.ndarray:
    """``osc(f, x, t)`` at every node for every radius; shape ``(len(radii),) + grid.shape``."""
    grid = f.grid
    if isinstance(domain, FullTorus) and not grid.periodic:
        raise GeometryError("the torus needs a periodic grid")
    P = grid.size
    mask = domain.mask(grid).ravel()
    out = np.zeros((len(radii), P))
    for i, t in enumerate(np.asarray(radii, dtype=float)):
        ks, M, coef, fg, mg = _fit_coefficients(f, domain, t, N)
        acc = np.zeros(P)
        for blk in offset_blocks(len(ks), P):
            r = fg(ks[blk])
            r -= M[blk] @ coef
            r = np.abs(r)
            if mg is not None:
                r *= mg(ks[blk])
            if math.isinf(v):
                np.maximum(acc, r.max(axis=0), out=acc)
            else:
                acc += _power(r, v).sum(axis=0)
        if not math.isinf(v):
            acc = (t ** -grid.d * grid.cell_volume * acc) ** (1.0 / v)
        out[i] = np.where(mask, acc, 0.0)
    return out.reshape((len(radii),) + grid.shape)


def osc_seminorm_profile(f: SampledFunction, domain: Domain, prm: ValidatedParams,
                         ladder: RadiusLadder | None = None) -> np.ndarray:
    ladder = ladder if ladder is not None else default_ladder(f.grid)
    radii = time_radii(ladder, prm.T)
    prof = oscillation_profile(f, domain, prm.N, prm.v, radii)
    return dyadic_time_sum(prof, radii, prm.s, prm.q)


def osc_seminorm(f: SampledFunction, domain: Domain, prm: ValidatedParams,
                 ladder: RadiusLadder | None = None) -> float:
    ladder = ladder if ladder is not None else default_ladder(f.grid)
    g = osc_seminorm_profile(f, domain, prm, ladder)
    return morrey_norm_array(g, f.grid, domain.mask(f.grid), prm.p, prm.u, ladder)


def osc_quasinorm(f: SampledFunction, domain: Domain, prm: ValidatedParams,
                  base: str = "plain", ladder: RadiusLadder | None = None) -> NormReport:
    t0 = time.perf_counter()
    ladder = ladder if ladder is not None else default_ladder(f.grid)
    b = base_term(f, domain, prm, base, ladder)
    sn = osc_seminorm(f, domain, prm, ladder)
    return NormReport("osc", b, sn, b + sn, base, prm.as_dict(), grid_meta(f.grid),
                      getattr(domain, "label", ""), time.perf_counter() - t0)


def finest_level(grid) -> int:
    """Largest ``j`` with ``2**-j`` at least two grid spacings."""
    return int(math.floor(math.log2(1.0 / (2 * grid.spacing)) + 1e-9))


def clubsuit_profile(f: SampledFunction, prm: ValidatedParams, j_max: int | None = None) -> np.ndarray:
    grid = f.grid
    if not grid.periodic:
        raise GeometryError("the dyadic oscillation norm is defined on the torus only")
    top = finest_level(grid)
    j_max = top if j_max is None else int(j_max)
    if j_max > top:
        raise ParameterError(f"j_max={j_max} exceeds the finest resolvable level {top}")
    if j_max < 0:
        raise ParameterError("j_max must be nonnegative")
    torus = FullTorus(grid.d)
    d, s, q, v = grid.d, prm.s, prm.q, prm.v
    head = local_average(f, torus, v, 1.0)
    js = np.arange(1, j_max + 1)
    radii = 2.0 ** -js.astype(float)
    terms = [head]
    if len(js):
        prof = oscillation_profile(f, torus, prm.N, v, radii)
        dv = 0.0 if math.isinf(v) else d / v
        for j, t, o in zip(js, radii, prof):
            # t**(d/v) * osc is the unnormalised L_v residual
            terms.append(2.0 ** (j * (s + dv)) * t ** dv * o)
    stack = np.stack(terms)
    if math.isinf(q):
        return stack.max(axis=0)
    return np.sum(stack ** q, axis=0) ** (1.0 / q)


def clubsuit_norm(f: SampledFunction, prm: ValidatedParams, j_max: int | None = None,
                  ladder: RadiusLadder | None = None) -> float:
    """Morrey norm of the dyadic oscillation square function on the torus.

    Level 0 is the local ``L_v`` mass on ``B(x, 1)``; level ``j >= 1`` adds
    ``2**(j(s + d/v))`` times the ``L_v`` residual of the local projection on
    ``B(x, 2**-j)``.
    """
    ladder = ladder if ladder is not None else default_ladder(f.grid)
    g = clubsuit_profile(f, prm, j_max)
    return morrey_norm_array(g, f.grid, np.ones(f.grid.shape, dtype=bool), prm.p, prm.u, ladder)


def clubsuit_report(f: SampledFunction, prm: ValidatedParams, j_max: int | None = None,
                    ladder: RadiusLadder | None = None) -> NormReport:
    t0 = time.perf_counter()
    val = clubsuit_norm(f, prm, j_max, ladder)
    return NormReport("clubsuit", 0.0, val, val, "none", prm.as_dict(), grid_meta(f.grid),
                      "torus", time.perf_counter() - t0)


def basis_diagnostics(domain: Domain, grid, radii, N: int, stride: int = 1) -> list[dict]:
    """Per-ball order, orthonormality residual, condition number and ``c1``."""
    mask = domain.mask(grid)
    idx = np.argwhere(mask)[::stride]
    rows = []
    for t in radii:
        for ind in idx:
            x = grid.node(tuple(ind))
            basis = osc_basis(SampledFunction(grid, np.zeros(grid.shape)), domain, x, t, N)
            if basis is None:
                continue
            sv = np.linalg.svd(basis.coef, compute_uv=False)
            rows.append({"x": tuple(float(c) for c in x), "t": float(t), "order": basis.N,
                         "residual": basis.residual, "cond": float(sv[0] / sv[-1]),
                         "c1": basis.pointwise_constant})
    return rows


__all__ = [
    "DegenerateBall", "monomial_exponents", "basis_size", "order_for_rank", "monomials",
    "LocalPolyBasis", "build_local_basis", "LocalPolynomial", "project", "osc", "osc_basis",
    "oscillation_profile", "osc_seminorm_profile", "osc_seminorm", "osc_quasinorm",
    "finest_level", "clubsuit_profile", "clubsuit_norm", "clubsuit_report", "basis_diagnostics",
]
