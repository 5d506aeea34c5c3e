"""Domains, discrete balls and admissible difference steps on uniform grids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.ndimage import maximum_filter1d

from .core import GeometryError, Grid, make_grid

# relative slack for the strict inequality |k| h < r; keeps ball membership
# stable when r/h is an exact integer
_BALL_RTOL = 1e-9


def _inside_radius(dist2, r2):
    return dist2 < r2 * (1.0 - _BALL_RTOL)


# ---------------------------------------------------------------------------
# domain shapes


class Domain:
    label = "domain"
    convex = False
    bounded = True

    def contains(self, points) -> np.ndarray:
        raise NotImplementedError

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def mask(self, grid: Grid) -> np.ndarray:
        """Boolean membership of every grid node, shape ``grid.shape``."""
        return self.contains(grid.points()).reshape(grid.shape)


def _as_points(points, d=None) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(1, -1) if d is None or pts.size == d else pts.reshape(-1, 1)
    return pts


@dataclass(frozen=True)
class FullTorus(Domain):
    """The whole periodic grid; stands in for R^d."""

    d: int = 1
    label: str = "torus"
    bounded = False
    convex = True

    def contains(self, points) -> np.ndarray:
        pts = _as_points(points, self.d)
        return np.ones(pts.shape[0], dtype=bool)

    def bbox(self):
        raise GeometryError("the torus has no bounding box")


@dataclass(frozen=True)
class Interval(Domain):
    a: float = 0.0
    b: float = 1.0
    label: str = ""
    d = 1
    convex = True

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not self.a < self.b:
            raise GeometryError(f"interval needs a < b, got ({self.a}, {self.b})")
        if not self.label:
            object.__setattr__(self, "label", f"interval({self.a!r},{self.b!r})")

    def contains(self, points) -> np.ndarray:
        x = _as_points(points, 1)[:, 0]
        return (x > self.a) & (x < self.b)

    def bbox(self):
        return np.array([self.a]), np.array([self.b])


_GRAPHS: dict[str, Callable[[np.ndarray, float], np.ndarray]] = {
    "flat": lambda x, L: np.zeros_like(x),
    "tent": lambda x, L: L * np.maximum(0.0, 0.25 - np.abs(x - 0.5)),
    "sine": lambda x, L: L / (2 * np.pi) * np.sin(2 * np.pi * x),
    "vee": lambda x, L: L * np.abs(x - 0.5),
}


@dataclass(frozen=True)
class SpecialLipschitz(Domain):
    """Region above the graph ``x_d > level + omega(x')``, clipped to a box.

    ``graph`` is one of the named profiles in ``_GRAPHS`` or a callable
    ``omega(x_prime)``; the Lipschitz bound is checked on a fine sampling.
    """

    graph: str | Callable = "flat"
    lipschitz_bound: float = 1.0
    level: float = 0.0
    lo: tuple[float, ...] = (0.0, 0.0)
    hi: tuple[float, ...] = (1.0, 1.0)
    d: int = 2
    label: str = ""

    def __post_init__(self):
        if not (self.lipschitz_bound >= 0 and math.isfinite(self.lipschitz_bound)):
            raise GeometryError("Lipschitz bound must be finite and nonnegative")
        if isinstance(self.graph, str) and self.graph not in _GRAPHS:
            raise GeometryError(f"unknown graph {self.graph!r}")
        if len(self.lo) != self.d or len(self.hi) != self.d:
            raise GeometryError("bounding box must have d coordinates")
        if self.d == 2:
            xs = np.linspace(self.lo[0], self.hi[0], 4097)
            ys = self.omega(xs)
            slope = np.max(np.abs(np.diff(ys) / np.diff(xs)))
            if slope > self.lipschitz_bound * (1 + 1e-6) + 1e-12:
                raise GeometryError(
                    f"graph slope {slope:.4g} exceeds Lipschitz bound {self.lipschitz_bound}")
        if not self.label:
            name = self.graph if isinstance(self.graph, str) else "custom"
            object.__setattr__(self, "label", f"lipschitz({name},{self.lipschitz_bound!r})")

    def omega(self, xp) -> np.ndarray:
        xp = np.asarray(xp, dtype=float)
        if callable(self.graph):
            return self.level + np.asarray(self.graph(xp), dtype=float)
        return self.level + _GRAPHS[self.graph](xp, self.lipschitz_bound)

    def contains(self, points) -> np.ndarray:
        pts = _as_points(points, self.d)
        inbox = np.all((pts >= np.asarray(self.lo)) & (pts <= np.asarray(self.hi)), axis=1)
        if self.d == 1:
            above = pts[:, 0] > self.level
        else:
            above = pts[:, 1] > self.omega(pts[:, 0])
        return inbox & above

    def bbox(self):
        return np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)


@dataclass(frozen=True)
class ConvexPolytope(Domain):
    """Open convex polygon in the plane; vertices are reordered counter-clockwise."""

    vertices: tuple[tuple[float, float], ...] = ()
    label: str = ""
    d = 2
    convex = True

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise GeometryError("a polytope needs at least three planar vertices")
        c = v.mean(axis=0)
        order = np.argsort(np.arctan2(v[:, 1] - c[1], v[:, 0] - c[0]))
        v = v[order]
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if np.any(cross <= 1e-14):
            raise GeometryError("polytope vertices are not in strictly convex position")
        object.__setattr__(self, "vertices", tuple(map(tuple, v.tolist())))
        if not self.label:
            object.__setattr__(self, "label", f"polytope[{len(v)}]")

    def contains(self, points) -> np.ndarray:
        pts = _as_points(points, 2)
        v = np.asarray(self.vertices)
        e = np.roll(v, -1, axis=0) - v
        rel = pts[:, None, :] - v[None, :, :]
        cross = e[None, :, 0] * rel[:, :, 1] - e[None, :, 1] * rel[:, :, 0]
        return np.all(cross > 0, axis=1)

    def bbox(self):
        v = np.asarray(self.vertices)
        return v.min(axis=0), v.max(axis=0)


def regular_polygon(m: int = 5, center=(0.5, 0.5), radius: float = 0.45,
                    rotation: float = np.pi / 2) -> ConvexPolytope:
    ang = rotation + 2 * np.pi * np.arange(m) / m
    verts = np.stack([center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)], axis=1)
    return ConvexPolytope(tuple(map(tuple, verts.tolist())), label=f"regular{m}")


def domain_metrics(domain: Domain) -> tuple[float, bool]:
    """Diameter and convexity flag of a bounded domain."""
    if isinstance(domain, FullTorus):
        raise GeometryError("the torus has no finite diameter")
    if isinstance(domain, Interval):
        return float(domain.b - domain.a), True
    if isinstance(domain, ConvexPolytope):
        v = np.asarray(domain.vertices)
        diff = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((diff ** 2).sum(-1)).max()), True
    if isinstance(domain, SpecialLipschitz):
        lo, hi = domain.bbox()
        return float(np.linalg.norm(hi - lo)), False
    raise GeometryError(f"no metrics for {type(domain).__name__}")


def grid_for_domain(domain: Domain, n: int, d: int | None = None, extent: float = 1.0) -> Grid:
    """Square grid suited to ``domain``.

    The torus gets a periodic grid of side ``extent``; bounded shapes get a
    cell-centred grid over the square hull of their bounding box.
    """
    if isinstance(domain, FullTorus):
        return make_grid(d or domain.d, n, True, 0.0, extent)
    lo, hi = domain.bbox()
    side = float(np.max(hi - lo))
    return make_grid(len(lo), n, False, lo + side / (2 * n), side)


def parse_domain(text: str, d: int | None = None) -> Domain:
    """Parse a compact domain description.

    ``torus`` | ``interval:a,b`` | ``pentagon`` | ``polygon:m`` |
    ``polytope:x1 y1;x2 y2;...`` | ``lipschitz:graph,bound[,level]``
    """
    kind, _, rest = text.strip().partition(":")
    kind = kind.lower()
    try:
        if kind == "torus":
            return FullTorus(d=d or 1)
        if kind == "interval":
            a, b = (float(t) for t in (rest or "0,1").split(","))
            return Interval(a, b)
        if kind == "pentagon":
            return regular_polygon(5)
        if kind == "polygon":
            return regular_polygon(int(rest or 5))
        if kind == "polytope":
            verts = tuple(tuple(float(c) for c in vtx.replace(",", " ").split())
                          for vtx in rest.split(";") if vtx.strip())
            return ConvexPolytope(verts)
        if kind == "lipschitz":
            parts = [t.strip() for t in rest.split(",") if t.strip()]
            graph = parts[0] if parts else "flat"
            bound = float(parts[1]) if len(parts) > 1 else 1.0
            level = float(parts[2]) if len(parts) > 2 else 0.25
            return SpecialLipschitz(graph, bound, level=level)
    except (ValueError, TypeError) as exc:
        raise GeometryError(f"cannot parse domain {text!r}: {exc}") from exc
    raise GeometryError(f"unknown domain kind {kind!r}")


# ---------------------------------------------------------------------------
# lattice helpers


def shift(a: np.ndarray, k, periodic: bool, fill=0) -> np.ndarray:
    """``out[x] = a[x + k]``; off-grid reads give ``fill`` unless periodic."""
    k = tuple(int(v) for v in np.atleast_1d(k))
    if periodic:
        return np.roll(a, tuple(-v for v in k), axis=tuple(range(len(k))))
    out = np.full_like(a, fill)
    src, dst = [], []
    for ki, ni in zip(k, a.shape):
        if abs(ki) >= ni:
            return out
        if ki >= 0:
            src.append(slice(ki, ni))
            dst.append(slice(0, ni - ki))
        else:
            src.append(slice(0, ni + ki))
            dst.append(slice(-ki, ni))
    out[tuple(dst)] = a[tuple(src)]
    return out


def lattice_ball(grid: Grid, t: float, dedup: bool) -> np.ndarray:
    """Integer offsets ``k`` with ``|k| * spacing < t``, sorted by length.

    With ``dedup`` on a periodic grid each node appears once (components in
    ``(-n/2, n/2]``); otherwise offsets are plain vectors of R^d, clipped to
    ``|k_i| < n`` on non-periodic grids where longer ones never hit a node.
    """
    n, h, d = grid.n, grid.spacing, grid.d
    r2 = (t / h) ** 2
    m = int(math.ceil(t / h))
    if grid.periodic and dedup:
        lo, hi = max(-m, -n // 2 + 1), min(m, n // 2)
    elif not grid.periodic:
        lo, hi = max(-m, -(n - 1)), min(m, n - 1)
    else:
        lo, hi = -m, m
    rng = np.arange(lo, hi + 1)
    ks = np.stack(np.meshgrid(*([rng] * d), indexing="ij"), axis=-1).reshape(-1, d)
    k2 = (ks ** 2).sum(axis=1)
    ks = ks[_inside_radius(k2, r2)]
    k2 = (ks ** 2).sum(axis=1)
    order = np.lexsort(tuple(ks[:, i] for i in reversed(range(d))) + (k2,))
    return ks[order]


@dataclass(frozen=True)
class QuadratureSet:
    indices: np.ndarray
    weights: np.ndarray

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True)
class StepSet:
    steps: np.ndarray          # (m, d) displacement vectors
    offsets: np.ndarray        # (m, d) integer grid offsets
    weights: np.ndarray
    x: tuple[float, ...] = ()
    t: float = 0.0
    N: int = 1

    def __len__(self):
        return len(self.weights)


def _periodic_delta(grid: Grid, diff: np.ndarray) -> np.ndarray:
    """Wrap displacements into ``(-extent/2, extent/2]`` on periodic grids.

    The half-open choice matches the offsets produced by ``lattice_ball``
    with ``dedup`` so both ball paths see the same local coordinates.
    """
    if grid.periodic:
        rel = diff / grid.extent
        wrap = np.ceil(rel - 0.5)
        # snap ties so that +1/2 is kept and -1/2 is mapped to +1/2
        tie = np.isclose(rel - wrap, -0.5, rtol=0, atol=1e-12)
        wrap = np.where(tie, wrap - 1, wrap)
        diff = diff - grid.extent * wrap
    return diff


def membership(domain: Domain, x) -> bool:
    return bool(domain.contains(np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1))[0])


def ball_quadrature(domain: Domain, grid: Grid, x, t: float) -> QuadratureSet:
    """Grid nodes ``y`` in ``domain`` with ``|y - x| < t`` (periodic metric on the torus)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pts = grid.points()
    diff = _periodic_delta(grid, pts - x)
    dist2 = (diff ** 2).sum(axis=1)
    keep = _inside_radius(dist2, t * t) & domain.mask(grid).ravel()
    flat = np.flatnonzero(keep)
    idx = np.stack(np.unravel_index(flat, grid.shape), axis=-1)
    return QuadratureSet(idx, np.full(len(flat), grid.cell_volume))


def admissible_steps(domain: Domain, grid: Grid, x, t: float, N: int,
                     endpoints_only: bool = False) -> StepSet:
    """Grid displacements ``h`` with ``|h| < t`` and ``x + l h`` in the domain for ``0 <= l <= N``.

    ``endpoints_only`` checks ``l = 0`` and ``l = N`` only, which is equivalent
    for convex domains.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ks = lattice_ball(grid, t, dedup=False)
    hs = ks * grid.spacing
    ok = np.ones(len(ks), dtype=bool)
    levels = (0, N) if endpoints_only else range(N + 1)
    if not isinstance(domain, FullTorus):
        for ell in levels:
            ok &= domain.contains(x + ell * hs)
    return StepSet(hs[ok], ks[ok], np.full(int(ok.sum()), grid.cell_volume),
                   tuple(x.tolist()), float(t), int(N))


class OffsetGather:
    """Read ``arr[x + k]`` for a block of offsets ``k`` and every node ``x`` at once.

    Returns an array of shape ``(len(ks), n**d)``. Off-grid reads give ``fill``
    on non-periodic grids and wrap around on periodic ones.
    """

    def __init__(self, arr: np.ndarray, grid: Grid, fill=0):
        n, d = grid.n, grid.d
        self.n, self.d, self.periodic = n, d, grid.periodic
        if arr.dtype.kind in "iu":
            arr = arr.astype(float)
        if grid.periodic:
            self.padded = np.pad(arr, n, mode="wrap")
        else:
            self.padded = np.pad(arr, n, mode="constant", constant_values=fill)
        self.dtype = self.padded.dtype

    def __call__(self, ks: np.ndarray) -> np.ndarray:
        n = self.n
        ks = np.asarray(ks, dtype=np.int64).reshape(-1, self.d)
        if self.periodic:
            ks = ks % n
        else:
            ks = np.clip(ks, -n, n)
        out = np.empty((len(ks),) + (n,) * self.d, dtype=self.dtype)
        pad = self.padded
        # contiguous slices of the padded array beat fancy indexing by a wide margin
        if self.d == 1:
            for i, (k0,) in enumerate(ks):
                out[i] = pad[n + k0:2 * n + k0]
        else:
            for i, (k0, k1) in enumerate(ks):
                out[i] = pad[n + k0:2 * n + k0, n + k1:2 * n + k1]
        return out.reshape(len(ks), -1)


def offset_blocks(count: int, nodes: int, budget: int = 1 << 22):
    """Split ``range(count)`` into slices whose gathered arrays stay under ``budget`` entries."""
    step = max(1, budget // max(nodes, 1))
    for start in range(0, count, step):
        yield slice(start, min(count, start + step))


# ---------------------------------------------------------------------------
# ball sums and maxima for every centre at once


def _row_halfwidths(grid: Grid, r: float) -> list[tuple[int, int]]:
    """(row offset, half-width) pairs describing the discrete ball of radius ``r``."""
    n, h = grid.n, grid.spacing
    r2 = (r / h) ** 2
    m = int(math.ceil(r / h))
    if grid.d == 1:
        dys = [0]
    elif grid.periodic:
        dys = range(max(-m, -n // 2 + 1), min(m, n // 2) + 1)
    else:
        dys = range(max(-m, -(n - 1)), min(m, n - 1) + 1)
    rows = []
    for dy in dys:
        if not _inside_radius(dy * dy, r2):
            continue
        w = int(math.floor(math.sqrt(max(r2 - dy * dy, 0.0))))
        while w > 0 and not _inside_radius(w * w + dy * dy, r2):
            w -= 1
        while _inside_radius((w + 1) ** 2 + dy * dy, r2) and w < 2 * n:
            w += 1
        rows.append((dy, w))
    return rows


class _RowReducer:
    """Sliding sums or maxima along the last axis, cached by half-width."""

    def __init__(self, a2: np.ndarray, periodic: bool, how: str):
        self.a2, self.periodic, self.how = a2, periodic, how
        self.n = a2.shape[-1]
        self.cache: dict[int, np.ndarray] = {}
        if how == "sum":
            n = self.n
            if periodic:
                padded = np.concatenate([a2, a2, a2], axis=-1)
            else:
                z = np.zeros_like(a2)
                padded = np.concatenate([z, a2, z], axis=-1)
            c = np.zeros(a2.shape[:-1] + (3 * n + 1,), dtype=a2.dtype)
            np.cumsum(padded, axis=-1, out=c[..., 1:])
            self.cumsum = c

    def __call__(self, w: int) -> np.ndarray:
        if w in self.cache:
            return self.cache[w]
        n = self.n
        full = self.periodic and 2 * w + 1 >= n
        if self.how == "sum":
            if full:
                res = np.broadcast_to(self.a2.sum(axis=-1, keepdims=True), self.a2.shape)
            else:
                w = min(w, n - 1)
                idx = np.arange(n) + n
                res = self.cumsum[..., idx + w + 1] - self.cumsum[..., idx - w]
        else:
            if full:
                res = np.broadcast_to(self.a2.max(axis=-1, keepdims=True), self.a2.shape)
            else:
                w = min(w, n - 1)
                mode = "wrap" if self.periodic else "constant"
                res = maximum_filter1d(self.a2, size=2 * w + 1, axis=-1, mode=mode, cval=0.0)
        self.cache[w] = res
        return res


def _ball_reduce(arr: np.ndarray, grid: Grid, radii: Sequence[float], how: str) -> np.ndarray:
    a2 = arr.reshape(1, grid.n) if grid.d == 1 else arr
    red = _RowReducer(a2, grid.periodic, how)
    out = np.zeros((len(radii),) + a2.shape, dtype=arr.dtype)
    for i, r in enumerate(radii):
        acc = out[i]
        for dy, w in _row_halfwidths(grid, r):
            seg = red(w)
            moved = seg if dy == 0 else shift(np.asarray(seg), (dy,), grid.periodic)
            if how == "sum":
                acc += moved
            else:
                np.maximum(acc, moved, out=acc)
    return out.reshape((len(radii),) + grid.shape)


def ball_sums(arr: np.ndarray, grid: Grid, radii: Sequence[float]) -> np.ndarray:
    """``out[i, x] = sum of arr[y]`` over nodes ``y`` with ``|y - x| < radii[i]``.

    ``arr`` should already be zero outside the domain.
    """
    return _ball_reduce(np.asarray(arr, dtype=float), grid, radii, "sum")


def ball_max(arr: np.ndarray, grid: Grid, radius: float) -> np.ndarray:
    """Maximum of a nonnegative ``arr`` over the discrete ball around every node."""
    return _ball_reduce(np.asarray(arr, dtype=float), grid, [radius], "max")[0]


__all__ = [
    "Domain", "FullTorus", "Interval", "SpecialLipschitz", "ConvexPolytope",
    "regular_polygon", "domain_metrics", "grid_for_domain", "parse_domain", "shift",
    "lattice_ball", "QuadratureSet", "StepSet", "membership", "ball_quadrature",
    "admissible_steps", "ball_sums", "ball_max", "OffsetGather", "offset_blocks",
]
