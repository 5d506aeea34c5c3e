"""Grids, sampled functions, smoothness parameters and the test-function corpus."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np


class ParameterError(ValueError):
    """Invalid smoothness parameters or corpus specification."""


class GeometryError(ValueError):
    """Invalid domain, grid, or route/domain combination."""


class GridFunIOError(OSError):
    """Malformed or unreadable grid-function file."""


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid with ``n`` nodes per axis.

    Node ``i`` along an axis sits at ``origin + i * spacing``. A periodic grid
    is a torus of side ``extent``.
    """

    d: int
    n: int
    origin: tuple[float, ...]
    extent: float
    periodic: bool

    def __post_init__(self):
        if self.d not in (1, 2):
            raise GeometryError(f"dimension must be 1 or 2, got {self.d}")
        if not _is_power_of_two(self.n) or self.n < 16:
            raise GeometryError(f"n must be a power of two >= 16, got {self.n}")
        if not (self.extent > 0 and math.isfinite(self.extent)):
            raise GeometryError(f"extent must be positive, got {self.extent}")
        if len(self.origin) != self.d:
            raise GeometryError("origin must have d coordinates")

    @property
    def spacing(self) -> float:
        return self.extent / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n ** self.d

    def axis(self, i: int = 0) -> np.ndarray:
        return self.origin[i] + self.spacing * np.arange(self.n)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays of shape ``self.shape`` (``ij`` indexing)."""
        axes = [self.axis(i) for i in range(self.d)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def points(self) -> np.ndarray:
        """All nodes as an ``(n**d, d)`` array in row-major order."""
        return np.stack([c.ravel() for c in self.coordinates()], axis=-1)

    def node(self, index) -> np.ndarray:
        index = np.atleast_1d(index)
        return np.asarray(self.origin) + self.spacing * index

    def index_of(self, x, atol: float = 1e-9) -> tuple[int, ...]:
        """Grid index of the node located at ``x``; raises if ``x`` is not a node."""
        rel = (np.atleast_1d(np.asarray(x, dtype=float)) - np.asarray(self.origin)) / self.spacing
        idx = np.rint(rel)
        if np.any(np.abs(rel - idx) > atol):
            raise GeometryError(f"point {x} is not a grid node")
        idx = idx.astype(int)
        if self.periodic:
            idx = idx % self.n
        elif np.any((idx < 0) | (idx >= self.n)):
            raise GeometryError(f"point {x} lies outside the grid")
        return tuple(int(i) for i in idx)


def make_grid(d: int, n: int, periodic: bool, origin=0.0, extent: float = 1.0) -> Grid:
    origin = tuple(float(o) for o in np.broadcast_to(np.asarray(origin, dtype=float), (d,)))
    return Grid(d=int(d), n=int(n), origin=origin, extent=float(extent), periodic=bool(periodic))


@dataclass(frozen=True, eq=False)
class SampledFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.dtype.kind not in "fc":
            values = values.astype(float)
        if values.size != self.grid.size:
            raise ParameterError(
                f"expected {self.grid.size} samples for the grid, got {values.size}"
            )
        values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ParameterError("sampled values must be finite")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.grid, values)

    def _check_grid(self, other: "SampledFunction"):
        if other.grid != self.grid:
            raise ParameterError("sampled functions live on different grids")

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        self._check_grid(other)
        return SampledFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        self._check_grid(other)
        return SampledFunction(self.grid, self.values - other.values)

    def __neg__(self) -> "SampledFunction":
        return SampledFunction(self.grid, -self.values)

    def __mul__(self, c) -> "SampledFunction":
        return SampledFunction(self.grid, c * self.values)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# smoothness parameters


@dataclass(frozen=True)
class SmoothnessParams:
    """Raw parameter record; ``q``, ``v`` and ``T`` accept ``math.inf``."""

    s: float
    u: float
    p: float
    q: float = 2.0
    v: float = 2.0
    N: int = 2
    T: float = 1.0
    R: float = 1.0
    d: int = 1


@dataclass(frozen=True)
class ValidatedParams(SmoothnessParams):
    sigma_p: float = 0.0
    sigma_pq: float = 0.0
    tau: float = 1.0
    lower: float = 0.0
    window_ok: bool = True

    def as_dict(self) -> dict[str, Any]:
        return {
            "s": self.s, "u": self.u, "p": self.p, "q": self.q, "v": self.v,
            "N": self.N, "T": self.T, "R": self.R, "d": self.d,
        }


def _inv(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


def validate_params(raw: SmoothnessParams) -> ValidatedParams:
    """Check the exponent ranges and attach the derived thresholds.

    ``lower`` is ``d * max{0, 1/p-1, 1/q-1, 1/p-1/v, 1/q-1/v}`` and
    ``window_ok`` flags ``lower < s < N``. Leaving the window is allowed.
    """
    s, u, p, q, v = float(raw.s), float(raw.u), float(raw.p), float(raw.q), float(raw.v)
    d, N, T, R = int(raw.d), int(raw.N), float(raw.T), float(raw.R)
    if d not in (1, 2):
        raise ParameterError(f"d must be 1 or 2, got {d}")
    if not (0 < p <= u < math.inf):
        raise ParameterError(f"need 0 < p <= u < inf, got p={p}, u={u}")
    if not q > 0 or math.isnan(q):
        raise ParameterError(f"q must be in (0, inf], got {q}")
    if not v > 0 or math.isnan(v):
        raise ParameterError(f"v must be in (0, inf], got {v}")
    if N < 1 or N != raw.N:
        raise ParameterError(f"N must be a positive integer, got {raw.N}")
    if not T > 0 or math.isnan(T):
        raise ParameterError(f"T must be in (0, inf], got {T}")
    if not (0 < R < math.inf):
        raise ParameterError(f"R must be in (0, inf), got {R}")
    if not math.isfinite(s):
        raise ParameterError(f"s must be finite, got {s}")

    ip, iq, iv = _inv(p), _inv(q), _inv(v)
    sigma_p = d * max(0.0, ip - 1)
    sigma_pq = d * max(0.0, ip - 1, iq - 1)
    lower = d * max(0.0, ip - 1, iq - 1, ip - iv, iq - iv)
    return ValidatedParams(
        s=s, u=u, p=p, q=q, v=v, N=N, T=T, R=R, d=d,
        sigma_p=sigma_p, sigma_pq=sigma_pq, tau=min(1.0, p, q),
        lower=lower, window_ok=bool(lower < s < N),
    )


def params(**kw) -> ValidatedParams:
    """Shorthand: ``validate_params(SmoothnessParams(**kw))``."""
    return validate_params(SmoothnessParams(**kw))


def with_params(prm: ValidatedParams, **changes) -> ValidatedParams:
    raw = SmoothnessParams(**{**prm.as_dict(), **changes})
    return validate_params(raw)


# ---------------------------------------------------------------------------
# test-function corpus

CORPUS_KINDS = ("polynomial", "trig_mode", "cusp", "weierstrass", "indicator", "random_smooth")


@dataclass(frozen=True)
class CorpusSpec:
    """A closed-form test function.

    ``options`` per kind:

    * ``polynomial``: ``coefficients`` (1d: ``c[i]`` of ``x**i``; 2d: matrix
      ``c[i][j]`` of ``x**i * y**j``)
    * ``trig_mode``: ``k`` (int or d-tuple; an int is used on every axis),
      ``complex`` (bool, gives ``exp(2 pi i k.x)`` instead of the cosine)
    * ``cusp``: ``alpha`` > 0, ``center``
    * ``weierstrass``: ``a`` in (0, 1), integer ``b`` >= 2, ``levels``
    * ``indicator``: ``subdomain`` (a domain object with ``contains``)
    * ``random_smooth``: ``seed``, ``cutoff``

    Every kind accepts ``scale`` (a constant multiplier). All periodic kinds
    have period 1 in each coordinate.
    """

    kind: str
    options: Mapping[str, Any] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if self.kind not in CORPUS_KINDS:
            raise ParameterError(f"unknown corpus kind {self.kind!r}")
        o = self.options
        if self.kind == "cusp" and not o.get("alpha", 1.0) > 0:
            raise ParameterError("cusp exponent must be positive")
        if self.kind == "weierstrass":
            a, b = o.get("a", 0.5), o.get("b", 2)
            if not (0 < a < 1):
                raise ParameterError("weierstrass base a must lie in (0, 1)")
            if int(b) != b or b < 2:
                raise ParameterError("weierstrass frequency b must be an integer >= 2")
        if self.kind == "indicator" and "subdomain" not in o:
            raise ParameterError("indicator needs a subdomain")
        if not self.name:
            object.__setattr__(self, "name", self.describe())

    def describe(self) -> str:
        parts = [self.kind]
        for key in sorted(self.options):
            val = self.options[key]
            if key == "subdomain":
                val = getattr(val, "label", type(val).__name__)
            parts.append(f"{key}={val}")
        return " ".join(str(p) for p in parts)


def _wave_vector(k, d: int) -> np.ndarray:
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.size == 1:
        k = np.full(d, k[0])
    if k.size != d:
        raise ParameterError(f"wave vector must have {d} components")
    return k


def _random_smooth(coords, d: int, seed: int, cutoff: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    out = np.zeros_like(coords[0])
    if d == 1:
        freqs = [(k,) for k in range(cutoff + 1)]
    else:
        # half lattice: one representative per +-k pair
        freqs = [(k1, k2) for k1 in range(0, cutoff + 1) for k2 in range(-cutoff, cutoff + 1)
                 if k1 > 0 or k2 >= 0]
    for kv in freqs:
        a, b = rng.standard_normal(2)
        amp = 1.0 / (1.0 + float(np.sqrt(sum(kc * kc for kc in kv)))) ** 2
        phase = 2 * np.pi * sum(kc * x for kc, x in zip(kv, coords))
        out = out + amp * (a * np.cos(phase) + b * np.sin(phase))
    return out


def sample(spec: CorpusSpec, grid: Grid) -> SampledFunction:
    """Evaluate ``spec`` at every node of ``grid``."""
    o = spec.options
    d = grid.d
    coords = grid.coordinates()
    kind = spec.kind
    if kind == "polynomial":
        c = np.asarray(o.get("coefficients", [0.0]))
        if c.dtype.kind not in "fc":
            c = c.astype(float)
        if d == 1:
            vals = np.polynomial.polynomial.polyval(coords[0], c)
        else:
            c2 = np.atleast_2d(c)
            vals = np.polynomial.polynomial.polyval2d(coords[0], coords[1], c2)
    elif kind == "trig_mode":
        kv = _wave_vector(o.get("k", 1), d)
        phase = 2 * np.pi * sum(kc * x for kc, x in zip(kv, coords))
        vals = np.exp(1j * phase) if o.get("complex", False) else np.cos(phase)
    elif kind == "cusp":
        alpha = float(o.get("alpha", 1.0))
        center = np.broadcast_to(np.asarray(o.get("center", 0.5), dtype=float), (d,))
        r2 = sum(np.sin(np.pi * (x - c)) ** 2 for x, c in zip(coords, center))
        vals = r2 ** (alpha / 2)
    elif kind == "weierstrass":
        a, b = float(o.get("a", 0.5)), int(o.get("b", 2))
        levels = int(o.get("levels", 6))
        tot = sum(coords)
        vals = sum(a ** k * np.cos(2 * np.pi * b ** k * tot) for k in range(levels))
    elif kind == "indicator":
        sub = o["subdomain"]
        vals = sub.contains(grid.points()).reshape(grid.shape).astype(float)
    elif kind == "random_smooth":
        cutoff = int(o.get("cutoff", 4))
        if not cutoff < grid.n / 2:
            raise ParameterError("random_smooth cutoff must be below n/2")
        vals = _random_smooth(coords, d, int(o.get("seed", 0)), cutoff)
    else:  # pragma: no cover - guarded in CorpusSpec
        raise ParameterError(kind)
    vals = float(o.get("scale", 1.0)) * np.asarray(vals)
    if not np.all(np.isfinite(vals)):
        raise ParameterError(f"{spec.name} produced non-finite samples")
    return SampledFunction(grid, vals)


_BOOL = {"true": True, "false": False, "yes": True, "no": False}


def _parse_value(text: str):
    text = text.strip()
    if text.lower() in _BOOL:
        return _BOOL[text.lower()]
    if text.lower() in ("inf", "infinity", "+inf"):
        return math.inf
    if "," in text:
        return tuple(_parse_value(t) for t in text.split(",") if t.strip())
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_corpus_spec(text: str, name: str = "") -> CorpusSpec:
    """Parse ``"kind key=value key=value"``, e.g. ``"cusp alpha=1.5 center=0.3"``.

    Comma-separated values become tuples (``k=1,2``; ``coefficients=0,0,1``);
    polynomial coefficient rows are separated by ``;`` (``coefficients=1,2;3,0``).
    An ``indicator`` takes ``subdomain=<domain text>`` understood by
    :func:`smnorm.geometry.parse_domain` with ``:`` replaced by ``@``.
    """
    tokens = text.split()
    if not tokens:
        raise ParameterError("empty corpus specification")
    kind, opts = tokens[0], {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise ParameterError(f"expected key=value, got {tok!r}")
        key, val = tok.split("=", 1)
        if key == "subdomain":
            from .geometry import parse_domain
            opts[key] = parse_domain(val.replace("@", ":"))
        elif key == "coefficients":
            # rows separated by ';' give the 2d coefficient matrix
            rows = [_parse_value(r) for r in val.split(";")]
            rows = [list(r) if isinstance(r, tuple) else [r] for r in rows]
            opts[key] = rows if ";" in val else rows[0]
        else:
            opts[key] = _parse_value(val)
    return CorpusSpec(kind, opts, name=name or text.strip())


__all__ = [
    "Grid", "SampledFunction", "SmoothnessParams", "ValidatedParams", "CorpusSpec",
    "ParameterError", "GeometryError", "GridFunIOError", "make_grid", "sample",
    "validate_params", "params", "with_params", "parse_corpus_spec",
]
