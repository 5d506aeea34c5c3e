"""Route comparisons, sweeps, Whitney checks and refinement studies."""

from __future__ import annotations

import csv
import io as _io
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (CorpusSpec, GeometryError, ParameterError, SampledFunction, ValidatedParams,
                   sample)
from .differences import binomial_weights, diff_quasinorm
from .geometry import (Domain, FullTorus, OffsetGather, domain_metrics, grid_for_domain,
                       lattice_ball, offset_blocks)
from .io import atomic_write
from .lp import lp_report
from .morrey import RadiusLadder, default_ladder
from .oscillation import clubsuit_report, monomial_exponents, monomials, osc_quasinorm
from .report import NormReport

ROUTES = ("lp", "diff", "osc", "clubsuit")
TORUS_ONLY = ("lp", "clubsuit")
BOTH_ZERO = "both-zero"


def evaluate(f: SampledFunction, domain: Domain, prm: ValidatedParams, route: str,
             base: str = "plain", ladder: RadiusLadder | None = None) -> NormReport:
    """Quasi-norm of ``f`` by one route."""
    if route not in ROUTES:
        raise ParameterError(f"unknown route {route!r}; expected one of {ROUTES}")
    if route in TORUS_ONLY and not isinstance(domain, FullTorus):
        raise GeometryError(f"route {route!r} is only defined on the torus")
    if route == "lp":
        return lp_report(f, prm, ladder=ladder)
    if route == "clubsuit":
        return clubsuit_report(f, prm, ladder=ladder)
    if route == "diff":
        return diff_quasinorm(f, domain, prm, base, ladder)
    return osc_quasinorm(f, domain, prm, base, ladder)


def ratio_of(a: float, b: float):
    """``a / b`` when both are finite and positive, :data:`BOTH_ZERO` when both vanish, else None."""
    if a == 0 and b == 0:
        return BOTH_ZERO
    if math.isfinite(a) and math.isfinite(b) and a > 0 and b > 0:
        return a / b
    return None


@dataclass
class RatioRecord:
    route_a: str
    route_b: str
    total_a: float
    total_b: float
    ratio: float | str | None
    window_ok: bool
    report_a: NormReport | None = None
    report_b: NormReport | None = None


def compare_norms(f: SampledFunction, domain: Domain, prm: ValidatedParams, route_a: str,
                  route_b: str, base: str = "plain",
                  ladder: RadiusLadder | None = None) -> RatioRecord:
    for r in (route_a, route_b):
        if r in TORUS_ONLY and not isinstance(domain, FullTorus):
            raise GeometryError(f"route {r!r} is only defined on the torus")
    ra = evaluate(f, domain, prm, route_a, base, ladder)
    rb = evaluate(f, domain, prm, route_b, base, ladder)
    return RatioRecord(route_a, route_b, ra.total, rb.total, ratio_of(ra.total, rb.total),
                       prm.window_ok, ra, rb)


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class Cell:
    func: str
    n: int
    param_index: int
    params: ValidatedParams
    totals: dict[str, float] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)

    def ratio(self, a: str, b: str):
        if a in self.totals and b in self.totals:
            return ratio_of(self.totals[a], self.totals[b])
        return None


@dataclass
class PairStats:
    pair: tuple[str, str]
    count: int
    min: float
    max: float
    median: float
    drift: float      # largest ratio change between the two finest sizes (>= 1)


@dataclass
class EquivalenceReport:
    cells: list[Cell]
    routes: list[str]
    sizes: list[int]
    domain: str
    base: str

    @property
    def pairs(self) -> list[tuple[str, str]]:
        return list(itertools.combinations(self.routes, 2))

    def usable(self, cell: Cell) -> bool:
        return cell.params.window_ok

    def ratios(self, a: str, b: str, n: int | None = None, window_only: bool = True) -> list[float]:
        out = []
        for c in self.cells:
            if n is not None and c.n != n:
                continue
            if window_only and not self.usable(c):
                continue
            r = c.ratio(a, b)
            if isinstance(r, float):
                out.append(r)
        return out

    def drift(self, a: str, b: str) -> float:
        """Max over (function, params) of the ratio change between the two finest sizes."""
        if len(self.sizes) < 2:
            return 1.0
        n1, n2 = sorted(self.sizes)[-2:]
        index = {(c.func, c.param_index, c.n): c for c in self.cells}
        worst = 1.0
        for c in self.cells:
            if c.n != n2 or not self.usable(c):
                continue
            other = index.get((c.func, c.param_index, n1))
            if other is None:
                continue
            r1, r2 = other.ratio(a, b), c.ratio(a, b)
            if isinstance(r1, float) and isinstance(r2, float):
                worst = max(worst, r1 / r2, r2 / r1)
        return worst

    def stats(self) -> list[PairStats]:
        out = []
        for a, b in self.pairs:
            rs = self.ratios(a, b)
            if rs:
                out.append(PairStats((a, b), len(rs), min(rs), max(rs), float(np.median(rs)),
                                     self.drift(a, b)))
            else:
                out.append(PairStats((a, b), 0, math.nan, math.nan, math.nan, math.nan))
        return out

    def equivalence_constant(self) -> float:
        """Smallest ``C`` with every in-window ratio in ``[1/C, C]``."""
        worst = 1.0
        for a, b in self.pairs:
            for r in self.ratios(a, b):
                worst = max(worst, r, 1.0 / r)
        return worst

    # persistence -----------------------------------------------------------

    def columns(self) -> list[str]:
        cols = ["func", "n", "param_index", "s", "u", "p", "q", "v", "N", "T", "R", "window_ok"]
        cols += [f"total_{r}" for r in self.routes]
        cols += [f"ratio_{a}_{b}" for a, b in self.pairs]
        cols += ["errors"]
        return cols

    def rows(self) -> list[list[str]]:
        out = []
        for c in self.cells:
            p = c.params
            row = [c.func, str(c.n), str(c.param_index)]
            row += [_fmt(getattr(p, k)) for k in ("s", "u", "p", "q", "v", "N", "T", "R")]
            row.append("1" if p.window_ok else "0")
            row += [_fmt(c.totals[r]) if r in c.totals else "" for r in self.routes]
            for a, b in self.pairs:
                r = c.ratio(a, b)
                row.append(_fmt(r) if r is not None else "")
            row.append("; ".join(f"{k}: {v}" for k, v in sorted(c.errors.items())))
            out.append(row)
        return out

    def to_csv(self) -> str:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns())
        w.writerows(self.rows())
        return buf.getvalue()

    def manifest(self, raw: dict[str, str] | None = None) -> str:
        lines = ["# run manifest"]
        for k, v in (raw or {}).items():
            lines.append(f"{k} = {v}")
        lines.append(f"derived.domain = {self.domain}")
        lines.append(f"derived.sizes = {','.join(map(str, self.sizes))}")
        lines.append(f"derived.routes = {','.join(self.routes)}")
        lines.append(f"derived.base = {self.base}")
        lines.append(f"derived.cells = {len(self.cells)}")
        lines.append(f"derived.failed_cells = {sum(1 for c in self.cells if c.errors)}")
        idx = sorted({(c.param_index, c.params) for c in self.cells}, key=lambda t: t[0])
        for i, p in idx:
            lines.append(f"derived.params.{i}.lower = {_fmt(p.lower)}")
            lines.append(f"derived.params.{i}.sigma_p = {_fmt(p.sigma_p)}")
            lines.append(f"derived.params.{i}.sigma_pq = {_fmt(p.sigma_pq)}")
            lines.append(f"derived.params.{i}.tau = {_fmt(p.tau)}")
            lines.append(f"derived.params.{i}.window_ok = {int(p.window_ok)}")
        for st in self.stats():
            key = f"derived.ratio.{st.pair[0]}_{st.pair[1]}"
            lines.append(f"{key}.count = {st.count}")
            lines.append(f"{key}.min = {_fmt(st.min)}")
            lines.append(f"{key}.max = {_fmt(st.max)}")
            lines.append(f"{key}.median = {_fmt(st.median)}")
            lines.append(f"{key}.drift = {_fmt(st.drift)}")
        lines.append(f"derived.equivalence_constant = {_fmt(self.equivalence_constant())}")
        return "\n".join(lines) + "\n"

    def write(self, path, raw: dict[str, str] | None = None) -> tuple[str, str]:
        """Write ``path`` (CSV) and ``path + '.manifest'``; both atomically."""
        path = str(path)
        atomic_write(path, self.to_csv())
        atomic_write(path + ".manifest", self.manifest(raw))
        return path, path + ".manifest"

    def summary(self) -> str:
        lines = [f"{len(self.cells)} cells on {self.domain}, sizes {self.sizes}"]
        for st in self.stats():
            a, b = st.pair
            lines.append(f"  {a}/{b}: n={st.count} min={st.min:.4g} median={st.median:.4g} "
                         f"max={st.max:.4g} drift={st.drift:.4g}")
        bad = [c for c in self.cells if c.errors]
        if bad:
            lines.append(f"  {len(bad)} cells recorded errors")
        return "\n".join(lines)


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def sweep(corpus: Sequence[CorpusSpec], param_grid: Sequence[ValidatedParams],
          sizes: Sequence[int], domain: Domain, routes: Sequence[str] = ("lp", "diff", "osc"),
          base: str = "plain", d: int | None = None, jmin: int = 0,
          jmax: int | None = None) -> EquivalenceReport:
    """Evaluate every route on the full (function, params, size) cross product.

    A failing route in one cell is recorded in that cell and the sweep goes on.
    """
    if not corpus:
        raise ParameterError("empty corpus")
    if not param_grid:
        raise ParameterError("empty parameter grid")
    if not sizes:
        raise ParameterError("no grid sizes")
    for r in routes:
        if r not in ROUTES:
            raise ParameterError(f"unknown route {r!r}")
        if r in TORUS_ONLY and not isinstance(domain, FullTorus):
            raise GeometryError(f"route {r!r} is only defined on the torus")
    d = d or getattr(domain, "d", 1)
    cells = []
    for n in sizes:
        grid = grid_for_domain(domain, n, d)
        try:
            ladder = default_ladder(grid, jmin, jmax)
        except ParameterError:
            ladder = None
        for spec in corpus:
            try:
                f = sample(spec, grid)
            except Exception as exc:  # noqa: BLE001 - recorded per cell
                f, err = None, f"{type(exc).__name__}: {exc}"
            for i, prm in enumerate(param_grid):
                cell = Cell(spec.name, n, i, prm)
                for r in routes:
                    if f is None:
                        cell.errors[r] = err
                        continue
                    if ladder is None:
                        cell.errors[r] = "ladder finer than the grid"
                        continue
                    try:
                        cell.totals[r] = evaluate(f, domain, prm, r, base, ladder).total
                    except Exception as exc:  # noqa: BLE001 - recorded per cell
                        cell.errors[r] = f"{type(exc).__name__}: {exc}"
                cells.append(cell)
    cells.sort(key=lambda c: (c.func, c.param_index, c.n))
    return EquivalenceReport(cells, list(routes), sorted(sizes), getattr(domain, "label", ""),
                             base)


# ---------------------------------------------------------------------------
# Whitney-type estimate


@dataclass
class WhitneyResult:
    lhs: float
    rhs: float
    ratio: float


def _lv(a: np.ndarray, w: float, v: float) -> float:
    if a.size == 0:
        return 0.0
    if math.isinf(v):
        return float(np.max(a))
    return float((np.sum(a ** v) * w) ** (1.0 / v))


def whitney_check(f: SampledFunction, domain: Domain, N: int, v: float) -> WhitneyResult:
    """Global polynomial residual against the largest ``N``-th difference on a convex domain.

    ``lhs``: ``L_v`` norm over the domain of ``f`` minus its least-squares
    polynomial of degree ``< N``.  ``rhs``: maximum over grid steps ``|h|``
    up to the diameter of the ``L_v`` norm of the domain-restricted
    difference.  Both are unnormalised; ``ratio = lhs / rhs`` with ``0/0 = 0``.
    """
    if N < 1:
        raise ParameterError("order must be positive")
    if not (v > 0):
        raise ParameterError("v must be positive")
    diam, convex = domain_metrics(domain)
    if not convex:
        raise GeometryError("the Whitney check needs a convex domain")
    grid = f.grid
    mask = domain.mask(grid)
    w = grid.cell_volume
    vals = f.values[mask]
    if vals.size == 0:
        return WhitneyResult(0.0, 0.0, 0.0)
    pts = grid.points()[mask.ravel()]
    z = (pts - pts.mean(axis=0)) / diam
    V = monomials(z, monomial_exponents(grid.d, N))
    coef, *_ = np.linalg.lstsq(V, vals, rcond=None)
    lhs = _lv(np.abs(vals - V @ coef), w, v)

    ks = lattice_ball(grid, diam * (1 + 1e-9) + grid.spacing, dedup=False)
    ks = ks[((ks * grid.spacing) ** 2).sum(axis=1) <= diam ** 2 * (1 + 1e-12)]
    ks = ks[np.all(np.abs(ks) * N <= grid.n - 1, axis=1)]
    fg = OffsetGather(f.values, grid, 0)
    mg = OffsetGather(mask, grid, False)
    coeffs = binomial_weights(N)
    flat_mask = mask.ravel()
    rhs = 0.0
    for blk in offset_blocks(len(ks), grid.size * (N + 1)):
        kb = ks[blk]
        delta = sum(coeffs[ell] * fg(ell * kb) for ell in range(N + 1))
        # convex: the segment lies inside once both endpoints do
        adm = mg(N * kb) & flat_mask[None, :]
        a = np.where(adm, np.abs(delta), 0.0)
        if math.isinf(v):
            rhs = max(rhs, float(a.max()))
        else:
            rhs = max(rhs, float(((a ** v).sum(axis=1) * w).max() ** (1.0 / v)))

    scale = _lv(np.abs(vals), w, v)
    zero = 1e-12 * max(scale, np.finfo(float).tiny)
    lhs = 0.0 if lhs <= zero else lhs
    rhs = 0.0 if rhs <= zero else rhs
    if rhs == 0.0:
        ratio = 0.0 if lhs == 0.0 else math.inf
    else:
        ratio = lhs / rhs
    return WhitneyResult(lhs, rhs, ratio)


# ---------------------------------------------------------------------------
# refinement


@dataclass
class RefinementResult:
    sizes: list[int]
    totals: list[float]
    ratios: list[float]        # totals[i+1] / totals[i]
    drift_flag: bool           # finest pair changed by more than a factor 2


def refinement_study(spec: CorpusSpec, route: str, prm: ValidatedParams, sizes: Sequence[int],
                     domain: Domain | None = None, base: str = "plain") -> RefinementResult:
    sizes = list(sizes)
    if len(sizes) < 3:
        raise ParameterError("a refinement study needs at least three sizes")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ParameterError("sizes must increase")
    domain = domain if domain is not None else FullTorus(prm.d)
    totals = []
    for n in sizes:
        grid = grid_for_domain(domain, n, prm.d)
        totals.append(evaluate(sample(spec, grid), domain, prm, route, base).total)
    ratios = []
    for a, b in zip(totals, totals[1:]):
        r = ratio_of(b, a)
        ratios.append(1.0 if r == BOTH_ZERO else (math.inf if r is None else r))
    last = ratios[-1]
    flag = not (0.5 <= last <= 2.0)
    return RefinementResult(sizes, totals, ratios, flag)


__all__ = [
    "ROUTES", "BOTH_ZERO", "evaluate", "ratio_of", "RatioRecord", "compare_norms", "Cell",
    "PairStats", "EquivalenceReport", "sweep", "WhitneyResult", "whitney_check",
    "RefinementResult", "refinement_study",
]
