"""Discrete Morrey norms and the local-average base terms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import GeometryError, Grid, ParameterError, SampledFunction
from .geometry import Domain, FullTorus, ball_max, ball_sums


@dataclass(frozen=True)
class RadiusLadder:
    """Dyadic radii ``2**-j * extent`` for ``j = jmin..jmax`` (coarse to fine)."""

    jmin: int
    jmax: int
    extent: float

    def __post_init__(self):
        if self.jmin > self.jmax:
            raise ParameterError(f"empty ladder: jmin={self.jmin} > jmax={self.jmax}")

    @property
    def js(self) -> np.ndarray:
        return np.arange(self.jmin, self.jmax + 1)

    @property
    def radii(self) -> np.ndarray:
        return self.extent * 2.0 ** (-self.js.astype(float))

    def __len__(self):
        return self.jmax - self.jmin + 1

    def check(self, grid: Grid) -> "RadiusLadder":
        if self.radii[-1] < 2 * grid.spacing * (1 - 1e-12):
            raise ParameterError(
                f"finest radius {self.radii[-1]:.3g} is below two grid spacings")
        return self

    def upto(self, T: float) -> np.ndarray:
        """Indices of the radii that do not exceed ``T``."""
        r = self.radii
        return np.flatnonzero(r <= T * (1 + 1e-12))


def default_ladder(grid: Grid, jmin: int = 0, jmax: int | None = None) -> RadiusLadder:
    """Ladder from ``extent`` down to two grid spacings."""
    if jmax is None:
        jmax = int(round(math.log2(grid.n))) - 1
    return RadiusLadder(jmin, jmax, grid.extent).check(grid)


def _check_exponents(p: float, u: float):
    if not (0 < p <= u < math.inf):
        raise ParameterError(f"need 0 < p <= u < inf, got p={p}, u={u}")


def morrey_norm_array(values: np.ndarray, grid: Grid, mask: np.ndarray, p: float, u: float,
                      ladder: RadiusLadder) -> float:
    """Morrey norm of nonnegative node values (``values`` need not be finite-checked)."""
    _check_exponents(p, u)
    if len(ladder) == 0:
        raise ParameterError("empty ladder")
    if not mask.any():
        return 0.0
    a = np.where(mask, np.abs(values), 0.0) ** p
    radii = ladder.radii
    sums = ball_sums(a, grid, radii) * grid.cell_volume
    np.maximum(sums, 0.0, out=sums)
    expo = grid.d * (1.0 / u - 1.0 / p)
    best = 0.0
    for i, r in enumerate(radii):
        m = sums[i][mask].max()
        best = max(best, r ** expo * m ** (1.0 / p))
    return float(best)


def morrey_norm(f: SampledFunction, domain: Domain, p: float, u: float,
                ladder: RadiusLadder | None = None) -> float:
    """``max_{y, r} r**(d(1/u - 1/p)) * (sum_{B(y,r) in domain} |f|**p w)**(1/p)``.

    Centres run over grid nodes inside the domain, radii over the dyadic ladder.
    """
    grid = f.grid
    if isinstance(domain, FullTorus) and not grid.periodic:
        raise GeometryError("the torus needs a periodic grid")
    ladder = ladder if ladder is not None else default_ladder(grid)
    return morrey_norm_array(np.abs(f.values), grid, domain.mask(grid), p, u, ladder)


def local_average(f: SampledFunction, domain: Domain, v: float, R: float) -> np.ndarray:
    """``g(x) = (sum_{B(x,R) in domain} |f|**v w)**(1/v)``; the ball maximum for ``v = inf``."""
    grid = f.grid
    mask = domain.mask(grid)
    a = np.where(mask, np.abs(f.values), 0.0)
    if math.isinf(v):
        g = ball_max(a, grid, R)
    else:
        s = ball_sums(a ** v, grid, [R])[0] * grid.cell_volume
        g = np.maximum(s, 0.0) ** (1.0 / v)
    return np.where(mask, g, 0.0)


def local_average_term(f: SampledFunction, domain: Domain, v: float, R: float, p: float,
                       u: float, ladder: RadiusLadder | None = None) -> float:
    if not R > 0:
        raise ParameterError("R must be positive")
    ladder = ladder if ladder is not None else default_ladder(f.grid)
    g = local_average(f, domain, v, R)
    return morrey_norm_array(g, f.grid, domain.mask(f.grid), p, u, ladder)


def power_identity_check(f: SampledFunction, domain: Domain, p: float, u: float, mu: float,
                         ladder: RadiusLadder | None = None) -> tuple[float, float]:
    """Both sides of ``||f||_{M^u_p} = || |f|**mu ||_{M^{u/mu}_{p/mu}}**(1/mu)``."""
    if not mu > 0:
        raise ParameterError("mu must be positive")
    lhs = morrey_norm(f, domain, p, u, ladder)
    g = f.with_values(np.abs(f.values) ** mu)
    rhs = morrey_norm(g, domain, p / mu, u / mu, ladder) ** (1.0 / mu)
    return lhs, rhs


def extend_by_zero(f: SampledFunction, domain: Domain) -> SampledFunction:
    """Trivial extension: keep values inside the domain, zero elsewhere."""
    return f.with_values(np.where(domain.mask(f.grid), f.values, 0))


BASES = ("plain", "avg")


def base_term(f: SampledFunction, domain: Domain, prm, base: str = "plain",
              ladder: RadiusLadder | None = None) -> float:
    """``||f||_{M^u_p}`` for ``base='plain'``, the local-average term for ``base='avg'``."""
    if base == "plain":
        return morrey_norm(f, domain, prm.p, prm.u, ladder)
    if base in ("avg", "local_average"):
        return local_average_term(f, domain, prm.v, prm.R, prm.p, prm.u, ladder)
    raise ParameterError(f"unknown base {base!r}; expected 'plain' or 'avg'")


__all__ = [
    "RadiusLadder", "default_ladder", "morrey_norm", "morrey_norm_array", "local_average",
    "local_average_term", "power_identity_check", "extend_by_zero", "base_term", "BASES",
]
