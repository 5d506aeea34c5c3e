"""Acceptance gate: seven criteria, one pass/fail line each."""

from __future__ import annotations

import math
import time

import numpy as np
import pytest
from scipy.optimize import linprog

from oracles import diff_seminorm_oracle, osc_seminorm_oracle
from smnorm import (CorpusSpec, FullTorus, Interval, SampledFunction, build_local_basis,
                    build_partition, default_ladder, delta_n, diff_seminorm,
                    grid_for_domain, local_average_term, make_grid, morrey_norm, osc_seminorm,
                    params, parse_corpus_spec, power_identity_check, project, regular_polygon,
                    sample)
from smnorm.differences import difference_profile
from smnorm.harness import BOTH_ZERO, ratio_of, sweep, whitney_check
from smnorm.lp import lp_norm
from smnorm.oscillation import monomial_exponents, monomials, oscillation_profile


@pytest.fixture
def announce(capsys):
    def _print(number: int, ok: bool, detail: str, elapsed: float):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f} s) {detail}")
    return _print


def _corpus(texts):
    return [parse_corpus_spec(t) for t in texts]


# ---------------------------------------------------------------------------
# 1. exact algebraic identities


def _criterion_1_errors() -> dict[str, float]:
    rng = np.random.default_rng(11)
    err = {}

    g = make_grid(1, 256, False, 0.0, 1.0)
    worst = 0.0
    for N in range(1, 5):
        for _ in range(10):
            coef = rng.standard_normal(N)
            f = sample(CorpusSpec("polynomial", {"coefficients": list(coef)}), g)
            h = int(rng.integers(1, 40)) * g.spacing
            x = g.node((int(rng.integers(0, 256 - N * 40)),))
            worst = max(worst, abs(delta_n(f, x, h, N)))
    err["annihilation"] = worst

    worst = 0.0
    for N in range(1, 5):
        f = sample(CorpusSpec("polynomial", {"coefficients": [0.0] * N + [1.0]}), g)
        for hk in (1, 5, 16, 40):
            h = hk * g.spacing
            for xi in (0, 17, 60):
                got = delta_n(f, g.node((xi,)), h, N)
                exact = math.factorial(N) * h ** N
                worst = max(worst, abs(got - exact) / exact)
    err["leading"] = worst

    worst = 0.0
    for dom, n in ((FullTorus(1), 128), (Interval(0, 1), 128), (regular_polygon(5), 32)):
        grid = grid_for_domain(dom, n)
        nodes = np.argwhere(dom.mask(grid))
        for _ in range(8):
            x = grid.node(tuple(nodes[rng.integers(len(nodes))]))
            t = float(rng.choice([0.1, 0.2, 0.3]))
            N = int(rng.integers(1, 4))
            basis = build_local_basis(dom, grid, x, t, N)
            exps = monomial_exponents(grid.d, N)
            ref = monomials(basis.local, exps) @ rng.standard_normal(len(exps))
            scale = max(1.0, np.max(np.abs(ref)))
            proj = project(ref, basis).node_values
            worst = max(worst, np.max(np.abs(proj - ref)) / scale)
            fvals = rng.standard_normal(len(ref))
            lhs = project(fvals - ref, basis).node_values
            rhs = project(fvals, basis).node_values - ref
            worst = max(worst, np.max(np.abs(lhs - rhs)) / scale)
    err["projection"] = worst

    worst = 0.0
    for dom, n in ((FullTorus(1), 256), (Interval(0, 1), 256), (regular_polygon(5), 64)):
        grid = grid_for_domain(dom, n)
        for spec in ("random_smooth seed=5 cutoff=6", "cusp alpha=0.7 center=0.45"):
            f = sample(parse_corpus_spec(spec), grid)
            for mu in (0.5, 1.0, 2.0, 3.0):
                lhs, rhs = power_identity_check(f, dom, 1.5, 3.0, mu)
                worst = max(worst, abs(lhs - rhs) / lhs)
    err["power"] = worst

    worst = 0.0
    for dom, n in ((FullTorus(1), 256), (regular_polygon(5), 64), (FullTorus(2), 64)):
        grid = grid_for_domain(dom, n, getattr(dom, "d", 1))
        f = sample(parse_corpus_spec("random_smooth seed=9 cutoff=5"), grid)
        for p in (1.0, 2.0, 3.5):
            mn = morrey_norm(f, dom, p, p)
            lp = (np.sum(np.abs(f.values[dom.mask(grid)]) ** p) * grid.cell_volume) ** (1 / p)
            worst = max(worst, abs(mn - lp) / lp)
    err["p=u"] = worst

    worst = 0.0
    for d, n in ((1, 256), (1, 1024), (2, 64)):
        part = build_partition(make_grid(d, n, True))
        total = part.symbols.sum(axis=0)
        inside = part.radius <= 2.0 ** part.J
        worst = max(worst, np.max(np.abs(total[inside] - 1.0)))
    err["telescoping"] = worst
    return err


def test_criterion_1_exact_identities(announce):
    t0 = time.perf_counter()
    err = _criterion_1_errors()
    elapsed = time.perf_counter() - t0
    limits = {"annihilation": 1e-10, "leading": 1e-12, "projection": 1e-10, "power": 1e-12,
              "p=u": 1e-10, "telescoping": 1e-10}
    ok = all(err[k] <= limits[k] for k in limits) and elapsed < 30
    announce(1, ok, " ".join(f"{k}={v:.1e}" for k, v in err.items()), elapsed)
    for k in limits:
        assert err[k] <= limits[k], k
    assert elapsed < 30


# ---------------------------------------------------------------------------
# 2. brute-force oracle on a 64-node torus

ORACLE_FUNCS = ["trig_mode k=1", "trig_mode k=3 complex=true", "cusp alpha=1.5 center=0.3",
                "weierstrass a=0.5 b=3 levels=4", "random_smooth seed=3 cutoff=8"]
ORACLE_PARAMS = [
    dict(s=0.5, u=2.0, p=2.0, q=2.0, v=2.0, N=1, T=1.0),
    dict(s=0.7, u=4.0, p=2.0, q=2.0, v=1.0, N=2, T=0.5),
    dict(s=1.2, u=3.0, p=1.0, q=math.inf, v=math.inf, N=3, T=1.0),
]


def test_criterion_2_oracle(announce):
    t0 = time.perf_counter()
    grid = make_grid(1, 64, True)
    dom = FullTorus(1)
    worst = 0.0
    for text in ORACLE_FUNCS:
        f = sample(parse_corpus_spec(text), grid)
        for raw in ORACLE_PARAMS:
            prm = params(**raw)
            ref_d = diff_seminorm_oracle(f.values, **raw)
            ref_o = osc_seminorm_oracle(f.values, **raw)
            worst = max(worst, abs(diff_seminorm(f, dom, prm) - ref_d) / ref_d,
                        abs(osc_seminorm(f, dom, prm) - ref_o) / ref_o)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 60
    announce(2, ok, f"max relative deviation {worst:.1e} over 5 functions x 3 parameter sets",
             elapsed)
    assert worst <= 1e-10
    assert elapsed < 60


# ---------------------------------------------------------------------------
# 3. scaling laws


def middle_third(ladder) -> np.ndarray:
    """Ladder indices ``i`` with ``L/3 <= i <= 2L/3`` for a ladder of ``L`` radii."""
    L = len(ladder)
    return np.arange(math.ceil(L / 3), math.floor(2 * L / 3) + 1)


def _slope(radii, values) -> float:
    return float(np.polyfit(np.log2(radii), np.log2(values), 1)[0])


def test_criterion_3_scaling(announce):
    t0 = time.perf_counter()
    grid = make_grid(1, 1024, True)
    dom = FullTorus(1)
    radii = default_ladder(grid).radii[middle_third(default_ladder(grid))]
    funcs = {"sin": SampledFunction(grid, np.sin(2 * np.pi * grid.axis(0)))}
    for seed in range(5):
        funcs[f"rs{seed}"] = sample(CorpusSpec("random_smooth", {"seed": seed, "cutoff": 4}), grid)
    worst, where = 0.0, ""
    for name, f in funcs.items():
        for N in (1, 2, 3):
            for v in (1.0, 2.0):
                dmax = difference_profile(f, dom, N, v, radii).reshape(len(radii), -1).max(1)
                omax = oscillation_profile(f, dom, N, v, radii).reshape(len(radii), -1).max(1)
                for label, vals in (("diff", dmax), ("osc", omax)):
                    dev = abs(_slope(radii, vals) - N)
                    if dev > worst:
                        worst, where = dev, f"{label} {name} N={N} v={v}"
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.25 and elapsed < 60
    announce(3, ok, f"max |slope - N| = {worst:.3f} ({where}) on radii {radii.tolist()}", elapsed)
    assert worst <= 0.25
    assert elapsed < 60


# ---------------------------------------------------------------------------
# 4. main equivalence on the torus

TORUS_CORPUS = ["trig_mode k=1", "trig_mode k=2", "trig_mode k=5", "cusp alpha=1.5 center=0.3",
                "cusp alpha=2.5 center=0.6", "weierstrass a=0.25 b=2 levels=5",
                "random_smooth seed=1 cutoff=8", "random_smooth seed=2 cutoff=4",
                "polynomial coefficients=1"]


def test_criterion_4_torus_equivalence(announce):
    t0 = time.perf_counter()
    prms = [params(s=0.7, u=u, p=2, q=2, v=2, N=2, T=1, R=1) for u in (2.0, 4.0)]
    assert all(p.window_ok for p in prms)
    rep = sweep(_corpus(TORUS_CORPUS), prms, [256, 512, 1024], FullTorus(1),
                ["lp", "diff", "osc"])
    C = rep.equivalence_constant()
    drift = max(rep.drift(a, b) for a, b in rep.pairs)
    errors = [c for c in rep.cells if c.errors]
    elapsed = time.perf_counter() - t0
    ok = C <= 50 and drift < 1.5 and not errors and elapsed < 600
    announce(4, ok, f"C = {C:.3f}, drift 512->1024 = {drift:.4f}, {len(rep.cells)} cells",
             elapsed)
    assert not errors
    assert len(rep.cells) == len(TORUS_CORPUS) * 2 * 3
    assert C <= 50
    assert drift < 1.5
    assert elapsed < 600


# ---------------------------------------------------------------------------
# 5. domain forms

INTERVAL_CORPUS = ["trig_mode k=1", "trig_mode k=3", "cusp alpha=1.5 center=0.3",
                   "weierstrass a=0.25 b=2 levels=5", "random_smooth seed=1 cutoff=8",
                   "random_smooth seed=2 cutoff=4", "polynomial coefficients=0,1,1"]
PENTAGON_CORPUS = ["trig_mode k=1", "trig_mode k=2,1", "cusp alpha=1.5 center=0.45,0.5",
                   "weierstrass a=0.25 b=2 levels=4", "random_smooth seed=1 cutoff=4",
                   "random_smooth seed=2 cutoff=3", "polynomial coefficients=0,1;1,0"]


def test_criterion_5_domain_forms(announce):
    t0 = time.perf_counter()
    results = []
    setups = [(Interval(0, 1), INTERVAL_CORPUS, [256, 512], 1.0, 1),
              (regular_polygon(5), PENTAGON_CORPUS, [64, 128], 0.25, 2)]
    for dom, corpus, sizes, T, d in setups:
        prms = [params(s=0.7, u=2, p=2, q=2, v=v, N=2, T=T, R=1, d=d) for v in (1.0, 2.0)]
        rep = sweep(_corpus(corpus), prms, sizes, dom, ["diff", "osc"], base="avg", d=d)
        results.append((dom.label, rep.equivalence_constant(), rep.drift("diff", "osc"),
                        sum(1 for c in rep.cells if c.errors)))
    elapsed = time.perf_counter() - t0
    ok = all(C <= 50 and dr < 1.5 and ne == 0 for _, C, dr, ne in results) and elapsed < 600
    detail = "; ".join(f"{lab}: C={C:.3f} drift={dr:.4f}" for lab, C, dr, _ in results)
    announce(5, ok, detail, elapsed)
    for _, C, dr, ne in results:
        assert ne == 0
        assert C <= 50
        assert dr < 1.5
    assert elapsed < 600


# ---------------------------------------------------------------------------
# 6. lemma suites

LEMMA_CORPUS = ["trig_mode k=1", "trig_mode k=3", "cusp alpha=1.5 center=0.3",
                "cusp alpha=0.5 center=0.7", "weierstrass a=0.25 b=2 levels=5",
                "random_smooth seed=1 cutoff=8", "random_smooth seed=2 cutoff=4",
                "polynomial coefficients=1", "polynomial coefficients=0,1,1"]


def _lemma_domains():
    return [(FullTorus(1), 512), (Interval(0, 1), 512), (regular_polygon(5), 64)]


def _for_domain(text: str, d: int) -> CorpusSpec:
    if d == 2:
        text = text.replace("center=0.3", "center=0.4,0.5").replace("center=0.7", "center=0.6,0.5")
    return parse_corpus_spec(text)


def l1_best_error(V: np.ndarray, vals: np.ndarray, w: np.ndarray) -> float:
    """``min_a sum w |vals - V a|`` by linear programming."""
    m, k = V.shape
    c = np.concatenate([np.zeros(k), w])
    A = np.block([[V, -np.eye(m)], [-V, -np.eye(m)]])
    b = np.concatenate([vals, -vals])
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * k + [(0, None)] * m,
                  method="highs")
    assert res.status == 0
    return float(res.fun)


def test_criterion_6_lemmas(announce):
    t0 = time.perf_counter()
    radius_ratio, avg_const = 0.0, 0.0
    for dom, n in _lemma_domains():
        grid = grid_for_domain(dom, n, getattr(dom, "d", 1))
        for text in LEMMA_CORPUS:
            f = sample(_for_domain(text, grid.d), grid)
            for p, u in ((2.0, 2.0), (2.0, 4.0), (1.0, 3.0)):
                m = morrey_norm(f, dom, p, u)
                for v in (0.5, 1.0, 2.0, math.inf):
                    terms = [local_average_term(f, dom, v, R, p, u) for R in (0.25, 0.5, 1.0)]
                    radius_ratio = max(radius_ratio, max(terms) / min(terms))
                    if v <= p:
                        avg_const = max(avg_const, max(terms) / m)

    # quasi-optimality of the local projection against the exact L1 best fit
    rng = np.random.default_rng(2024)
    qo_ok, qo_worst = True, 0.0
    doms = [(FullTorus(1), 128), (Interval(0, 1), 128), (regular_polygon(5), 32)]
    for draw in range(50):
        dom, n = doms[draw % 3]
        grid = grid_for_domain(dom, n, getattr(dom, "d", 1))
        spec = CorpusSpec("random_smooth", {"seed": int(rng.integers(1 << 30)),
                                            "cutoff": int(rng.integers(2, 8))})
        f = sample(spec, grid).values + 0.1 * rng.standard_normal(grid.shape)
        nodes = np.argwhere(dom.mask(grid))
        x = grid.node(tuple(nodes[rng.integers(len(nodes))]))
        t = float(rng.choice([0.05, 0.1, 0.2]))
        N = int(rng.integers(1, 4))
        basis = build_local_basis(dom, grid, x, t, N)
        vals = f[tuple(basis.nodes.T)]
        proj_err = np.sum(np.abs(vals - project(vals, basis).node_values) * basis.weights)
        V = monomials(basis.local, basis.exponents)
        best = l1_best_error(V, vals, basis.weights)
        c2 = proj_err / best
        bound = 1 + basis.pointwise_constant * t ** -grid.d * basis.measure
        qo_worst = max(qo_worst, c2 / bound)
        qo_ok &= c2 <= bound * (1 + 1e-9)

    # Whitney-type estimate on two convex domains, two resolutions
    whitney = {}
    zero_ok = True
    whitney_domains = ((Interval(0, 1), (128, 256)), (regular_polygon(5), (32, 64)))
    for dom, sizes in whitney_domains:
        for n in sizes:
            grid = grid_for_domain(dom, n)
            worst = 0.0
            for seed in range(20):
                f = sample(CorpusSpec("random_smooth", {"seed": seed, "cutoff": 4}), grid)
                for N in (1, 2, 3):
                    worst = max(worst, whitney_check(f, dom, N, 2.0).ratio)
            whitney[(dom.label, n)] = worst
            coef = [1.0, -2.0, 0.5] if grid.d == 1 else [[1.0, -2.0, 0.5], [0.3, 1.0, 0], [2.0, 0, 0]]
            poly = sample(CorpusSpec("polynomial", {"coefficients": coef}), grid)
            for v in (1.0, 2.0, math.inf):
                zero_ok &= whitney_check(poly, dom, 3, v).ratio == 0.0
    whitney_C = max(whitney.values())
    stable = all(whitney[(lab, b)] <= 1.5 * whitney[(lab, a)]
                 for lab, (a, b) in ((dom.label, sizes) for dom, sizes in whitney_domains))

    elapsed = time.perf_counter() - t0
    ok = (radius_ratio <= 20 and avg_const <= 10 and qo_ok and whitney_C <= 20 and stable
          and zero_ok and elapsed < 300)
    announce(6, ok, f"radius ratio {radius_ratio:.3f}, averaging C {avg_const:.3f}, "
                    f"quasi-optimality c2/bound <= {qo_worst:.3f}, Whitney C {whitney_C:.3f}",
             elapsed)
    assert radius_ratio <= 20
    assert avg_const <= 10
    assert qo_ok
    assert whitney_C <= 20 and stable
    assert zero_ok
    assert elapsed < 300


# ---------------------------------------------------------------------------
# 7. monotonicity and structure


def test_criterion_7_structure(announce, tmp_path):
    t0 = time.perf_counter()
    Ts = [1 / 16, 1 / 8, 1 / 4, 1 / 2, 1.0]
    mono_T = True
    for dom, n in ((FullTorus(1), 256), (Interval(0, 1), 256)):
        grid = grid_for_domain(dom, n)
        for text in ("cusp alpha=1.5 center=0.3", "random_smooth seed=4 cutoff=6"):
            f = sample(parse_corpus_spec(text), grid)
            for fn in (diff_seminorm, osc_seminorm):
                vals = [fn(f, dom, params(s=0.7, u=4, p=2, N=2, T=T)) for T in Ts]
                mono_T &= all(b >= a for a, b in zip(vals, vals[1:]))

    mono_N = True
    for dom, n in ((FullTorus(1), 256), (regular_polygon(5), 32)):
        grid = grid_for_domain(dom, n, getattr(dom, "d", 1))
        f = sample(parse_corpus_spec("random_smooth seed=8 cutoff=6"), grid)
        radii = [0.5, 0.2, 0.1]
        prev = None
        for N in (1, 2, 3, 4):
            cur = oscillation_profile(f, dom, N, 2.0, radii)
            if prev is not None:
                mono_N &= bool(np.all(cur <= prev * (1 + 1e-9) + 1e-13))
            prev = cur

    rng = np.random.default_rng(77)
    grid = make_grid(1, 256, True)
    tri_ok, tri_worst = True, 0.0
    for i in range(20):
        p = float(rng.choice([0.5, 0.8, 1.0, 2.0]))
        q = float(rng.choice([0.5, 1.0, 2.0, math.inf]))
        prm = params(s=float(rng.uniform(0.2, 1.5)), u=p * 2, p=p, q=q)
        f = sample(CorpusSpec("random_smooth", {"seed": 2 * i, "cutoff": 20}), grid)
        g = sample(CorpusSpec("random_smooth", {"seed": 2 * i + 1, "cutoff": 50,
                                                "scale": float(rng.uniform(0.1, 5))}), grid)
        tau = prm.tau
        lhs = lp_norm(f + g, prm) ** tau
        rhs = lp_norm(f, prm) ** tau + lp_norm(g, prm) ** tau
        tri_worst = max(tri_worst, lhs / rhs)
        tri_ok &= lhs <= rhs * (1 + 1e-12)

    sym_ok = True
    for a, b in ((2.5, 0.3), (1e-3, 7.0), (1.0, 1.0)):
        sym_ok &= abs(ratio_of(a, b) * ratio_of(b, a) - 1) <= 1e-12
    sym_ok &= ratio_of(0.0, 0.0) == BOTH_ZERO

    corpus = _corpus(["trig_mode k=1", "cusp alpha=1.5 center=0.3",
                      "random_smooth seed=3 cutoff=5", "polynomial coefficients=2"])
    prms = [params(s=0.7, u=u, p=2, N=2) for u in (2.0, 4.0)]
    paths = []
    for run in range(2):
        rep = sweep(corpus, prms, [128, 256], FullTorus(1), ["lp", "diff", "osc", "clubsuit"])
        paths.append(rep.write(tmp_path / f"run{run}.csv")[0])
    same = open(paths[0], "rb").read() == open(paths[1], "rb").read()
    same_manifest = (open(paths[0] + ".manifest", "rb").read()
                     == open(paths[1] + ".manifest", "rb").read())

    elapsed = time.perf_counter() - t0
    ok = mono_T and mono_N and tri_ok and sym_ok and same and same_manifest and elapsed < 120
    announce(7, ok, f"T-monotone={mono_T} N-monotone={mono_N} "
                    f"quasi-triangle max lhs/rhs={tri_worst:.4f} symmetric={sym_ok} "
                    f"byte-identical={same and same_manifest}", elapsed)
    assert mono_T
    assert mono_N
    assert tri_ok
    assert sym_ok
    assert same and same_manifest
    assert elapsed < 120
