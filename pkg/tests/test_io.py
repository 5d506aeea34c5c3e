import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from smnorm import (FullTorus, GeometryError, GridFunIOError, Interval, ParameterError,
                    SampledFunction, make_grid, parse_corpus_spec, sample)
from smnorm.io import (atomic_write, domain_from_config, gridfun_bytes, load_config,
                       params_grid, parse_gridfun, parse_kv, read_config, read_gridfun,
                       write_gridfun)


@pytest.mark.parametrize("spec,d,periodic", [("random_smooth seed=1 cutoff=5", 1, True),
                                             ("trig_mode k=1,2 complex=true", 2, True),
                                             ("cusp alpha=0.5", 1, False)])
def test_roundtrip_bit_exact(tmp_path, spec, d, periodic):
    g = make_grid(d, 32, periodic, (0.125,) * d, 2.0)
    f = sample(parse_corpus_spec(spec), g)
    path = tmp_path / "f.grid"
    write_gridfun(f, path)
    h = read_gridfun(path)
    assert h.grid == g
    assert h.values.dtype == f.values.dtype
    assert h.values.tobytes() == f.values.tobytes()


@given(vals=st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64),
                     min_size=16, max_size=16))
def test_roundtrip_any_finite_values(vals):
    g = make_grid(1, 16, True)
    f = SampledFunction(g, np.array(vals))
    h = parse_gridfun(gridfun_bytes(f))
    assert h.values.tobytes() == f.values.tobytes()


def test_header_format():
    g = make_grid(1, 16, True)
    raw = gridfun_bytes(SampledFunction(g, np.arange(16.0)))
    head, _, payload = raw.partition(b"\n")
    assert head == b"SMNORM1 d=1 n=16 periodic=1 origin=0.0 extent=1.0 dtype=f64"
    assert len(payload) == 128
    assert np.frombuffer(payload, "<f8")[3] == 3.0


def test_corrupt_files(tmp_path):
    g = make_grid(1, 16, True)
    raw = gridfun_bytes(SampledFunction(g, np.ones(16)))
    with pytest.raises(GridFunIOError, match="payload"):
        parse_gridfun(raw[:-8])
    with pytest.raises(GridFunIOError, match="payload"):
        parse_gridfun(raw + b"\0")
    bad = bytearray(raw)
    bad[-8:] = np.array([np.nan]).astype("<f8").tobytes()
    with pytest.raises(GridFunIOError, match="non-finite"):
        parse_gridfun(bytes(bad))
    with pytest.raises(GridFunIOError, match="header"):
        parse_gridfun(b"HELLO\n")
    with pytest.raises(GridFunIOError, match="header"):
        parse_gridfun(b"no newline at all")
    with pytest.raises(GridFunIOError, match="grid"):
        parse_gridfun(raw.replace(b"n=16", b"n=12", 1))
    with pytest.raises(GridFunIOError):
        read_gridfun(tmp_path / "missing.grid")
    assert isinstance(GridFunIOError("x"), OSError)


def test_atomic_write_leaves_no_temporaries(tmp_path):
    target = tmp_path / "sub" / "out.csv"
    atomic_write(target, "a,b\n")
    atomic_write(target, b"c,d\n")
    assert target.read_bytes() == b"c,d\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.csv"]


def test_parse_kv():
    kv = parse_kv("a = 1\n# comment\n\nb=x=y  # trailing\na = 2\n")
    assert kv == {"a": "2", "b": "x=y"}
    with pytest.raises(ParameterError):
        parse_kv("just words")
    with pytest.raises(ParameterError):
        parse_kv(" = 3")


def test_params_grid_cross_product():
    kv = {"params.s": "0.5, 0.7", "params.u": "2,4", "params.p": "2", "params.q": "inf"}
    grid = params_grid(kv, 1)
    assert len(grid) == 4
    assert [(p.s, p.u) for p in grid] == [(0.5, 2), (0.5, 4), (0.7, 2), (0.7, 4)]
    assert all(math.isinf(p.q) and p.v == 2 and p.N == 2 and p.T == 1 and p.R == 1
               for p in grid)
    with pytest.raises(ParameterError):
        params_grid({"params.u": "2", "params.p": "2"}, 1)
    with pytest.raises(ParameterError):
        params_grid({"params.s": "1", "params.u": "2", "params.p": "2", "params.N": "1.5"}, 1)
    with pytest.raises(ParameterError):
        params_grid({"params.s": "1", "params.u": "1", "params.p": "2"}, 1)


def test_domain_from_config():
    assert domain_from_config({}, 2) == FullTorus(2)
    assert domain_from_config({"domain.kind": "interval", "domain.b": "2"}, 1) == Interval(0, 2)
    poly = domain_from_config({"domain.kind": "polytope",
                               "domain.vertices": "0 0; 1 0; 0 1"}, 2)
    assert len(poly.vertices) == 3
    lip = domain_from_config({"domain.kind": "lipschitz", "domain.graph": "tent",
                              "domain.lipschitz_bound": "2"}, 2)
    assert lip.lipschitz_bound == 2
    assert len(domain_from_config({"domain.kind": "polygon", "domain.m": "7"}, 2).vertices) == 7
    with pytest.raises(GeometryError):
        domain_from_config({"domain.kind": "polytope"}, 2)
    with pytest.raises(GeometryError):
        domain_from_config({"domain.kind": "interval", "domain.a": "x"}, 1)


CONFIG = """
grid.d = 1
grid.sizes = 64, 128
ladder.jmax = 4
domain.kind = interval
func.wave = trig_mode k=1
func.bump = random_smooth seed=3 cutoff=4
params.s = 0.7
params.u = 2
params.p = 2
routes = diff, osc
norm.base = avg
"""


def test_load_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(CONFIG)
    cfg = read_config(path)
    assert cfg.sizes == [64, 128] and cfg.jmax == 4 and cfg.jmin == 0
    assert cfg.domain == Interval(0, 1)
    assert [f.name for f in cfg.funcs] == ["wave", "bump"]
    assert cfg.routes == ["diff", "osc"] and cfg.base == "avg"
    assert len(cfg.params) == 1 and cfg.raw["grid.d"] == "1"
    with pytest.raises(GridFunIOError):
        read_config(tmp_path / "nope.cfg")
    with pytest.raises(ParameterError):
        load_config(CONFIG.replace("grid.sizes = 64, 128", "grid.sizes = many"))
