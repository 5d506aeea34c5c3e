"""Grid-function files and the key-value run configuration."""

from __future__ import annotations

import itertools
import math
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (CorpusSpec, GeometryError, GridFunIOError, ParameterError, SampledFunction,
                   ValidatedParams, make_grid, parse_corpus_spec, validate_params,
                   SmoothnessParams)
from .geometry import (ConvexPolytope, Domain, FullTorus, Interval, SpecialLipschitz,
                       parse_domain, regular_polygon)

MAGIC = "SMNORM1"
_LE64 = np.dtype("<f8")


# ---------------------------------------------------------------------------
# grid-function files


def _header(f: SampledFunction) -> str:
    g = f.grid
    origin = ",".join(repr(float(o)) for o in g.origin)
    dtype = "c64" if f.is_complex else "f64"
    return (f"{MAGIC} d={g.d} n={g.n} periodic={int(g.periodic)} origin={origin} "
            f"extent={float(g.extent)!r} dtype={dtype}\n")


def gridfun_bytes(f: SampledFunction) -> bytes:
    vals = np.ascontiguousarray(f.values)
    if f.is_complex:
        payload = np.ascontiguousarray(vals.astype(np.complex128)).view(np.float64)
    else:
        payload = vals.astype(np.float64)
    return _header(f).encode("utf-8") + payload.astype(_LE64).tobytes()


def atomic_write(path, data: bytes | str) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_gridfun(f: SampledFunction, path) -> None:
    try:
        atomic_write(path, gridfun_bytes(f))
    except OSError as exc:
        raise GridFunIOError(f"cannot write {path}: {exc}") from exc


_HEADER_RE = re.compile(
    r"^SMNORM1 d=(\d+) n=(\d+) periodic=([01]) origin=(\S+) extent=(\S+) dtype=(f64|c64)$")


def parse_gridfun(raw: bytes, source: str = "<bytes>") -> SampledFunction:
    nl = raw.find(b"\n")
    if nl < 0:
        raise GridFunIOError(f"{source}: missing header line")
    try:
        head = raw[:nl].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise GridFunIOError(f"{source}: header is not UTF-8") from exc
    m = _HEADER_RE.match(head)
    if not m:
        raise GridFunIOError(f"{source}: malformed header {head!r}")
    d, n, periodic = int(m[1]), int(m[2]), m[3] == "1"
    try:
        origin = tuple(float(t) for t in m[4].split(","))
        extent = float(m[5])
        grid = make_grid(d, n, periodic, origin, extent)
    except (ValueError, ParameterError, GeometryError) as exc:
        raise GridFunIOError(f"{source}: invalid grid in header: {exc}") from exc
    if len(origin) != d:
        raise GridFunIOError(f"{source}: origin needs {d} coordinates")
    cplx = m[6] == "c64"
    count = grid.size * (2 if cplx else 1)
    payload = raw[nl + 1:]
    if len(payload) != count * 8:
        raise GridFunIOError(
            f"{source}: payload has {len(payload)} bytes, header implies {count * 8}")
    vals = np.frombuffer(payload, dtype=_LE64).astype(np.float64)
    if not np.all(np.isfinite(vals)):
        raise GridFunIOError(f"{source}: payload contains non-finite values")
    if cplx:
        vals = vals.view(np.complex128)
    return SampledFunction(grid, vals.reshape(grid.shape))


def read_gridfun(path) -> SampledFunction:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise GridFunIOError(f"cannot read {path}: {exc}") from exc
    return parse_gridfun(raw, str(path))


# ---------------------------------------------------------------------------
# key-value configuration

PARAM_KEYS = ("s", "u", "p", "q", "v", "N", "T", "R")


def parse_kv(text: str, source: str = "<config>") -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; later keys override earlier ones."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (t.strip() for t in line.split("=", 1))
        if not key:
            raise ParameterError(f"{source}:{lineno}: empty key")
        out[key] = val
    return out


def _num(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "infinity", "+inf"):
        return math.inf
    return float(t)


def _list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def domain_from_config(kv: dict[str, str], d: int) -> Domain:
    kind = kv.get("domain.kind", "torus").strip().lower()
    try:
        if kind == "torus":
            return FullTorus(d)
        if kind == "interval":
            return Interval(_num(kv.get("domain.a", "0")), _num(kv.get("domain.b", "1")))
        if kind in ("pentagon", "polygon"):
            m = int(kv.get("domain.m", "5"))
            return regular_polygon(m)
        if kind == "polytope":
            verts = tuple(tuple(float(c) for c in v.replace(",", " ").split())
                          for v in kv["domain.vertices"].split(";") if v.strip())
            return ConvexPolytope(verts)
        if kind == "lipschitz":
            return SpecialLipschitz(kv.get("domain.graph", "flat").strip(),
                                    _num(kv.get("domain.lipschitz_bound", "1")),
                                    level=_num(kv.get("domain.level", "0.25")))
        return parse_domain(kind, d)
    except KeyError as exc:
        raise GeometryError(f"domain kind {kind!r} needs key {exc.args[0]}") from exc
    except ValueError as exc:
        if isinstance(exc, (GeometryError, ParameterError)):
            raise
        raise GeometryError(f"bad domain description: {exc}") from exc


@dataclass
class RunConfig:
    """Everything a sweep needs, resolved from a key-value file."""

    d: int = 1
    sizes: list[int] = field(default_factory=lambda: [256])
    domain: Domain = field(default_factory=FullTorus)
    params: list[ValidatedParams] = field(default_factory=list)
    funcs: list[CorpusSpec] = field(default_factory=list)
    routes: list[str] = field(default_factory=lambda: ["lp", "diff", "osc"])
    base: str = "plain"
    jmin: int = 0
    jmax: int | None = None
    raw: dict[str, str] = field(default_factory=dict)


def params_grid(kv: dict[str, str], d: int) -> list[ValidatedParams]:
    """Cross product over comma-separated ``params.*`` values, in key order ``s,u,p,q,v,N,T,R``."""
    defaults = {"q": "2", "v": "2", "N": "2", "T": "1", "R": "1"}
    lists = {}
    for k in PARAM_KEYS:
        raw = kv.get(f"params.{k}", defaults.get(k))
        if raw is None:
            raise ParameterError(f"missing params.{k}")
        lists[k] = [_num(t) for t in _list(raw)]
    out = []
    for combo in itertools.product(*(lists[k] for k in PARAM_KEYS)):
        rec = dict(zip(PARAM_KEYS, combo))
        if rec["N"] != int(rec["N"]):
            raise ParameterError("params.N must be an integer")
        rec["N"] = int(rec["N"])
        out.append(validate_params(SmoothnessParams(d=d, **rec)))
    return out


def load_config(text: str, source: str = "<config>") -> RunConfig:
    kv = parse_kv(text, source)
    try:
        d = int(kv.get("grid.d", "1"))
        sizes = [int(t) for t in _list(kv.get("grid.sizes", "256"))]
        jmin = int(kv.get("ladder.jmin", "0"))
        jmax = int(kv["ladder.jmax"]) if "ladder.jmax" in kv else None
    except ValueError as exc:
        raise ParameterError(f"{source}: {exc}") from exc
    domain = domain_from_config(kv, d)
    funcs = [parse_corpus_spec(v, name=k.split(".", 1)[1])
             for k, v in kv.items() if k.startswith("func.")]
    routes = _list(kv.get("routes", kv.get("norm.route", "lp,diff,osc")))
    return RunConfig(d=d, sizes=sizes, domain=domain, params=params_grid(kv, d), funcs=funcs,
                     routes=routes, base=kv.get("norm.base", "plain").strip(), jmin=jmin,
                     jmax=jmax, raw=kv)


def read_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise GridFunIOError(f"cannot read {path}: {exc}") from exc
    return load_config(text, str(path))


__all__ = [
    "MAGIC", "gridfun_bytes", "atomic_write", "write_gridfun", "parse_gridfun", "read_gridfun",
    "parse_kv", "domain_from_config", "RunConfig", "params_grid", "load_config", "read_config",
]
