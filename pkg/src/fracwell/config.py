"""Flat ``key=value`` run configuration with exhaustive (non fail-fast) validation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .functionals import ProblemParams
from .grid import ConfigError, Domain1D, Field, MagneticField
from .nfunc import InvalidNFunction, make_nfunction

__all__ = [
    "ConfigInvalid",
    "RunConfig",
    "parse_config",
    "load_config",
    "initial_field",
    "write_snapshot",
    "read_snapshot",
    "DEFAULTS",
]


class ConfigInvalid(ValueError):
    """Carries every violation found, not just the first."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


_FLOAT, _INT, _STR, _BOOL, _LIST = float, int, str, bool, list

SCHEMA = {
    "frac.s": _FLOAT,
    "p": _FLOAT,
    "g.kind": _STR,
    "g.q": _FLOAT,
    "g.q1": _FLOAT,
    "g.q2": _FLOAT,
    "g.normalize": _BOOL,
    "g.t": _LIST,
    "g.g": _LIST,
    "domain.a": _FLOAT,
    "domain.b": _FLOAT,
    "domain.m": _INT,
    "domain.pad": _INT,
    "magnetic.kind": _STR,
    "magnetic.c": _FLOAT,
    "initial.kind": _STR,
    "initial.center": _FLOAT,
    "initial.width": _FLOAT,
    "initial.scale": _FLOAT,
    "initial.phase": _FLOAT,
    "initial.seed": _INT,
    "initial.path": _STR,
    "evolve.dt": _FLOAT,
    "evolve.t_end": _FLOAT,
    "evolve.scheme": _STR,
    "evolve.picard_tol": _FLOAT,
    "evolve.picard_max_iters": _INT,
    "evolve.record_every": _INT,
    "evolve.snapshot_every": _INT,
    "evolve.blowup_threshold": _FLOAT,
    "wells.trials": _INT,
    "wells.cstar_trials": _INT,
    "wells.curve_candidates": _INT,
    "groundstate.iters": _INT,
    "groundstate.tol": _FLOAT,
    "analyze.trace": _STR,
    "output.dir": _STR,
    "seed": _INT,
}

DEFAULTS = {
    "frac.s": 0.5,
    "p": 3.0,
    "g.kind": "power",
    "g.q": 2.0,
    "g.normalize": False,
    "domain.a": -1.0,
    "domain.b": 1.0,
    "domain.m": 64,
    "magnetic.kind": "zero",
    "magnetic.c": 0.0,
    "initial.kind": "gaussian",
    "initial.center": 0.0,
    "initial.width": 0.2,
    "initial.scale": 0.1,
    "initial.phase": 0.0,
    "initial.seed": 0,
    "evolve.dt": 1e-3,
    "evolve.t_end": 1.0,
    "evolve.scheme": "explicit",
    "evolve.picard_tol": 1e-10,
    "evolve.picard_max_iters": 50,
    "evolve.record_every": 10,
    "evolve.snapshot_every": 0,
    "evolve.blowup_threshold": 1e6,
    "wells.trials": 64,
    "wells.cstar_trials": 64,
    "wells.curve_candidates": 8,
    "groundstate.iters": 2000,
    "groundstate.tol": 1e-9,
    "output.dir": "out",
    "seed": 12345,
}

_G_KINDS = {"power", "power_sum", "power_log", "custom"}
_INITIAL_KINDS = {"gaussian", "hat", "random", "file"}


def _convert(key, raw, typ):
    if typ is _BOOL:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {raw!r}")
    if typ is _LIST:
        try:
            return [float(x) for x in raw.replace(";", ",").split(",") if x.strip()]
        except ValueError:
            raise ValueError(f"{key}: expected a comma-separated list of numbers") from None
    if typ is _INT:
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"{key}: expected an integer, got {raw!r}") from None
    if typ is _FLOAT:
        try:
            v = float(raw)
        except ValueError:
            raise ValueError(f"{key}: expected a number, got {raw!r}") from None
        if not math.isfinite(v):
            raise ValueError(f"{key}: must be finite")
        return v
    return raw


@dataclass
class RunConfig:
    problem: ProblemParams
    values: dict
    warnings: list = field(default_factory=list)
    base_dir: Path = field(default_factory=Path.cwd)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    @property
    def seed(self) -> int:
        return int(self.values["seed"])

    def echo(self) -> str:
        return "\n".join(f"{k}={_fmt(self.values[k])}" for k in sorted(self.values))


def _fmt(v):
    if isinstance(v, list):
        return ",".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_config(text: str, base_dir=None) -> RunConfig:
    errors: list[str] = []
    vals = dict(DEFAULTS)
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected key=value")
            continue
        key, raw = (x.strip() for x in line.split("=", 1))
        if key not in SCHEMA:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        try:
            vals[key] = _convert(key, raw, SCHEMA[key])
        except ValueError as exc:
            errors.append(f"line {lineno}: {exc}")

    s, p = vals["frac.s"], vals["p"]
    if not 0 < s < 1:
        errors.append("frac.s must lie in (0, 1)")
    if not p > 1:
        errors.append("p must exceed 1")
    if vals["g.kind"] not in _G_KINDS:
        errors.append(f"g.kind must be one of {sorted(_G_KINDS)}")
    if vals["initial.kind"] not in _INITIAL_KINDS:
        errors.append(f"initial.kind must be one of {sorted(_INITIAL_KINDS)}")
    if vals["initial.kind"] == "file" and "initial.path" not in vals:
        errors.append("initial.kind=file needs initial.path")
    if vals["evolve.scheme"] not in ("explicit", "picard"):
        errors.append("evolve.scheme must be explicit or picard")
    for key in ("evolve.dt", "evolve.t_end", "evolve.picard_tol", "initial.width", "evolve.blowup_threshold"):
        if not vals[key] > 0:
            errors.append(f"{key} must be positive")
    for key in ("evolve.record_every", "evolve.picard_max_iters", "wells.trials", "wells.cstar_trials",
                "wells.curve_candidates", "groundstate.iters"):
        if vals[key] < 1:
            errors.append(f"{key} must be >= 1")
    if vals["evolve.snapshot_every"] < 0:
        errors.append("evolve.snapshot_every must be >= 0")

    G = None
    if vals["g.kind"] in _G_KINDS:
        gp = {}
        try:
            if vals["g.kind"] in ("power", "power_log"):
                gp = {"q": vals["g.q"]}
            elif vals["g.kind"] == "power_sum":
                gp = {"q1": vals.get("g.q1", float("nan")), "q2": vals.get("g.q2", float("nan")),
                      "normalize": vals["g.normalize"]}
            else:
                gp = {"t": vals.get("g.t", []), "g": vals.get("g.g", [])}
            G = make_nfunction(vals["g.kind"], **gp)
        except (InvalidNFunction, ValueError, TypeError, KeyError) as exc:
            errors.append(f"g: {exc}")

    domain = magnetic = None
    try:
        domain = Domain1D(vals["domain.a"], vals["domain.b"], vals["domain.m"], vals.get("domain.pad"))
    except (ConfigError, TypeError) as exc:
        errors.append(f"domain: {exc}")
    try:
        magnetic = MagneticField(vals["magnetic.kind"], vals["magnetic.c"])
    except ConfigError as exc:
        errors.append(f"magnetic: {exc}")

    warnings = []
    if G is not None and 0 < s < 1 and p > 1:
        errors.extend(h1_violations(s, p, G.q_minus, G.q_plus))
        crit = (1 + 2 * s) / (1 - 2 * s) if 2 * s < 1 else math.inf
        if p > crit:
            warnings.append(f"p={p:g} exceeds (N+2s)/(N-2s)={crit:g}: outside the local existence range")

    if errors:
        raise ConfigInvalid(errors)
    problem = ProblemParams(s=s, p=p, domain=domain, G=G, magnetic=magnetic)
    return RunConfig(problem=problem, values=vals, warnings=warnings,
                     base_dir=Path(base_dir) if base_dir else Path.cwd())


def h1_violations(s: float, p: float, q_minus: float, q_plus: float, N: int = 1) -> list[str]:
    """1 < q- <= q+ < p+1 < q-^*, with q-^* = N q- / (N - s q-) when s q- < N, else infinity."""
    out = []
    if not q_minus > 1:
        out.append(f"(H1): q- = {q_minus:g} must exceed 1")
    if not q_minus <= q_plus:
        out.append("(H1): q- must not exceed q+")
    if not q_plus < p + 1:
        out.append(f"(H1): q+ = {q_plus:g} must be below p+1 = {p + 1:g}")
    crit = N * q_minus / (N - s * q_minus) if s * q_minus < N else math.inf
    if not p + 1 < crit:
        out.append(f"(H1): p+1 = {p + 1:g} must be below the Sobolev exponent {crit:g}")
    return out


def load_config(path) -> RunConfig:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_config(text, base_dir=path.parent)


def initial_field(cfg: RunConfig) -> Field:
    dom = cfg.problem.domain
    x = dom.x_interior
    kind = cfg["initial.kind"]
    scale = cfg["initial.scale"]
    if kind == "gaussian":
        c, wd = cfg["initial.center"], cfg["initial.width"]
        v = scale * np.exp(-0.5 * ((x - c) / wd) ** 2) * np.exp(1j * cfg["initial.phase"])
    elif kind == "hat":
        mid, half = 0.5 * (dom.a + dom.b), 0.5 * (dom.b - dom.a)
        v = scale * np.clip(1 - np.abs(x - mid) / half, 0, None).astype(complex)
    elif kind == "random":
        rng = np.random.default_rng(cfg["initial.seed"])
        # smooth: a few random sine modes vanishing at both ends
        L = dom.b - dom.a
        v = np.zeros_like(x, dtype=complex)
        for k in range(1, 6):
            v += (rng.normal() + 1j * rng.normal()) / k**2 * np.sin(k * np.pi * (x - dom.a) / L)
        v *= scale
    else:
        path = Path(cfg["initial.path"])
        if not path.is_absolute():
            path = cfg.base_dir / path
        return read_snapshot(path, dom)
    return Field(v, dom)


def write_snapshot(path, u: Field) -> None:
    d = u.domain
    lines = [f"# fracwell snapshot a={d.a!r} b={d.b!r} m={d.M} pad={d.pad}", "# x re im"]
    for x, z in zip(d.x_interior, u.values):
        lines.append(f"{float(x)!r} {float(z.real)!r} {float(z.imag)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_snapshot(path, domain: Domain1D | None = None) -> Field:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    meta = {}
    for tok in text[0].lstrip("#").split()[2:]:
        k, v = tok.split("=")
        meta[k] = v
    file_dom = Domain1D(float(meta["a"]), float(meta["b"]), int(meta["m"]), int(meta["pad"]))
    rows = [ln.split() for ln in text if ln.strip() and not ln.startswith("#")]
    vals = np.array([float(r[1]) + 1j * float(r[2]) for r in rows])
    if domain is not None and domain != file_dom:
        raise ConfigError("snapshot grid does not match the configured domain")
    return Field(vals, file_dom)
