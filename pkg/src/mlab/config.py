"""Flat INI run configuration with cross-field validation.

Sections and keys::

    [grid]    dim, R, N, resolutions
    [balls]   stride, radius_exponents, include_origin, include_single_cell,
              include_grid_centers, max_centers
    [params]  alpha, p, kappa, q, m, r, tau, weight, function, symbols,
              operator, t, quad_nodes, seed, index_tol, stability_bound
    [checks]  ids
    [output]  dir, threads

Every violation is collected before reporting, so one run shows all of them.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import dataclass

from .lattice import BallPolicy

__all__ = ["ConfigError", "RunConfig", "parse_config", "KNOWN_KEYS"]

KNOWN_KEYS = {
    "grid": ("dim", "R", "N", "resolutions"),
    "balls": ("stride", "radius_exponents", "include_origin", "include_single_cell", "include_grid_centers", "max_centers"),
    "params": (
        "alpha", "p", "kappa", "q", "m", "r", "tau", "weight", "function", "symbols",
        "operator", "t", "quad_nodes", "seed", "index_tol", "stability_bound",
    ),
    "checks": ("ids",),
    "output": ("dir", "threads"),
}


class ConfigError(ValueError):
    """All violations found in one configuration."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class RunConfig:
    dim: int = 1
    half_width: float = 8.0
    resolutions: tuple[int, ...] = (512, 1024)
    policy: BallPolicy = BallPolicy()
    alpha: float | None = None
    p: float | None = None
    kappa: float | None = None
    q: float | None = None
    m: int | None = None
    r: float = 2.0
    tau: float = 2.0
    weight: str | None = None
    function: str = "gauss:0.5"
    symbols: tuple[str, ...] = ("log",)
    operator: str = "fractional"
    t: float = 0.25
    quad_nodes: int = 96
    seed: int = 0
    index_tol: float = 0.01
    stability_bound: float = 1.2
    ids: tuple[str, ...] = ()
    out_dir: str | None = None
    threads: int | None = None

    # -- serialisation ---------------------------------------------------
    def sections(self) -> dict[str, dict[str, str]]:
        pol = self.policy
        out = {
            "grid": {"dim": str(self.dim), "R": repr(self.half_width), "resolutions": _ints(self.resolutions)},
            "balls": {
                "stride": str(pol.stride),
                "include_origin": _bool(pol.include_origin),
                "include_single_cell": _bool(pol.include_single_cell),
                "include_grid_centers": _bool(pol.include_grid_centers),
            },
            "params": {
                "r": repr(self.r),
                "tau": repr(self.tau),
                "function": self.function,
                "symbols": ",".join(self.symbols),
                "operator": self.operator,
                "t": repr(self.t),
                "quad_nodes": str(self.quad_nodes),
                "seed": str(self.seed),
                "index_tol": repr(self.index_tol),
                "stability_bound": repr(self.stability_bound),
            },
            "checks": {"ids": ",".join(self.ids)},
            "output": {},
        }
        if pol.radius_exponents is not None:
            out["balls"]["radius_exponents"] = _ints(pol.radius_exponents)
        if pol.max_centers is not None:
            out["balls"]["max_centers"] = str(pol.max_centers)
        for key in ("alpha", "p", "kappa", "q", "m"):
            val = getattr(self, key)
            if val is not None:
                out["params"][key] = repr(val)
        if self.weight is not None:
            out["params"]["weight"] = self.weight
        if self.out_dir is not None:
            out["output"]["dir"] = self.out_dir
        if self.threads is not None:
            out["output"]["threads"] = str(self.threads)
        return out

    def to_text(self) -> str:
        lines = []
        for name, body in self.sections().items():
            lines.append(f"[{name}]")
            lines.extend(f"{k} = {v}" for k, v in body.items())
            lines.append("")
        return "\n".join(lines)

    def describe(self) -> dict:
        """Everything that influences results; output location and threads are left out."""
        secs = self.sections()
        secs.pop("output")
        return secs

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.describe(), sort_keys=True).encode()).hexdigest()[:16]

    @property
    def derived_q(self) -> float | None:
        if self.alpha is None or self.p is None:
            return None
        inv = 1.0 / self.p - self.alpha / self.dim
        return 1.0 / inv if inv > 0 else math.inf


def _ints(vals) -> str:
    return ",".join(str(int(v)) for v in vals)


def _bool(v: bool) -> str:
    return "true" if v else "false"


class _Reader:
    """Typed access to one parsed file that records violations instead of raising."""

    def __init__(self, cp: configparser.ConfigParser):
        self.cp = cp
        self.errors: list[str] = []

    def raw(self, sec, key):
        if self.cp.has_section(sec) and self.cp.has_option(sec, key):
            return self.cp.get(sec, key).strip()
        return None

    def get(self, sec, key, conv, default=None):
        text = self.raw(sec, key)
        if text is None or text == "":
            return default
        try:
            return conv(text)
        except ValueError:
            self.errors.append(f"[{sec}] {key} = {text!r} is not a valid {conv.__name__}")
            return default


def _boolean(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


_boolean.__name__ = "boolean"


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(" ", "").split(",") if v)


_int_list.__name__ = "integer list"


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def parse_config(text: str) -> RunConfig:
    """Parse and validate; raise :class:`ConfigError` listing every violation."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keys are case sensitive (R vs r)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"unparseable configuration: {exc}"]) from exc
    rd = _Reader(cp)
    errors = rd.errors
    for sec in cp.sections():
        if sec not in KNOWN_KEYS:
            errors.append(f"unknown section [{sec}]")
            continue
        for key in cp.options(sec):
            if key not in KNOWN_KEYS[sec]:
                errors.append(f"unknown key {key!r} in [{sec}]")

    dim = rd.get("grid", "dim", int, 1)
    half_width = rd.get("grid", "R", float, 8.0)
    n_single = rd.get("grid", "N", int)
    res = rd.get("grid", "resolutions", _int_list)
    if res is None:
        res = (n_single,) if n_single is not None else (512, 1024)
    elif n_single is not None and n_single not in res:
        errors.append(f"[grid] N = {n_single} is not among resolutions {list(res)}")

    if dim not in (1, 2):
        errors.append(f"dim must be 1 or 2, got {dim}")
    if not (half_width > 0 and math.isfinite(half_width)):
        errors.append(f"R must be positive, got {half_width}")
    for n in res:
        if n < 4 or n % 2:
            errors.append(f"resolution {n} must be an even integer >= 4")
    if any(b <= a for a, b in zip(res, res[1:])):
        errors.append(f"resolutions must be strictly increasing, got {list(res)}")

    policy = BallPolicy()
    try:
        policy = BallPolicy(
            stride=rd.get("balls", "stride", int, 1),
            radius_exponents=rd.get("balls", "radius_exponents", _int_list),
            include_origin=rd.get("balls", "include_origin", _boolean, True),
            include_single_cell=rd.get("balls", "include_single_cell", _boolean, True),
            max_centers=rd.get("balls", "max_centers", int),
            include_grid_centers=rd.get("balls", "include_grid_centers", _boolean, True),
        )
    except ValueError as exc:
        errors.append(str(exc))

    alpha = rd.get("params", "alpha", float)
    p = rd.get("params", "p", float)
    kappa = rd.get("params", "kappa", float)
    q = rd.get("params", "q", float)
    m = rd.get("params", "m", int)
    r = rd.get("params", "r", float, 2.0)
    tau = rd.get("params", "tau", float, 2.0)
    weight = rd.get("params", "weight", str)
    function = rd.get("params", "function", str, "gauss:0.5")
    symbols = rd.get("params", "symbols", _str_list, ("log",))
    operator = rd.get("params", "operator", str, "fractional")
    t = rd.get("params", "t", float, 0.25)
    quad_nodes = rd.get("params", "quad_nodes", int, 96)
    seed = rd.get("params", "seed", int, 0)
    index_tol = rd.get("params", "index_tol", float, 0.01)
    stability_bound = rd.get("params", "stability_bound", float, 1.2)
    ids = rd.get("checks", "ids", _str_list, ())
    out_dir = rd.get("output", "dir", str)
    threads = rd.get("output", "threads", int)

    # the parameter hypotheses of the commutator bound
    n = dim
    if alpha is not None and not 0 < alpha < n:
        errors.append(f"0 < α < n violated: α={alpha:g}, n={n}")
    if p is not None and alpha is not None and 0 < alpha < n and not 1 < p < n / alpha:
        errors.append(f"1 < p < n/α violated: p={p:g}, n/α={n / alpha:g}")
    if p is not None and not p >= 1:
        errors.append(f"p ≥ 1 violated: p={p:g}")
    q_derived = None
    if p is not None and alpha is not None and p > 0:
        inv = 1.0 / p - alpha / n
        if inv <= 0:
            errors.append(f"1/q = 1/p − α/n gives 1/q = {inv:g} ≤ 0 (q = ∞ is not supported): p={p:g}, α={alpha:g}")
        else:
            q_derived = 1.0 / inv
            if q is not None and not math.isclose(q, q_derived, rel_tol=1e-9):
                errors.append(f"1/q = 1/p − α/n violated: p={p:g}, α={alpha:g}, q={q:g}")
    elif q is not None:
        errors.append("q given without both p and α")
    if kappa is not None:
        if q_derived is not None and p is not None:
            if not 0 <= kappa < p / q_derived:
                errors.append(f"0 ≤ κ < p/q violated: κ={kappa:g}, p/q={p / q_derived:g}")
        elif not 0 <= kappa < 1:
            errors.append(f"0 ≤ κ < 1 violated: κ={kappa:g}")
    if m is not None and m < 1:
        errors.append(f"m ≥ 1 violated: m={m}")
    if not r >= 1:
        errors.append(f"r ≥ 1 violated: r={r:g}")
    if not tau > 1:
        errors.append(f"τ > 1 violated: τ={tau:g}")
    if not t > 0:
        errors.append(f"t > 0 violated: t={t:g}")
    if quad_nodes < 8:
        errors.append(f"quad_nodes ≥ 8 violated: quad_nodes={quad_nodes}")
    if not index_tol > 0:
        errors.append(f"index_tol > 0 violated: index_tol={index_tol:g}")
    if not stability_bound > 1:
        errors.append(f"stability_bound > 1 violated: stability_bound={stability_bound:g}")
    if threads is not None and threads < 1:
        errors.append(f"threads ≥ 1 violated: threads={threads}")
    if weight is not None:
        from .weights import parse_weight_spec

        try:
            parse_weight_spec(weight)
        except ValueError as exc:
            errors.append(f"bad weight spec {weight!r}: {exc}")
    if errors:
        raise ConfigError(errors)
    return RunConfig(
        dim=dim, half_width=half_width, resolutions=tuple(res), policy=policy,
        alpha=alpha, p=p, kappa=kappa, q=q, m=m, r=r, tau=tau, weight=weight,
        function=function, symbols=tuple(symbols), operator=operator, t=t,
        quad_nodes=quad_nodes, seed=seed, index_tol=index_tol, stability_bound=stability_bound,
        ids=tuple(ids), out_dir=out_dir, threads=threads,
    )

