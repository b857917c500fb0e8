"""Experiment configuration: a flat ``section.key = value`` text format.

Grammar.  One statement per line, ``key = value`` with the key either a
bare name or ``section.name`` (one dot at most).  Values are quoted
strings (bare identifiers are also read as strings), integers, floats, or
the booleans ``true``/``false``.  ``#`` starts a comment, full-line or
trailing.  Duplicate keys are rejected naming both lines.  A ``preset``
key expands to the named stored configuration, with the file's remaining
keys layered on top.

Validation collects every violation (syntax, unknown key, wrong type,
out-of-range, missing requirement) and reports them all at once.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .core import ModelParams
from .particles import FieldInit, InitialLaw, ParticleSimSpec
from .fd import SolverOptions

MODES = ("particles", "fd", "fd2state", "azimuthal", "kernels")

_KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)?$")
_BARE_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")
_INT_RE = re.compile(r"^[+-]?\d+$")


class ConfigError(Exception):
    """Carries every violation found while reading a configuration."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class KeySpec:
    kind: str  # "str" | "int" | "float" | "bool"
    default: object = None
    choices: tuple | None = None
    low: float | None = None
    high: float | None = None
    modes: tuple | None = None  # None: all modes


KEYS = {
    "mode": KeySpec("str", choices=MODES),
    "seed": KeySpec("int", default=0, low=0),
    "out": KeySpec("str", default=""),
    "params.lambda": KeySpec("float", default=1.0, low=0.0),
    "params.chi": KeySpec("float", default=0.0, low=0.0),
    "params.tau": KeySpec("float", default=0.0, low=0.0),
    "params.sigma_x": KeySpec("float", default=1.0, low=0.0),
    "params.sigma_theta": KeySpec("float", default=1.0, low=0.0),
    "params.sigma_c": KeySpec("float", default=1.0),
    "params.gamma": KeySpec("float", default=0.0, low=0.0),
    "params.mu": KeySpec("float", default=1.0),
    "particles.n": KeySpec("int", default=100, low=2, modes=("particles",)),
    "particles.n_f": KeySpec("int", default=8, low=1, high=64, modes=("particles",)),
    "particles.dt": KeySpec("float", default=1e-3, low=0.0, modes=("particles",)),
    "particles.n_t": KeySpec("int", default=1000, low=0, modes=("particles",)),
    "particles.eps": KeySpec("float", default=-1.0, modes=("particles",)),  # <0: use dt
    "particles.rate_convention": KeySpec("str", default="physical",
                                         choices=("physical", "paper"), modes=("particles",)),
    "particles.resync_every": KeySpec("int", default=100, low=0, modes=("particles",)),
    "init.law": KeySpec("str", default="uniform",
                        choices=("uniform", "dirac", "gaussian_wrapped", "near_trail"),
                        modes=("particles",)),
    "init.x1": KeySpec("float", default=0.5, modes=("particles",)),
    "init.x2": KeySpec("float", default=0.5, modes=("particles",)),
    "init.theta": KeySpec("float", default=0.0, modes=("particles",)),
    "init.spread": KeySpec("float", default=0.05, low=0.0, modes=("particles",)),
    "init.field": KeySpec("str", default="zero", choices=("zero", "constant", "ridge"),
                          modes=("particles",)),
    "init.field_amp": KeySpec("float", default=0.0, modes=("particles",)),
    "init.field_center": KeySpec("float", default=0.5, modes=("particles",)),
    "init.field_width": KeySpec("float", default=0.05, low=0.0, modes=("particles",)),
    "snapshots.schedule": KeySpec("str", default="geometric", choices=("stride", "geometric"),
                                  modes=("particles", "fd", "fd2state")),
    "snapshots.stride": KeySpec("int", default=100, low=1, modes=("particles", "fd", "fd2state")),
    "snapshots.count": KeySpec("int", default=8, low=1, modes=("particles", "fd", "fd2state")),
    "fd.n_x": KeySpec("int", default=128, low=8, modes=("fd", "fd2state")),
    "fd.n_theta": KeySpec("int", default=64, low=8, modes=("fd", "fd2state")),
    "fd.dt": KeySpec("float", default=1e-3, low=0.0, high=0.1, modes=("fd", "fd2state")),
    "fd.t_max": KeySpec("float", default=10.0, low=0.0, modes=("fd", "fd2state")),
    "fd.tol": KeySpec("float", default=1e-5, low=0.0, modes=("fd", "fd2state")),
    "fd.theta_upwind": KeySpec("bool", default=False, modes=("fd", "fd2state")),
    "fd.verbatim": KeySpec("bool", default=False, modes=("fd", "fd2state")),
    "fd.negative_policy": KeySpec("str", default="abort", choices=("abort", "clip"),
                                  modes=("fd", "fd2state")),
    "fd.mass": KeySpec("float", default=1.0, low=0.0, modes=("fd", "fd2state")),
    "fd.c0": KeySpec("str", default="balanced", choices=("balanced", "zero", "cosine"),
                     modes=("fd", "fd2state")),
    "fd.c0_amp": KeySpec("float", default=0.0, modes=("fd", "fd2state")),
    "fd.c0_mode": KeySpec("int", default=1, low=1, modes=("fd", "fd2state")),
    "fd2.alpha_peak": KeySpec("float", default=1.0, low=0.0, modes=("fd2state",)),
    "fd2.alpha_center": KeySpec("float", default=0.25, modes=("fd2state",)),
    "fd2.alpha_width": KeySpec("float", default=0.08, low=0.0, modes=("fd2state",)),
    "fd2.beta_peak": KeySpec("float", default=1.0, low=0.0, modes=("fd2state",)),
    "fd2.beta_center": KeySpec("float", default=0.75, modes=("fd2state",)),
    "fd2.beta_width": KeySpec("float", default=0.08, low=0.0, modes=("fd2state",)),
    "fd2.transition": KeySpec("str", default="u_turn",
                              choices=("identity", "u_turn", "convolution"), modes=("fd2state",)),
    "fd2.kernel_width": KeySpec("float", default=0.5, low=0.0, modes=("fd2state",)),
    "fd2.chi_a": KeySpec("float", default=0.0, low=0.0, modes=("fd2state",)),
    "fd2.gamma_a": KeySpec("float", default=1.0, modes=("fd2state",)),
    "fd2.sigma_a": KeySpec("float", default=0.05, low=0.0, modes=("fd2state",)),
    "fd2.prod_own": KeySpec("float", default=1.0, low=0.0, modes=("fd2state",)),
    "fd2.prod_other": KeySpec("float", default=0.0, low=0.0, modes=("fd2state",)),
    "azimuthal.p1": KeySpec("float", default=0.0, modes=("azimuthal",)),
    "azimuthal.p2": KeySpec("float", default=0.0, modes=("azimuthal",)),
    "azimuthal.a11": KeySpec("float", default=0.0, modes=("azimuthal",)),
    "azimuthal.a12": KeySpec("float", default=0.0, modes=("azimuthal",)),
    "azimuthal.a22": KeySpec("float", default=0.0, modes=("azimuthal",)),
    "azimuthal.n_grid": KeySpec("int", default=1024, low=256, modes=("azimuthal",)),
    "azimuthal.n_bins": KeySpec("int", default=64, low=8, modes=("azimuthal",)),
    "azimuthal.dt": KeySpec("float", default=1e-3, low=0.0, high=1e-2, modes=("azimuthal",)),
    "azimuthal.t_final": KeySpec("float", default=20.0, low=10.0, modes=("azimuthal",)),
    "azimuthal.n_samples": KeySpec("int", default=10_000, low=1, modes=("azimuthal",)),
    "kernels.t_min": KeySpec("float", default=1e-3, low=1e-4, modes=("kernels",)),
    "kernels.t_max": KeySpec("float", default=1e-1, modes=("kernels",)),
    "kernels.t_count": KeySpec("int", default=7, low=4, modes=("kernels",)),
    "kernels.p_values": KeySpec("str", default="1,2,5", modes=("kernels",)),
}


def _parse_scalar(token: str, key: str, line_no: int, violations):
    if token.startswith('"') or token.startswith("'"):
        quote = token[0]
        if len(token) < 2 or not token.endswith(quote):
            violations.append(f"line {line_no}: unterminated string for {key}")
            return None
        return token[1:-1]
    if token == "true":
        return True
    if token == "false":
        return False
    if _INT_RE.match(token):
        return int(token)
    try:
        return float(token)
    except ValueError:
        pass
    if _BARE_RE.match(token):
        return token
    violations.append(f"line {line_no}: cannot read value {token!r} for {key}")
    return None


def _strip_comment(line: str) -> str:
    out = []
    quote = None
    for ch in line:
        if quote:
            out.append(ch)
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
            out.append(ch)
        elif ch == "#":
            break
        else:
            out.append(ch)
    return "".join(out)


def tokenize(text: str):
    """Raw (key, value, line_no) triples plus syntax violations."""
    entries = {}
    violations = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if "=" not in line:
            violations.append(f"line {line_no}: expected 'key = value'")
            continue
        key, _, value_text = line.partition("=")
        key = key.strip()
        value_text = value_text.strip()
        if not _KEY_RE.match(key):
            violations.append(f"line {line_no}: bad key {key!r}")
            continue
        if not value_text:
            violations.append(f"line {line_no}: missing value for {key}")
            continue
        value = _parse_scalar(value_text, key, line_no, violations)
        if value is None:
            continue
        if key in entries:
            violations.append(
                f"duplicate key {key}: lines {entries[key][1]} and {line_no}"
            )
            continue
        entries[key] = (value, line_no)
    return entries, violations


def _check_entry(key: str, value, spec: KeySpec, violations):
    kind = spec.kind
    if kind == "float" and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind == "str" and not isinstance(value, str):
        violations.append(f"{key}: expected a string, got {value!r}")
        return None
    if kind == "bool" and not isinstance(value, bool):
        violations.append(f"{key}: expected true/false, got {value!r}")
        return None
    if kind == "int" and (isinstance(value, bool) or not isinstance(value, int)):
        violations.append(f"{key}: expected an integer, got {value!r}")
        return None
    if kind == "float" and (isinstance(value, bool) or not isinstance(value, float)):
        violations.append(f"{key}: expected a number, got {value!r}")
        return None
    if spec.choices and value not in spec.choices:
        violations.append(f"{key}: {value!r} is not one of {spec.choices}")
        return None
    if spec.low is not None and value < spec.low:
        violations.append(f"{key}: {value!r} below minimum {spec.low}")
        return None
    if spec.high is not None and value > spec.high:
        violations.append(f"{key}: {value!r} above maximum {spec.high}")
        return None
    return value


@dataclass(frozen=True)
class SnapshotSchedule:
    """Which step indices get snapshots; step 0 is always included."""

    kind: str = "geometric"
    stride: int = 100
    count: int = 8

    def steps(self, n_steps: int) -> list:
        if n_steps <= 0:
            return []
        if self.kind == "stride":
            picks = list(range(self.stride, n_steps + 1, self.stride))
            if not picks or picks[-1] != n_steps:
                picks.append(n_steps)
            return picks
        picks = sorted(
            {max(1, round(n_steps ** ((k + 1) / self.count))) for k in range(self.count)}
        )
        if picks[-1] != n_steps:
            picks.append(n_steps)
        return picks


@dataclass(frozen=True)
class FdRunSpec:
    n_x: int
    n_theta: int
    dt: float
    t_max: float
    tol: float
    options: SolverOptions
    mass: float
    c0: str
    c0_amp: float
    c0_mode: int


@dataclass(frozen=True)
class TwoStateRunSpec:
    base: FdRunSpec
    alpha_peak: float
    alpha_center: float
    alpha_width: float
    beta_peak: float
    beta_center: float
    beta_width: float
    transition: str
    kernel_width: float
    chi_a: float
    gamma_a: float
    sigma_a: float
    prod_own: float
    prod_other: float


@dataclass(frozen=True)
class AzimuthalRunSpec:
    p1: float
    p2: float
    a11: float
    a12: float
    a22: float
    n_grid: int
    n_bins: int
    dt: float
    t_final: float
    n_samples: int


@dataclass(frozen=True)
class KernelRunSpec:
    t_min: float
    t_max: float
    t_count: int
    p_values: tuple

    def t_values(self) -> np.ndarray:
        return np.geomspace(self.t_min, self.t_max, self.t_count)


@dataclass
class RunConfig:
    """A validated experiment description."""

    mode: str
    seed: int
    out: str
    values: dict  # explicit keys only, already validated
    params: ModelParams
    snapshots: SnapshotSchedule
    particles: ParticleSimSpec | None = None
    fd: FdRunSpec | None = None
    fd2: TwoStateRunSpec | None = None
    azimuthal: AzimuthalRunSpec | None = None
    kernels: KernelRunSpec | None = None


def parse_config(text: str, presets: dict | None = None) -> RunConfig:
    """Parse and validate; raises :class:`ConfigError` listing every problem."""
    if presets is None:
        from .presets import PRESETS
        presets = PRESETS
    entries, violations = tokenize(text)

    if "preset" in entries:
        name, line_no = entries.pop("preset")
        if not isinstance(name, str) or name not in presets:
            violations.append(f"line {line_no}: unknown preset {name!r}")
        else:
            base_entries, base_violations = tokenize(presets[name])
            violations.extend(base_violations)
            for key, pair in base_entries.items():
                entries.setdefault(key, pair)

    checked = {}
    for key, (value, line_no) in entries.items():
        spec = KEYS.get(key)
        if spec is None:
            violations.append(f"line {line_no}: unknown key {key}")
            continue
        value = _check_entry(key, value, spec, violations)
        if value is not None:
            checked[key] = value

    if "mode" not in checked:
        violations.append("mode missing")
        raise ConfigError(violations)
    mode = checked["mode"]

    for key in checked:
        spec = KEYS[key]
        if spec.modes is not None and mode not in spec.modes:
            violations.append(f"{key} does not apply to mode {mode}")

    if violations:
        raise ConfigError(violations)

    def get(key):
        spec = KEYS[key]
        value = checked.get(key, spec.default)
        if spec.kind == "float" and isinstance(value, int):
            value = float(value)
        return value

    problems = []
    params = None
    try:
        params = ModelParams(
            lam=get("params.lambda"), chi=get("params.chi"), tau=get("params.tau"),
            sigma_x=get("params.sigma_x"), sigma_theta=get("params.sigma_theta"),
            sigma_c=get("params.sigma_c"), gamma=get("params.gamma"), mu=get("params.mu"),
        )
    except ValueError as err:
        problems.append(str(err))

    schedule = SnapshotSchedule(get("snapshots.schedule"), get("snapshots.stride"),
                                get("snapshots.count"))
    config = None
    if params is not None:
        config = RunConfig(mode=mode, seed=get("seed"), out=get("out"),
                           values=dict(checked), params=params, snapshots=schedule)
        try:
            _attach_mode_payload(config, get)
        except ValueError as err:
            problems.append(str(err))
    if problems:
        raise ConfigError(problems)
    return config


def _attach_mode_payload(config: RunConfig, get) -> None:
    mode = config.mode
    if mode == "particles":
        eps = get("particles.eps")
        config.particles = ParticleSimSpec(
            params=config.params,
            n=get("particles.n"),
            n_f=get("particles.n_f"),
            dt=get("particles.dt"),
            n_steps=get("particles.n_t"),
            law=InitialLaw(get("init.law"), x0=(get("init.x1"), get("init.x2")),
                           theta0=get("init.theta"), spread=get("init.spread")),
            field_init=FieldInit(get("init.field"), amplitude=get("init.field_amp"),
                                 center=get("init.field_center"), width=get("init.field_width")),
            eps=None if eps < 0 else eps,
            convention=get("particles.rate_convention"),
            resync_every=get("particles.resync_every"),
            seed=config.seed,
        )
    elif mode in ("fd", "fd2state"):
        base = FdRunSpec(
            n_x=get("fd.n_x"), n_theta=get("fd.n_theta"), dt=get("fd.dt"),
            t_max=get("fd.t_max"), tol=get("fd.tol"),
            options=SolverOptions(theta_upwind=get("fd.theta_upwind"),
                                  verbatim=get("fd.verbatim"),
                                  negative_policy=get("fd.negative_policy")),
            mass=get("fd.mass"), c0=get("fd.c0"), c0_amp=get("fd.c0_amp"),
            c0_mode=get("fd.c0_mode"),
        )
        if mode == "fd":
            config.fd = base
        else:
            config.fd2 = TwoStateRunSpec(
                base=base,
                alpha_peak=get("fd2.alpha_peak"), alpha_center=get("fd2.alpha_center"),
                alpha_width=get("fd2.alpha_width"), beta_peak=get("fd2.beta_peak"),
                beta_center=get("fd2.beta_center"), beta_width=get("fd2.beta_width"),
                transition=get("fd2.transition"), kernel_width=get("fd2.kernel_width"),
                chi_a=get("fd2.chi_a"), gamma_a=get("fd2.gamma_a"),
                sigma_a=get("fd2.sigma_a"), prod_own=get("fd2.prod_own"),
                prod_other=get("fd2.prod_other"),
            )
    elif mode == "azimuthal":
        config.azimuthal = AzimuthalRunSpec(
            p1=get("azimuthal.p1"), p2=get("azimuthal.p2"), a11=get("azimuthal.a11"),
            a12=get("azimuthal.a12"), a22=get("azimuthal.a22"),
            n_grid=get("azimuthal.n_grid"), n_bins=get("azimuthal.n_bins"),
            dt=get("azimuthal.dt"), t_final=get("azimuthal.t_final"),
            n_samples=get("azimuthal.n_samples"),
        )
    elif mode == "kernels":
        p_text = get("kernels.p_values")
        try:
            p_values = tuple(float(tok) for tok in p_text.split(",") if tok.strip())
        except ValueError:
            raise ValueError(f"kernels.p_values: cannot read {p_text!r}")
        if not p_values or any(p < 1 for p in p_values):
            raise ValueError("kernels.p_values must list numbers >= 1")
        if get("kernels.t_max") <= get("kernels.t_min"):
            raise ValueError("kernels.t_max must exceed kernels.t_min")
        config.kernels = KernelRunSpec(
            t_min=get("kernels.t_min"), t_max=get("kernels.t_max"),
            t_count=get("kernels.t_count"), p_values=p_values,
        )


def serialize(config: RunConfig) -> str:
    """Canonical text for hashing and round-trips: explicit keys, sorted."""
    lines = []
    for key in sorted(config.values):
        value = config.values[key]
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, str):
            text = f'"{value}"'
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
