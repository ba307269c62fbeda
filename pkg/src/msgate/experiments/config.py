"""Experiment configuration: INI-style sections of flat ``key = value`` pairs.

Units: frequencies in units of the trap frequency nu, times in 1/nu.

Example::

    [experiment]
    name = rabi

    [physics]
    eta = 0.1
    n_max = 18
    t_final = 7540

    [drive]
    kind = pair          ; pair | bichromatic
    rabi = 0.1
    detuning = 0.9

    [initial]
    internal = gg        ; label, or amplitudes like "gg:1, eg:1"
    vibration = coherent ; fock | coherent | thermal | mixture
    alpha = 1.4142135623730951

    [run]
    seed = 0
    output = out/fig2

``thermal`` is a thermal mixture: closed runs average over Fock states with
thermal weights, heating runs draw one Fock state per trajectory.
``mixture`` is an equal-weight mixture of the Fock states in ``levels``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field, fields

from ..errors import ConfigError

EXPERIMENTS = ("rabi", "echo", "heating", "cnot", "n_independence")
VIBRATIONS = ("fock", "coherent", "thermal", "mixture")

SECTIONS = {
    "experiment": ("name",),
    "physics": ("eta", "n_max", "dt", "t_final", "sample_interval", "nu"),
    "drive": ("kind", "rabi", "detuning", "phase", "echo"),
    "heating": ("gamma", "n_therm"),
    "initial": ("internal", "vibration", "n", "alpha", "n_bar", "levels"),
    "run": ("seed", "n_trajectories", "output"),
    "physical_units": ("nu_hz",),
}


@dataclass
class ExperimentConfig:
    experiment: str
    eta: float
    rabi: float
    detuning: float
    n_max: int = 30
    dt: float | None = None
    t_final: float | None = None
    sample_interval: float | None = None
    drive: str = "pair"
    phase: float = 0.0
    echo: bool = True
    gamma: float = 0.0
    n_therm: float = 0.0
    internal: str = "gg"
    vibration: str = "fock"
    n: int = 0
    alpha: float = 0.0
    n_bar: float = 0.0
    levels: tuple = (0, 1, 2)
    seed: int = 0
    n_trajectories: int = 10
    output: str = "msgate-out"
    nu_hz: float | None = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"must be one of {', '.join(EXPERIMENTS)}", "experiment.name")
        if self.drive not in ("pair", "bichromatic"):
            raise ConfigError("must be 'pair' or 'bichromatic'", "drive.kind")
        if self.vibration not in VIBRATIONS:
            raise ConfigError(f"must be one of {', '.join(VIBRATIONS)}", "initial.vibration")
        if not self.levels or any(n < 0 or n > self.n_max for n in self.levels):
            raise ConfigError(f"levels must lie in 0..n_max={self.n_max}", "initial.levels")
        if not self.eta >= 0:
            raise ConfigError("must be >= 0", "physics.eta")
        if self.n_max < 1:
            raise ConfigError("must be >= 1", "physics.n_max")
        if self.rabi < 0:
            raise ConfigError("must be >= 0", "drive.rabi")
        if not abs(self.detuning) < 2:
            raise ConfigError("|detuning| must be < 2", "drive.detuning")
        if abs(abs(self.detuning) - 1.0) < 1e-6:
            raise ConfigError("detuning on the sideband pole", "drive.detuning")
        if self.gamma < 0 or self.n_therm < 0:
            raise ConfigError("gamma and n_therm must be >= 0", "heating")
        if self.n_trajectories < 1:
            raise ConfigError("must be >= 1", "run.n_trajectories")
        if self.t_final is not None and self.t_final <= 0:
            raise ConfigError("must be > 0", "physics.t_final")
        if self.echo and self.experiment == "echo" and self.drive != "pair":
            raise ConfigError("echo experiment needs drive.kind = pair", "drive.kind")
        return self

    def to_ini(self) -> str:
        """Every parameter, defaults included, in the input format."""
        d = asdict(self)
        d.pop("extra")
        key_of = {"name": "experiment", "kind": "drive", "nu_hz": "nu_hz"}
        cp = configparser.ConfigParser()
        for sec, keys in SECTIONS.items():
            cp[sec] = {}
            for k in keys:
                attr = key_of.get(k, k)
                if sec == "physics" and k == "nu":
                    continue
                v = d.get(attr)
                cp[sec][k] = "" if v is None else _fmt(v)
        lines = []
        for sec in cp.sections():
            lines.append(f"[{sec}]")
            lines += [f"{k} = {v}" for k, v in cp[sec].items()]
            lines.append("")
        return "\n".join(lines)


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(str(x) for x in v)
    return str(v)


_REQUIRED = (("physics", "eta"), ("drive", "rabi"), ("drive", "detuning"), ("experiment", "name"))


def _get(cp, sec, key, conv, default=None):
    if not cp.has_option(sec, key):
        return default
    raw = cp.get(sec, key).strip()
    if raw == "":
        return default
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r}", f"{sec}.{key}") from None


def _bool(s):
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(s)


def _int_list(s):
    return tuple(int(x) for x in s.replace(",", " ").split())


def _finite(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(s)
    return v


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text; raises :class:`ConfigError`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError("unknown section", sec)
        for k in cp[sec]:
            if k not in SECTIONS[sec]:
                raise ConfigError("unknown key", f"{sec}.{k}")
    for sec, key in _REQUIRED:
        if not cp.has_option(sec, key) or not cp.get(sec, key).strip():
            raise ConfigError("required field missing", f"{sec}.{key}")
    defaults = {f.name: f.default for f in fields(ExperimentConfig)}
    cfg = ExperimentConfig(
        experiment=_get(cp, "experiment", "name", str),
        eta=_get(cp, "physics", "eta", _finite),
        rabi=_get(cp, "drive", "rabi", _finite),
        detuning=_get(cp, "drive", "detuning", _finite),
        n_max=_get(cp, "physics", "n_max", int, defaults["n_max"]),
        dt=_get(cp, "physics", "dt", _finite),
        t_final=_get(cp, "physics", "t_final", _finite),
        sample_interval=_get(cp, "physics", "sample_interval", _finite),
        drive=_get(cp, "drive", "kind", str, defaults["drive"]),
        phase=_get(cp, "drive", "phase", _finite, 0.0),
        echo=_get(cp, "drive", "echo", _bool, True),
        gamma=_get(cp, "heating", "gamma", _finite, 0.0),
        n_therm=_get(cp, "heating", "n_therm", _finite, 0.0),
        internal=_get(cp, "initial", "internal", str, "gg"),
        vibration=_get(cp, "initial", "vibration", str, "fock"),
        n=_get(cp, "initial", "n", int, 0),
        alpha=_get(cp, "initial", "alpha", _finite, 0.0),
        n_bar=_get(cp, "initial", "n_bar", _finite, 0.0),
        levels=_get(cp, "initial", "levels", _int_list, defaults["levels"]),
        seed=_get(cp, "run", "seed", int, 0),
        n_trajectories=_get(cp, "run", "n_trajectories", int, 10),
        output=_get(cp, "run", "output", str, defaults["output"]),
        nu_hz=_get(cp, "physical_units", "nu_hz", _finite),
    )
    if cp.has_option("physics", "nu") and _get(cp, "physics", "nu", _finite) != 1.0:
        raise ConfigError("frequencies are in units of nu; nu must be 1", "physics.nu")
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def parse_internal(spec: str):
    """``"gg"`` or ``"gg:1, eg:1"`` / ``"ee:-1j"`` -> normalised 4-vector."""
    from ..fockspace import internal_state

    spec = spec.strip()
    if ":" not in spec:
        return internal_state(**{spec: 1.0})
    amps = {}
    for part in spec.split(","):
        label, _, val = part.partition(":")
        try:
            amps[label.strip()] = complex(val.strip().replace(" ", ""))
        except ValueError:
            raise ConfigError(f"bad amplitude {val!r}", "initial.internal") from None
    try:
        return internal_state(**amps)
    except ValueError as exc:
        raise ConfigError(str(exc), "initial.internal") from None
