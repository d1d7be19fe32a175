"""Line-oriented ``key = value`` experiment configuration.

Keys carry dotted section prefixes (``model.family``, ``run.seed``). Every key
is validated against a fixed schema before anything runs; unknown or
duplicate keys are errors. :meth:`ExperimentConfig.resolved_text` writes the
configuration back with every default filled in, in a fixed order, so
feeding it back reproduces a run exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigurationError
from .model import Family, ModelSpec, ParameterSpace

COMMANDS = ("simulate", "verify", "fit", "consistency", "misspec")

FAMILY_PARAMS = {
    Family.THRESHOLD: ("omega", "a", "b", "c", "d", "L", "U"),
    Family.LOGLINEAR: ("d", "a", "b"),
    Family.GARCH: ("d", "a", "b"),
}

_U64 = (1 << 64) - 1


def _float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise ConfigurationError(f"expected a number, got {s!r}") from None
    if math.isnan(v):
        raise ConfigurationError("NaN is not a valid setting")
    return v


def _int(lo=None, hi=None):
    def parse(s: str) -> int:
        try:
            v = int(s)
        except ValueError:
            raise ConfigurationError(f"expected an integer, got {s!r}") from None
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise ConfigurationError(f"integer {v} outside [{lo}, {hi}]")
        return v

    return parse


def _int_list(s: str) -> tuple:
    parts = [p.strip() for p in s.split(",") if p.strip()]
    if not parts:
        raise ConfigurationError("expected a comma-separated list of integers")
    return tuple(_int(1)(p) for p in parts)


def _choice(*options):
    def parse(s: str) -> str:
        if s not in options:
            raise ConfigurationError(f"expected one of {options}, got {s!r}")
        return s

    return parse


def _auto_or(parse):
    def inner(s: str):
        return "auto" if s == "auto" else parse(s)

    return inner


def _path(s: str) -> str:
    return s


# key -> (parser, default); a default of None means "required when applicable"
SCHEMA = {
    "command": (_choice(*COMMANDS), None),
    "model.family": (_choice(*[f.value for f in Family]), None),
    "model.omega": (_float, None),
    "model.a": (_float, None),
    "model.b": (_float, None),
    "model.c": (_float, None),
    "model.d": (_float, None),
    "model.L": (_float, None),
    "model.U": (_float, None),
    "space.kind": (_choice("wellspecified", "misspecified", "none"), None),
    "space.family": (_choice(Family.THRESHOLD.value, Family.LOGLINEAR.value), None),
    "space.alpha_low": (_float, 0.01),
    "space.alpha_bar": (_float, 0.9),
    "space.d_max": (_float, 2.0),
    "space.alpha_tilde": (_float, 0.9),
    "space.a_max": (_float, 0.9),
    "space.b_max": (_float, 1.0),
    "space.L": (_float, None),
    "space.U": (_float, None),
    "run.n": (_int(1), 1000),
    "run.burn_in": (_int(0), 1000),
    "run.seed": (_int(0, _U64), 0),
    "run.x0": (_auto_or(_float), "auto"),
    "run.starts": (_int(1), 10),
    "run.truncation": (_auto_or(_int(0)), "auto"),
    "run.replicates": (_int(1), 20),
    "run.n_grid": (_int_list, (1000, 10000)),
    "run.workers": (_int(1), 1),
    "run.coupling_replicates": (_int(1), 200),
    "run.moment_horizon": (_int(0), 100000),
    "io.data": (_path, ""),
    "io.out": (_path, "."),
}

# resolved keys written per command, in this order (model and space keys are added separately)
RUN_KEYS = {
    "simulate": ("run.n", "run.burn_in", "run.seed", "run.x0"),
    "verify": ("run.seed", "run.coupling_replicates", "run.moment_horizon"),
    "fit": ("run.n", "run.burn_in", "run.seed", "run.x0", "run.starts", "run.truncation", "io.data"),
    "consistency": ("run.n_grid", "run.replicates", "run.burn_in", "run.seed", "run.x0", "run.starts",
                    "run.workers"),
    "misspec": ("run.n_grid", "run.replicates", "run.burn_in", "run.seed", "run.x0", "run.starts",
                "run.workers"),
}

SPACE_KEYS = {
    (Family.THRESHOLD, "wellspecified"): ("space.alpha_low", "space.alpha_bar", "space.L", "space.U"),
    (Family.THRESHOLD, "misspecified"): ("space.alpha_low", "space.alpha_bar", "space.L", "space.U"),
    (Family.LOGLINEAR, "wellspecified"): ("space.d_max", "space.alpha_tilde"),
    (Family.LOGLINEAR, "misspecified"): ("space.d_max", "space.a_max", "space.b_max"),
}


def parse_text(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (t.strip() for t in s.split("=", 1))
        if key not in SCHEMA:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class ExperimentConfig:
    command: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def family(self) -> Family:
        return Family(self.values["model.family"])

    @property
    def space_family(self) -> Family:
        return Family(self.values["space.family"])

    @property
    def has_model(self) -> bool:
        return all(f"model.{k}" in self.values for k in FAMILY_PARAMS[self.family])

    def model(self) -> ModelSpec:
        fam = self.family
        vals = [self.values[f"model.{k}"] for k in FAMILY_PARAMS[fam]]
        if fam is Family.THRESHOLD:
            return ModelSpec.threshold(*vals)
        if fam is Family.LOGLINEAR:
            return ModelSpec.loglinear(*vals)
        return ModelSpec.garch(*vals)

    def space(self) -> ParameterSpace | None:
        kind = self.values.get("space.kind", "none")
        if kind == "none":
            return None
        v = self.values
        if self.space_family is Family.THRESHOLD:
            ctor = (ParameterSpace.threshold_wellspecified if kind == "wellspecified"
                    else ParameterSpace.threshold_misspecified)
            return ctor(v["space.L"], v["space.U"], alpha_low=v["space.alpha_low"], alpha_bar=v["space.alpha_bar"])
        if kind == "wellspecified":
            return ParameterSpace.loglinear_wellspecified(v["space.d_max"], v["space.alpha_tilde"])
        return ParameterSpace.loglinear_misspecified(v["space.d_max"], v["space.a_max"], v["space.b_max"])

    def resolved_keys(self) -> list:
        keys = ["command", "model.family"]
        if self.has_model:
            keys += [f"model.{k}" for k in FAMILY_PARAMS[self.family]]
        if self.command != "simulate":
            keys += ["space.kind", "space.family"]
            kind = self.values["space.kind"]
            if kind != "none":
                keys += list(SPACE_KEYS[(self.space_family, kind)])
        return keys + list(RUN_KEYS[self.command])

    def resolved_text(self) -> str:
        return "".join(f"{k} = {_fmt(self.values[k])}\n" for k in self.resolved_keys())


def load_config(text: str, command: str | None = None, seed: int | None = None,
                out: str | None = None) -> ExperimentConfig:
    """Parse and validate; ``command``, ``seed`` and ``out`` override the file."""
    raw = parse_text(text)
    if command is not None:
        if "command" in raw and raw["command"] != command:
            raise ConfigurationError(f"config is for {raw['command']!r}, invoked as {command!r}")
        raw["command"] = command
    if "command" not in raw:
        raise ConfigurationError("no command given")
    if seed is not None:
        raw["run.seed"] = str(seed)
    if out is not None:
        raw["io.out"] = out
    vals = {k: SCHEMA[k][0](v) for k, v in raw.items()}
    cmd = vals["command"]
    if "model.family" not in vals:
        raise ConfigurationError("model.family is required")
    fam = Family(vals["model.family"])
    allowed = {f"model.{k}" for k in FAMILY_PARAMS[fam]}
    for key in [k for k in vals if k.startswith("model.") and k != "model.family"]:
        if key not in allowed:
            raise ConfigurationError(f"{key} is not a {fam.value} parameter")
    missing = sorted(allowed - set(vals))
    from_file = cmd == "fit" and bool(vals.get("io.data"))
    if missing and not (from_file and len(missing) == len(allowed)):
        raise ConfigurationError(f"missing model parameters: {missing}")
    if cmd == "simulate":
        stray = [k for k in raw if k.startswith("space.")]
        if stray:
            raise ConfigurationError(f"simulate takes no space settings, got {stray}")
    else:
        if fam is Family.GARCH:
            raise ConfigurationError(f"{cmd} is defined for the threshold and log-linear families only")
        vals.setdefault("space.family", fam.value if cmd != "misspec" else None)
        if vals["space.family"] is None:
            raise ConfigurationError("misspec needs space.family (the fitted family)")
        if cmd != "misspec" and vals["space.family"] != fam.value:
            raise ConfigurationError("space.family must match model.family outside misspec")
        default_kind = {"misspec": "misspecified", "verify": "wellspecified"}.get(cmd, "wellspecified")
        vals.setdefault("space.kind", default_kind)
        if vals["space.kind"] == "none" and cmd != "verify":
            raise ConfigurationError(f"{cmd} needs a parameter space")
        if cmd == "consistency" and vals["space.kind"] != "wellspecified":
            raise ConfigurationError("consistency runs on the well-specified parameter space")
        if Family(vals["space.family"]) is Family.THRESHOLD:
            for bound in ("L", "U"):
                if f"space.{bound}" not in vals:
                    if f"model.{bound}" not in vals:
                        raise ConfigurationError(f"threshold fits need space.{bound}")
                    vals[f"space.{bound}"] = vals[f"model.{bound}"]
    for key, (_, default) in SCHEMA.items():
        if default is not None:
            vals.setdefault(key, default)
    if cmd == "misspec" and vals["space.kind"] == "none":
        raise ConfigurationError("misspec needs a parameter space")
    cfg = ExperimentConfig(cmd, vals)
    if cfg.has_model:
        cfg.model()  # parameter validation
    if cmd != "simulate":
        cfg.space()
    return cfg
