"""Run configuration files.

Flat ``key = value`` lines, ``#`` comments, and optional ``[section]``
headers for the per-method grids::

    seed = 7
    n = 10
    d = 2
    r = 0.9, 0.5
    rho = 0.1
    beta2 = -2:2:21        # start:stop:count, inclusive
    snr = 1, 3, 5
    methods = ls, ridge, garrote, split

    [ridge]
    lambda_min = 1e-4      # multiplied by n
    lambda_max = 1e3
    lambda_count = 50

``noise_variance`` fixes sigma2 directly; ``snr`` is then ignored and the
output reports the SNR in force at each beta2. Unknown keys and sections are errors. ``gamma_r``/``gamma_rho`` may be
given as full matrices (rows separated by ``;``) instead of ``r``/``rho``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .core import CorrelationSpec
from .errors import ConfigError, ParameterError
from .mspe import METHODS, TEST_SAMPLING, Scenario, TuningGrid, log_grid

_SECTION = re.compile(r"^\[([A-Za-z_]+)\]$")


def _floats(text: str) -> list[float]:
    text = text.strip()
    m = re.fullmatch(r"([^:,]+):([^:,]+):([^:,]+)", text)
    if m:
        lo, hi, cnt = float(m.group(1)), float(m.group(2)), _int(m.group(3))
        if cnt < 1:
            raise ValueError("count must be >= 1")
        # rounded so that e.g. -2:2:21 gives -0.8 rather than -0.7999999999999998
        return [float(f"{v:.12g}") for v in np.linspace(lo, hi, cnt)]
    return [float(v) for v in text.replace(",", " ").split()]


def _int(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


def _matrix(text: str) -> np.ndarray:
    rows = [_floats(r) for r in text.split(";") if r.strip()]
    if len({len(r) for r in rows}) != 1:
        raise ValueError("matrix rows have different lengths")
    return np.array(rows)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _words(text: str) -> list[str]:
    return [w for w in text.replace(",", " ").split() if w]


def _choice(options):
    def parse(text):
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return t
    return parse


# key -> parser, per section ("" is the top level)
SCHEMA: dict[str, dict[str, Callable[[str], Any]]] = {
    "": {
        "seed": _int,
        "n": _int,
        "d": _int,
        "r": _floats,
        "rho": _floats,
        "gamma_r": _matrix,
        "gamma_rho": _matrix,
        "beta1": float,
        "beta2": _floats,
        "k": _int,
        "snr": _floats,
        "noise_variance": float,
        "N": _int,
        "M": _int,
        "test_sampling": _choice(TEST_SAMPLING),
        "noise_sampling": _choice(TEST_SAMPLING),
        "methods": _words,
        "mode": _choice(("auto", "closed", "montecarlo")),
        "output": str.strip,
        "jobs": _int,
    },
    "ridge": {"lambda_min": float, "lambda_max": float, "lambda_count": _int,
              "scale_by_n": _bool, "lambdas": _floats},
    "enet": {"lambda_min": float, "lambda_max": float, "lambda_count": _int,
             "lambdas": _floats, "alphas": _floats},
    "splitreg": {"G": _int, "lambda_d": _floats},
    "split": {"gmax": _int},
    "solver": {"tolerance": float, "max_sweeps": _int},
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "": {"seed": 0, "beta1": 1.0, "beta2": [0.0], "snr": [1.0], "N": 200, "M": 500,
         "test_sampling": "matched", "noise_sampling": "matched", "methods": ["ls", "ridge", "garrote", "split"],
         "mode": "auto", "output": "out.csv", "jobs": 1},
    "ridge": {"lambda_min": 1e-4, "lambda_max": 1e3, "lambda_count": 50, "scale_by_n": True},
    "enet": {"lambda_min": 1e-4, "lambda_max": 1e3, "lambda_count": 50,
             "alphas": [0.0, 0.25, 0.5, 0.75, 1.0]},
    "splitreg": {"G": 3, "lambda_d": [0.0] + sorted(log_grid(1e-3, 1e2, 20), reverse=True)},
    "split": {"gmax": 3},
    "solver": {"tolerance": 1e-8, "max_sweeps": 100000},
}


@dataclass
class RunConfig:
    """Parsed configuration: ``values[section][key]`` with defaults filled
    in, plus the original text of explicitly set entries."""

    values: dict[str, dict[str, Any]]
    raw: dict[str, dict[str, str]] = field(default_factory=dict)
    lines: dict[tuple[str, str], int] = field(default_factory=dict)

    def get(self, key: str, section: str = ""):
        return self.values[section].get(key)

    def set(self, key: str, value: Any, section: str = "") -> None:
        self.values[section][key] = value
        self.raw.setdefault(section, {})[key] = _render(value)

    def _fail(self, message, key, section=""):
        raise ConfigError(message, key=key if not section else f"{section}.{key}",
                          line=self.lines.get((section, key)))

    # -- derived objects -------------------------------------------------

    def correlation_specs(self) -> list[CorrelationSpec]:
        d = self.get("d")
        if d is None:
            self._fail("missing required key", "d")
        gr, gp = self.get("gamma_r"), self.get("gamma_rho")
        rs, rhos = self.get("r"), self.get("rho")
        if (gr is None) != (gp is None):
            self._fail("gamma_r and gamma_rho must be given together", "gamma_r")
        try:
            if gr is not None:
                if rs is not None or rhos is not None:
                    self._fail("give either r/rho or gamma_r/gamma_rho, not both", "gamma_r")
                spec = CorrelationSpec(gp, gr)
                if spec.d != d:
                    self._fail(f"matrix size {spec.d} does not match d={d}", "gamma_r")
                return [spec]
            if rs is None or rhos is None:
                self._fail("missing required key", "r" if rs is None else "rho")
            return [CorrelationSpec.equicorrelation(d, rho, r) for r in rs for rho in rhos]
        except ConfigError:
            raise
        except ParameterError as exc:
            key = "gamma_r" if gr is not None else "r"
            self._fail(str(exc), key)

    def scenarios(self) -> list[Scenario]:
        """One template per correlation spec, at the first SNR and beta2."""
        for key in ("n", "d"):
            if self.get(key) is None:
                self._fail("missing required key", key)
        out = []
        for spec in self.correlation_specs():
            try:
                out.append(Scenario(
                    n=self.get("n"), d=self.get("d"), beta1=self.get("beta1"),
                    beta2=self.get("beta2")[0], snr=self.get("snr")[0], spec=spec,
                    N=self.get("N"), M=self.get("M"), seed=self.get("seed"), k=self.get("k"),
                    test_sampling=self.get("test_sampling"),
                    noise_sampling=self.get("noise_sampling"),
                    noise_variance=self.get("noise_variance"),
                ))
            except ParameterError as exc:
                self._fail(str(exc), _guess_key(str(exc)))
        return out

    def grid(self) -> TuningGrid:
        n = self.get("n")
        ridge, enet = self.values["ridge"], self.values["enet"]
        if ridge.get("lambdas") is not None:
            rl = tuple(ridge["lambdas"])
        else:
            rl = log_grid(ridge["lambda_min"], ridge["lambda_max"], ridge["lambda_count"])
            if ridge["scale_by_n"]:
                rl = tuple(n * v for v in rl)
        if enet.get("lambdas") is not None:
            el = tuple(enet["lambdas"])
        else:
            el = log_grid(enet["lambda_min"], enet["lambda_max"], enet["lambda_count"])
        try:
            return TuningGrid(
                ridge_lambdas=rl, enet_lambdas=el, alphas=tuple(enet["alphas"]),
                lambda_d=tuple(self.values["splitreg"]["lambda_d"]),
                splitreg_groups=self.values["splitreg"]["G"],
                split_gmax=self.values["split"]["gmax"],
                tolerance=self.values["solver"]["tolerance"],
                max_sweeps=self.values["solver"]["max_sweeps"],
            )
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc

    def methods(self) -> list[str]:
        ms = self.get("methods")
        for m in ms:
            if m not in METHODS:
                self._fail(f"unknown method '{m}' (known: {', '.join(METHODS)})", "methods")
        if len(set(ms)) != len(ms):
            self._fail("duplicate method", "methods")
        return ms

    def validate(self) -> None:
        if self.get("jobs") < 1:
            self._fail("jobs must be >= 1", "jobs")
        self.methods()
        self.scenarios()
        self.grid()

    def effective_lines(self) -> list[str]:
        """The full configuration after defaults, one ``key = value`` per line.

        ``output`` and ``jobs`` are left out: they do not affect results, and
        leaving them out keeps output files byte-identical across them.
        """
        out = []
        for section, keys in self.values.items():
            if section:
                out.append(f"[{section}]")
            for key, val in keys.items():
                if val is not None and (section, key) not in _NOT_ECHOED:
                    out.append(f"{key} = {_render(val)}")
        return out


_NOT_ECHOED = {("", "output"), ("", "jobs")}


def _render(val) -> str:
    if isinstance(val, np.ndarray):
        return "; ".join(", ".join(repr(float(v)) for v in row) for row in val)
    if isinstance(val, (list, tuple)):
        return ", ".join(repr(float(v)) if isinstance(v, float) else str(v) for v in val)
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return repr(val)
    return str(val)


def _guess_key(message: str) -> str | None:
    for key in ("snr", "N", "M", "k", "n", "test_sampling", "noise_sampling"):
        if re.search(rf"\b{key}\b", message):
            return key
    return None


def parse_config(text: str) -> RunConfig:
    values = {s: dict(v) for s, v in DEFAULTS.items()}
    for s in SCHEMA:
        for key in SCHEMA[s]:
            values[s].setdefault(key, None)
    raw: dict[str, dict[str, str]] = {}
    lines: dict[tuple[str, str], int] = {}
    section = ""
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        m = _SECTION.match(body)
        if m:
            section = m.group(1)
            if section not in SCHEMA or section == "":
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, val = (part.strip() for part in body.split("=", 1))
        qual = f"{section}.{key}" if section else key
        if key not in SCHEMA[section]:
            raise ConfigError("unknown key", key=qual, line=lineno)
        if (section, key) in lines:
            raise ConfigError("key given twice", key=qual, line=lineno)
        try:
            values[section][key] = SCHEMA[section][key](val)
        except ValueError as exc:
            raise ConfigError(f"bad value {val!r}: {exc}", key=qual, line=lineno) from None
        raw.setdefault(section, {})[key] = val
        lines[(section, key)] = lineno
    return RunConfig(values, raw, lines)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    return parse_config(text)
