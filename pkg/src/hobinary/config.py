"""Run configuration: a YAML file plus command-line overrides.

Every field has a default equal to the base data set of the credit-spread
study, so an empty file (or none at all) prices the base contract.  Errors
point at the offending line of the file when one is involved.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Any

import yaml

from .binary_engine import parse_signs
from .bond_pricer import BondContract, Endogenous, Exogenous, PricerSettings
from .errors import ConfigError, PricingError
from .oracles.fd import FdGrid
from .oracles.mc import McConfig
from .short_rate import FirmParams, VasicekParams
from .term_structure import CoefficientCurve

DEFAULTS: dict[str, Any] = {
    "contract": {
        "announce_dates": [0.0, 3.0, 6.0],
        "intensities": [0.1, 0.3],
        "barriers": [100.0, 100.0],
        "recovery": {"mode": "endogenous", "R_e": 0.5, "R_u": 0.5, "alpha": 1.0 / 150.0},
    },
    "model": {
        "vasicek": {"a1": 0.379 * 0.098, "a2": 0.379, "s_r": 0.077},
        "firm": {"b": 0.05, "s_V": 1.0, "rho": 0.5},
    },
    "state": {"x": 200.0, "r": 0.098, "t": 0.0},
    "grid": {"points": 50, "t": None},
    "mvn": {"tol": 1e-7, "seed": 20130620},
    "numerics": {"quad_nodes": 64, "vol_steps_per_year": 250, "workers": 1},
    "fd": {"nodes": 800, "width_sd": 8.0, "steps_per_year": 1000, "scheme": "cn"},
    "mc": {"paths": 100_000, "dt": 1.0 / 500.0, "seed": 12345, "antithetic": False},
    "verify": {"fd_rel_tol": 3e-3, "mc_sigmas": 3.0, "lattice": 5, "mc": True},
    "binary": {
        "kind": "bond",
        "signs": "+",
        "strikes": [100.0],
        "expiries": [1.0],
        "r": 0.05,
        "q": 0.0,
        "sigma": 0.2,
    },
    "output": {"path": None},
}


def _to_python(node, path: tuple, marks: dict):
    marks[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for key_node, value_node in node.value:
            key = key_node.value
            out[key] = _to_python(value_node, path + (key,), marks)
            marks[path + (key,)] = key_node.start_mark.line + 1
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_to_python(v, path + (i,), marks) for i, v in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node))


def _merge(base: dict, update: dict, path: tuple, where) -> None:
    for key, value in update.items():
        here = path + (key,)
        if key not in base:
            raise ConfigError(f"{where(here)}unknown key {'.'.join(map(str, here))!r}")
        if isinstance(base[key], dict) and not _is_curve_slot(here):
            if not isinstance(value, dict):
                raise ConfigError(f"{where(here)}{'.'.join(map(str, here))} must be a mapping")
            _merge(base[key], value, here, where)
        else:
            base[key] = value


def _is_curve_slot(path: tuple) -> bool:
    return path in {("model", "firm", "s_V"), ("binary", "r"), ("binary", "q"), ("binary", "sigma")}


@dataclass
class RunConfig:
    """Merged settings; ``data`` mirrors the YAML layout of :data:`DEFAULTS`."""

    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))
    source: str | None = None
    lines: dict = field(default_factory=dict)

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "RunConfig":
        try:
            node = yaml.compose(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = f"{source}:{mark.line + 1}: " if mark else f"{source}: "
            raise ConfigError(f"{line}malformed YAML ({getattr(exc, 'problem', exc)})") from None
        cfg = cls(source=source)
        if node is None:
            return cfg
        if not isinstance(node, yaml.MappingNode):
            raise ConfigError(f"{source}:{node.start_mark.line + 1}: top level must be a mapping")
        marks: dict = {}
        parsed = _to_python(node, (), marks)
        cfg.lines = marks
        _merge(cfg.data, parsed, (), cfg.where)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.from_text(text, str(path))

    def where(self, path: tuple) -> str:
        """``file:line: `` prefix for a key path, or ``""`` if it came from defaults or flags."""
        while path:
            if path in self.lines and self.source:
                return f"{self.source}:{self.lines[path]}: "
            path = path[:-1]
        return ""

    def get(self, dotted: str):
        node = self.data
        for part in dotted.split("."):
            node = node[part]
        return node

    def set(self, dotted: str, value) -> None:
        """Flag override; drops the file line so diagnostics name the flag instead."""
        parts = tuple(dotted.split("."))
        node = self.data
        for depth, part in enumerate(parts[:-1]):
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown key {'.'.join(parts[: depth + 1])!r}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"unknown key {dotted!r}")
        node[parts[-1]] = value
        self.lines = {k: v for k, v in self.lines.items() if k[: len(parts)] != parts}

    def _check(self, path: tuple, build):
        try:
            return build()
        except (PricingError, TypeError, ValueError, KeyError) as exc:
            if getattr(exc, "anchored", False):
                raise
            err = ConfigError(f"{self.where(self._culprit(path, str(exc)))}{'.'.join(path)}: {exc}")
            err.anchored = True
            raise err from None

    def _culprit(self, path: tuple, message: str) -> tuple:
        """Narrow ``path`` to the child key a validation message names, if any."""
        node = self.data
        for part in path:
            node = node[part]
        if isinstance(node, dict):
            for key in node:
                if key in message or key.replace("_", " ") in message:
                    return path + (key,)
        return path

    def validate(self) -> None:
        self.contract()
        self.settings()
        self.state()
        self.fd_grid()
        self.mc_config()
        self.t_grid()

    def recovery(self):
        block = self.data["contract"]["recovery"]
        path = ("contract", "recovery")

        def build():
            mode = block.get("mode", "endogenous")
            if mode == "exogenous":
                return Exogenous(float(block["R_e"]), float(block["R_u"]))
            if mode == "endogenous":
                return Endogenous(float(block["R_e"]), float(block["R_u"]), float(block["alpha"]))
            raise ValueError(f"mode must be 'exogenous' or 'endogenous', got {mode!r}")

        return self._check(path, build)

    def rate_model(self) -> VasicekParams:
        v = self.data["model"]["vasicek"]
        return self._check(
            ("model", "vasicek"), lambda: VasicekParams(float(v["a1"]), float(v["a2"]), float(v["s_r"]))
        )

    def firm(self) -> FirmParams:
        f = self.data["model"]["firm"]

        def build():
            s_V = CoefficientCurve.from_mapping(f["s_V"], kind="volatility")
            return FirmParams(float(f["b"]), s_V, float(f["rho"]))

        return self._check(("model", "firm"), build)

    def contract(self) -> BondContract:
        c = self.data["contract"]
        recovery, firm, model = self.recovery(), self.firm(), self.rate_model()
        return self._check(
            ("contract",),
            lambda: BondContract(
                tuple(c["announce_dates"]), tuple(c["intensities"]), tuple(c["barriers"]),
                recovery, firm, model,
            ),
        )

    def settings(self) -> PricerSettings:
        n, m = self.data["numerics"], self.data["mvn"]

        def build():
            s = PricerSettings(int(n["quad_nodes"]), int(n["vol_steps_per_year"]), float(m["tol"]),
                               None if m["seed"] is None else int(m["seed"]))
            if s.quad_nodes < 1 or s.vol_steps_per_year < 1 or not s.mvn_tol > 0:
                raise ValueError("quad_nodes, vol_steps_per_year and tol must be positive")
            return s

        return self._check(("numerics",), build)

    @property
    def workers(self) -> int:
        w = self.data["numerics"]["workers"]
        if not isinstance(w, int) or w < 1:
            raise ConfigError(f"{self.where(('numerics', 'workers'))}workers must be a positive integer")
        return w

    def state(self) -> tuple[float, float, float]:
        s = self.data["state"]

        def build():
            x, r, t = float(s["x"]), float(s["r"]), float(s["t"])
            if not x > 0 or not math.isfinite(x):
                raise ValueError("x must be positive and finite")
            return x, r, t

        return self._check(("state",), build)

    def t_grid(self) -> list[float]:
        g = self.data["grid"]
        contract = self.contract()

        def build():
            if g["t"] is not None:
                ts = [float(v) for v in g["t"]]
            else:
                points = int(g["points"])
                if points < 0:
                    raise ValueError("points must be >= 0")
                lo, hi = contract.announce_dates[0], contract.maturity
                ts = [lo + (hi - lo) * k / points for k in range(points)]
            for t in ts:
                if not contract.announce_dates[0] <= t < contract.maturity:
                    raise ValueError(f"grid time {t} outside [t_0, T)")
            return ts

        return self._check(("grid",), build)

    def fd_grid(self) -> FdGrid:
        f = self.data["fd"]
        return self._check(
            ("fd",),
            lambda: FdGrid(int(f["nodes"]), float(f["width_sd"]), int(f["steps_per_year"]), str(f["scheme"])),
        )

    def mc_config(self) -> McConfig:
        m = self.data["mc"]
        return self._check(
            ("mc",),
            lambda: McConfig(int(m["paths"]), float(m["dt"]), int(m["seed"]), bool(m["antithetic"])),
        )

    def binary_block(self) -> dict:
        b = self.data["binary"]

        def build():
            return {
                "kind": b["kind"],
                "signs": parse_signs(str(b["signs"])) if isinstance(b["signs"], str) else parse_signs(b["signs"]),
                "strikes": tuple(float(k) for k in b["strikes"]),
                "expiries": tuple(float(T) for T in b["expiries"]),
                "r": CoefficientCurve.from_mapping(b["r"], kind="rate"),
                "q": CoefficientCurve.from_mapping(b["q"], kind="rate"),
                "sigma": CoefficientCurve.from_mapping(b["sigma"], kind="volatility"),
            }

        return self._check(("binary",), build)

    def dump(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=False)
