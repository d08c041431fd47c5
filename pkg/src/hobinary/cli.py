"""Command-line interface.

    hobinary price-binary --kind bond --signs +- --strikes 90,110 --expiries 1,2
    hobinary price-bond --config run.yaml --x 200
    hobinary spread-curve --figure 1 --out-dir figs/
    hobinary verify --mc-paths 20000

Exit status: 0 ok, 1 verification failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Sequence

import yaml

from .binary_engine import BinarySpec, format_signs, parse_signs, price_binary
from .bond_pricer import PricedCurve, price_bond, spread_curve
from .config import RunConfig
from .errors import ArgumentError, ConfigError, PricingError
from .oracles.verify import run_verification

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# figure number -> (sweep flag, values)
FIGURES: dict[int, tuple[str, list]] = {
    1: ("recovery", [0.3, 0.5, 0.8]),
    2: ("sv", [0.5, 1.0, 1.2]),
    3: ("rho", [0.5, 0.0, -0.5]),
    4: ("x", [180.0, 220.0, 260.0]),
    5: ("lambdas", [(0.001, 0.002), (0.01, 0.008), (0.1, 0.3)]),
    6: ("lambdas", [(0.01, 0.002), (0.01, 0.008), (0.01, 0.3)]),
    7: ("lambdas", [(0.001, 0.3), (0.01, 0.008), (0.1, 0.002)]),
    8: ("barriers", [(40.0, 90.0), (100.0, 100.0), (160.0, 110.0)]),
    9: ("barriers", [(140.0, 90.0), (100.0, 100.0), (60.0, 110.0)]),
    10: ("barriers", [(100.0, 90.0), (100.0, 100.0), (100.0, 110.0)]),
}


class UsageError(Exception):
    """Bad flag value; the message names the flag."""


def _floats(flag: str, text: str) -> list[float]:
    if text.strip() == "":
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{flag}: expected comma-separated numbers, got {text!r}") from None


def _pairs(flag: str, text: str) -> list[tuple[float, ...]]:
    out = []
    for item in text.split(","):
        try:
            out.append(tuple(float(v) for v in item.split(":")))
        except ValueError:
            raise UsageError(f"{flag}: expected a:b pairs separated by commas, got {item!r}") from None
    return out


def _yaml_value(flag: str, text: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        raise UsageError(f"{flag}: cannot parse value {text!r}") from None


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-c", "--config", help="YAML run configuration")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. --set mc.paths=20000")
    parser.add_argument("--mode", choices=("exogenous", "endogenous"), help="recovery type")
    parser.add_argument("--seed", type=int, help="MVN seed (and MC seed for verify)")
    parser.add_argument("--workers", type=int, help="worker processes")


def _bond_state(parser: argparse.ArgumentParser, x_help: str) -> None:
    parser.add_argument("--x", help=x_help)
    parser.add_argument("--r", type=float, help="short rate (sets the price column)")
    parser.add_argument("--t", type=float, help="valuation time")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hobinary", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price-binary", help="closed-form higher-order binary")
    _common(p)
    p.add_argument("--kind", choices=("asset", "bond"))
    p.add_argument("--signs", help="sign string such as +-+")
    p.add_argument("--strikes", help="comma-separated strikes")
    p.add_argument("--expiries", help="comma-separated ascending expiries")
    p.add_argument("--rate", help="rate curve: number or {breakpoints: [..], values: [..]}")
    p.add_argument("--div", help="dividend curve, same syntax as --rate")
    p.add_argument("--sigma", help="volatility curve, same syntax as --rate")
    p.add_argument("--spot", type=float, default=100.0)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--zero-strike", action="store_true", help="set every strike to 0 (vacuous indicators)")
    p.add_argument("--tol", type=float, help="MVN absolute tolerance")

    p = sub.add_parser("price-bond", help="defaultable bond price and spread")
    _common(p)
    _bond_state(p, "firm value over risk-free bond, V/Z")
    p.add_argument("--V", type=float, help="firm value (overrides --x)")

    p = sub.add_parser("spread-curve", help="credit-spread curve(s) as CSV")
    _common(p)
    _bond_state(p, "V/Z; a comma list sweeps it")
    p.add_argument("--points", type=int, help="equally spaced t points on [t_0, T)")
    p.add_argument("--t-grid", help="explicit comma-separated times ('' for none)")
    p.add_argument("--figure", type=int, choices=sorted(FIGURES), help="preset sweep of a study figure")
    p.add_argument("--recovery", help="R_e = R_u values to sweep")
    p.add_argument("--sv", help="firm volatilities to sweep")
    p.add_argument("--rho", help="correlations to sweep")
    p.add_argument("--lambdas", help="intensity tuples a:b,... to sweep")
    p.add_argument("--barriers", help="barrier tuples a:b,... to sweep")
    p.add_argument("--out", help="CSV path for a single curve (default stdout)")
    p.add_argument("--out-dir", help="directory for one CSV per sweep value")

    p = sub.add_parser("verify", help="closed form against FD and MC oracles")
    _common(p)
    _bond_state(p, "V/Z at the centre of the lattice")
    p.add_argument("--fd-nodes", type=int)
    p.add_argument("--fd-steps", type=int, help="FD time steps per year")
    p.add_argument("--mc-paths", type=int)
    p.add_argument("--no-mc", action="store_true", help="skip the Monte-Carlo row")
    p.add_argument("--lattice", type=int, help="lattice size per axis")
    p.add_argument("--report", help="CSV path for the comparison report")
    return parser


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set: expected KEY=VALUE, got {item!r}")
        cfg.set(key.strip(), _yaml_value("--set", value))
    if args.mode:
        cfg.set("contract.recovery.mode", args.mode)
    if args.seed is not None:
        cfg.set("mvn.seed", args.seed)
        cfg.set("mc.seed", args.seed)
    if args.workers is not None:
        cfg.set("numerics.workers", args.workers)
    for name in ("r", "t"):
        value = getattr(args, name, None)
        if value is not None:
            cfg.set(f"state.{name}", value)
    return cfg


def cmd_price_binary(args, cfg: RunConfig, out) -> int:
    if args.kind:
        cfg.set("binary.kind", args.kind)
    if args.signs is not None:
        try:
            parse_signs(args.signs)
        except ArgumentError as exc:
            raise UsageError(f"--signs: {exc}") from None
        cfg.set("binary.signs", args.signs)
    if args.strikes is not None:
        cfg.set("binary.strikes", _floats("--strikes", args.strikes))
    if args.expiries is not None:
        cfg.set("binary.expiries", _floats("--expiries", args.expiries))
    for flag, key in (("rate", "r"), ("div", "q"), ("sigma", "sigma")):
        text = getattr(args, flag)
        if text is not None:
            cfg.set(f"binary.{key}", _yaml_value(f"--{flag}", text))
    if args.tol is not None:
        cfg.set("mvn.tol", args.tol)
    block = cfg.binary_block()
    if args.zero_strike:
        block["strikes"] = tuple(0.0 for _ in block["strikes"])
    try:
        spec = BinarySpec(**block)
    except ArgumentError as exc:
        raise ConfigError(f"binary spec: {exc}") from None
    settings = cfg.settings()
    quote = price_binary(spec, args.spot, args.t, tol=settings.mvn_tol, seed=settings.seed)
    print(f"kind: {spec.kind}", file=out)
    print(f"signs: {format_signs(spec.signs)}", file=out)
    print(f"value: {_fmt(quote.value)}", file=out)
    print(f"d: {','.join(_fmt(v) for v in quote.d_vector)}", file=out)
    print(f"d_prime: {','.join(_fmt(v) for v in quote.d_prime_vector)}", file=out)
    print(f"mvn_error: {_fmt(quote.error)}", file=out)
    return EXIT_OK


def _single_x(args, cfg: RunConfig) -> None:
    if args.x is not None:
        values = _floats("--x", args.x)
        if len(values) != 1:
            raise UsageError("--x: expected a single value here")
        cfg.set("state.x", values[0])


def cmd_price_bond(args, cfg: RunConfig, out) -> int:
    _single_x(args, cfg)
    contract = cfg.contract()
    x, r, t = cfg.state()
    Z = contract.zcb(r, t)
    V = args.V if args.V is not None else x * Z
    quote = price_bond(contract, V, r, t, cfg.settings())
    for name in ("price", "relative", "spread", "zcb", "x"):
        print(f"{name}: {_fmt(getattr(quote, name))}", file=out)
    if quote.survival is not None:
        print(f"survival: {_fmt(quote.survival)}", file=out)
    print(f"interval: {quote.interval}", file=out)
    return EXIT_OK


def _sweep(args) -> tuple[str, list] | None:
    """The one swept parameter, from ``--figure`` or a sweep flag."""
    chosen = []
    if args.figure is not None:
        chosen.append(FIGURES[args.figure])
    for name in ("recovery", "sv", "rho"):
        text = getattr(args, name)
        if text is not None:
            chosen.append((name, _floats(f"--{name}", text)))
    if args.x is not None and "," in args.x:
        chosen.append(("x", _floats("--x", args.x)))
    for name in ("lambdas", "barriers"):
        text = getattr(args, name)
        if text is not None:
            chosen.append((name, _pairs(f"--{name}", text)))
    if len(chosen) > 1:
        raise UsageError("--figure and the sweep flags are mutually exclusive; give one")
    return chosen[0] if chosen else None


def _apply(cfg: RunConfig, name: str, value) -> None:
    if name == "recovery":
        cfg.set("contract.recovery.R_e", value)
        cfg.set("contract.recovery.R_u", value)
    elif name == "sv":
        cfg.set("model.firm.s_V", value)
    elif name == "rho":
        cfg.set("model.firm.rho", value)
    elif name == "x":
        cfg.set("state.x", value)
    elif name == "lambdas":
        cfg.set("contract.intensities", list(value))
    elif name == "barriers":
        cfg.set("contract.barriers", list(value))


def _label(name: str, value) -> str:
    text = "-".join(f"{v:g}" for v in value) if isinstance(value, tuple) else f"{value:g}"
    return f"{name}_{text}"


def _write(text: str, path, out) -> None:
    if path is None:
        out.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None


def cmd_spread_curve(args, cfg: RunConfig, out) -> int:
    if args.points is not None:
        cfg.set("grid.points", args.points)
    if args.t_grid is not None:
        cfg.set("grid.t", _floats("--t-grid", args.t_grid))
    sweep = _sweep(args)
    if sweep is None:
        _single_x(args, cfg)
        curve = _curve(cfg)
        _write(curve.to_csv(), args.out or cfg.data["output"]["path"], out)
        return EXIT_OK
    name, values = sweep
    if not args.out_dir:
        raise UsageError("--out-dir: required when sweeping a parameter")
    target = Path(args.out_dir)
    try:
        target.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {target}: {exc.strerror}") from None
    for value in values:
        _apply(cfg, name, value)
        path = target / f"{_label(name, value)}.csv"
        _write(_curve(cfg).to_csv(), path, out)
        print(path, file=sys.stderr)
    return EXIT_OK


def _curve(cfg: RunConfig) -> PricedCurve:
    contract = cfg.contract()
    x, r, _ = cfg.state()
    return spread_curve(contract, cfg.t_grid(), x=x, r=r, settings=cfg.settings(), workers=cfg.workers)


def cmd_verify(args, cfg: RunConfig, out) -> int:
    _single_x(args, cfg)
    for flag, key in (("fd_nodes", "fd.nodes"), ("fd_steps", "fd.steps_per_year"),
                      ("mc_paths", "mc.paths"), ("lattice", "verify.lattice")):
        value = getattr(args, flag)
        if value is not None:
            cfg.set(key, value)
    if args.no_mc:
        cfg.set("verify.mc", False)
    v = cfg.data["verify"]
    x, r, t = cfg.state()
    report = run_verification(
        cfg.contract(), x=x, r=r, t=t, settings=cfg.settings(), fd_grid=cfg.fd_grid(),
        mc_config=replace(cfg.mc_config(), workers=cfg.workers) if v["mc"] else None,
        lattice=int(v["lattice"]), fd_rel_tol=float(v["fd_rel_tol"]), mc_sigmas=float(v["mc_sigmas"]),
    )
    if args.report:
        _write(report.to_csv(), args.report, out)
    else:
        out.write(report.to_csv())
    worst = report.worst
    status = "PASS" if report.passed else "FAIL"
    print(f"{status}: {len(report.rows)} rows, max FD relative error {report.max_error('fd'):.3e}",
          file=sys.stderr)
    if worst is not None:
        print(f"worst: {worst.check} x={_fmt(worst.x)} t={_fmt(worst.t)} closed={_fmt(worst.closed)} "
              f"oracle={_fmt(worst.oracle)} rel_error={worst.rel_error:.3e} tol={worst.tolerance:.3e}",
              file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS: dict[str, Callable] = {
    "price-binary": cmd_price_binary,
    "price-bond": cmd_price_bond,
    "spread-curve": cmd_spread_curve,
    "verify": cmd_verify,
}


def _attach_negative_values(argv: Sequence[str]) -> list[str]:
    """``--rho -0.5,0`` -> ``--rho=-0.5,0``; argparse would read the value as a flag."""
    out: list[str] = []
    for token in argv:
        if (out and out[-1].startswith("--") and "=" not in out[-1] and len(token) > 1
                and token[0] == "-" and (token[1].isdigit() or token[1] == ".")):
            out[-1] = f"{out[-1]}={token}"
        else:
            out.append(token)
    return out


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parser.parse_args(_attach_negative_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _load_config(args)
        return COMMANDS[args.command](args, cfg, out)
    except UsageError as exc:
        print(f"hobinary {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"hobinary {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"hobinary {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except PricingError as exc:
        print(f"hobinary {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
