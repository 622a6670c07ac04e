"""Command-line front end.

    splitmspe count P G [--leftout]
    splitmspe gen CONFIG [--seed S] [--output FILE]
    splitmspe curves CONFIG [--seed S] [--output FILE] [--jobs J]
    splitmspe splitreg-fit DATA --lambda-s L --alpha A --lambda-d D --G G [--output FILE]

Exit codes: 0 success, 2 configuration or argument error, 3 numerical
failure, 4 enumeration cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import RunConfig, load_config
from .core import derive_stream, standardize
from .errors import ConfigError, ParameterError, SplitMspeError
from .mspe import MspeRecord, sweep_curve
from .partitions import count_splits, count_splits_with_leftout
from .splitreg import SplitRegConfig, aggregate, fit_splitreg, stacking_weights
from .targetcov import TargetCovRequest, generate

CURVE_HEADER = ["method", "beta2", "snr", "r", "rho", "mspe", "mspe_minus_sigma2", "se",
                "argmin_tuning"]


def fmt(x) -> str:
    """Shortest round-trip decimal for floats."""
    if x is None:
        return ""
    return repr(float(x))


def write_atomic(path: str | Path, text: str) -> None:
    """Write via a temporary file in the same directory and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _comment_header(cfg: RunConfig, command: str) -> str:
    lines = [f"# splitmspe {command}"] + [f"# {line}" for line in cfg.effective_lines()]
    return "\n".join(lines) + "\n"


def curves_csv(cfg: RunConfig) -> str:
    cfg.validate()
    methods = cfg.methods()
    grid = cfg.grid()
    rows: list[MspeRecord] = []
    for template in cfg.scenarios():
        rows += sweep_curve(template, cfg.get("beta2"), methods, grid, snrs=cfg.get("snr"),
                            mode=cfg.get("mode"), jobs=cfg.get("jobs"))
    buf = io.StringIO()
    buf.write(_comment_header(cfg, "curves"))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for rec in rows:
        w.writerow([rec.method, fmt(rec.beta2), fmt(rec.snr), fmt(rec.r), fmt(rec.rho),
                    fmt(rec.mspe), fmt(rec.mspe_minus_sigma2), fmt(rec.se), rec.argmin_string()])
    return buf.getvalue()


def gen_csv(cfg: RunConfig) -> str:
    specs = cfg.correlation_specs()
    if len(specs) != 1:
        raise ConfigError("gen needs a single (r, rho) pair", key="r")
    n = cfg.get("n")
    if n is None:
        raise ConfigError("missing required key", key="n")
    Y = generate(TargetCovRequest(n, specs[0], derive_stream(cfg.get("seed"), 0, "design")))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{j + 1}" for j in range(Y.shape[1])])
    for row in Y:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def read_data_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Numeric CSV with a header; the column named ``y`` (or else the last
    column) is the response."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    except OSError as exc:
        raise ParameterError(f"cannot read data file: {exc}") from exc
    if len(rows) < 2:
        raise ParameterError("data file needs a header and at least one row")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise ParameterError(f"non-numeric entry in data file: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != len(header) or data.shape[1] < 2:
        raise ParameterError("data rows must match the header and have at least two columns")
    yi = header.index("y") if "y" in header else len(header) - 1
    return np.delete(data, yi, axis=1), data[:, yi]


def splitreg_csv(X, y, cfg: SplitRegConfig, aggregation: str = "uniform") -> str:
    ds = standardize(X, y)
    fit = fit_splitreg(ds, cfg)
    if aggregation == "stacking":
        fit = fit.with_weights(stacking_weights(ds, cfg), "stacking")
    buf = io.StringIO()
    buf.write(f"# splitmspe splitreg-fit G={cfg.G} lambda_s={fmt(cfg.lambda_s)} "
              f"alpha={fmt(cfg.alpha)} lambda_d={fmt(cfg.lambda_d)} aggregation={aggregation}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "weight"] + [f"x{j + 1}" for j in range(ds.d)])
    for g in range(fit.G):
        w.writerow([f"g{g + 1}", fmt(fit.delta[g])] + [fmt(v) for v in fit.betas[g]])
    w.writerow(["aggregate", ""] + [fmt(v) for v in aggregate(fit)])
    return buf.getvalue()


def _apply_overrides(cfg: RunConfig, args) -> None:
    if getattr(args, "seed", None) is not None:
        cfg.set("seed", args.seed)
    if getattr(args, "output", None) is not None:
        cfg.set("output", args.output)
    if getattr(args, "jobs", None) is not None:
        cfg.set("jobs", args.jobs)


def cmd_count(args) -> int:
    fn = count_splits_with_leftout if args.leftout else count_splits
    print(fn(args.p, args.G).value)
    return 0


def cmd_gen(args) -> int:
    cfg = load_config(args.config)
    _apply_overrides(cfg, args)
    write_atomic(cfg.get("output"), gen_csv(cfg))
    return 0


def cmd_curves(args) -> int:
    cfg = load_config(args.config)
    _apply_overrides(cfg, args)
    write_atomic(cfg.get("output"), curves_csv(cfg))
    return 0


def cmd_splitreg_fit(args) -> int:
    X, y = read_data_csv(args.data)
    cfg = SplitRegConfig(args.G, args.lambda_s, args.alpha, args.lambda_d,
                         tolerance=args.tolerance)
    text = splitreg_csv(X, y, cfg, args.aggregation)
    if args.output:
        write_atomic(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="splitmspe", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="number of splits of p variables into G groups")
    p.add_argument("p", type=int)
    p.add_argument("G", type=int)
    p.add_argument("--leftout", action="store_true", help="also allow left-out variables")
    p.set_defaults(func=cmd_count)

    for name, func, help_ in (("gen", cmd_gen, "write one generated design matrix"),
                              ("curves", cmd_curves, "minimum MSPE curves")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config")
        p.add_argument("--seed", type=int)
        p.add_argument("--output", "-o")
        if name == "curves":
            p.add_argument("--jobs", "-j", type=int)
        p.set_defaults(func=func)

    p = sub.add_parser("splitreg-fit", help="fit SplitReg to a data CSV")
    p.add_argument("data")
    p.add_argument("--lambda-s", type=float, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--lambda-d", type=float, required=True)
    p.add_argument("--G", type=int, required=True)
    p.add_argument("--aggregation", choices=("uniform", "stacking"), default="uniform")
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--seed", type=int, help="accepted for symmetry; the fit is deterministic")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_splitreg_fit)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SplitMspeError as exc:
        print(f"splitmspe: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
