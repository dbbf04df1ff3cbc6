"""Command-line entry point: ``jacobi-fbl {capacity,bounds,validate,sweep}``.

Exit codes: 0 success, 1 failed check or sweep, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .bounds import dispersion_components, error_probability_bounds
from .errors import ConfigError, JacobiFBLError, SweepFailure
from .spectral import capacity_approx, make_dims, snr_db_to_noise_power
from .sweep import emit, parse_config, preset, run_sweep
from .validation import SUITES

SEED_ENV = "JACOBI_FBL_SEED"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _fmt(x: float) -> str:
    return format(x, ".17g")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _report(values: dict, as_json: bool, notes=()) -> None:
    if as_json:
        print(json.dumps(values))
        return
    width = max(len(k) for k in values)
    for key, value in values.items():
        text = _fmt(value) if isinstance(value, float) else str(value)
        print(f"{key:<{width}}  {text}")
    for note in notes:
        print(f"note: {note}")


def cmd_capacity(args) -> int:
    dims = make_dims(args.N, args.M, args.n)
    sol = capacity_approx(dims, snr_db_to_noise_power(args.snr_db))
    _report(
        {
            "branch": sol.branch.value,
            "noise_power": sol.noise_power,
            "delta": sol.delta,
            "delta_prime": sol.delta_prime,
            "lambda_minus": sol.lambda_minus,
            "lambda_plus": sol.lambda_plus,
            "cbar": sol.cbar,
        },
        args.json,
    )
    return EXIT_OK


def cmd_bounds(args) -> int:
    dims = make_dims(args.N, args.M, args.n, args.L)
    sigma2 = snr_db_to_noise_power(args.snr_db)
    ev = error_probability_bounds(dims, sigma2, args.rate)
    comp = dispersion_components(dims, sigma2)
    notes = ["r>0 regime: the lower bound is 1/2"] if ev.second_order_rate > 0 else []
    _report(
        {
            "cbar": ev.cbar,
            "r": ev.second_order_rate,
            "v1": comp.v1,
            "v2": comp.v2,
            "v3": comp.v3,
            "xi_minus": ev.xi_minus,
            "xi_plus": ev.xi_plus,
            "lower": ev.lower_bound,
            "upper": ev.upper_bound,
            "outage": ev.outage,
        },
        args.json,
        notes,
    )
    return EXIT_OK


def cmd_validate(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    names = list(SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        print(f"[{name}]")
        for check in SUITES[name](args.trials, seed):
            print(check.line())
            ok &= check.passed
    return EXIT_OK if ok else EXIT_FAIL


def cmd_sweep(args) -> int:
    if args.preset:
        cfg = preset(args.preset)
    else:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        cfg = parse_config(text)
    seed = args.seed if args.seed is not None else _default_seed()
    if cfg.mc is not None and (args.seed is not None or os.environ.get(SEED_ENV)):
        cfg = cfg.with_seed(seed)
    try:
        result = run_sweep(cfg, workers=args.workers)
    except SweepFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    emit(result, args.format, args.out)
    cells = sum(len(r.cells) for r in result.rows)
    print(f"wrote {len(result.rows)} grid points ({cells} cells) to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jacobi-fbl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="deterministic capacity approximation")
    p.add_argument("--N", type=int, required=True, help="receive antennas")
    p.add_argument("--M", type=int, required=True, help="transmit antennas")
    p.add_argument("--n", type=int, required=True, help="available channels")
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("bounds", help="error-probability bounds at a rate")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--L", type=int, required=True, help="blocklength")
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--rate", type=float, required=True, help="nats per transmit antenna")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("validate", help="Monte-Carlo and identity checks")
    p.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="grid sweep to CSV or JSON")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=["fig2", "fig3"])
    src.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, JacobiFBLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
