"""Command-line entry point: ``hyperfade <subcommand> ...``.

Exit codes: 0 success, 2 usage or domain error, 1 numerical failure or a
failed validation check.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import cascade, harness, hrr, ipl, irs_link, solver
from .errors import DomainError, NonConvergenceError
from .harness import SCHEMA_VERSION, ExperimentConfig
from .irs_link import IrsLinkModel, db_to_linear
from .rng import default_seed

PAIR_FLAGS = ("alpha_s", "beta_s", "alpha_d", "beta_d")


class UsageError(Exception):
    pass


# ----------------------------------------------------------------------------
# Output helpers
# ----------------------------------------------------------------------------

def _num(v):
    if isinstance(v, (bool, str)) or v is None:
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(_num(r[c])) if not isinstance(r[c], str) else r[c] for c in columns])
    return buf.getvalue()


def _emit(args, text: str):
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _emit_record(args, record: dict):
    record = {k: _num(v) for k, v in record.items()}
    if args.format == "json":
        _emit(args, json.dumps({"schema_version": SCHEMA_VERSION, **record}, indent=1) + "\n")
    else:
        _emit(args, _csv_text(list(record), [record]))


def _emit_table(args, columns, rows):
    if args.format == "json":
        body = {"schema_version": SCHEMA_VERSION, "rows": [{c: _num(r[c]) for c in columns} for r in rows]}
        _emit(args, json.dumps(body, indent=1) + "\n")
    else:
        _emit(args, _csv_text(columns, rows))


# ----------------------------------------------------------------------------
# Parameter groups
# ----------------------------------------------------------------------------

def _add_pair_flags(p):
    p.add_argument("--alpha-s", type=float, help="source-link IPL shape")
    p.add_argument("--beta-s", type=float, help="source-link IPL tail power")
    p.add_argument("--omega-s", type=float, default=1.0)
    p.add_argument("--alpha-d", type=float, help="destination-link IPL shape")
    p.add_argument("--beta-d", type=float, help="destination-link IPL tail power")
    p.add_argument("--omega-d", type=float, default=1.0)


def _pair_given(args) -> bool:
    present = [getattr(args, f) is not None for f in PAIR_FLAGS]
    if any(present) and not all(present):
        raise UsageError("pair flags need all of --alpha-s --beta-s --alpha-d --beta-d")
    return all(present)


def _pair_from_flags(args):
    return cascade.make_pair(
        ipl.make_ipl(args.alpha_s, args.beta_s, args.omega_s),
        ipl.make_ipl(args.alpha_d, args.beta_d, args.omega_d),
    )


def _pair_or_alpha0(args, required=True):
    """CascadePair from exactly one of --alpha0 or the pair flags."""
    has_pair = _pair_given(args)
    has_a0 = getattr(args, "alpha0", None) is not None
    if has_pair and has_a0:
        raise UsageError("give either --alpha0 or the pair flags, not both")
    if has_a0:
        return solver.equal_channel_params(args.alpha0)
    if has_pair:
        return _pair_from_flags(args)
    if required:
        raise UsageError("give --alpha0 or the pair flags")
    return None


def _alpha_hat_from(args) -> float:
    groups = sum([args.alpha_hat is not None, args.alpha0 is not None, _pair_given(args)])
    if groups != 1:
        raise UsageError("give exactly one of --alpha-hat, --alpha0 with --n-irs, or the pair flags with --n-irs")
    if args.alpha_hat is not None:
        if args.n_irs is not None:
            raise UsageError("--n-irs does not combine with --alpha-hat")
        return args.alpha_hat
    if args.n_irs is None:
        raise UsageError("--n-irs is required with --alpha0 or the pair flags")
    pair = _pair_or_alpha0(args)
    return irs_link.gamma_approx(IrsLinkModel(pair, args.n_irs)).alpha_hat


def _parse_grid(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"grid must be lo:hi:n, got {text!r}") from None
    if not (0 < lo < hi) or n < 2:
        raise UsageError("grid needs 0 < lo < hi and n >= 2")
    return np.logspace(math.log10(lo), math.log10(hi), n)


def _parse_range(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"range must be lo:hi:step, got {text!r}")
    try:
        return tuple(float(x) for x in parts)
    except ValueError:
        raise UsageError(f"range must be lo:hi:step, got {text!r}") from None


# ----------------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------------

def _metrics_record(a: float) -> dict:
    m = hrr.metrics(a)
    return {"alpha_hat": a, "regime": hrr.classify(a).value, "aof": m.aof, "g_d": m.g_d,
            "delta_po": m.delta_po, "delta_c": m.delta_c}


def cmd_classify(args):
    _emit_record(args, _metrics_record(_alpha_hat_from(args)))


def cmd_metrics(args):
    if args.rayleigh:
        if args.alpha_hat is not None or args.alpha0 is not None or _pair_given(args):
            raise UsageError("--rayleigh takes no other parameters")
        m = hrr.rayleigh_metrics()
        rec = {"aof": m.aof, "g_d": m.g_d, "delta_po": m.delta_po, "delta_c": m.delta_c}
    else:
        rec = _metrics_record(_alpha_hat_from(args))
        rec.pop("regime")
    _emit_record(args, rec)


def cmd_solve(args):
    if args.alpha0 is not None and not _pair_given(args):
        res = solver.theorem5(args.alpha0)
    else:
        res = solver.solve_pair(_pair_or_alpha0(args))
    _emit_record(args, res.as_dict())


def cmd_pdf(args):
    z = _parse_grid(args.z_grid)
    dist = args.dist
    if dist == "ipl":
        if args.alpha is None or args.beta is None:
            raise UsageError("--dist ipl needs --alpha and --beta")
        p = ipl.make_ipl(args.alpha, args.beta, args.omega)
        pdf, cdf = ipl.pdf_envelope(p, z), ipl.cdf_envelope(p, z)
    elif dist == "product":
        pair = _pair_or_alpha0(args)
        if args.method == "foxh":
            pdf = cascade.product_pdf_foxh(pair, z)
        else:
            pdf = cascade.product_pdf_direct(pair, z)
        cdf = cascade.cdf_product(pair, z)
    elif dist == "sum-approx":
        if args.alpha_hat is not None:
            if args.alpha0 is not None or _pair_given(args):
                raise UsageError("give either --alpha-hat or the link parameters, not both")
            ga = irs_link.approx_from_alpha_hat(args.alpha_hat)
        else:
            if args.n_irs is None:
                raise UsageError("--dist sum-approx needs --alpha-hat or --n-irs with link parameters")
            ga = irs_link.gamma_approx(IrsLinkModel(_pair_or_alpha0(args), args.n_irs))
        pdf, cdf = irs_link.sum_pdf_approx(ga, z), irs_link.sum_cdf_approx(ga, z)
    else:
        if args.alpha_hat is None:
            raise UsageError("--dist snr-approx needs --alpha-hat")
        ga = irs_link.approx_from_alpha_hat(args.alpha_hat)
        gbar = float(db_to_linear(args.gbar_db))
        pdf, cdf = irs_link.snr_pdf_approx(ga, gbar, z), irs_link.snr_cdf_approx(ga, gbar, z)
    rows = [{"z": a, "pdf": b, "cdf": c} for a, b, c in zip(z, np.atleast_1d(pdf), np.atleast_1d(cdf))]
    _emit_table(args, ("z", "pdf", "cdf"), rows)


def _config_from_args(args) -> ExperimentConfig:
    if args.config is not None:
        with open(args.config, encoding="utf-8") as fh:
            d = json.load(fh)
        if not isinstance(d, dict):
            raise DomainError("config file must hold a JSON object", param="config")
    else:
        d = {}
    overrides = {
        "alpha0_list": args.alpha0,
        "n_irs_list": args.n_irs,
        "snr_db_range": _parse_range(args.snr_db) if args.snr_db is not None else None,
        "gamma_th_db": args.gamma_th_db,
        "n_samples": args.samples,
        "seed": args.seed,
        "workers": args.workers,
    }
    d.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(d)


def cmd_curves(args):
    config = _config_from_args(args)
    rows = harness.run_curves(config, checkpoint_dir=args.checkpoint_dir)
    if args.output in (None, "-"):
        text = harness.curves_to_csv(rows) if args.format == "csv" else harness.curves_to_json(rows)
        sys.stdout.write(text)
        sys.stderr.write(json.dumps(harness.metadata(config)) + "\n")
    else:
        harness.write_curves(rows, config, args.output, args.format)


def cmd_validate(args):
    from .validation import run_checks

    report = run_checks(args.level, seed=args.seed if args.seed is not None else default_seed())
    _emit(args, json.dumps(report, indent=1) + "\n")
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    if failed:
        sys.stderr.write("failed checks: " + ", ".join(failed) + "\n")
        return 1
    return 0


# ----------------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", help="output file (default: standard output)")

    parser = argparse.ArgumentParser(prog="hyperfade", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def link_params(p, with_n=True):
        p.add_argument("--alpha-hat", type=float, help="effective Gamma shape")
        p.add_argument("--alpha0", type=float, help="equal links with beta = 1/(2 alpha0)")
        _add_pair_flags(p)
        if with_n:
            p.add_argument("--n-irs", type=int)

    p = sub.add_parser("classify", parents=[common], help="regime and metrics")
    link_params(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("metrics", parents=[common], help="hyper-Rayleigh metrics")
    link_params(p)
    p.add_argument("--rayleigh", action="store_true", help="exponential-SNR benchmark")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("solve", parents=[common], help="minimum element counts")
    p.add_argument("--alpha0", type=float)
    _add_pair_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("pdf", parents=[common], help="tabulate a pdf and cdf")
    p.add_argument("--dist", choices=("ipl", "product", "sum-approx", "snr-approx"), required=True)
    p.add_argument("--method", choices=("foxh", "direct"), default="foxh")
    p.add_argument("--z-grid", required=True, help="lo:hi:n, log spaced")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--gbar-db", type=float, default=0.0, help="average SNR in dB")
    link_params(p)
    p.set_defaults(func=cmd_pdf)

    p = sub.add_parser("curves", parents=[common], help="outage and capacity curves")
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--alpha0", type=float, nargs="+")
    p.add_argument("--n-irs", type=int, nargs="+")
    p.add_argument("--snr-db", help="lo:hi:step in dB")
    p.add_argument("--gamma-th-db", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--checkpoint-dir", help="save finished cells here and reuse them")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("validate", parents=[common], help="run the self-checks")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or 0
    except UsageError as exc:
        parser.error(str(exc))
    except DomainError as exc:
        where = f" [{exc.param}]" if exc.param else ""
        sys.stderr.write(f"hyperfade: domain error{where}: {exc}\n")
        return 2
    except (NonConvergenceError, FloatingPointError, ArithmeticError) as exc:
        sys.stderr.write(f"hyperfade: numerical failure: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
