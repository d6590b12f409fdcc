"""Command-line interface.

Subcommands: ``bound``, ``calibrate``, ``interval``, ``coverage``, ``bandit``.
Every report embeds a manifest with the fully resolved parameters. Values
given with ``--config FILE`` (a flat JSON object whose keys mirror the flag
names) are overridden by explicit flags.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Optional, Sequence

from . import __version__
from . import peeling_bounds as pb
from .bandit_sim import POLICIES, BanditConfig, policy_name, regret_csv, run_paired
from .confidence_sets import interval, interval_with_certificate
from .monte_carlo import ConfigError, ExperimentConfig, Statistic, run_experiment
from .rate_functions import DomainError, family_from_name

SCHEMA_VERSION = 1
#: report fields excluded from determinism guarantees
VOLATILE_FIELDS = ("elapsed_seconds",)
# execution details that never change results stay out of the manifest
_NON_PARAMS = {"command", "out", "format", "config", "handler", "assert_", "workers"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers


def _clean(obj: Any) -> Any:
    """Round floats to 12 significant digits; encode non-finite floats as strings."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return float(f"{obj:.12g}")
    if isinstance(obj, int):
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return _clean(obj.item())
    if hasattr(obj, "tolist"):
        return _clean(obj.tolist())
    return str(obj)


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, allow_nan=False) + "\n"


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            out[key] = json.dumps(v)
        else:
            out[key] = v
    return out


def _as_csv(report: dict) -> str:
    flat = _flatten(_clean(report))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(flat.keys())
    w.writerow(flat.values())
    return buf.getvalue()


def _as_table(report: dict) -> str:
    flat = _flatten(_clean(report))
    width = max(len(k) for k in flat) if flat else 0
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in flat.items())


def _emit(text: str, out: Optional[str]) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps(report)
    if fmt == "csv":
        return _as_csv(report)
    return _as_table(report)


def manifest(args: argparse.Namespace, params: dict) -> dict:
    return {
        "subcommand": args.command,
        "params": params,
        "seed": params.get("seed"),
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "outputs": {"out": args.out or "-", "format": args.format},
    }


def _params(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NON_PARAMS}


# ---------------------------------------------------------------------------
# argument coercion


def _floats(value) -> Optional[list[float]]:
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(v) for v in str(value).split(",") if v.strip()]


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _bound_params(args) -> dict:
    out = {}
    for name in ("eta", "c", "alphabet_size", "gamma", "B"):
        v = getattr(args, name, None)
        if v is not None:
            out[name] = v
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_bound(args) -> tuple[dict, int]:
    _need(args, "kind", "delta")
    kind = pb.BoundKind(args.kind)
    extra = _bound_params(args)
    report: dict = {}
    if kind in (pb.BoundKind.THM3, pb.BoundKind.THM3_OPT):
        if kind is pb.BoundKind.THM3:
            _need(args, "c")
            thr, value = pb.bound_thm3(args.delta, args.c)
        else:
            thr, value = pb.bound_thm3_opt(args.delta)
        report["threshold"] = {"coefficient": thr.coefficient, "offset": thr.delta,
                               "form": "coefficient * log(log(t)) + offset, t >= 3"}
    else:
        _need(args, "n")
        value = pb.evaluate(pb.BoundQuery(kind=kind, delta=args.delta, n=args.n, **extra))
    report["bound"] = value.to_dict()
    if args.compare:
        _need(args, "n")
        if args.compare != "union":
            raise UsageError("--compare only supports 'union'")
        union = pb.bound_union_baseline(args.delta, args.n)
        report["compare"] = {"union": union.to_dict(), "ratio": value.raw / union.raw}
    return report, 0


def cmd_calibrate(args) -> tuple[dict, int]:
    _need(args, "kind", "alpha")
    kind = pb.BoundKind(args.kind)
    if kind not in (pb.BoundKind.THM3, pb.BoundKind.THM3_OPT):
        _need(args, "n")
    extra = _bound_params(args)
    delta = pb.calibrate_delta(kind, args.alpha, args.n, **extra)
    if kind is pb.BoundKind.THM3:
        value = pb.bound_thm3(delta, args.c)[1]
    elif kind is pb.BoundKind.THM3_OPT:
        value = pb.bound_thm3_opt(delta)[1]
    else:
        value = pb.evaluate(pb.BoundQuery(kind=kind, delta=delta, n=args.n, **extra))
    report = {
        "delta": delta,
        "alpha": args.alpha,
        "certificate": {"bound": value.to_dict(), "within_alpha": value.raw <= args.alpha,
                        "envelope": pb.envelope_value(kind, delta, args.n, **extra)},
    }
    return report, 0


def cmd_interval(args) -> tuple[dict, int]:
    _need(args, "family", "xbar", "count")
    fam = family_from_name(args.family, K=args.K if args.K is not None else 1.0,
                           shape=args.shape if args.shape is not None else 1.0)
    if args.delta is not None:
        cs = interval(args.xbar, args.count, args.delta, fam)
    else:
        if args.alpha is None or args.n is None:
            raise UsageError("give --delta, or --alpha together with --n")
        cs = interval_with_certificate(args.xbar, args.count, args.n, args.alpha, fam, args.kind or "thm1",
                                       **_bound_params(args))
    return {"interval": cs.to_dict()}, 0


def _experiment_config(args) -> ExperimentConfig:
    _need(args, "statistic", "delta", "n")
    mu = _floats(args.mu)
    mu_val: Any = 0.5 if mu is None else (mu[0] if len(mu) == 1 else mu)
    return ExperimentConfig(
        statistic=Statistic(args.statistic),
        delta=args.delta,
        n=args.n,
        reps=args.reps if args.reps is not None else 10_000,
        seed=args.seed if args.seed is not None else 0,
        family=args.family or "bernoulli",
        mu=mu_val,
        K=args.K if args.K is not None else 1.0,
        shape=args.shape if args.shape is not None else 1.0,
        law=args.law,
        concentration=args.concentration if args.concentration is not None else 2.0,
        bound=args.bound,
        eta=args.eta,
        c=args.c,
        gamma=args.gamma,
        B=args.B,
        observe_prob=args.observe_prob if args.observe_prob is not None else 1.0,
        p0=_floats(args.p0),
        workers=args.workers or 1,
    )


def cmd_coverage(args) -> tuple[dict, int]:
    cfg = _experiment_config(args).validate()
    rep = run_experiment(cfg).to_dict()
    code = 1 if (args.assert_ and rep["verdict"] != "dominated") else 0
    return {"report": rep}, code


def cmd_bandit(args) -> tuple[Any, int]:
    _need(args, "horizon")
    if args.means is None and args.schedule is None:
        raise UsageError("missing required option: --means (or a schedule in the config file)")
    policies = [p.strip() for p in str(args.policy or "klucb,ucb").split(",") if p.strip()]
    for p in policies:
        try:
            policy_name(p)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    cfg = BanditConfig(
        means=_floats(args.means) or [],
        horizon=args.horizon,
        policy=policies[0],
        reps=args.reps if args.reps is not None else 100,
        seed=args.seed if args.seed is not None else 0,
        law=args.law or "bernoulli",
        concentration=args.concentration if args.concentration is not None else 2.0,
        threshold_c=args.threshold_c if args.threshold_c is not None else 3.0,
        gamma=args.gamma if args.gamma is not None else 0.99,
        eta=args.eta if args.eta is not None else 1.0,
        B=args.B if args.B is not None else 1.0,
        radius_scale=args.radius_scale if args.radius_scale is not None else 1.0,
        schedule=args.schedule,
    ).validate()
    traces = run_paired(cfg, policies)
    every = args.every or max(1, cfg.horizon // 100)
    summary = {
        name: {
            "mean_final_regret": float(tr.final_regret.mean()),
            "stderr_final_regret": float(tr.stderr[-1]),
            "mean_pulls": tr.counts.mean(axis=0).tolist(),
        }
        for name, tr in traces.items()
    }
    return {"traces": traces, "every": every, "summary": summary}, 0


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON object of option values (flags take precedence)")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv", "table"))
    p.add_argument("--seed", type=int, help="unsigned 64-bit master seed")
    p.add_argument("--reps", type=int, help="Monte Carlo replications")
    p.add_argument("--assert", dest="assert_", action="store_true",
                   help="exit with status 1 unless the experiment verdict is 'dominated'")


def _add_bound_extras(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--alphabet-size", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--B", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infobounds", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    kinds = [k.value for k in pb.BoundKind]

    p = sub.add_parser("bound", help="evaluate a deviation bound")
    _add_common(p)
    p.add_argument("--kind", choices=kinds)
    p.add_argument("--delta", type=float)
    p.add_argument("--n", type=int)
    _add_bound_extras(p)
    p.add_argument("--compare", choices=("union",))
    p.set_defaults(handler=cmd_bound)

    p = sub.add_parser("calibrate", help="smallest threshold achieving a risk level")
    _add_common(p)
    p.add_argument("--kind", choices=kinds)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n", type=int)
    _add_bound_extras(p)
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("interval", help="informational confidence interval")
    _add_common(p)
    p.add_argument("--family", choices=("bernoulli", "bounded", "quadratic", "exponential", "poisson", "gamma"))
    p.add_argument("--xbar", type=float)
    p.add_argument("--count", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--kind", choices=kinds)
    p.add_argument("--K", type=float)
    p.add_argument("--shape", type=float)
    _add_bound_extras(p)
    p.set_defaults(handler=cmd_interval)

    p = sub.add_parser("coverage", help="Monte Carlo check of a bound")
    _add_common(p)
    p.add_argument("--statistic", choices=[s.value for s in Statistic])
    p.add_argument("--delta", type=float)
    p.add_argument("--n", type=int, help="horizon (t_max for anytime runs)")
    p.add_argument("--family", choices=("bernoulli", "bounded", "quadratic", "exponential", "poisson", "gamma"))
    p.add_argument("--mu", help="true mean, or comma-separated schedule (discounted)")
    p.add_argument("--law")
    p.add_argument("--concentration", type=float)
    p.add_argument("--bound", choices=kinds)
    p.add_argument("--K", type=float)
    p.add_argument("--shape", type=float)
    p.add_argument("--observe-prob", type=float)
    p.add_argument("--p0", help="comma-separated true law (multinomial)")
    p.add_argument("--workers", type=int)
    _add_bound_extras(p)
    p.set_defaults(handler=cmd_coverage)

    p = sub.add_parser("bandit", help="regret curves of UCB policies")
    _add_common(p)
    p.add_argument("--means", help="comma-separated arm means")
    p.add_argument("--horizon", type=int)
    p.add_argument("--policy", help=f"comma-separated list from {POLICIES}")
    p.add_argument("--law", choices=("bernoulli", "beta"))
    p.add_argument("--concentration", type=float)
    p.add_argument("--threshold-c", type=float)
    p.add_argument("--radius-scale", type=float)
    p.add_argument("--every", type=int, help="checkpoint spacing of the regret curve")
    p.add_argument("--eta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--B", type=float)
    p.set_defaults(handler=cmd_bandit, schedule=None)
    return parser


def _load_config(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise UsageError("config file must hold a flat JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def parse(argv: Optional[Sequence[str]] = None) -> tuple[argparse.ArgumentParser, argparse.Namespace]:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = _load_config(args.config)
        except (OSError, ValueError, UsageError) as exc:
            parser.error(f"cannot read config: {exc}")
        # flags override config values: only fill what the command line left unset
        for key, value in cfg.items():
            if key in ("command", "config", "handler"):
                continue
            if key == "assert":
                key = "assert_"
            if not hasattr(args, key):
                parser.error(f"unknown config key {key!r} for '{args.command}'")
            if getattr(args, key) in (None, False):
                setattr(args, key, value)
    if args.format is None:
        args.format = "csv" if args.command == "bandit" else "json"
    return parser, args


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser, args = parse(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        parser.error("--seed must be an unsigned 64-bit integer")
    try:
        result, code = args.handler(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (pb.BoundError, DomainError, ConfigError, ValueError) as exc:
        sys.stderr.write(f"infobounds {args.command}: error: {exc}\n")
        return 2
    params = _params(args)
    man = manifest(args, params)
    if args.command == "bandit":
        if args.format == "csv":
            text = regret_csv(result["traces"], result["every"],
                              header_comment="manifest: " + json.dumps(_clean(man), sort_keys=True))
        else:
            rows = regret_csv(result["traces"], result["every"])
            report = {"manifest": man, "summary": result["summary"],
                      "curve": list(csv.DictReader(io.StringIO(rows)))}
            text = _render(report, args.format)
    else:
        text = _render({"manifest": man, **result}, args.format)
    _emit(text, args.out)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
