"""Command-line entry point.

Subcommands: thresholds, gen, solve, sweep, moments, verify-lemmas.
Data goes to stdout (or to files given by flags); the resolved-sizes
header and warnings go to stderr so piped output stays clean.  Exit
codes: 0 success, 1 when a verification line reports FAIL, 2 on errors.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys

import numpy as np

from .errors import ParseError, RBError
from .harness import (
    Axis,
    SweepConfig,
    export_csv,
    moment_empirical_check,
    run_sweep,
)
from .instances import generate, generate_forced, parse, serialize, validate
from .moments import (
    EvalMode,
    default_partition_config,
    harmonic_gamma_bounds,
    binomial_slope_bounds,
    log_first_moment,
    log_ratio_upper_bound,
    log_second_moment,
    phi_c_log_derivative,
    varphi_max,
    window_lower_bound,
)
from .solver import SolverConfig, solve
from .thresholds import (
    ModelParams,
    RoundingPolicy,
    derive_sizes,
    p_critical,
    r_critical,
    regime_check,
    solve_tau_k,
    zeta,
)

_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")

_ROUNDINGS = {policy.value: policy for policy in RoundingPolicy}


def _parse_int(token: str, where: str, lineno: int | None = None) -> int:
    if not _INT_RE.match(token):
        raise ParseError(f"{where}: {token!r} is not a plain decimal integer", lineno)
    return int(token)


def _parse_float(token: str, where: str, lineno: int | None = None) -> float:
    if not _FLOAT_RE.match(token):
        raise ParseError(
            f"{where}: {token!r} is not a plain decimal number "
            "(no locale separators, no inf/nan)",
            lineno,
        )
    return float(token)


def _parse_kv_file(text: str) -> dict[str, tuple[str, int]]:
    """key = value lines; # starts a comment; returns value and line number."""
    out: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key = value, got {raw!r}", lineno)
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ParseError("empty key", lineno)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", lineno)
        out[key] = (value, lineno)
    return out


_SWEEP_KEYS = {
    "n",
    "alpha",
    "k",
    "axis",
    "fixed",
    "grid",
    "replicates",
    "master_seed",
    "node_budget",
    "max_workers",
    "rounding",
}


def parse_sweep_config(text: str) -> SweepConfig:
    kv = _parse_kv_file(text)
    for key, (_, lineno) in kv.items():
        if key not in _SWEEP_KEYS:
            raise ParseError(f"unknown sweep key {key!r}", lineno)
    missing = {"n", "alpha", "k", "axis", "fixed", "grid", "replicates", "master_seed"} - set(kv)
    if missing:
        raise ParseError(f"missing sweep keys: {', '.join(sorted(missing))}")

    def get(key: str) -> tuple[str, int]:
        return kv[key]

    value, lineno = get("axis")
    if value not in ("r", "p"):
        raise ParseError(f"axis must be 'r' or 'p', got {value!r}", lineno)
    axis = Axis.R_AXIS if value == "r" else Axis.P_AXIS
    value, lineno = get("grid")
    grid = tuple(
        _parse_float(tok.strip(), "grid", lineno) for tok in value.split(",") if tok.strip()
    )
    rounding = RoundingPolicy.HALF_UP
    if "rounding" in kv:
        value, lineno = get("rounding")
        if value not in _ROUNDINGS:
            raise ParseError(
                f"rounding must be one of {sorted(_ROUNDINGS)}, got {value!r}", lineno
            )
        rounding = _ROUNDINGS[value]
    return SweepConfig(
        n=_parse_int(get("n")[0], "n", get("n")[1]),
        alpha=_parse_float(get("alpha")[0], "alpha", get("alpha")[1]),
        k=_parse_int(get("k")[0], "k", get("k")[1]),
        axis=axis,
        fixed=_parse_float(get("fixed")[0], "fixed", get("fixed")[1]),
        grid=grid,
        replicates=_parse_int(get("replicates")[0], "replicates", get("replicates")[1]),
        master_seed=_parse_int(get("master_seed")[0], "master_seed", get("master_seed")[1]),
        node_budget=(
            _parse_int(get("node_budget")[0], "node_budget", get("node_budget")[1])
            if "node_budget" in kv
            else 10_000_000
        ),
        max_workers=(
            _parse_int(get("max_workers")[0], "max_workers", get("max_workers")[1])
            if "max_workers" in kv
            else None
        ),
        rounding=rounding,
    )


def parse_params_file(text: str) -> ModelParams:
    kv = _parse_kv_file(text)
    needed = {"n", "alpha", "k", "p", "r"}
    for key, (_, lineno) in kv.items():
        if key not in needed:
            raise ParseError(f"unknown params key {key!r}", lineno)
    missing = needed - set(kv)
    if missing:
        raise ParseError(f"missing params keys: {', '.join(sorted(missing))}")
    return ModelParams(
        n=_parse_int(kv["n"][0], "n", kv["n"][1]),
        alpha=_parse_float(kv["alpha"][0], "alpha", kv["alpha"][1]),
        k=_parse_int(kv["k"][0], "k", kv["k"][1]),
        p=_parse_float(kv["p"][0], "p", kv["p"][1]),
        r=_parse_float(kv["r"][0], "r", kv["r"][1]),
    )


def _echo_resolved(params: ModelParams, rounding: RoundingPolicy) -> None:
    try:
        sizes = derive_sizes(params, rounding)
        print(
            f"resolved: d={sizes.d} q={sizes.q} t={sizes.t} "
            f"p_eff={sizes.p_eff!r} r_eff={sizes.r_eff!r}",
            file=sys.stderr,
        )
    except RBError:
        d = float(params.n) ** params.alpha
        print(
            f"resolved (theory only): d={d!r} q={params.p * d ** params.k!r} "
            f"t={params.r * params.n * math.log(d)!r} p_eff={params.p!r} "
            f"r_eff={params.r!r}",
            file=sys.stderr,
        )


def _echo_instance_header(inst) -> None:
    m = inst.n * math.log(inst.d)
    p_eff = inst.q / inst.d**inst.k
    print(
        f"resolved: d={inst.d} q={inst.q} t={inst.t} p_eff={p_eff!r} "
        f"r_eff={inst.t / m!r}",
        file=sys.stderr,
    )


def _params_from_args(args) -> ModelParams:
    return ModelParams(n=args.n, alpha=args.alpha, k=args.k, p=args.p, r=args.r)


def _add_params_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--n", type=int, required=True, help="number of variables")
    sub.add_argument("--alpha", type=float, required=True, help="domain exponent")
    sub.add_argument("--k", type=int, required=True, help="constraint arity")
    sub.add_argument("--p", type=float, required=True, help="tightness in (0,1)")
    sub.add_argument("--r", type=float, required=True, help="density coefficient")


def _cmd_thresholds(args) -> int:
    did_something = False
    if args.table:
        did_something = True
        print("k  p_limit  r_limit  tau_k")
        for k in range(2, 6):
            tau_k = solve_tau_k(k)
            print(
                f"{k}  {1.0 - 1.0 / tau_k:.7f}  {1.0 / math.log(tau_k):.7f}  "
                f"{tau_k:.7f}"
            )
    if args.p is not None:
        did_something = True
        tau = 1.0 / (1.0 - args.p)
        print(f"p={args.p!r}: r_critical={r_critical(args.p)!r} tau={tau!r}")
        if args.k is not None:
            margin = args.k - zeta(tau)
            verdict = "holds" if margin >= 0 else "fails"
            print(
                f"arity condition k >= tau*ln(tau)/(tau-1): {verdict} "
                f"(margin {margin!r})"
            )
    if args.r is not None:
        did_something = True
        print(f"r={args.r!r}: p_critical={p_critical(args.r)!r}")
    if not did_something:
        print("nothing to do: pass --table, --p, or --r", file=sys.stderr)
        return 2
    return 0


def _cmd_gen(args) -> int:
    params = _params_from_args(args)
    rounding = _ROUNDINGS[args.rounding]
    _echo_resolved(params, rounding)
    if args.forced:
        inst, _ = generate_forced(params, args.seed, rounding)
    else:
        inst = generate(params, args.seed, rounding)
    text = serialize(inst)
    if args.output:
        with open(args.output, "w", encoding="ascii") as fh:
            fh.write(text)
        print(f"wrote {args.output}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_solve(args) -> int:
    with open(args.instance, "r", encoding="ascii") as fh:
        inst = parse(fh.read())
    problems = validate(inst)
    if problems:
        for msg in problems:
            print(f"invalid instance: {msg}", file=sys.stderr)
        return 2
    _echo_instance_header(inst)
    cfg = SolverConfig(
        node_budget=args.budget,
        count_all=args.count,
        count_limit=args.limit,
        use_compiled=False if args.no_compiled else None,
    )
    res = solve(inst, cfg)
    count = "-" if res.count is None else str(res.count)
    print(f"{res.status.value} {count} {res.nodes} {res.elapsed_ms!r}")
    if res.partial:
        print("note: count is a lower bound (stopped early)", file=sys.stderr)
    return 0


def _cmd_sweep(args) -> int:
    with open(args.config, "r", encoding="ascii") as fh:
        config = parse_sweep_config(fh.read())
    for value in config.grid:
        _echo_resolved(config.params_at(value), config.rounding)
    result = run_sweep(config)
    csv_text = export_csv(result)
    if args.csv:
        with open(args.csv, "w", encoding="ascii") as fh:
            fh.write(csv_text)
        print(f"wrote {args.csv}", file=sys.stderr)
    else:
        sys.stdout.write(csv_text)
    summary = {
        "crossing_estimate": result.crossing_estimate,
        "theoretical_threshold": result.theoretical_threshold,
        "transition_window": result.transition_window,
    }
    if args.json:
        payload = {
            "points": [
                {
                    "axis": pt.axis_value,
                    "p_hat": pt.p_hat,
                    "lo": pt.wilson_lo,
                    "hi": pt.wilson_hi,
                    "n_sat": pt.n_sat,
                    "n_unsat": pt.n_unsat,
                    "n_timeout": pt.n_timeout,
                    "replicates": pt.replicates,
                    "aborted": pt.aborted,
                }
                for pt in result.points
            ],
            **summary,
        }
        with open(args.json, "w", encoding="ascii") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        print(f"wrote {args.json}", file=sys.stderr)
    print(json.dumps(summary), file=sys.stderr)
    return 0


def _cmd_moments(args) -> int:
    params = _params_from_args(args)
    mode = EvalMode.SAMPLED if args.mode == "sampled" else EvalMode.THEORY
    _echo_resolved(params, RoundingPolicy.HALF_UP)
    if args.partition:
        report = log_ratio_upper_bound(params, mode=mode)
    else:
        report = log_second_moment(params, mode)
    payload: dict = {
        "mode": mode.value,
        "log_EX": report.log_EX,
        "log_EX2": report.log_EX2,
        "log_ratio": report.log_ratio,
    }
    if report.partition_sums is not None:
        payload["partition_sums"] = list(report.partition_sums)
        payload["low_interval_cap"] = report.low_interval_cap
        payload["varphi_max"] = report.varphi_max
    if args.empirical:
        check = moment_empirical_check(params, args.empirical, args.seed)
        payload["empirical"] = {
            "samples": check.samples,
            "mean_x": check.mean_x,
            "z_x": check.z_x,
            "mean_x2": check.mean_x2,
            "z_x2": check.z_x2,
        }
    print(json.dumps(payload))
    if args.csv:
        with open(args.csv, "w", encoding="ascii") as fh:
            fh.write("S,log_B,log_W,log_Phi\n")
            for s_val, log_b, log_w, log_phi in report.term_table or ():
                fh.write(f"{s_val},{log_b!r},{log_w!r},{log_phi!r}\n")
        print(f"wrote {args.csv}", file=sys.stderr)
    return 0


def _cmd_verify(args) -> int:
    if args.params:
        with open(args.params, "r", encoding="ascii") as fh:
            params = parse_params_file(fh.read())
    else:
        missing = [
            flag
            for flag, val in (
                ("--n", args.n),
                ("--alpha", args.alpha),
                ("--k", args.k),
                ("--p", args.p),
                ("--r", args.r),
            )
            if val is None
        ]
        if missing:
            print(
                f"verify-lemmas needs --params FILE or all of: {' '.join(missing)}",
                file=sys.stderr,
            )
            return 2
        params = _params_from_args(args)
    _echo_resolved(params, RoundingPolicy.HALF_UP)
    regime = regime_check(params)
    lines: list[str] = []
    failed = False

    def report(name: str, status: str, detail: str) -> None:
        nonlocal failed
        if status == "FAIL":
            failed = True
        lines.append(f"{name}: {status} ({detail})")

    in_partition_regime = regime.relaxed_domain_ok
    cfg = None
    if in_partition_regime:
        try:
            cfg = default_partition_config(params)
        except RBError as exc:
            report("partition-constants", "N/A", str(exc))

    # slope of the continuous extension between eta1 and eta2
    if cfg is not None and regime.relaxed_arity_ok and regime.subcritical:
        n = params.n
        zs = np.linspace(n * cfg.eta1, n * cfg.eta2, 1002)[1:-1]
        vals = [phi_c_log_derivative(float(z), params) for z in zs]
        worst = max(vals)
        report(
            "phi-c-slope-negative",
            "PASS" if worst < 0 else "FAIL",
            f"max derivative {worst!r} over {len(zs)} grid points",
        )
    else:
        report(
            "phi-c-slope-negative",
            "N/A",
            "needs (2k-1)*alpha > 1, k >= tau*ln(tau)/(tau-1), r < r_critical",
        )

    if cfg is not None:
        vm = varphi_max(params, cfg)
        if vm.negative:
            report(
                "interior-max-negative",
                "PASS",
                f"max varphi {vm.value!r} at s={vm.arg:.6f}",
            )
        else:
            note = (
                "second-moment failure regime"
                if not regime.relaxed_arity_ok or not regime.subcritical
                else "unexpected"
            )
            report(
                "interior-max-negative",
                "FAIL",
                f"max varphi {vm.value!r} at s={vm.arg:.6f}; {note}",
            )
    else:
        report("interior-max-negative", "N/A", "no valid partition constants")

    n_check = min(params.n, 2000)
    worst_slack = math.inf
    ok = True
    for omega in range(1, n_check):
        lo, val, hi = binomial_slope_bounds(omega, n_check)
        worst_slack = min(worst_slack, val - lo, hi - val)
        if not lo < val < hi:
            ok = False
            break
    report(
        "binomial-slope-sandwich",
        "PASS" if ok else "FAIL",
        f"n={n_check}, min slack {worst_slack!r}",
    )

    omegas = sorted(
        set(range(1, 11))
        | {int(round(10 ** (e / 25.0))) for e in range(25, 151)}
    )
    ok = True
    worst_slack = math.inf
    for omega in omegas:
        lo, val, hi = harmonic_gamma_bounds(omega)
        worst_slack = min(worst_slack, val - lo, hi - val)
        if not lo < val < hi:
            ok = False
            break
    report(
        "harmonic-sandwich",
        "PASS" if ok else "FAIL",
        f"{len(omegas)} sampled omegas up to 1e6, min slack {worst_slack!r}",
    )

    if not regime.relaxed_domain_ok:
        bounds = [
            window_lower_bound(params, lam=lam).log_certified for lam in (1.0, 2.0, 4.0)
        ]
        growing = bounds[0] < bounds[1] < bounds[2]
        report(
            "window-mass-growth",
            "PASS" if growing else "FAIL",
            f"certified log bounds {bounds[0]!r} < {bounds[1]!r} < {bounds[2]!r} "
            "for lam in (1, 2, 4)",
        )
    else:
        report("window-mass-growth", "N/A", "needs (2k-1)*alpha <= 1")

    for line in lines:
        print(line)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rblab",
        description=(
            "Random CSP laboratory: generate threshold-scaled instances, "
            "solve them exactly, sweep phase transitions, and evaluate the "
            "moment formulas behind the thresholds."
        ),
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("thresholds", help="critical points and regime table")
    sub.add_argument("--p", type=float, help="tightness; prints r_critical")
    sub.add_argument("--r", type=float, help="density; prints p_critical")
    sub.add_argument("--k", type=int, help="arity for the condition check")
    sub.add_argument("--table", action="store_true", help="print the k=2..5 limit table")
    sub.set_defaults(func=_cmd_thresholds)

    sub = subs.add_parser("gen", help="generate one instance")
    _add_params_flags(sub)
    sub.add_argument("--seed", type=int, required=True)
    sub.add_argument("--forced", action="store_true", help="plant a hidden solution")
    sub.add_argument(
        "--rounding", choices=sorted(_ROUNDINGS), default=RoundingPolicy.HALF_UP.value
    )
    sub.add_argument("-o", "--output", help="write instance text here (default stdout)")
    sub.set_defaults(func=_cmd_gen)

    sub = subs.add_parser("solve", help="solve an instance file")
    sub.add_argument("instance", help="instance text file")
    sub.add_argument("--count", action="store_true", help="count all solutions")
    sub.add_argument("--limit", type=int, help="stop counting at this many")
    sub.add_argument("--budget", type=int, default=100_000_000, help="node budget")
    sub.add_argument(
        "--no-compiled", action="store_true", help="force the pure-Python engine"
    )
    sub.set_defaults(func=_cmd_solve)

    sub = subs.add_parser("sweep", help="run a Monte-Carlo sweep from a config file")
    sub.add_argument("--config", required=True, help="key=value sweep config")
    sub.add_argument("--csv", help="write the per-point CSV here (default stdout)")
    sub.add_argument("--json", help="also write a JSON report here")
    sub.set_defaults(func=_cmd_sweep)

    sub = subs.add_parser("moments", help="evaluate the moment formulas")
    _add_params_flags(sub)
    sub.add_argument("--mode", choices=["sampled", "theory"], default="sampled")
    sub.add_argument(
        "--partition", action="store_true", help="include the interval decomposition"
    )
    sub.add_argument("--csv", help="write the per-S term table here")
    sub.add_argument(
        "--empirical",
        type=int,
        metavar="SAMPLES",
        help="Monte-Carlo cross-check with this many sampled instances",
    )
    sub.add_argument("--seed", type=int, default=0, help="seed for --empirical")
    sub.set_defaults(func=_cmd_moments)

    sub = subs.add_parser(
        "verify-lemmas", help="run the finite-n inequality checks as a batch"
    )
    sub.add_argument("--params", help="key=value file with n, alpha, k, p, r")
    sub.add_argument("--n", type=int)
    sub.add_argument("--alpha", type=float)
    sub.add_argument("--k", type=int)
    sub.add_argument("--p", type=float)
    sub.add_argument("--r", type=float)
    sub.set_defaults(func=_cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RBError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
