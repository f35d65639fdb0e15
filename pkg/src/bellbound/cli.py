"""Command-line front end.

Every command prints one deterministic JSON document (or CSV with
``--format csv``). Exit codes: 0 success, 2 invalid input, 3 solver failure.
"""

import argparse
import csv
import io
import json
import os
import sys
import time

import numpy as np

from . import bell, lb, nonstandard, sdp, states, ub
from .config import TOL
from .qcore import is_ppt

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3

VIOLATES = "violates"
CERTIFIED = "no_violation_certified"
UNDECIDED = "undecided"

# families that are affine in p and classical (separable) at p = 0
_CONVEX_FAMILIES = ("werner", "isotropic", "collins_gisin", "gisin")


class UsageError(ValueError):
    pass


def _round(x):
    """Seven significant digits, as in the printed tables."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (float, np.floating)):
        return float(f"{float(x):.7g}")
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, dict):
        # measurements keep full precision so they re-validate as POVMs
        return {str(k): v if k == "measurements" else _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if isinstance(x, np.ndarray):
        return _round(x.tolist())
    return x


def _parse_params(text):
    params = {}
    if not text:
        return params
    for item in text.split(","):
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        params[key.strip()] = value.strip()
    return params


def parse_state(text):
    """``name:key=value,...`` or a path to a JSON state file."""
    if os.path.isfile(text):
        with open(text) as fh:
            return states.state_from_json(json.load(fh)), {"file": text}
    tag, _, rest = text.partition(":")
    params = _parse_params(rest)
    if tag == "pure_schmidt":
        c = [float(v) for v in params.get("c", "").split("/") if v]
        return states.make_state(tag, c=c), {"name": tag, "c": c}
    return states.make_state(tag, **params), {"name": tag, **params}


def parse_inequality(text):
    """``name`` or ``name:n=3`` or a path to a JSON inequality file."""
    if os.path.isfile(text):
        with open(text) as fh:
            return bell.BellInequality.from_json(json.load(fh))
    tag, _, rest = text.partition(":")
    params = _parse_params(rest)
    m = int(params["m"]) if "m" in params else None
    n = int(params["n"]) if "n" in params else None
    return bell.named(tag, m=m, n=n)


def _inequality_json(ineq):
    if isinstance(ineq, bell.CorrelationInequality):
        out = {"form": "correlation", "name": ineq.name, "coeffs": ineq.coeffs,
               "constant": ineq.constant}
        if ineq.parties == 2:
            out.update(marg_a=ineq.marg_a, marg_b=ineq.marg_b)
        return out
    return {"form": "probability", **ineq.to_json(), "display": ineq.to_display()}


def _verdict(classical, lb_value=None, ub_value=None):
    if lb_value is not None and lb_value > classical + 1e-8:
        return VIOLATES
    if ub_value is not None and ub_value <= classical + 1e-8:
        return CERTIFIED
    return UNDECIDED


def _segment(state_info, verdict):
    """Convexity extension of a certified verdict to the segment from p = 0."""
    if verdict != CERTIFIED or state_info.get("name") not in _CONVEX_FAMILIES:
        return None
    if "p" not in state_info:
        return None
    return {"param": "p", "from": 0.0, "to": float(state_info["p"]), "convexity_derived": True}


# ---------------------------------------------------------------------------
# commands


def cmd_state(args):
    rho, info = parse_state(_require(args, "state"))
    return {"command": "state", "state": info, "split": list(rho.split),
            "ppt": is_ppt(rho), "purity": float(np.trace(rho.matrix @ rho.matrix).real),
            "data": states.state_to_json(rho)}


def cmd_inequality(args):
    ineq = parse_inequality(_require(args, "ineq"))
    return {"command": "inequality", "inequality": _inequality_json(ineq),
            "classical_bound": ineq.bound}


def cmd_classical_bound(args):
    ineq = parse_inequality(_require(args, "ineq"))
    out = {"command": "classical-bound", "inequality": ineq.name, "classical_bound": ineq.bound}
    if isinstance(ineq, bell.BellInequality):
        strategy, _ = bell.best_deterministic_strategy(ineq)
        out["strategy"] = {"a": list(strategy.a), "b": list(strategy.b)}
    return out


def cmd_lb(args):
    rho, info = parse_state(_require(args, "state"))
    ineq = parse_inequality(_require(args, "ineq"))
    config = lb.SeesawConfig(
        convergence_tol=args.tol if args.tol is not None else TOL.seesaw_convergence,
        restarts=args.restarts, rng_seed=args.seed, threads=args.threads,
        init_mode=args.init_mode)
    start = time.perf_counter()
    result = lb.seesaw(rho, ineq, config)
    verdict = _verdict(ineq.bound, lb_value=result.value)
    return {"command": "lb", "state": info, "inequality": ineq.name,
            "classical_bound": ineq.bound, "lb": result.value, "sweeps": result.sweeps,
            "restart_values": result.restart_values, "best_restart": result.best_restart,
            "classical_start_value": result.classical_value,
            "measurements": result.measurements.to_json(), "verdict": verdict,
            "timing_s": time.perf_counter() - start}


def cmd_ub(args):
    rho, info = parse_state(_require(args, "state"))
    ineq = parse_inequality(_require(args, "ineq"))
    start = time.perf_counter()
    mode = args.mode or "ub-si"
    if mode == "ub-si":
        result = ub.ub_state_independent(ineq, rho)
    elif mode == "ub-ft":
        if args.profile:
            z = tuple(int(v) for v in args.profile.split(","))
            result = ub.ub_fixed_trace(ineq, rho, z)
        else:
            result = ub.ub_enumerate_profiles(ineq, rho)
    elif mode == "ub-semi":
        result = ub.chsh_semianalytic(rho, ineq)
    else:
        raise UsageError(f"mode {mode!r} is not an upper-bound mode")
    verdict = _verdict(ineq.bound, ub_value=result.value)
    out = {"command": "ub", "mode": result.mode, "state": info, "inequality": ineq.name,
           "classical_bound": ineq.bound, "ub": result.value,
           "best_profile": list(result.best_profile) if result.best_profile else None,
           "verdict": verdict, "timing_s": time.perf_counter() - start}
    segment = _segment(info, verdict)
    if segment:
        out["certified_segment"] = segment
    return out


def cmd_bound(args):
    """Lower and upper bound together with a combined verdict."""
    lb_out = cmd_lb(args)
    ub_out = cmd_ub(args)
    verdict = _verdict(lb_out["classical_bound"], lb_out["lb"], ub_out["ub"])
    out = {"command": "bound", "state": lb_out["state"], "inequality": lb_out["inequality"],
           "classical_bound": lb_out["classical_bound"], "lb": lb_out["lb"],
           "measurements": lb_out["measurements"], "ub": {ub_out["mode"]: ub_out["ub"]},
           "consistent": lb_out["lb"] <= ub_out["ub"] + 1e-6, "verdict": verdict,
           "timing_s": lb_out["timing_s"] + ub_out["timing_s"]}
    segment = _segment(lb_out["state"], verdict)
    if segment:
        out["certified_segment"] = segment
    return out


def cmd_horodecki(args):
    rho, info = parse_state(_require(args, "state"))
    values = lb.horodecki_values(rho)
    return {"command": "horodecki", "state": info, "T": lb.horodecki_T(rho),
            "sqm_ch": values.sqm_ch, "sqm_chsh": values.sqm_chsh,
            "violates": values.violates}


def _parse_filter(spec, rho):
    tag, _, rest = spec.partition(":")
    params = _parse_params(rest)
    if tag == "gisin":
        return nonstandard.gisin_filters(float(params["theta"]))
    if tag == "popescu":
        return nonstandard.popescu_projection(rho.split[0], int(params.get("i", 0)),
                                              int(params.get("j", 1)))
    if tag == "identity":
        return nonstandard.FilterPair(np.eye(rho.split[0]), np.eye(rho.split[1]))
    raise UsageError(f"unknown filter {tag!r}")


def cmd_filter(args):
    rho, info = parse_state(_require(args, "state"))
    filt = _parse_filter(_require(args, "filter"), rho)
    out_rho, prob = nonstandard.apply_filter(rho, filt)
    report = {"command": "filter", "state": info, "filter": args.filter,
              "success_probability": prob, "data": states.state_to_json(out_rho)}
    if out_rho.split == (2, 2):
        before = lb.horodecki_values(rho) if rho.split == (2, 2) else None
        after = lb.horodecki_values(out_rho)
        report["sqm_chsh_after"] = after.sqm_chsh
        report["violates_after"] = after.violates
        if before is not None:
            report["sqm_chsh_before"] = before.sqm_chsh
            report["violates_before"] = before.violates
    return report


def cmd_convert(args):
    if args.target == "cglmp":
        conv = bell.cglmp_to_i22nn(args.n)
        final = conv.stages[-1]
        return {"command": "convert", "target": "cglmp", "n": args.n,
                "scale": float(conv.scale), "scale_fraction": str(conv.scale),
                "moves": conv.moves, "bob_outcome_perm": conv.bob_outcome_perm.tolist(),
                "matches_scaled_i22nn": conv.matches,
                "transformed_display": [[str(v) for v in row] for row in final.full_display()],
                "i22nn_display": bell.i22nn(args.n).to_display()}
    if args.target in ("correlation", "probability"):
        ineq = parse_inequality(_require(args, "ineq"))
        if args.target == "probability":
            if not isinstance(ineq, bell.CorrelationInequality):
                raise UsageError("inequality is already in probability form")
            out = bell.correlation_to_probability(ineq)
        else:
            if not isinstance(ineq, bell.BellInequality):
                raise UsageError("inequality is already in correlation form")
            out = bell.probability_to_correlation(ineq)
        return {"command": "convert", "target": args.target, "inequality": _inequality_json(out)}
    raise UsageError(f"unknown conversion {args.target!r}")


def _table_isotropic(args):
    rows = []
    for d in _table_dims(args, (2, 3, 4, 5, 10)):
        th = states.thresholds("isotropic", d)
        row = {"d": d, "p_sep": th.p_sep,
               "p_ub_semianalytic": ub.semianalytic_threshold(
                   lambda p, d=d: states.isotropic(d, p), d),
               "p_ub_numerical": None, "p_lhv_projective": th.p_proj_lhv,
               "p_lhv_povm": th.p_povm_lhv}
        if d <= args.numerical_dmax:
            row["p_ub_numerical"] = ub.ub_threshold(
                bell.named("chsh"), lambda p, d=d: states.isotropic(d, p), d)[0]
        rows.append(row)
    return rows


def _table_pure_ch(args):
    labelled = [("2:1", (2, 1)), ("1:1:1", (1, 1, 1)), ("3:2:1", (3, 2, 1)),
                ("4:3:2:1", (4, 3, 2, 1)), ("3:3:2:1", (3, 3, 2, 1)),
                ("1:1:1:1:1", (1, 1, 1, 1, 1))]
    rows = []
    for n in range(1, args.copies + 1):
        row = {"N": n}
        for label, c in labelled:
            c = np.array(c, dtype=float)
            row[label] = nonstandard.ncopy_value(c / np.linalg.norm(c), n)
        rows.append(row)
    return rows


def _table_i22dd(args):
    rows = []
    for d in _table_dims(args, (2, 3, 4, 5, 8, 10, 100, 1000)):
        rows.append({"d": d, "cglmp_me": nonstandard.cglmp_me_value(d),
                     "i22dd_me": nonstandard.i22dd_me_value(d),
                     "p_d": nonstandard.i22dd_isotropic_threshold(d)})
    return rows


def _table_dims(args, default):
    if args.dmax is None:
        return default
    return tuple(d for d in default if d <= args.dmax)


TABLES = {"isotropic-chsh": _table_isotropic, "pure-ch": _table_pure_ch, "i22dd": _table_i22dd}


def cmd_table(args):
    if args.name not in TABLES:
        raise UsageError(f"unknown table {args.name!r}; choose from {sorted(TABLES)}")
    return {"command": "table", "name": args.name, "rows": TABLES[args.name](args)}


COMMANDS = {
    "state": cmd_state, "inequality": cmd_inequality, "classical-bound": cmd_classical_bound,
    "lb": cmd_lb, "ub": cmd_ub, "bound": cmd_bound, "horodecki": cmd_horodecki,
    "filter": cmd_filter, "convert": cmd_convert, "table": cmd_table,
}


def _require(args, name):
    value = getattr(args, name, None)
    if value is None:
        raise UsageError(f"--{name} is required for this command")
    return value


# ---------------------------------------------------------------------------
# output


def _flatten(prefix, value, out):
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    else:
        out.append((prefix, json.dumps(value)))


def render(report, fmt):
    report = _round(report)
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    rows = report.get("rows")
    if rows:
        writer.writerow(list(rows[0]))
        for row in rows:
            writer.writerow(["" if v is None else v for v in row.values()])
    else:
        flat = []
        _flatten("", report, flat)
        writer.writerow(["key", "value"])
        writer.writerows(flat)
    return buf.getvalue()


def build_parser():
    parser = argparse.ArgumentParser(prog="bellbound",
                                     description="Bounds on quantum Bell-inequality violation.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("target", nargs="?", help="table name or conversion target")
    parser.add_argument("--state", help="name:key=value,... or a JSON state file")
    parser.add_argument("--ineq", help="name, name:n=3 or a JSON inequality file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--restarts", type=int, default=TOL.seesaw_restarts)
    parser.add_argument("--tol", type=float, default=None, help="see-saw convergence tolerance")
    parser.add_argument("--mode", choices=("lb", "ub-si", "ub-ft", "ub-semi"), default=None)
    parser.add_argument("--profile", help="comma-separated trace profile for ub-ft")
    parser.add_argument("--init-mode", default=lb.GENERIC_POVM,
                        choices=(lb.GENERIC_POVM, lb.PROJECTIVE))
    parser.add_argument("--filter", help="gisin:theta=..., popescu:i=0,j=1 or identity")
    parser.add_argument("--n", type=int, default=3, help="outcomes for 'convert cglmp'")
    parser.add_argument("--dmax", type=int, default=None)
    parser.add_argument("--numerical-dmax", type=int, default=4)
    parser.add_argument("--copies", type=int, default=5)
    parser.add_argument("--out", help="write the report to this path")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--threads", type=int, default=1)
    return parser


def _dispatch(args):
    if args.command == "table":
        args.name = args.target
        if args.name is None:
            raise UsageError("table needs a name")
    if args.command == "convert" and args.target is None:
        raise UsageError("convert needs a target")
    if args.mode == "lb" and args.command == "ub":
        return cmd_lb(args)
    return COMMANDS[args.command](args)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.restarts < 1 or args.threads < 1:
            raise UsageError("--restarts and --threads must be positive")
        report = _dispatch(args)
    except sdp.SdpError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, KeyError, TypeError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    text = render(report, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
