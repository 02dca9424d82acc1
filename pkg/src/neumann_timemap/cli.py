"""Command line front end.

Every command writes its artifacts into ``--out`` (created if needed):

    timemap      t0.csv or timemap.csv, plus an SVG rendering
    solve        solutions.json
    thresholds   thresholds.json
    bifurcate    branches.csv and diagram.svg
    planemap     regions.csv and regions.svg
    asymptotic   constants.json
    verify       appendix_report.json

Exit codes: 0 success, 1 usage, 2 numeric failure, 3 I/O.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from enum import Enum
from pathlib import Path

import numpy as np

from . import __version__
from ._grids import clustered_grid
from .core_model import NumericError, ParameterError, Params
from .positive_phase import lambda_star, time_T0

log = logging.getLogger("neumann_timemap")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- output helpers -------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else "%.17g" % x
    return str(x)


def _meta_line(params: dict) -> str:
    body = ", ".join(f"{k}={_fmt(v)}" for k, v in params.items())
    return f"# params {body}; neumann_timemap {__version__}"


def write_csv(path: Path, header, rows, params: dict, notes=()) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(_meta_line(params) + "\n")
        for note in notes:
            fh.write(f"# {note}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return obj.to_dict()
        return dataclasses.asdict(obj)
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_json(path: Path, payload: dict, params: dict) -> None:
    doc = {"version": __version__, "params": params, **payload}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=_jsonable, allow_nan=True)
        fh.write("\n")


# -- parameter resolution -------------------------------------------------


def _lam(args) -> float:
    if args.lam is None:
        raise UsageError("--lambda is required")
    lam = args.lam * lambda_star(args.sigma) if args.lambda_rel else args.lam
    if not lam > 0:
        raise UsageError("lambda must be positive")
    return lam


def _params(args) -> Params:
    if args.mu is None:
        raise UsageError("--mu is required")
    return Params(_lam(args), args.mu, args.sigma)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands ---------------------------------------------------------------


def cmd_timemap(args) -> int:
    out = _out(args)
    if not args.connection:
        lam = _lam(args)
        meta = {"lambda": lam, "sigma": args.sigma}
        s = clustered_grid(0.0, 1.0, args.n, args.n // 4, smallest=1e-6)
        t0 = time_T0(s, lam)
        write_csv(out / "t0.csv", ["s", "T0"], zip(s, t0), meta)
        if not args.no_plot:
            from .plotting import plot_curves

            plot_curves(out / "t0.svg", s, [t0], ["T0"], "s", "T0", logy=True)
        return EXIT_OK

    from .connection import connection_map

    p = _params(args)
    cm = connection_map(p)
    s = np.unique(np.concatenate(cm.scan_grid(args.n, args.n // 4)))
    T, _ = cm.times_batch(s)
    width = max(3, int(np.max(np.sum(np.isfinite(T), axis=1), initial=0)))
    T = np.hstack([T, np.full((s.size, max(0, width - T.shape[1])), np.nan)])[:, :width]
    # Rows with no connection at all carry no information.
    keep = np.isfinite(T).any(axis=1)
    s, T = s[keep], T[keep]
    lm = cm.landmarks
    marks = [x for x in (lm.s0M, lm.s1M) if x is not None]
    notes = [f"regime={cm.regime.value}"] + [
        f"{k}={_fmt(v)}" for k, v in dataclasses.asdict(lm).items() if v is not None
    ]
    header = ["s"] + [f"T{i + 1}" for i in range(width)]
    write_csv(out / "timemap.csv", header, (np.concatenate([[a], row]) for a, row in zip(s, T)),
              p.as_dict(), notes)
    if not args.no_plot:
        from .plotting import plot_curves

        # Break polylines across the gaps between segments.
        gap = np.r_[False, np.diff(s) > 0.02]
        xs = np.insert(s, np.flatnonzero(gap), np.nan)
        cols = [np.insert(T[:, i], np.flatnonzero(gap), np.nan) for i in range(width)]
        plot_curves(out / "timemap.svg", xs, cols, header[1:], "s", "T_i(s)", marks=marks, logy=True)
    return EXIT_OK


def cmd_solve(args) -> int:
    from .solver import solve_report

    p = _params(args)
    sols, rejected = solve_report(p)
    payload = {
        "count": len(sols),
        "solutions": [s.to_dict() for s in sols],
        "rejected": [{"s_init": r.s_init, "residual": r.residual} for r in rejected],
    }
    write_json(_out(args) / "solutions.json", payload, p.as_dict())
    print(f"{len(sols)} solutions" + (f", {len(rejected)} rejected candidates" if rejected else ""))
    return EXIT_OK


def cmd_thresholds(args) -> int:
    from .solver import thresholds

    lam = _lam(args)
    th = thresholds(lam, args.sigma, fold=args.fold)
    payload = {k: v for k, v in th.to_dict().items() if v is not None and v != {}}
    payload["lambda_star"] = lambda_star(args.sigma)
    write_json(_out(args) / "thresholds.json", {"thresholds": payload}, {"lambda": lam, "sigma": args.sigma})
    for k, v in payload.items():
        if isinstance(v, float):
            print(f"{k:12s} {v:.10g}")
    return EXIT_OK


def cmd_bifurcate(args) -> int:
    from .bifurcation import Diagram, classify_diagram, trace

    lam = _lam(args)
    branches = trace(lam, args.sigma, mu_max=args.mu_max, mu_min=args.mu_min,
                     n_mu=args.n_mu, max_depth=args.depth, workers=args.workers)
    th = branches.thresholds
    if lam >= lambda_star(args.sigma):
        diagram = Diagram.UNBOUNDED_EIGHT
    else:
        diagram = classify_diagram(lam, args.sigma, th=th)
    out = _out(args)
    rows = []
    for b in branches:
        for bid, mu, s, st, idx, lm in b.rows():
            rows.append((bid, b.origin, b.terminus, mu, s, st, idx, lm))
    write_csv(out / "branches.csv",
              ["branch", "origin", "terminus", "mu", "s_init", "s_term", "crossing_index", "landmark"],
              rows, {"lambda": lam, "sigma": args.sigma}, [f"diagram={diagram.value}"])
    if not args.no_plot:
        from .plotting import plot_branches

        plot_branches(out / "diagram.svg", branches, title=f"lambda = {lam:.6g}")
    print(f"diagram {diagram.value}: {len(branches)} branches")
    for b in branches:
        print(f"  {b.id:10s} {b.origin} -> {b.terminus}")
    return EXIT_OK


def cmd_planemap(args) -> int:
    from .solver import plane_map

    if not args.lambdas or not args.mus:
        raise UsageError("--lambdas and --mus are required")
    scale = lambda_star(args.sigma) if args.lambda_rel else 1.0
    lams = [scale * x for x in args.lambdas]
    pm = plane_map(lams, args.mus, args.sigma, workers=args.workers)
    out = _out(args)
    rows = [
        (pm.lam[i], pm.mu[j], pm.counts[i, j], pm.labels[i, j], pm.failures.get((i, j), ""))
        for i in range(pm.lam.size)
        for j in range(pm.mu.size)
    ]
    write_csv(out / "regions.csv", ["lambda", "mu", "count", "label", "failure"], rows, {"sigma": args.sigma})
    if not args.no_plot:
        from .plotting import plot_plane_map

        plot_plane_map(out / "regions.svg", pm.lam, pm.mu, pm.counts)
    if pm.failures:
        log.error("%d cells failed", len(pm.failures))
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_asymptotic(args) -> int:
    from .asymptotics import AsymKey, K4_K8, landmarks, sigma4_sigma8, theta_ratios

    sigma = args.sigma
    k4, k8 = K4_K8(sigma)
    table = []
    for K in args.Ks or np.geomspace(0.1, 100.0, 13):
        th1, th2 = theta_ratios(float(K))
        s4, s8 = sigma4_sigma8(float(K))
        table.append({"K": float(K), "Theta1": sigma * th1, "Theta2": sigma * th2, "sigma4": s4, "sigma8": s8})
    payload = {
        "K4": k4,
        "K8": k8,
        "at_2K4": landmarks(AsymKey(2.0 * k4, sigma)).to_dict(),
        "table": table,
    }
    write_json(_out(args) / "constants.json", payload, {"sigma": sigma})
    print(f"K4 = {k4:.12g}\nK8 = {k8:.12g}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import appendix_checks as ac

    report = {
        "lemma_A1": ac.certify_lemma_A1(n_random=args.samples, seed=args.seed).to_dict(),
        "lemma_A2": ac.certify_lemma_A2(n_random=args.samples, seed=args.seed).to_dict(),
        "monotonicity": [ac.time_map_monotonicity(k, mu) for k, mu in ((2.0, 5.0), (0.3, 50.0), (1.0, 1.0))],
        "slopes": [],
        "expansions": [],
    }
    for lam, mu, sigma in ((1.0, 1.0, 0.25), (1.0, 2.0, 0.25), (2.0, 1.0, 0.1)):
        p = Params(lam, mu, sigma)
        num, ref = ac.slope_numeric(p), ac.slope_limit(p)
        report["slopes"].append({"params": p.as_dict(), "numeric": num, "formula": ref, "rel_err": num / ref - 1.0})
        report["expansions"].append(ac.expansion_check(p))
    ok = report["lemma_A1"]["passed"] and report["lemma_A2"]["passed"]
    ok = ok and all(abs(r["rel_err"]) < 0.02 for r in report["slopes"])
    report["passed"] = bool(ok)
    write_json(_out(args) / "appendix_report.json", report, {})
    print("appendix checks " + ("passed" if ok else "FAILED"))
    return EXIT_OK if ok else EXIT_NUMERIC


COMMANDS = {
    "timemap": cmd_timemap,
    "solve": cmd_solve,
    "thresholds": cmd_thresholds,
    "bifurcate": cmd_bifurcate,
    "planemap": cmd_planemap,
    "asymptotic": cmd_asymptotic,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lambda", dest="lam", type=float, help="weight on the outer intervals")
    common.add_argument("--lambda-rel", action="store_true", help="read lambda values as multiples of lambda*")
    common.add_argument("--mu", type=float, help="depth of the weight on the middle interval")
    common.add_argument("--sigma", type=float, default=0.25)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--config", help="JSON file whose keys mirror the long options")
    common.add_argument("--workers", type=int, help="process pool size (default: NEUMANN_TIMEMAP_WORKERS)")
    common.add_argument("--no-plot", action="store_true", help="skip the SVG output")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="neumann-timemap", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("timemap", parents=[common], help="T0 or the connection times on a grid")
    p.add_argument("--connection", action="store_true", help="connection times T_i instead of T0")
    p.add_argument("--n", type=int, default=400, help="uniform points per segment")

    sub.add_parser("solve", parents=[common], help="all solutions for one (lambda, mu)")

    p = sub.add_parser("thresholds", parents=[common], help="mu thresholds for one lambda")
    p.add_argument("--fold", action="store_true", help="also locate the sharp eight-solution threshold")

    p = sub.add_parser("bifurcate", parents=[common], help="branches in mu for one lambda")
    p.add_argument("--mu-min", type=float)
    p.add_argument("--mu-max", type=float)
    p.add_argument("--n-mu", type=int, default=24)
    p.add_argument("--depth", type=int, default=5, help="bisection rounds between samples")

    p = sub.add_parser("planemap", parents=[common], help="solution counts on a (lambda, mu) grid")
    p.add_argument("--lambdas", type=float, nargs="+")
    p.add_argument("--mus", type=float, nargs="+")

    p = sub.add_parser("asymptotic", parents=[common], help="large-lambda constants")
    p.add_argument("--Ks", type=float, nargs="+", help="K values for the Theta table")

    p = sub.add_parser("verify", parents=[common], help="appendix certification report")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _parse(parser, argv):
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"bad config {args.config}: {exc}") from exc
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    if "lambda" in cfg:
        cfg["lam"] = cfg.pop("lambda")
    known = vars(args)
    unknown = sorted(set(cfg) - set(known))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    # Command line flags win over the file: re-parse with the file as defaults.
    sub = parser._subparsers._group_actions[0].choices[args.command]
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        try:
            args = _parse(parser, argv)
        except SystemExit as exc:  # argparse exits on --help, --version and bad usage
            return int(exc.code or 0)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        return COMMANDS[args.command](args)
    except (UsageError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        where = f" ({exc.filename})" if exc.filename else ""
        print(f"I/O error{where}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
