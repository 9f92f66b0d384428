"""Batch runner: certify losses, check bounds, sweep scorer families, train scores.

Exit status is 0 when every check passes, 1 when a mathematical check
fails, and 2 for bad input or usage.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .bounds import (SLACK_TOL, SUITES, low_noise_bound_diagnostic, perturbation_family,
                     run_bound_suite, shrinkage_family)
from .construct import GRID_STEP, NotConcaveError, certify_all
from .distribution import DistributionError, FiniteDistribution, demo_distribution, load_distribution
from .losses import LOSS_NAMES, get_loss
from .reports import dumps
from .specfile import SpecError, load_spec
from .trainer import TrainConfig, TrainingDiverged, fit_scores, plugin_from_scores

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

DEFAULTS = {
    "seed": 0,
    "output": "results",
    "tolerance": SLACK_TOL,
    "grid_step": GRID_STEP,
    "distribution": None,
    # bound-check
    "trials": 1000,
    "losses": list(LOSS_NAMES),
    "lambda_override": {},
    "suites": list(SUITES),
    # sweep
    "loss": "sq",
    "alpha": 0.0,
    "t_grid": None,
    "t_min": 0.05,
    "t_count": 20,
    "family": None,
    # train
    "steps": 500,
    "learning_rate": 0.1,
    "mode": "exact",
    "n": 1000,
    "init": "zeros",
    "record_every": 10,
}


class InputError(ValueError):
    pass


# --- config ----------------------------------------------------------------


def _fraction(text: str) -> float:
    try:
        v = float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    return v


def _load_json(path, what):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {what} {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{what} {path} is not valid JSON: {exc}") from None


def resolve_config(args) -> tuple[dict, Path]:
    """Defaults, then the config file, then explicit command-line flags."""
    cfg = dict(DEFAULTS)
    base = Path.cwd()
    if args.config:
        data = _load_json(args.config, "config")
        if not isinstance(data, dict):
            raise InputError("config must be a JSON object")
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(data)
        base = Path(args.config).resolve().parent
    for key, flag in (("seed", "seed"), ("output", "out"), ("tolerance", "tolerance"),
                      ("grid_step", "grid_step"), ("trials", "trials"), ("suites", "suites")):
        v = getattr(args, flag, None)
        if v is not None:
            cfg[key] = v
    for item in getattr(args, "lambda_override", None) or []:
        name, _, value = item.partition("=")
        try:
            cfg["lambda_override"] = {**cfg["lambda_override"], name: float(value)}
        except ValueError:
            raise InputError(f"--lambda-override expects NAME=VALUE, got {item!r}") from None
    _validate(cfg)
    return cfg, base


def _validate(cfg):
    if isinstance(cfg["seed"], bool) or not isinstance(cfg["seed"], int):
        raise InputError("seed must be an integer")
    if isinstance(cfg["trials"], bool) or not isinstance(cfg["trials"], int) or cfg["trials"] < 1:
        raise InputError("trials must be an integer >= 1")
    if not isinstance(cfg["losses"], list) or not cfg["losses"]:
        raise InputError("losses must be a nonempty list")
    for name in cfg["losses"] + [cfg["loss"]] + list(cfg["lambda_override"]):
        if name not in LOSS_NAMES:
            raise InputError(f"unknown loss {name!r}; choose from {', '.join(LOSS_NAMES)}")
    if not isinstance(cfg["suites"], list) or not set(cfg["suites"]) <= set(SUITES) \
            or not cfg["suites"]:
        raise InputError(f"suites must be a nonempty list drawn from {', '.join(SUITES)}")
    for name, lam in cfg["lambda_override"].items():
        if not (isinstance(lam, (int, float)) and lam > 0):
            raise InputError(f"lambda_override for {name} must be positive")
    if not (isinstance(cfg["tolerance"], (int, float)) and cfg["tolerance"] >= 0):
        raise InputError("tolerance must be a nonnegative number")
    if not (isinstance(cfg["grid_step"], (int, float)) and 0 < cfg["grid_step"] <= 0.5):
        raise InputError("grid_step must lie in (0, 1/2]")
    if not isinstance(cfg["output"], str):
        raise InputError("output must be a directory path")


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(dumps(cfg).encode()).hexdigest()


def resolve_distribution(spec, base: Path, default=None) -> FiniteDistribution | None:
    """Inline object, a path (relative to the config file), "demo", or None."""
    if spec is None:
        return default
    if spec == "demo":
        return demo_distribution()
    if isinstance(spec, dict):
        return FiniteDistribution.from_dict(spec)
    if isinstance(spec, str):
        path = Path(spec)
        if not path.is_absolute() and (base / path).exists():
            path = base / path
        if not path.exists():
            raise InputError(f"distribution file {spec} not found")
        return load_distribution(path)
    raise InputError("distribution must be an object, a file path, or \"demo\"")


# --- output ----------------------------------------------------------------


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row[c]) for c in columns])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_summary(out: Path, command: str, cfg: dict, files: list[Path], body: dict) -> Path:
    summary = {
        "command": command,
        "seed": cfg["seed"],
        "config": cfg,
        "config_hash": config_hash(cfg),
        "manifest": {p.name: _sha256(p) for p in files},
        **body,
    }
    path = out / f"{command.replace('-', '_')}_summary.json"
    path.write_text(dumps(summary, indent=2) + "\n")
    return path


def _outdir(cfg) -> Path:
    out = Path(cfg["output"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {out}: {exc.strerror}") from None
    return out


# --- subcommands -------------------------------------------------------------


def cmd_certify(args) -> int:
    step = args.grid_step if args.grid_step is not None else GRID_STEP
    tol = args.tolerance if args.tolerance is not None else 1e-9
    if args.lam is not None and not args.lam > 0:
        raise InputError("--lambda must be positive")
    if args.loss:
        if args.loss not in LOSS_NAMES:
            raise InputError(f"unknown loss {args.loss!r}; choose from {', '.join(LOSS_NAMES)}")
        c, label = get_loss(args.loss).proper, args.loss
    else:
        try:
            c = load_spec(args.spec, step)
        except OSError as exc:
            raise InputError(f"cannot read spec {args.spec}: {exc.strerror}") from None
        except NotConcaveError as exc:
            result = {"loss": Path(args.spec).stem, "verdict": "fail", "reports": [{
                "property": "concave_bayes_risk", "verdict": "fail", "grid_step": step,
                "witness": {"eta": exc.eta, "eta_hat": exc.eta, "margin": -exc.second_difference},
                "notes": [str(exc)]}]}
            print(dumps(result, indent=2))
            return EXIT_FAIL
        label = c.name
    reports = certify_all(c, args.lam, step, tol)
    ok = all(r.verdict for r in reports)
    result = {"loss": label, "verdict": "pass" if ok else "fail",
              "reports": [r.to_dict() for r in reports]}
    text = dumps(result, indent=2)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"certify_{label}.json").write_text(text + "\n")
    return EXIT_OK if ok else EXIT_FAIL


BOUND_COLUMNS = ["trial", "bound_name", "seed", "loss", "p", "lambda", "lhs", "rhs", "slack",
                 "holds", "regret_surrogate"]


def cmd_bound_check(args) -> int:
    cfg, base = resolve_config(args)
    D = resolve_distribution(cfg["distribution"], base)
    rows = run_bound_suite(cfg["trials"], cfg["seed"], cfg["losses"], D,
                           lambda_override=cfg["lambda_override"], tol=cfg["tolerance"],
                           suites=cfg["suites"])
    out = _outdir(cfg)
    csv_path = out / "bound_check.csv"
    write_csv(csv_path, rows, BOUND_COLUMNS)

    by_bound = {}
    for row in rows:
        s = by_bound.setdefault(row["bound_name"], {"count": 0, "violations": 0,
                                                    "min_slack": math.inf, "argmin": None})
        s["count"] += 1
        s["violations"] += not row["holds"]
        if row["slack"] < s["min_slack"]:
            s["min_slack"], s["argmin"] = row["slack"], row
    violations = sum(s["violations"] for s in by_bound.values())
    finite = [r for r in rows if math.isfinite(r["slack"])]
    worst = min(finite, key=lambda r: r["slack"]) if finite else None
    write_summary(out, "bound-check", cfg, [csv_path], {
        "rows": len(rows), "violations": violations,
        "min_slack": worst["slack"] if worst else None, "argmin": worst, "bounds": by_bound,
    })
    print(f"bound-check: {len(rows)} checks, {violations} violations, "
          f"min slack {worst['slack']:.3g}" if worst else "bound-check: no checks")
    return EXIT_OK if violations == 0 else EXIT_FAIL


SWEEP_COLUMNS = ["label", "regret_surrogate", "regret_rank", "bound_rhs", "main_bound_holds"]


def _family(cfg, D, ell):
    fam = cfg["family"] or {"kind": "perturbation",
                            "scales": [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]}
    if not isinstance(fam, dict) or "kind" not in fam:
        raise InputError("family must be an object with a 'kind'")
    kind = fam["kind"]
    if kind == "shrinkage":
        ts = list(fam.get("ts", []))
        return ts, shrinkage_family(D, ell, ts)
    if kind == "perturbation":
        scales = list(fam.get("scales", []))
        return scales, perturbation_family(D, ell, scales, seed=fam.get("seed", cfg["seed"]))
    if kind == "explicit":
        scores = fam.get("scores", [])
        family = []
        for k, f in enumerate(scores):
            f = np.asarray(f, dtype=float)
            if f.shape != (len(D),):
                raise InputError(f"family score vector {k} needs {len(D)} entries")
            family.append(ell.link.check(f))
        return list(range(len(family))), family
    raise InputError(f"unknown family kind {kind!r}")


def cmd_sweep(args) -> int:
    cfg, base = resolve_config(args)
    D = resolve_distribution(cfg["distribution"], base, default=demo_distribution())
    ell = get_loss(cfg["loss"])
    labels, family = _family(cfg, D, ell)
    if not family:
        raise InputError("empty scoring function family")
    t_grid = cfg["t_grid"]
    if t_grid is None:
        t_grid = np.geomspace(cfg["t_min"], 1.0, cfg["t_count"]).tolist()
    diag = low_noise_bound_diagnostic(D, ell, family, cfg["alpha"], t_grid, labels=labels)
    if diag.fitted_slope is None:
        raise InputError("degenerate family: fewer than two points with positive finite "
                         "surrogate and ranking regret")
    out = _outdir(cfg)
    csv_path = out / "sweep.csv"
    write_csv(csv_path, diag.table, SWEEP_COLUMNS)
    record = diag.to_dict()
    record.pop("points")
    write_summary(out, "sweep", cfg, [csv_path], {"loss": ell.name, "diagnostic": record})
    print(f"sweep: C={diag.certificate:.6g} on t in [{min(t_grid):g}, {max(t_grid):g}], "
          f"alpha={diag.alpha:g}, slope={diag.fitted_slope:.4f} "
          f"(target {diag.target_exponent:.4f})")
    return EXIT_OK if diag.all_main_bounds_hold else EXIT_FAIL


TRAIN_COLUMNS = ["step", "surrogate_regret", "ranking_regret", "bound_rhs", "bound_holds",
                 "plugin_error"]


def _train_rows(D, ell, traj):
    return [{"step": c.step, "surrogate_regret": c.surrogate_regret,
             "ranking_regret": c.ranking_regret, "bound_rhs": c.bound_rhs,
             "bound_holds": c.bound_holds,
             "plugin_error": float(np.max(np.abs(plugin_from_scores(ell, c.scores) - D.eta)))}
            for c in traj]


def cmd_train(args) -> int:
    cfg, base = resolve_config(args)
    D = resolve_distribution(cfg["distribution"], base, default=demo_distribution())
    out = _outdir(cfg)
    files, results, status = [], {}, EXIT_OK
    for name in cfg["losses"]:
        ell = get_loss(name)
        tc = TrainConfig(loss=name, steps=cfg["steps"], learning_rate=cfg["learning_rate"],
                         mode=cfg["mode"], n=cfg["n"], seed=cfg["seed"], init=cfg["init"],
                         record_every=cfg["record_every"])
        try:
            traj = fit_scores(D, ell, tc)
        except TrainingDiverged as exc:
            dump = out / f"train_{name}_diverged.csv"
            write_csv(dump, _train_rows(D, ell, exc.trajectory), TRAIN_COLUMNS)
            files.append(dump)
            print(f"train: {name} diverged ({exc}); trajectory in {dump}", file=sys.stderr)
            results[name] = {"diverged": True, "dump": str(dump)}
            status = EXIT_FAIL
            continue
        rows = _train_rows(D, ell, traj)
        path = out / f"train_{name}.csv"
        write_csv(path, rows, TRAIN_COLUMNS)
        files.append(path)
        holds = all(r["bound_holds"] for r in rows)
        results[name] = {"diverged": False, "final_surrogate_regret": rows[-1]["surrogate_regret"],
                         "final_plugin_error": rows[-1]["plugin_error"], "bound_holds": holds}
        if not holds:
            status = EXIT_FAIL
        print(f"train: {name} regret {rows[-1]['surrogate_regret']:.3g} "
              f"plug-in error {rows[-1]['plugin_error']:.3g}")
    write_summary(out, "train", cfg, files, {"losses": results})
    return status


# --- entry point ------------------------------------------------------------


def _global_flags(parser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=d, help="root seed for all randomness")
    parser.add_argument("--out", default=d, help="output directory")
    parser.add_argument("--grid-step", type=_fraction, default=d,
                        help="certification grid step, e.g. 1/256")
    parser.add_argument("--tolerance", type=float, default=d, help="slack tolerance")
    parser.add_argument("--config", default=d, help="JSON experiment config")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankregret",
        description="Strongly proper losses and ranking regret bounds on finite distributions.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="certify a catalog loss or a loss spec file")
    _global_flags(p, suppress=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--loss", help=f"catalog name: {', '.join(LOSS_NAMES)}")
    src.add_argument("--spec", help="JSON file with partial losses or a Bayes risk H")
    p.add_argument("--lambda", dest="lam", type=float, help="strong properness constant to test")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("bound-check", help="randomized suites for every bound")
    _global_flags(p, suppress=True)
    p.add_argument("--trials", type=int, help="trials per suite")
    p.add_argument("--suites", type=lambda s: s.split(","),
                   help=f"comma separated subset of {','.join(SUITES)}")
    p.add_argument("--lambda-override", action="append", metavar="LOSS=LAMBDA",
                   help="check a loss against a different lambda (negative control)")
    p.set_defaults(func=cmd_bound_check)

    p = sub.add_parser("sweep", help="regret pairs over a scorer family, with NA(alpha)")
    _global_flags(p, suppress=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("train", help="gradient descent on per-instance scores")
    _global_flags(p, suppress=True)
    p.set_defaults(func=cmd_train)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, DistributionError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (KeyError, ValueError, TypeError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
