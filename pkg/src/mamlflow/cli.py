"""Command line front end.

    mamlflow run --config exp.json [--out DIR] [--seed N]
    mamlflow verify --config exp.json [--out DIR] [--seed N]
    mamlflow constants --config exp.json [--out DIR]
    mamlflow counterexample [--alpha 0.4] [--grid-min -3] [--grid-max 3] [--step 1e-3] [--out DIR]
    mamlflow plot a.csv b.csv --out fig.svg [--column gradF_norm] [--log-y]
    mamlflow docs [--report report.json ...] [--out docs/theory_map.md]

Exit codes: 0 success (hypothesis-violated checks included), 1 verification
failure, 2 usage or configuration error, 3 divergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics, losses
from .datagen import (
    ClassificationSuiteSpec,
    CsvFormatError,
    CsvTaskSpec,
    RegressionSuiteSpec,
    gen_classification_suite,
    gen_regression_suite,
    load_csv_tasks,
    random_quadratic_pool,
    suite_initial_point,
)
from .optimizers import run
from .task_model import ConfigError, MamlConfig, MamlError, PoolValidationError, TaskPool, Trajectory

log = logging.getLogger("mamlflow")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3

CSV_HEADER = [
    "run_id",
    "algorithm",
    "iter",
    "t",
    "phase",
    "F_val",
    "gradF_norm",
    "gradf_norm",
    "hess_evals_cum",
    "grad_evals_cum",
    "wall_ns",
]
ALGORITHMS = ("gd_f", "maml", "fo_maml", "bi_maml", "maml_ode", "bi_maml_ode", "bi_maml_literal")
PLOT_COLUMNS = ("F_val", "gradF_norm", "gradf_norm")


# ------------------------------------------------------------------ config


@dataclass
class Experiment:
    pool: TaskPool
    w0: np.ndarray
    maml: MamlConfig
    algorithms: list
    seed: int
    run_id: str
    out_dir: Path
    timing_in_csv: bool = False
    verify: dict = field(default_factory=dict)


def _section(cfg: dict, key: str, default=None) -> dict:
    v = cfg.get(key, default if default is not None else {})
    if not isinstance(v, dict):
        raise ConfigError(key, "must be an object")
    return v


def _num(sec: dict, prefix: str, key: str, default, kind=float):
    v = sec.get(key, default)
    try:
        out = kind(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{prefix}.{key}", f"expected a number, got {v!r}") from None
    if kind is int and out != v:
        raise ConfigError(f"{prefix}.{key}", f"expected an integer, got {v!r}")
    return out


def _build_pool(cfg: dict, seed: int) -> tuple[TaskPool, np.ndarray | None]:
    sources = [k for k in ("pool", "suite", "csv") if k in cfg]
    if len(sources) != 1:
        raise ConfigError("pool", "exactly one of 'pool', 'suite' or 'csv' is required")
    src = sources[0]
    sec = _section(cfg, src)
    kind = sec.get("kind")
    if src == "pool":
        if kind == "two_task":
            return losses.two_task_pool(), None
        if kind == "counterexample":
            return losses.counterexample_pool(), None
        if kind == "random_quadratic":
            M = _num(sec, "pool", "M", 5, int)
            d = _num(sec, "pool", "d", 5, int)
            return random_quadratic_pool(M, d, _num(sec, "pool", "seed", seed, int)), None
        if kind == "quadratic":
            try:
                return losses.quadratic_pool(sec["H"], sec["b"], sec.get("c"), sec.get("weights")), None
            except KeyError as exc:
                raise ConfigError(f"pool.{exc.args[0]}", "missing") from None
        raise ConfigError("pool.kind", f"unknown pool kind {kind!r}")
    if src == "suite":
        params = {k: v for k, v in sec.items() if k != "kind"}
        params.setdefault("seed", seed)
        try:
            if kind == "regression":
                spec = RegressionSuiteSpec(**params)
                return gen_regression_suite(spec), suite_initial_point(spec.seed, spec.M, spec.d)
            if kind == "classification":
                spec = ClassificationSuiteSpec(**params)
                return gen_classification_suite(spec), suite_initial_point(spec.seed, spec.M, spec.d)
        except TypeError as exc:
            raise ConfigError("suite", str(exc)) from None
        raise ConfigError("suite.kind", f"unknown suite kind {kind!r}")
    try:
        spec = CsvTaskSpec(
            path=sec["path"],
            features=tuple(sec["features"]),
            label=sec["label"],
            splits=tuple(sec.get("splits", ())),
            loss=sec.get("loss", "quadratic"),
            delta=sec.get("delta", 0.1),
            standardize=sec.get("standardize", True),
            loss_scale=sec.get("loss_scale", "half_mean"),
        )
    except KeyError as exc:
        raise ConfigError(f"csv.{exc.args[0]}", "missing") from None
    return load_csv_tasks(spec), None


def load_experiment(path, seed: int | None = None, out: str | None = None, strict_beta: bool = True) -> Experiment:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("config", f"no such file {str(path)!r}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config", "top level must be an object")
    seed = int(cfg.get("seed", 0)) if seed is None else seed
    pool, w0_default = _build_pool(cfg, seed)

    m = _section(cfg, "maml")
    b = _section(cfg, "budgets")
    beta = _num(m, "maml", "beta", 0.05)
    if strict_beta and not beta > 0:
        raise ConfigError("maml.beta", f"must be > 0, got {beta!r}")
    maml = MamlConfig(
        alpha=_num(m, "maml", "alpha", 0.1),
        beta=beta,
        eps=_num(m, "maml", "eps", 1e-6),
        eps0=_num(m, "maml", "eps0", 0.1),
        integrator=m.get("integrator", "euler"),
        max_iters=_num(b, "budgets", "max_iters", 10_000, int),
        max_time=_num(b, "budgets", "max_time", math.inf),
    )

    algos = cfg.get("algorithms", ["maml"])
    if not isinstance(algos, list) or not algos:
        raise ConfigError("algorithms", "must be a non-empty list")
    for a in algos:
        if a not in ALGORITHMS:
            raise ConfigError("algorithms", f"unknown algorithm {a!r} (choose from {', '.join(ALGORITHMS)})")

    if "w0" in cfg:
        w0 = np.asarray(cfg["w0"], dtype=np.float64).reshape(-1)
        if w0.shape[0] != pool.dim:
            raise ConfigError("w0", f"expected {pool.dim} entries, got {w0.shape[0]}")
    elif w0_default is not None:
        w0 = w0_default
    else:
        w0 = np.random.default_rng(seed).standard_normal(pool.dim)

    o = _section(cfg, "output")
    out_dir = Path(out if out is not None else o.get("dir", "runs/" + path.stem))
    return Experiment(
        pool=pool,
        w0=w0,
        maml=maml,
        algorithms=algos,
        seed=seed,
        run_id=str(cfg.get("run_id", f"{path.stem}-s{seed}")),
        out_dir=out_dir,
        timing_in_csv=bool(o.get("timing_in_csv", False)),
        verify=_section(cfg, "verify"),
    )


# ----------------------------------------------------------------- writing


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_trajectory_csv(path, traj: Trajectory, run_id: str, timing: bool = False) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for s in traj.samples:
            w.writerow([
                run_id, traj.algorithm, s.iter, _fmt(s.t), s.phase, _fmt(s.F_val), _fmt(s.gradF_norm),
                _fmt(s.gradf_norm), s.hess_evals_cum, s.grad_evals_cum, s.wall_ns if timing else 0,
            ])


def summarize(traj: Trajectory) -> dict:
    f = traj.final
    return {
        "algorithm": traj.algorithm,
        "terminal_gradF_norm": f.gradF_norm,
        "iters": f.iter,
        "t_final": f.t,
        "hess_evals": f.hess_evals_cum,
        "grad_evals": f.grad_evals_cum,
        "wall_ns": f.wall_ns,
        "termination": traj.termination,
    }


def _dump(path, obj) -> None:
    Path(path).write_text(json.dumps(diagnostics._jsonable(obj), indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- commands


def cmd_run(args) -> int:
    exp = load_experiment(args.config, args.seed, args.out)
    exp.out_dir.mkdir(parents=True, exist_ok=True)
    summary = []
    diverged = False
    for name in exp.algorithms:
        exp.pool.reset_counters()
        traj = run(name, exp.pool, exp.maml, exp.w0)
        write_trajectory_csv(exp.out_dir / f"{name}.csv", traj, exp.run_id, exp.timing_in_csv)
        rec = summarize(traj)
        summary.append(rec)
        diverged |= traj.termination == "diverged"
        print(f"{name:>16}: {traj.termination:<12} iters={rec['iters']:<6} |grad F|={rec['terminal_gradF_norm']:.3e} "
              f"hess={rec['hess_evals']} grad={rec['grad_evals']} wall={rec['wall_ns'] / 1e6:.1f} ms")
    _dump(exp.out_dir / "summary.json", summary)
    by = {r["algorithm"]: r for r in summary}
    if "maml" in by and "bi_maml" in by and by["maml"]["hess_evals"]:
        ratios = {
            "hess_evals_ratio": by["bi_maml"]["hess_evals"] / by["maml"]["hess_evals"],
            "wall_time_ratio": by["bi_maml"]["wall_ns"] / max(by["maml"]["wall_ns"], 1),
        }
        _dump(exp.out_dir / "comparison.json", ratios)
        print(f"bi_maml / maml: hess evals {ratios['hess_evals_ratio']:.3f}, wall time {ratios['wall_time_ratio']:.3f}")
    if diverged:
        print("error: at least one run diverged", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_verify(args) -> int:
    exp = load_experiment(args.config, args.seed, args.out)
    v = exp.verify
    reports, c = diagnostics.verify(
        exp.pool,
        exp.maml.alpha,
        exp.w0,
        checks=v.get("checks"),
        eps=float(v.get("eps", 1e-2)),
        eps0=exp.maml.eps0,
        beta=float(v.get("beta", 1e-3)),
        step=exp.maml.beta,
        horizon=float(v.get("horizon", 10.0)),
        seed=exp.seed,
        n_probes=int(v.get("n_probes", 100)),
        n_starts=int(v.get("n_starts", 20)),
    )
    exp.out_dir.mkdir(parents=True, exist_ok=True)
    _dump(exp.out_dir / "report.json", [r.to_dict() for r in reports])
    _dump(exp.out_dir / "constants.json", c.to_dict())
    for r in reports:
        print(f"{r.check:>20}: {r.status:<20} margin={r.margin:.3g}")
    return EXIT_VERIFY if any(r.status == "fail" for r in reports) else EXIT_OK


def cmd_constants(args) -> int:
    exp = load_experiment(args.config, args.seed, args.out, strict_beta=False)
    try:
        c = diagnostics.estimate_constants(exp.pool)
    except diagnostics.NotStronglyConvex as exc:
        rec = {**exc.estimates, "mu_le_zero": True, "message": str(exc)}
        print(json.dumps(diagnostics._jsonable(rec), indent=2))
        return EXIT_VERIFY
    K = diagnostics.uniqueness_K(c)
    rec = {
        **c.to_dict(),
        "mu_le_zero": False,
        "alpha_bound_thm1": diagnostics.alpha_bound_thm1(c),
        "alpha_bound_thm2": diagnostics.alpha_bound_thm2(c, exp.maml.eps0),
        "alpha_bound_strong_convexity": diagnostics.alpha_bound_strong_convexity(c, K),
        "K": K,
    }
    print(json.dumps(diagnostics._jsonable(rec), indent=2))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        _dump(Path(args.out) / "constants.json", rec)
    return EXIT_OK


def cmd_counterexample(args) -> int:
    if not args.step > 0:
        raise ConfigError("step", f"must be > 0, got {args.step!r}")
    if not args.grid_max > args.grid_min:
        raise ConfigError("grid", "grid-max must exceed grid-min")
    r = diagnostics.scan_counterexample(args.alpha, args.grid_min, args.grid_max, args.step)
    report = {k: v for k, v in r.items() if k not in ("grid", "dF", "d2F")}
    print(json.dumps(diagnostics._jsonable(report), indent=2))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "counterexample.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["w", "d2F"])
            for x, y in zip(r["grid"], r["d2F"]):
                w.writerow([repr(float(x)), repr(float(y))])
        status = "pass" if (r["min_d2F"] < 0) == (args.alpha > 0) else "fail"
        _dump(out / "report.json", [{"check": "counterexample", "status": status, "margin": -r["min_d2F"],
                                     "hypothesis": {"statement": "none", "holds": True}, "details": report}])
        _dump(out / "scan.json", report)
    return EXIT_OK


def _read_traj_csv(path, column):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ConfigError("csv", f"{path}: empty file")
        if column not in header:
            raise ConfigError("column", f"{path}: column {column!r} not found")
        if header != CSV_HEADER:
            raise ConfigError("csv", f"{path}: schema mismatch (expected {','.join(CSV_HEADER)})")
        rows = list(reader)
    if not rows:
        raise ConfigError("csv", f"{path}: no data rows")
    i, j = header.index("iter"), header.index(column)
    return np.array([float(r[i]) for r in rows]), np.array([float(r[j]) for r in rows]), rows[0][1]


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def render_svg(series, column: str, log_y: bool = False, width: int = 640, height: int = 400) -> str:
    """Line chart with one polyline per (x, y, label) series."""
    pad_l, pad_r, pad_t, pad_b = 70, 20, 30, 45
    xs = np.concatenate([s[0] for s in series])
    ys = []
    for _, y, _ in series:
        y = y[np.isfinite(y)]
        ys.append(np.log10(y[y > 0]) if log_y else y)
    ys = np.concatenate(ys) if ys else np.array([0.0])
    if ys.size == 0:
        ys = np.array([0.0])
    x0, x1 = float(xs.min()), float(xs.max()) or 1.0
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def px(x):
        return pad_l + (x - x0) / (x1 - x0) * pw

    def py(y):
        return pad_t + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{pad_l + pw / 2}" y="{height - 10}" text-anchor="middle" font-size="12">iter</text>',
        f'<text x="15" y="{pad_t + ph / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 15 {pad_t + ph / 2})">{"log10 " if log_y else ""}{column}</text>',
    ]
    for k in range(5):
        yv = y0 + (y1 - y0) * k / 4
        xv = x0 + (x1 - x0) * k / 4
        out.append(f'<text x="{pad_l - 5}" y="{py(yv) + 4:.1f}" text-anchor="end" font-size="10">{yv:.3g}</text>')
        out.append(f'<text x="{px(xv):.1f}" y="{pad_t + ph + 15}" text-anchor="middle" font-size="10">{xv:.4g}</text>')
    for n, (x, y, label) in enumerate(series):
        keep = np.isfinite(y) & ((y > 0) if log_y else True)
        yy = np.log10(y[keep]) if log_y else y[keep]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[keep], yy))
        color = _COLORS[n % len(_COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{pad_l + 10}" y="{pad_t + 15 + 14 * n}" font-size="11" fill="{color}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_plot(args) -> int:
    columns = args.column or ["gradF_norm"]
    out = Path(args.out)
    for col in columns:
        series = []
        for p in args.csv:
            x, y, algo = _read_traj_csv(p, col)
            series.append((x, y, f"{algo} ({Path(p).stem})"))
        target = out if len(columns) == 1 else out.with_name(f"{out.stem}_{col}{out.suffix or '.svg'}")
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(render_svg(series, col, args.log_y), encoding="utf-8")
        print(f"wrote {target}")
    return EXIT_OK


def cmd_docs(args) -> int:
    from .theory_map import OrphanAnchor, emit_theory_map, load_statuses

    try:
        text = emit_theory_map(load_statuses(args.report or []), args.out)
    except OrphanAnchor as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    if args.out is None:
        print(text, end="")
    return EXIT_OK


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mamlflow", description="MAML / BI-MAML runs and convergence-bound checks")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, fn, help_ in (
        ("run", cmd_run, "run the configured algorithms and write trajectory CSVs"),
        ("verify", cmd_verify, "run the bound checks and write a report"),
        ("constants", cmd_constants, "estimate L, mu, kappa, sigma and the step-size bounds"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--seed", type=int)
        p.set_defaults(func=fn)

    p = sub.add_parser("counterexample", help="scan F' and F'' of the non-convex example pool")
    p.add_argument("--alpha", type=float, default=0.4)
    p.add_argument("--grid-min", type=float, default=-3.0)
    p.add_argument("--grid-max", type=float, default=3.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("plot", help="plot trajectory CSVs as an SVG line chart")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", required=True, metavar="SVG")
    p.add_argument("--column", action="append", choices=None)
    p.add_argument("--log-y", action="store_true")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("docs", help="write the theory-to-code map")
    p.add_argument("--report", action="append", metavar="JSON")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_docs)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, PoolValidationError, CsvFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, MamlError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
