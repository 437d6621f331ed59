"""Synthetic task suites (linear regression, binary classification) and
CSV ingestion that splits a table into tasks by column predicates.

Random streams: ``SeedSequence(seed).spawn(M + 1)`` gives one PCG64
generator per task index, plus one (the last) for the initial point, so a
task's data does not depend on how many other tasks are generated.
"""

from __future__ import annotations

import csv
import itertools
import math
import operator
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .losses import quadratic_from_regression, smoothed_hinge
from .task_model import ConfigError, TaskPool
from .theory_map import register


def _streams(seed: int, M: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(M + 1)]


def _positive(obj, *keys):
    for k in keys:
        v = getattr(obj, k)
        if not v > 0:
            raise ConfigError(k, f"must be > 0, got {v!r}")


@dataclass(frozen=True)
class RegressionSuiteSpec:
    """M tasks y = X gamma_i + noise Z with standard normal X, gamma_i, Z.

    ``shared_truth`` draws a single gamma for all tasks (from task 0's
    stream). ``loss_scale`` is passed to ``quadratic_from_regression``.
    """

    M: int = 10
    d: int = 20
    n: int = 100
    noise: float = 1.0
    seed: int = 42
    shared_truth: bool = False
    loss_scale: str = "half_mean"

    def __post_init__(self):
        _positive(self, "M", "d", "n")
        if not (math.isfinite(self.noise) and self.noise >= 0):
            raise ConfigError("noise", "must be finite and >= 0")
        if self.loss_scale not in ("half_mean", "mean"):
            raise ConfigError("loss_scale", "must be 'half_mean' or 'mean'")


def regression_data(spec: RegressionSuiteSpec):
    """(X_i, y_i, gamma_i) per task."""
    rngs = _streams(spec.seed, spec.M)
    shared = rngs[0].standard_normal(spec.d) if spec.shared_truth else None
    out = []
    for i in range(spec.M):
        r = rngs[i]
        gamma = shared if shared is not None else r.standard_normal(spec.d)
        X = r.standard_normal((spec.n, spec.d))
        y = X @ gamma + spec.noise * r.standard_normal(spec.n)
        out.append((X, y, gamma))
    return out


@register("synthetic-experiments", operation="gen_regression_suite")
def gen_regression_suite(spec: RegressionSuiteSpec) -> TaskPool:
    tasks = [quadratic_from_regression(X, y, spec.loss_scale) for X, y, _ in regression_data(spec)]
    return TaskPool(tasks, name=f"regression(M={spec.M}, d={spec.d}, n={spec.n}, seed={spec.seed})")


def suite_initial_point(seed: int, M: int, d: int) -> np.ndarray:
    """Standard normal starting point from the stream after the M task streams."""
    return _streams(seed, M)[M].standard_normal(d)


@dataclass(frozen=True)
class ClassificationSuiteSpec:
    """M tasks of n points; class +1 centred at separation*u_i, class -1 at
    -separation*u_i, with u_i a random unit vector and unit Gaussian noise."""

    M: int = 50
    d: int = 20
    n: int = 300
    balance: float = 0.5
    separation: float = 1.0
    seed: int = 42
    delta: float = 0.1

    def __post_init__(self):
        _positive(self, "M", "d", "n", "delta")
        if not 0 < self.balance < 1:
            raise ConfigError("balance", "must lie in (0, 1)")
        n_pos = self.balance * self.n
        if abs(n_pos - round(n_pos)) > 1e-9:
            raise ConfigError("balance", f"balance * n = {n_pos} is not an integer")
        if self.balance == 0.5 and self.n % 2:
            raise ConfigError("n", "must be even for an even class split")
        if not self.separation >= 0:
            raise ConfigError("separation", "must be >= 0")


def classification_data(spec: ClassificationSuiteSpec):
    rngs = _streams(spec.seed, spec.M)
    n_pos = int(round(spec.balance * spec.n))
    out = []
    for i in range(spec.M):
        r = rngs[i]
        u = r.standard_normal(spec.d)
        u /= np.linalg.norm(u)
        y = np.concatenate([np.ones(n_pos), -np.ones(spec.n - n_pos)])
        X = spec.separation * y[:, None] * u[None] + r.standard_normal((spec.n, spec.d))
        out.append((X, y, u))
    return out


def gen_classification_suite(spec: ClassificationSuiteSpec) -> TaskPool:
    tasks = [smoothed_hinge(X, y, spec.delta) for X, y, _ in classification_data(spec)]
    return TaskPool(tasks, name=f"classification(M={spec.M}, d={spec.d}, n={spec.n}, seed={spec.seed})")


def random_quadratic_pool(M: int, d: int, seed: int, mu_min: float = 0.1, L_max: float = 2.0) -> TaskPool:
    """M quadratics with random orthogonal eigenbases and spectra in [mu_min, L_max]."""
    from .losses import quadratic_pool

    rngs = _streams(seed, M)
    Hs, bs = [], []
    for r in rngs[:M]:
        Qm, _ = np.linalg.qr(r.standard_normal((d, d)))
        ev = r.uniform(mu_min, L_max, size=d)
        H = (Qm * ev) @ Qm.T
        Hs.append(0.5 * (H + H.T))
        bs.append(r.standard_normal(d))
    return quadratic_pool(Hs, bs, name=f"random_quadratic(M={M}, d={d}, seed={seed})")


# -------------------------------------------------------------------- CSV

_OPS = {
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


class CsvFormatError(ConfigError):
    pass


@dataclass(frozen=True)
class CsvTaskSpec:
    """How to turn a CSV table into tasks.

    Each entry of ``splits`` is a predicate ``{"column", "op", "value"}`` or
    ``{"column", "op", "mean": true}`` (compare against the column mean).
    k predicates give up to 2^k tasks, one per combination of outcomes.
    """

    path: str
    features: tuple
    label: str
    splits: tuple = ()
    loss: str = "quadratic"
    delta: float = 0.1
    standardize: bool = True
    loss_scale: str = "half_mean"
    name: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.loss not in ("quadratic", "hinge"):
            raise ConfigError("loss", "must be 'quadratic' or 'hinge'")
        if not self.features:
            raise ConfigError("features", "need at least one feature column")
        for i, s in enumerate(self.splits):
            if "column" not in s or "op" not in s or ("value" not in s and not s.get("mean")):
                raise ConfigError(f"splits[{i}]", "needs 'column', 'op' and 'value' or 'mean'")
            if s["op"] not in _OPS:
                raise ConfigError(f"splits[{i}].op", f"must be one of {sorted(_OPS)}")


def standardize(X) -> np.ndarray:
    """Zero mean, unit variance per column; constant columns are only centred."""
    X = np.asarray(X, dtype=np.float64)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return (X - mean) / std


def read_numeric_csv(path, columns) -> dict[str, np.ndarray]:
    """Read the named columns of a headed CSV as float arrays.

    Errors name the 1-based data row (the header is not counted) and the column.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvFormatError("path", f"{path}: empty file") from None
        missing = [c for c in columns if c not in header]
        if missing:
            raise CsvFormatError("columns", f"{path}: missing column(s) {missing}")
        idx = {c: header.index(c) for c in columns}
        data = {c: [] for c in columns}
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            for c, j in idx.items():
                cell = row[j].strip() if j < len(row) else ""
                try:
                    data[c].append(float(cell))
                except ValueError:
                    raise CsvFormatError(
                        c, f"{path}: row {row_no} (line {row_no + 1}), column {c!r}: cannot parse {cell!r} as a number"
                    ) from None
    return {c: np.array(v, dtype=np.float64) for c, v in data.items()}


def _predicate_mask(col: np.ndarray, pred: dict) -> np.ndarray:
    ref = float(col.mean()) if pred.get("mean") else float(pred["value"])
    return _OPS[pred["op"]](col, ref)


def load_csv_tasks(spec: CsvTaskSpec) -> TaskPool:
    split_cols = [s["column"] for s in spec.splits]
    cols = list(dict.fromkeys([*spec.features, spec.label, *split_cols]))
    data = read_numeric_csv(spec.path, cols)
    n = len(data[spec.label])
    if n == 0:
        raise CsvFormatError("path", f"{spec.path}: no data rows")
    X = np.column_stack([data[c] for c in spec.features])
    if spec.standardize:
        X = standardize(X)
    y = data[spec.label]
    masks = [_predicate_mask(data[s["column"]], s) for s in spec.splits]
    tasks, labels = [], []
    for outcome in itertools.product((True, False), repeat=len(masks)):
        sel = np.ones(n, dtype=bool)
        for m, want in zip(masks, outcome):
            sel &= m == want
        desc = " & ".join(
            f"{'' if want else 'not '}{s['column']} {s['op']} {'mean' if s.get('mean') else s['value']}"
            for s, want in zip(spec.splits, outcome)
        ) or "all rows"
        if not sel.any():
            warnings.warn(f"split cell [{desc}] matches no rows; dropped", stacklevel=2)
            continue
        if spec.loss == "quadratic":
            tasks.append(quadratic_from_regression(X[sel], y[sel], spec.loss_scale))
        else:
            tasks.append(smoothed_hinge(X[sel], y[sel], spec.delta))
        labels.append(desc)
    if not tasks:
        raise CsvFormatError("splits", "every split cell is empty")
    pool = TaskPool(tasks, name=spec.name or Path(spec.path).stem)
    pool.task_labels = labels
    return pool


def write_synthetic_table(path, n: int = 240, seed: int = 7) -> None:
    """A small regression table with two binary-ish split columns (sex, age)."""
    rng = np.random.default_rng(seed)
    age = rng.uniform(20, 80, n).round(1)
    sex = rng.integers(1, 3, n)
    bmi = rng.normal(26, 4, n).round(2)
    bp = rng.normal(95, 12, n).round(1)
    s1 = rng.normal(190, 35, n).round(1)
    target = (
        150 + 0.9 * (age - 50) + 12 * (sex - 1.5) + 9 * (bmi - 26) + 1.1 * (bp - 95) + 0.2 * (s1 - 190)
        + rng.normal(0, 25, n)
    ).round(1)
    label = np.where(target > np.median(target), 1, -1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["age", "sex", "bmi", "bp", "s1", "target", "label"])
        for row in zip(age, sex, bmi, bp, s1, target, label):
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
