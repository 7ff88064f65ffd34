"""
The config-driven benchmark harness.

Every replication regenerates (or re-permutes) the data with seeds spawned
from `base_seed + replication`, splits it 50/25/25, and trains every
(algorithm, ν) pair for the algorithm's iteration cap. T* is selected on the
validation curve and the test metrics of F_{T*} are recorded.

Each grid cell is independent. Cells run in a process pool when `workers` is
above one; every cell writes its own result file atomically, and the reports
are assembled from those files in grid order, so a run is reproducible byte
for byte.
"""
from __future__ import annotations

import concurrent.futures
import json
import logging
import os
import tempfile
from pathlib import Path

import attrs
import numpy as np
import pandas as pd
import yaml

from . import STORAGE_DIR, WORKERS
from .boosting import TrainConfig, train
from .data import Dataset, SplitSpec, Task, load_csv, split_dataset
from .evaluation import evaluate_model, risk_curve, select_t_star
from .extensions import error_handler as error
from .losses import LossKind
from .model import Algorithm
from .synthetic import MODELS, DesignKind, ModelSpec, generate_model

log = logging.getLogger(__name__)

DEFAULT_NU_GRID = (1e-5, 0.001, 0.01, 0.1, 0.5)
DEFAULT_T_CAP = {Algorithm.GB: 10_000, Algorithm.AGB: 2_500}

SETTING_KEYS = {
    "algorithms",
    "loss",
    "nu_grid",
    "t_cap",
    "leaves",
    "min_leaf",
    "replications",
    "base_seed",
    "train_fraction",
    "val_fraction",
}
SOURCE_KEYS = {"name", "model", "design", "n", "d", "csv", "target", "task"}
TOP_KEYS = SETTING_KEYS | {"tasks", "output", "workers", "traces", "desk_scale"}
DESK_KEYS = {"enabled", "n", "d", "t_cap", "replications", "nu_grid"}


def _float(value, name: str) -> float:
    # YAML 1.1 reads "1e-5" as a string.
    try:
        return float(value)
    except (TypeError, ValueError):
        raise error.InvalidConfigError(f"{name} must be a number, got {value!r}.")


def _int(value, name: str) -> int:
    if isinstance(value, bool):
        raise error.InvalidConfigError(f"{name} must be an integer, got {value!r}.")
    try:
        number = int(value)
    except (TypeError, ValueError):
        raise error.InvalidConfigError(f"{name} must be an integer, got {value!r}.")
    if number != _float(value, name):
        raise error.InvalidConfigError(f"{name} must be an integer, got {value!r}.")
    return number


def _nu_grid(value) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or not value:
        raise error.InvalidConfigError("nu_grid must be a non-empty list.")
    grid = tuple(_float(nu, "nu_grid") for nu in value)
    if not all(0 < nu < 1 for nu in grid):
        raise error.InvalidConfigError("Every nu_grid value must lie in (0, 1).")
    return grid


def _t_cap(value) -> dict[Algorithm, int]:
    if isinstance(value, dict):
        caps = dict(DEFAULT_T_CAP)
        for key, cap in value.items():
            caps[Algorithm.parse(key)] = _int(cap, "t_cap")
    else:
        cap = _int(value, "t_cap")
        caps = {algorithm: cap for algorithm in Algorithm}
    if min(caps.values()) < 1:
        raise error.InvalidConfigError("t_cap must be at least 1.")
    return caps


def _algorithms(value) -> tuple[Algorithm, ...]:
    if isinstance(value, str):
        value = [value]
    algorithms = tuple(Algorithm.parse(a) for a in value)
    if not algorithms:
        raise error.InvalidConfigError("algorithms must not be empty.")
    return algorithms


@attrs.define(frozen=True)
class BenchTask:
    """
    One data source and the grid to run on it.

    Exactly one of `model_id` (synthetic) and `csv` (file) is set.
    """

    name: str
    task: Task
    loss: LossKind
    algorithms: tuple[Algorithm, ...]
    nu_grid: tuple[float, ...]
    t_cap: dict[Algorithm, int]
    leaves: int = 2
    min_leaf: int = 1
    replications: int = 1
    base_seed: int = 0
    train_fraction: float = 0.5
    val_fraction: float = 0.25
    model_id: int | None = None
    design: DesignKind | None = None
    n: int | None = None
    d: int | None = None
    csv: str | None = None
    target: str = "y"

    @property
    def design_label(self) -> str:
        return self.design.value if self.design is not None else "-"

    def seeds(self, replication: int) -> tuple[int, int]:
        """
        The (data, split) seeds of a replication.

        Both are spawned from `base_seed + replication`, so data generation and
        the split permutation draw from independent streams.
        """
        data, split = np.random.SeedSequence(self.base_seed + replication).spawn(2)
        return (
            int(data.generate_state(1, dtype=np.uint64)[0]),
            int(split.generate_state(1, dtype=np.uint64)[0]),
        )

    def dataset(self, replication: int) -> Dataset:
        """The full dataset of a replication, before splitting."""
        if self.model_id is not None:
            spec = ModelSpec(self.model_id, self.design, self.n, self.d, self.seeds(replication)[0])
            return generate_model(spec)
        return load_csv(self.csv, self.target, self.task)

    def splits(self, replication: int) -> tuple[Dataset, Dataset, Dataset]:
        split = SplitSpec(self.train_fraction, self.val_fraction, self.seeds(replication)[1])
        return split_dataset(self.dataset(replication), split)


@attrs.define(frozen=True)
class BenchConfig:
    """
    A benchmark grid read from a YAML file.

    Top-level settings are defaults for every task; a task may override any of
    them. An enabled `desk_scale` section overrides both, for short runs.
    """

    tasks: tuple[BenchTask, ...]
    output: str
    workers: int = 1
    traces: bool = False

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> BenchConfig:
        """
        Raises:
            error.InvalidConfigError: If the file is missing or invalid.
        """
        try:
            with open(path) as file:
                data = yaml.safe_load(file)
        except FileNotFoundError:
            raise error.InvalidConfigError(f"Config file not found: {os.fspath(path)}")
        except yaml.YAMLError as e:
            raise error.InvalidConfigError(f"Config file is not valid YAML: {e}")
        return cls.from_dict(data, base_dir=Path(path).parent)

    @classmethod
    def from_dict(cls, data: dict, base_dir: str | os.PathLike = ".") -> BenchConfig:
        if not isinstance(data, dict):
            raise error.InvalidConfigError("The config must be a mapping.")
        unknown = set(data) - TOP_KEYS
        if unknown:
            raise error.InvalidConfigError(f"Unknown config keys: {', '.join(sorted(unknown))}.")

        tasks = data.get("tasks")
        if not isinstance(tasks, list) or not tasks:
            raise error.InvalidConfigError("The config needs a non-empty tasks list.")

        desk = data.get("desk_scale") or {}
        if not isinstance(desk, dict) or set(desk) - DESK_KEYS:
            raise error.InvalidConfigError(f"desk_scale accepts only {', '.join(sorted(DESK_KEYS))}.")
        if not desk.get("enabled", False):
            desk = {}
        desk = {key: value for key, value in desk.items() if key != "enabled"}

        defaults = {key: data[key] for key in SETTING_KEYS if key in data}
        parsed = tuple(
            _parse_task(entry, i, defaults, desk, Path(base_dir))
            for i, entry in enumerate(tasks)
        )
        names = [task.name for task in parsed]
        if len(set(names)) != len(names):
            raise error.InvalidConfigError("Task names must be unique.")

        workers = _int(data.get("workers", WORKERS), "workers")
        if workers < 1:
            raise error.InvalidConfigError("workers must be at least 1.")

        return cls(
            tasks=parsed,
            output=str(data.get("output", os.path.join(STORAGE_DIR, "benchmark"))),
            workers=workers,
            traces=bool(data.get("traces", False)),
        )


def _parse_task(entry, index: int, defaults: dict, desk: dict, base_dir: Path) -> BenchTask:
    if not isinstance(entry, dict):
        raise error.InvalidConfigError(f"Task {index} must be a mapping.")
    unknown = set(entry) - SETTING_KEYS - SOURCE_KEYS
    if unknown:
        raise error.InvalidConfigError(f"Task {index} has unknown keys: {', '.join(sorted(unknown))}.")

    settings = {**defaults, **entry, **desk}

    if ("model" in entry) == ("csv" in entry):
        raise error.InvalidConfigError(f"Task {index} needs exactly one of model and csv.")

    if "model" in entry:
        model_id = _int(entry["model"], "model")
        if model_id not in MODELS:
            raise error.InvalidConfigError(f"Task {index}: model must be one of 1..5.")
        design = DesignKind.parse(entry.get("design", "u"))
        model = MODELS[model_id]
        n = _int(settings.get("n", model.n), "n")
        d = _int(settings.get("d", model.d), "d")
        # Fail on a bad spec now rather than inside every cell.
        ModelSpec(model_id, design, n, d)
        task = model.task
        source = {"model_id": model_id, "design": design, "n": n, "d": d}
        name = entry.get("name", f"model{model_id}-{design.value}")
    else:
        if "task" not in entry:
            raise error.InvalidConfigError(f"Task {index}: a csv task needs a task kind.")
        task = Task.parse(entry["task"])
        path = Path(entry["csv"])
        if not path.is_absolute():
            path = base_dir / path
        source = {"csv": str(path), "target": str(entry.get("target", "y"))}
        name = entry.get("name", path.stem)

    loss = LossKind.parse(settings.get("loss", LossKind.default_for(task)))
    if loss.task is not task:
        raise error.InvalidConfigError(f"Task {name}: the {loss.value} loss does not fit {task.value}.")

    replications = _int(settings.get("replications", 1), "replications")
    if replications < 1:
        raise error.InvalidConfigError("replications must be at least 1.")
    leaves = _int(settings.get("leaves", 2), "leaves")
    min_leaf = _int(settings.get("min_leaf", 1), "min_leaf")
    if leaves < 2 or min_leaf < 1:
        raise error.InvalidConfigError("leaves must be at least 2 and min_leaf at least 1.")
    train_fraction = _float(settings.get("train_fraction", 0.5), "train_fraction")
    val_fraction = _float(settings.get("val_fraction", 0.25), "val_fraction")
    try:
        SplitSpec(train_fraction, val_fraction)
    except error.InvalidSplitError as e:
        raise error.InvalidConfigError(str(e))
    base_seed = _int(settings.get("base_seed", 0), "base_seed")
    if base_seed < 0:
        raise error.InvalidConfigError(f"base_seed must be non-negative, got {base_seed}.")

    return BenchTask(
        name=str(name),
        task=task,
        loss=loss,
        algorithms=_algorithms(settings.get("algorithms", ["gb", "agb"])),
        nu_grid=_nu_grid(settings.get("nu_grid", list(DEFAULT_NU_GRID))),
        t_cap=_t_cap(settings.get("t_cap", {})),
        leaves=leaves,
        min_leaf=min_leaf,
        replications=replications,
        base_seed=base_seed,
        train_fraction=train_fraction,
        val_fraction=val_fraction,
        **source,
    )


@attrs.define(frozen=True)
class Cell:
    """One (task, replication, algorithm, ν) point of the grid."""

    task: BenchTask
    replication: int
    algorithm: Algorithm
    nu: float

    @property
    def key(self) -> str:
        return f"{self.task.name}_{self.algorithm.value}_nu{self.nu:g}_r{self.replication}"

    def labels(self) -> dict:
        return {
            "task": self.task.name,
            "design": self.task.design_label,
            "algorithm": self.algorithm.value,
            "loss": self.task.loss.value,
            "nu": self.nu,
            "replication": self.replication,
        }


def cells(config: BenchConfig) -> list[Cell]:
    """The grid in report order: task, algorithm, ν, replication."""
    return [
        Cell(task, r, algorithm, nu)
        for task in config.tasks
        for algorithm in task.algorithms
        for nu in task.nu_grid
        for r in range(task.replications)
    ]


def atomic_write(path: Path, text: str) -> None:
    """Write a file through a temporary sibling and a rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(
        "w", dir=path.parent, prefix=f".{path.name}.", suffix=".tmp", delete=False, newline=""
    ) as file:
        file.write(text)
        temporary = file.name
    os.replace(temporary, path)


def run_cell(cell: Cell, output: str, traces: bool) -> dict:
    """
    Train one cell and write its result file.

    Returns:
        dict: The result row, with `status` "ok" or "failed".
    """
    row = cell.labels()
    task = cell.task
    try:
        train_set, val_set, test_set = task.splits(cell.replication)
        config = TrainConfig(
            algorithm=cell.algorithm,
            loss=task.loss,
            nu=cell.nu,
            iterations=task.t_cap[cell.algorithm],
            leaves=task.leaves,
            min_leaf=task.min_leaf,
        )
        model, trace = train(train_set, config, val_set)
        selection = select_t_star(trace)
        row["t_star"] = selection.t_star
        row["val_risk"] = selection.val_risk_at_t_star
        row.update(evaluate_model(model, test_set, t=selection.t_star))
        row["status"] = "ok"

        if traces:
            frame = trace.to_frame()
            frame["test_risk"] = risk_curve(model, test_set)
            atomic_write(
                Path(output) / "traces" / f"{cell.key}.csv",
                frame.to_csv(index=False),
            )
        log.info("%s: T*=%d, test risk %.6g", cell.key, selection.t_star, row["lossrisk"])
    except error.BoostingError as e:
        row["status"] = "failed"
        row["error"] = f"{type(e).__name__}: {e}"
        log.warning("%s failed: %s", cell.key, row["error"])

    atomic_write(Path(output) / "cells" / f"{cell.key}.json", json.dumps(row, sort_keys=True))
    return row


def _run_cell_args(args: tuple[Cell, str, bool]) -> dict:
    return run_cell(*args)


GROUP_COLUMNS = ["task", "design", "algorithm", "loss", "nu"]
METRIC_COLUMNS = ["lossrisk", "mse", "misclass", "auc"]


def summarize(runs: pd.DataFrame) -> pd.DataFrame:
    """
    Mean and standard deviation of every metric per (task, algorithm, ν) cell,
    plus the mean, spread and quartiles of T*.

    Standard deviations use n - 1 and are 0 for a single run.
    """
    if runs.empty:
        return pd.DataFrame(columns=GROUP_COLUMNS + ["runs"])

    grouped = runs.groupby(GROUP_COLUMNS, sort=False, dropna=False)
    summary = grouped.size().rename("runs").to_frame()
    for column in [c for c in METRIC_COLUMNS if c in runs.columns]:
        summary[f"{column}_mean"] = grouped[column].mean()
        summary[f"{column}_sd"] = grouped[column].std(ddof=1).fillna(0.0)

    summary["t_star_mean"] = grouped["t_star"].mean()
    summary["t_star_sd"] = grouped["t_star"].std(ddof=1).fillna(0.0)
    summary["t_star_q1"] = grouped["t_star"].quantile(0.25)
    summary["t_star_median"] = grouped["t_star"].median()
    summary["t_star_q3"] = grouped["t_star"].quantile(0.75)
    return summary.reset_index()


@attrs.define(frozen=True, eq=False)
class BenchReport:
    """The tables a benchmark run writes, and where."""

    runs: pd.DataFrame
    summary: pd.DataFrame
    failures: pd.DataFrame
    directory: Path


def run_benchmark(config: BenchConfig, workers: int | None = None) -> BenchReport:
    """
    Run the whole grid and write `runs.csv`, `summary.csv` and `failures.csv`
    to the output directory (plus per-cell trace CSVs when `traces` is on).

    Args:
        config (BenchConfig): The grid.
        workers (int | None): Overrides the config's process count.

    Returns:
        BenchReport: The tables that were written.
    """
    workers = workers or config.workers
    grid = cells(config)
    output = Path(config.output)
    output.mkdir(parents=True, exist_ok=True)
    log.info("Running %d cells with %d worker(s) into %s", len(grid), workers, output)

    jobs = [(cell, str(output), config.traces) for cell in grid]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell_args, jobs))
    else:
        rows = [_run_cell_args(job) for job in jobs]

    done = [row for row in rows if row["status"] == "ok"]
    failed = [row for row in rows if row["status"] != "ok"]

    runs = pd.DataFrame(done)
    if not runs.empty:
        metric_columns = [c for c in METRIC_COLUMNS if c in runs.columns]
        runs = runs[GROUP_COLUMNS + ["replication", "t_star", "val_risk"] + metric_columns]
    failures = pd.DataFrame(
        failed, columns=GROUP_COLUMNS + ["replication", "error"]
    )
    summary = summarize(runs)

    atomic_write(output / "runs.csv", runs.to_csv(index=False))
    atomic_write(output / "summary.csv", summary.to_csv(index=False))
    atomic_write(output / "failures.csv", failures.to_csv(index=False))
    log.info("%d runs done, %d failed", len(done), len(failed))

    return BenchReport(runs, summary, failures, output)


def mean_t_star(report: BenchReport, task: str, algorithm: Algorithm | str, nu: float) -> float:
    """Mean T* of one summary cell."""
    algorithm = Algorithm.parse(algorithm)
    summary = report.summary
    match = summary[
        (summary["task"] == task)
        & (summary["algorithm"] == algorithm.value)
        & np.isclose(summary["nu"], nu)
    ]
    if match.empty:
        raise error.InvalidConfigError(f"No summary cell for {task}/{algorithm.value}/nu={nu}.")
    return float(match["t_star_mean"].iloc[0])
