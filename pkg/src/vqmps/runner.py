"""Experiment configuration, dispatch, persistence and comparison."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import ortho_group

from . import __version__
from .canonical import exact_reshape, qsvd, variational_reshape
from .hamiltonian import build_xxz
from .oracle import MAX_EXACT_QUBITS, classical_dmrg, exact_ground, fidelity, full_vqe_baseline
from .simulator import StateVector
from .sweep import SweepConfig, run_vqmps
from .variational import OptimizerConfig

logger = logging.getLogger(__name__)

EXPERIMENTS = ("qsvd_fidelity", "reshape_fidelity", "vqmps", "vqe_baseline", "classical_dmrg")
MODELS = ("xxz",)
OUTPUT_ENV = "VQMPS_OUTPUT_DIR"
CSV_COLUMNS = ("experiment", "N", "J", "delta", "h", "n_chi", "seed", "repeat",
               "energy_or_fidelity", "oracle_energy", "wallclock_ms", "detail")
TIMING_FIELDS = ("wallclock_ms", "timestamp")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class RunConfig:
    experiment: str
    N: int
    model: str = "xxz"
    J: float = 1.0
    delta: float = 1.0
    h: float = 0.0
    n_chi: int = 1
    ansatz_depth: int | None = None
    learning_rate: float = 0.05
    iterations: int = 300
    sweeps: int = 20
    seed: int = 0
    repeats: int = 3
    solver: str = "vqe"
    output_path: str = "results"
    allow_any_n_chi: bool = False

    def validate(self) -> RunConfig:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment", f"must be one of {', '.join(EXPERIMENTS)}")
        if self.model not in MODELS:
            raise ConfigError("model", f"must be one of {', '.join(MODELS)}")
        low = 3 if self.experiment in ("qsvd_fidelity", "reshape_fidelity") else 2
        if not low <= self.N <= MAX_EXACT_QUBITS:
            raise ConfigError("N", f"must lie in [{low}, {MAX_EXACT_QUBITS}]")
        if not self.J > 0:
            raise ConfigError("J", "must be positive")
        for name in ("delta", "h"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(name, "must be finite")
        if self.n_chi < 1:
            raise ConfigError("n_chi", "must be at least 1")
        if self.n_chi not in (1, 2, 3) and not self.allow_any_n_chi:
            raise ConfigError("n_chi", "must be 1, 2 or 3 (set allow_any_n_chi to override)")
        if self.ansatz_depth is not None and self.ansatz_depth < 1:
            raise ConfigError("ansatz_depth", "must be at least 1")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate", "must be positive")
        for name in ("iterations", "sweeps", "repeats"):
            if getattr(self, name) < 1:
                raise ConfigError(name, "must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed", "must be non-negative")
        if self.solver not in ("vqe", "exact"):
            raise ConfigError("solver", "must be 'vqe' or 'exact'")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_ENV) or self.output_path)

    def stem(self) -> str:
        return f"{self.experiment}_N{self.N}_delta{self.delta:g}_chi{self.n_chi}_seed{self.seed}"


def _coerce(field: dataclasses.Field, raw: str):
    kind = str(field.type)
    if raw.lower() in ("none", "") and "None" in kind:
        return None
    try:
        if kind.startswith("bool"):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if kind.startswith("int"):
            return int(raw)
        if kind.startswith("float"):
            return float(raw)
    except ValueError:
        raise ConfigError(field.name, f"cannot parse {raw!r} as {kind}") from None
    return raw


def parse_config(text: str) -> RunConfig:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", "expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in fields:
            raise ConfigError(key, "unknown key")
        values[key] = _coerce(fields[key], raw)
    for required in ("experiment", "N"):
        if required not in values:
            raise ConfigError(required, "missing")
    return RunConfig(**values).validate()


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


@dataclass
class ResultRecord:
    config: dict
    outcomes: list
    summary: dict
    wallclock_ms: float
    version: str = __version__
    timestamp: float = 0.0

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> ResultRecord:
        return cls(**json.loads(text))


def random_real_state(n: int, seed) -> StateVector:
    """Normalized real Gaussian state (the RY/CNOT ansatz only reaches real states)."""
    rng = np.random.default_rng(seed)
    return StateVector.from_amplitudes(rng.normal(size=2**n))


def _qsvd_rows(cfg: RunConfig, repeat: int) -> list:
    state = random_real_state(cfg.N, cfg.seed + repeat)
    rows = []
    for n_A in range(1, cfg.N):
        start = time.perf_counter()
        res = qsvd(state, n_A, cfg.N - n_A, depth=cfg.ansatz_depth)
        rows.append(dict(value=res.recon_fidelity, oracle=None,
                         ms=1e3 * (time.perf_counter() - start), detail=f"n_A={n_A}"))
    return rows


def _reshape_rows(cfg: RunConfig, repeat: int) -> list:
    rows = []
    for n_index in range(1, cfg.N // 2 + 1):
        n_U = cfg.N - n_index
        start = time.perf_counter()
        U = ortho_group.rvs(2**n_U, random_state=cfg.seed + repeat)
        res = variational_reshape(U, depth=cfg.ansatz_depth, n_index=n_index)
        fid = fidelity(res.state, exact_reshape(U, n_index))
        rows.append(dict(value=fid, oracle=None, ms=1e3 * (time.perf_counter() - start),
                         detail=f"n_index={n_index}"))
    return rows


def _energy_row(cfg: RunConfig, repeat: int, oracle: float | None) -> list:
    h = build_xxz(cfg.N, cfg.J, cfg.delta, cfg.h)
    seed = cfg.seed + repeat
    opt = OptimizerConfig(max_iterations=cfg.iterations, learning_rate=cfg.learning_rate,
                          seed=seed)
    start = time.perf_counter()
    detail = ""
    if cfg.experiment == "vqmps":
        rep = run_vqmps(h, cfg.n_chi, config=SweepConfig(
            max_sweeps=cfg.sweeps, solver=cfg.solver, vqe=opt, vqe_depth=cfg.ansatz_depth,
            seed=seed))
        value = rep.best_energy
        detail = f"final={rep.final_energy:.12g};sweeps={rep.n_sweeps}"
    elif cfg.experiment == "vqe_baseline":
        value = full_vqe_baseline(h, opt, depth=cfg.ansatz_depth)
    else:
        value = classical_dmrg(h, 2**cfg.n_chi, seed=seed)
    return [dict(value=float(value), oracle=oracle, ms=1e3 * (time.perf_counter() - start),
                 detail=detail)]


def run(config: RunConfig, write: bool = True) -> ResultRecord:
    """Run every repeat of an experiment, then write ``<stem>.json`` and ``<stem>.csv``."""
    config.validate()
    start = time.perf_counter()
    oracle = None
    if config.experiment in ("vqmps", "vqe_baseline", "classical_dmrg"):
        oracle = exact_ground(build_xxz(config.N, config.J, config.delta, config.h))[0]
    outcomes = []
    for repeat in range(config.repeats):
        if config.experiment == "qsvd_fidelity":
            rows = _qsvd_rows(config, repeat)
        elif config.experiment == "reshape_fidelity":
            rows = _reshape_rows(config, repeat)
        else:
            rows = _energy_row(config, repeat, oracle)
        for row in rows:
            outcomes.append({
                "experiment": config.experiment, "N": config.N, "J": config.J,
                "delta": config.delta, "h": config.h, "n_chi": config.n_chi,
                "seed": config.seed + repeat, "repeat": repeat,
                "energy_or_fidelity": row["value"], "oracle_energy": row["oracle"],
                "wallclock_ms": row["ms"], "detail": row["detail"],
            })
    values = np.array([o["energy_or_fidelity"] for o in outcomes])
    summary = {"mean": float(values.mean()), "min": float(values.min()),
               "max": float(values.max())}
    record = ResultRecord(config.to_dict(), outcomes, summary,
                          1e3 * (time.perf_counter() - start), timestamp=time.time())
    if write:
        write_record(record, config)
    return record


def write_record(record: ResultRecord, config: RunConfig) -> tuple:
    out = config.output_dir()
    try:
        out.mkdir(parents=True, exist_ok=True)
        json_path = out / f"{config.stem()}.json"
        csv_path = out / f"{config.stem()}.csv"
        json_path.write_text(record.to_json() + "\n")
        with csv_path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            for row in record.outcomes:
                writer.writerow({k: ("" if row[k] is None else row[k]) for k in CSV_COLUMNS})
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return json_path, csv_path


def strip_timing(obj):
    """Copy of a JSON-like object without wall-clock fields, for determinism checks."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in TIMING_FIELDS}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def load_record(path) -> ResultRecord:
    return ResultRecord.from_json(Path(path).read_text())


def compare(records) -> list:
    """Per-(delta, n_chi) energy gaps against the VQE baseline and the exact ground energy.

    ``records`` are :class:`ResultRecord` objects or paths to their JSON files.
    """
    records = [r if isinstance(r, ResultRecord) else load_record(r) for r in records]
    if not records:
        raise ValueError("nothing to compare")
    keys = {(r.config["model"], r.config["N"]) for r in records}
    if len(keys) != 1:
        raise ValueError(f"incompatible inputs: records span model/N pairs {sorted(keys)}")
    baselines = {}
    for r in records:
        if r.config["experiment"] == "vqe_baseline":
            baselines.setdefault(r.config["delta"], []).append(r.summary["mean"])
    rows = []
    for r in records:
        cfg = r.config
        if cfg["experiment"] not in ("vqmps", "classical_dmrg"):
            continue
        base = baselines.get(cfg["delta"])
        oracle = r.outcomes[0]["oracle_energy"] if r.outcomes else None
        if base is None and oracle is None:
            continue
        energies = np.array([o["energy_or_fidelity"] for o in r.outcomes])
        rows.append({
            "experiment": cfg["experiment"], "delta": cfg["delta"], "n_chi": cfg["n_chi"],
            "energy": float(energies.mean()),
            "gap_vs_baseline": None if base is None else float(energies.mean() - np.mean(base)),
            "gap_vs_oracle": None if oracle is None else float(energies.mean() - oracle),
            "below_baseline": None if base is None else int(np.sum(energies <= np.mean(base))),
            "repeats": len(energies),
        })
    if not rows:
        raise ValueError("no comparable records: need energies with a matching baseline "
                         "or an oracle energy")
    return sorted(rows, key=lambda row: (row["experiment"], row["delta"], row["n_chi"]))


def format_table(rows: list) -> str:
    head = ("experiment", "delta", "n_chi", "energy", "gap_vs_baseline", "gap_vs_oracle",
            "below_baseline")

    def cell(v):
        if v is None:
            return "-"
        return f"{v:.6f}" if isinstance(v, float) else str(v)

    lines = ["\t".join(head)]
    lines += ["\t".join(cell(row[k]) for k in head) for row in rows]
    return "\n".join(lines)
