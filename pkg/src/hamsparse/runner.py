"""Experiment configs, pipeline dispatch, and deterministic run reports."""

from __future__ import annotations

import csv
import io as _io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import io
from .generic import sparsify_generic
from .instances import InstanceSpec, generate_instance, graph_of
from .maxcsp import sparsify_shifted, transfer_check
from .model import Hamiltonian, SparsifierWeights, dense_cap, verify_sparsifier
from .nullity1 import sparsify_fullrank, sparsify_nullity1
from .partition import peel_partition
from .pauli import sparsify_pauli
from .xorsparse import MAX_VARS, XorInstance, sparsify_xor_unbiased, xor_report

PIPELINES = ("pauli", "generic", "nullity1", "fullrank", "maxcut", "xor")
VERIFY_MODES = ("dense", "sampled")
SAMPLED_CAP = 16
BENCH_COLUMNS = ("family", "n", "m", "eps", "seed", "support", "pass", "millis")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    pipeline: str
    eps: float
    seed: int
    instance: InstanceSpec | None = None
    input: str | None = None
    verify: str = "dense"
    options: Mapping[str, Any] = field(default_factory=dict)
    out: str | None = None
    weights_out: str | None = None
    csv: str | None = None

    def __post_init__(self) -> None:
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"unknown pipeline {self.pipeline!r}; choose from {', '.join(PIPELINES)}")
        if not isinstance(self.eps, (int, float)) or not 0 < self.eps < 1:
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if self.verify not in VERIFY_MODES:
            raise ConfigError(f"verify must be one of {', '.join(VERIFY_MODES)}, got {self.verify!r}")
        if (self.instance is None) == (self.input is None):
            raise ConfigError("give exactly one of an instance spec or an input path")
        if self.pipeline == "xor" and self.instance is not None:
            raise ConfigError("the xor pipeline reads its instance from an input file")
        if self.instance is not None:
            self._check_size(self.instance.n)

    def _check_size(self, n: int) -> None:
        if self.pipeline == "xor":
            cap = MAX_VARS
        elif self.verify == "dense" or self.pipeline == "maxcut":
            cap = dense_cap()
        else:
            cap = SAMPLED_CAP
        if n > cap:
            raise ConfigError(f"n={n} exceeds the {self.pipeline} cap of {cap} qubits for {self.verify} verification")

    @classmethod
    def from_json(cls, data: Mapping[str, Any], **overrides: Any) -> "ExperimentConfig":
        d = dict(data)
        d.update({k: v for k, v in overrides.items() if v is not None})
        if "seed" not in d:
            raise ConfigError("seed is mandatory")
        known = {"pipeline", "eps", "seed", "instance", "input", "verify", "options", "out", "weights_out", "csv"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
        inst = d.get("instance")
        if isinstance(inst, Mapping):
            spec = dict(inst)
            spec.setdefault("seed", d["seed"])
            try:
                d["instance"] = InstanceSpec(**spec)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"instance: {exc}") from None
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_json(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "eps": self.eps,
            "seed": self.seed,
            "instance": None if self.instance is None else self.instance.to_json(),
            "input": self.input,
            "verify": self.verify,
            "options": dict(self.options),
        }


@dataclass
class RunReport:
    data: dict
    millis: float

    @property
    def passed(self) -> bool:
        return bool(self.data["verification"]["pass"])

    def text(self) -> str:
        return io.dumps(self.data)

    def csv_row(self) -> dict:
        cfg = self.data["config"]
        return {
            "family": self.data["family"],
            "n": self.data["n"],
            "m": self.data["m"],
            "eps": cfg["eps"],
            "seed": cfg["seed"],
            "support": self.data["support"],
            "pass": int(self.passed),
            "millis": round(self.millis, 3),
        }


def jsonable(x: Any) -> Any:
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(x, Mapping):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if x is None or isinstance(x, str):
        return x
    if hasattr(x, "to_json"):
        return jsonable(x.to_json())
    return str(x)


def load_instance(cfg: ExperimentConfig) -> Hamiltonian | XorInstance:
    if cfg.instance is not None:
        return generate_instance(cfg.instance)
    data = io.read_json(cfg.input)  # type: ignore[arg-type]
    obj: Hamiltonian | XorInstance = io.xor_from_json(data) if cfg.pipeline == "xor" else io.hamiltonian_from_json(data)
    cfg._check_size(obj.n)
    return obj


def _verification(H: Hamiltonian, w: SparsifierWeights, cfg: ExperimentConfig) -> dict:
    return verify_sparsifier(H, w, cfg.eps, seed=cfg.seed, mode=cfg.verify).to_json()


def _run_pipeline(obj, cfg: ExperimentConfig) -> tuple[SparsifierWeights, dict, dict]:
    opts = dict(cfg.options)
    eps, seed = cfg.eps, cfg.seed
    diag: dict = {}
    if cfg.pipeline == "xor":
        w = sparsify_xor_unbiased(obj, eps, seed, diagnostics=diag, **opts)
        return w, xor_report(obj, w, eps).to_json(), diag
    H: Hamiltonian = obj
    if cfg.pipeline == "pauli":
        w = sparsify_pauli(H, eps, seed, diagnostics=diag)
        diag["partition_pieces"] = diag.get("pieces")
    elif cfg.pipeline == "generic":
        w = sparsify_generic(H, eps, seed, diagnostics=diag, **opts)
    elif cfg.pipeline == "nullity1":
        w = sparsify_nullity1(H, eps, seed, diagnostics=diag, **opts)
    elif cfg.pipeline == "fullrank":
        w = sparsify_fullrank(H, eps, seed, diagnostics=diag, **opts)
    else:
        return _run_maxcut(H, cfg)
    return w, _verification(H, w, cfg), diag


def _run_maxcut(H: Hamiltonian, cfg: ExperimentConfig) -> tuple[SparsifierWeights, dict, dict]:
    graph_of(H)
    eps_inner = cfg.options.get("eps_inner", cfg.eps / 200)
    res = sparsify_shifted(H, cfg.eps, cfg.seed, eps_inner)
    cert = transfer_check(H, res.weights, cfg.eps, cfg.seed)
    lo, hi = res.sandwich if res.sandwich is not None else (math.nan, math.nan)
    ver = {
        "pass": bool(cert.holds and res.sandwich is not None),
        "epsilon": cfg.eps,
        "eps_inner": res.eps_inner,
        "lambda_min_slack": lo,
        "lambda_max_slack": hi,
        "support_size": res.weights.support,
        "mode": "shifted-sandwich+transfer",
        "transfer": {
            "opt_original": cert.opt_original,
            "opt_sparse": cert.opt_sparse,
            "tested_states": cert.tested_states,
            "worst_ratio": cert.worst_ratio,
        },
    }
    return res.weights, ver, {"attempts": res.attempts}


def run(cfg: ExperimentConfig) -> RunReport:
    """Load, sparsify, verify, and persist. Timings stay out of the JSON report."""
    t0 = time.perf_counter()
    obj = load_instance(cfg)
    w, ver, diag = _run_pipeline(obj, cfg)
    millis = (time.perf_counter() - t0) * 1000
    m = obj.m
    data = jsonable(
        {
            "config": cfg.to_json(),
            "family": cfg.instance.family if cfg.instance is not None else cfg.pipeline,
            "n": obj.n,
            "m": m,
            "support": w.support,
            "total_weight": w.total,
            "verification": ver,
            "audits": diag,
            "weights": w.to_json(),
        }
    )
    report = RunReport(data, millis)
    if cfg.out:
        io.write_json(report.data, cfg.out)
    if cfg.weights_out:
        io.write_json(w.to_json(), cfg.weights_out)
    if cfg.csv:
        append_csv(cfg.csv, [report.csv_row()])
    return report


def csv_text(rows: Sequence[Mapping[str, Any]], header: bool = True) -> str:
    buf = _io.StringIO()
    wr = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    if header:
        wr.writeheader()
    wr.writerows(rows)
    return buf.getvalue()


def append_csv(path: str | Path, rows: Sequence[Mapping[str, Any]]) -> None:
    p = Path(path)
    new = not p.exists() or p.stat().st_size == 0
    with p.open("a") as fh:
        fh.write(csv_text(rows, header=new))


DEFAULT_SWEEP = (
    {"pipeline": "pauli", "eps": 0.25, "seed": 0, "instance": {"family": "pauli", "n": 8, "m": 120, "r": 2, "weights": "random"}},
    {"pipeline": "generic", "eps": 0.35, "seed": 0, "instance": {"family": "generic", "n": 8, "m": 120, "r": 2, "R": 3}},
    {"pipeline": "nullity1", "eps": 0.4, "seed": 0, "instance": {"family": "nullity1", "n": 6, "m": 40, "r": 2}},
)


def bench(configs: Sequence[ExperimentConfig]) -> list[RunReport]:
    return [run(c) for c in configs]


def partition_report(H: Hamiltonian) -> dict:
    deco = peel_partition(H.tuples, None, H.n)
    return jsonable({**deco.to_json(), "potentials": [list(t.potential_values) for t in deco.traces]})


__all__ = [
    "BENCH_COLUMNS",
    "ConfigError",
    "DEFAULT_SWEEP",
    "ExperimentConfig",
    "PIPELINES",
    "RunReport",
    "bench",
    "csv_text",
    "jsonable",
    "partition_report",
    "run",
]
