"""Command line entry point: ``hamsparse <command> ...``.

Exit status is 0 on success, 1 when a verification fails, 2 for bad
arguments or configs, and 3 when a pipeline raises.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import io, nrd
from .generic import RandomPredicateSpec, sample_random_psd
from .instances import InstanceSpec, generate_instance
from .maxcsp import maxcut_predicate, stream_sparsify
from .model import Hamiltonian, Term, classical_crosscheck, verify_sparsifier
from .runner import DEFAULT_SWEEP, PIPELINES, ConfigError, ExperimentConfig, csv_text, jsonable, partition_report, run

EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_ERROR = 3


def _emit(obj: Any, out: str | None) -> None:
    text = io.write_json(jsonable(obj), out)
    if out is None or out == "-":
        sys.stdout.write(text)


def _config(path: str | None) -> dict:
    return {} if path is None else dict(io.read_json(path))


def _options(pairs: Sequence[str]) -> dict:
    out: dict = {}
    for p in pairs:
        if "=" not in p:
            raise ConfigError(f"option {p!r} is not KEY=VALUE")
        k, v = p.split("=", 1)
        try:
            out[k] = int(v)
        except ValueError:
            try:
                out[k] = float(v)
            except ValueError:
                out[k] = v
    return out


def _spec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=("pauli", "generic", "nullity1", "fullrank", "maxcut", "classical"))
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--R", type=int)
    p.add_argument("--predicates", type=int)
    p.add_argument("--weights", choices=("uniform", "random"))
    p.add_argument("--relation", help="comma-separated bit strings for the classical family")


def _spec_from(args: argparse.Namespace, base: dict, default_family: str | None = None) -> dict:
    spec = dict(base)
    for key in ("family", "n", "m", "r", "R", "predicates", "weights"):
        v = getattr(args, key, None)
        if v is not None:
            spec[key] = v
    if getattr(args, "relation", None):
        spec["relation"] = args.relation.split(",")
    if default_family and "family" not in spec:
        spec["family"] = default_family
    return spec


def cmd_gen(args: argparse.Namespace) -> int:
    cfg = _config(args.config)
    spec = _spec_from(args, cfg.get("instance", cfg))
    if args.seed is not None:
        spec["seed"] = args.seed
    if "seed" not in spec:
        raise ConfigError("seed is mandatory")
    try:
        inst = InstanceSpec(**spec)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    _emit(io.hamiltonian_to_json(generate_instance(inst)), args.out)
    return 0


def cmd_sparsify(args: argparse.Namespace) -> int:
    cfg = _config(args.config)
    cfg["pipeline"] = args.pipeline
    if args.input:
        cfg["input"] = args.input
        cfg.pop("instance", None)
    elif args.pipeline != "xor" and ("instance" in cfg or args.n is not None):
        cfg["instance"] = _spec_from(args, cfg.get("instance", {}), default_family=args.pipeline)
    if args.option:
        cfg["options"] = {**cfg.get("options", {}), **_options(args.option)}
    conf = ExperimentConfig.from_json(
        cfg, seed=args.seed, eps=args.eps, out=args.out, weights_out=args.weights_out, csv=args.csv, verify=args.verify
    )
    report = run(conf)
    if not conf.out:
        sys.stdout.write(report.text())
    return 0 if report.passed else EXIT_FAIL


def _require_eps(eps: float | None) -> float:
    if eps is None or not 0 < eps < 1:
        raise ConfigError(f"eps must lie in (0, 1), got {eps}")
    return eps


def cmd_stream(args: argparse.Namespace) -> int:
    _require_eps(args.eps)

    def events():
        for lineno, line in enumerate(sys.stdin, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) not in (2, 3):
                raise ConfigError(f"line {lineno}: expected 'u v [w]'")
            yield int(parts[0]), int(parts[1]), float(parts[2]) if len(parts) == 3 else 1.0

    G = stream_sparsify(events(), args.n, args.eps, args.seed, args.eps_inner)
    _emit(G.to_json(), args.out)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    _require_eps(args.eps)
    H = io.hamiltonian_from_json(io.read_json(args.input))
    w = io.weights_from_json(io.read_json(args.weights))
    rep = verify_sparsifier(H, w, args.eps, seed=args.seed, mode=args.verify).to_json()
    if args.classical:
        rep["classical_pass"] = classical_crosscheck(H, w, args.eps)
    _emit(rep, args.out)
    return 0 if rep["pass"] and rep.get("classical_pass", True) else EXIT_FAIL


NAMED_PREDICATES = {
    "maxcut": maxcut_predicate,
    "and2": lambda: np.diag([0.0, 0.0, 0.0, 1.0]),
    "or2": lambda: np.diag([0.0, 1.0, 1.0, 1.0]),
}


def _parts(text: str) -> list[list[int]]:
    return [[int(q) for q in block.split(",") if q.strip()] for block in text.split(";")]


def cmd_nrd(args: argparse.Namespace) -> int:
    mode = args.mode
    if mode == "certify":
        H = io.hamiltonian_from_json(io.read_json(args.input))
        cert = nrd.is_non_redundant(H)
        _emit(cert.to_json(), args.out)
        return 0
    if mode == "construct-tensor":
        parts = _parts(args.parts)
        diag = [float(x) for x in args.factor.split(",")]
        H, wit = nrd.tensor_witness_instance([np.diag(diag)] * len(parts), parts)
        cert = nrd.is_non_redundant(H)
        sizes = [len(p) for p in parts]
        _emit({"terms": H.m, "part_sizes": sizes, "expected": int(np.prod(sizes)), "certificate": cert.to_json()}, args.out)
        return 0 if cert.non_redundant else EXIT_FAIL
    if mode == "classify-2qubit":
        if args.input:
            M, _ = io.predicate_from_json(io.read_json(args.input))
        else:
            M = NAMED_PREDICATES[args.predicate]()
        u = nrd.nonsingular_search(M)
        _emit(
            {
                "class": nrd.classify_2qubit(M),
                "nonsingular_vector": None if u is None else [[float(z.real), float(z.imag)] for z in u],
                "rank1_tensor": nrd.tensor_rank1_check(M) is not None,
            },
            args.out,
        )
        return 0
    if mode == "audit-generic":
        r = args.r
        results = []
        for s in range(args.seeds):
            M = sample_random_psd(RandomPredicateSpec(r, 2 ** (r - 1) - 1, args.seed + s))
            T = tuple(range(r))
            T2 = (0,) + tuple(range(r, 2 * r - 1))
            H = Hamiltonian(2 * r - 1, (Term(T, M), Term(T2, M)))
            results.append(bool(nrd.derived_automorphism_check(H, "generic").holds))
        out = {"r": r, "seeds": args.seeds, "holds": sum(results)}
        if args.growth:
            M = sample_random_psd(RandomPredicateSpec(r, 2 ** (r - 1) - 1, args.seed))
            out["growth"] = nrd.automorphism_growth_audit(M, _parts(args.growth), args.seed).to_json()
        _emit(out, args.out)
        return 0 if all(results) and out.get("growth", {}).get("doubles", True) else EXIT_FAIL
    if mode == "project":
        if args.literals:
            R = nrd.Relation.from_strings(len(args.relation.split(",")[0]), args.relation.split(","))
            P = nrd.project_relation(R, args.literals.split(","))
            _emit({"relation": R.strings(), "literals": args.literals.split(","), "projection": P.strings()}, args.out)
            return 0
        k = args.k if args.k is not None else 2 ** (args.arity - 1) + 1
        rates = [nrd.projection_hit_rate(args.arity, k, c, args.trials, args.seed).to_json() for c in args.c]
        _emit({"rates": rates, "summary_bound": nrd.projection_summary_bound(args.arity)}, args.out)
        return 0
    raise ConfigError(f"unknown nrd mode {mode!r}")


def cmd_partition(args: argparse.Namespace) -> int:
    H = io.hamiltonian_from_json(io.read_json(args.input))
    _emit(partition_report(H), args.out)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    raw = io.read_json(args.config) if args.config else list(DEFAULT_SWEEP)
    if isinstance(raw, dict):
        raw = raw.get("runs", [raw])
    configs = [ExperimentConfig.from_json(c, seed=args.seed, eps=args.eps) for c in raw]
    rows = [run(c).csv_row() for c in configs]
    text = csv_text(rows)
    if args.out and args.out != "-":
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if all(r["pass"] for r in rows) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hamsparse", description="Sparsify and audit local Hamiltonians.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, eps: bool = True) -> None:
        p.add_argument("--config")
        p.add_argument("--seed", type=int)
        if eps:
            p.add_argument("--eps", type=float)
        p.add_argument("--out")

    p = sub.add_parser("gen", help="generate a seeded instance")
    common(p, eps=False)
    _spec_args(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sparsify", help="run a sparsification pipeline and verify it")
    p.add_argument("pipeline", choices=PIPELINES)
    common(p)
    _spec_args(p)
    p.add_argument("--input")
    p.add_argument("--weights-out")
    p.add_argument("--csv")
    p.add_argument("--verify", choices=("dense", "sampled"))
    p.add_argument("--option", action="append", default=[], metavar="KEY=VALUE")
    p.set_defaults(func=cmd_sparsify)

    p = sub.add_parser("stream-sparsify", help="one-pass MAX-CUT sparsification of 'u v [w]' lines on stdin")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps-inner", type=float)
    p.set_defaults(func=cmd_stream, seed=0)

    p = sub.add_parser("verify", help="check weights against an instance")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--verify", choices=("auto", "dense", "sampled"), default="auto")
    p.add_argument("--classical", action="store_true", help="also run the exhaustive classical check")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("nrd", help="non-redundancy tools")
    p.add_argument("mode", choices=("certify", "construct-tensor", "classify-2qubit", "audit-generic", "project"))
    common(p, eps=False)
    p.add_argument("--input")
    p.add_argument("--parts", default="0,1,2;3,4,5")
    p.add_argument("--factor", default="0,1", help="diagonal of the unary factor")
    p.add_argument("--predicate", choices=sorted(NAMED_PREDICATES), default="maxcut")
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--growth", help="parts for the group-growth audit, e.g. '0,1,2;3,4,5;6,7'")
    p.add_argument("--relation", default="001,101,111")
    p.add_argument("--literals")
    p.add_argument("--arity", type=int, default=6)
    p.add_argument("--k", type=int)
    p.add_argument("--c", type=int, nargs="+", default=[0, 1, 2, 3])
    p.add_argument("--trials", type=int, default=500)
    p.set_defaults(func=cmd_nrd)

    p = sub.add_parser("partition", help="peel an instance into r-partite pieces")
    common(p, eps=False)
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("bench", help="CSV of support and runtime over a set of configs")
    common(p)
    p.set_defaults(func=cmd_bench)
    return ap


def _provenance(exc: BaseException) -> str:
    frames = traceback.extract_tb(exc.__traceback__)
    for fr in reversed(frames):
        path = Path(fr.filename)
        if path.parent.name == "hamsparse":
            return f"hamsparse.{path.stem}"
    return "hamsparse"


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is None and args.command in ("nrd", "verify"):
        args.seed = 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"error [{_provenance(exc)}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
