"""Batch command line front end.

Subcommands wire the library together over files: `simulate` writes array
CSVs, `infer` and `predict` write posterior/predictive JSON, `check` runs
the verification suites and emits one JSON report line each, `distance`
prints a metric value.  Arrays are CSV (one row per agent, symbols comma
separated, ragged permitted); structured objects are JSON; all indices in
files are 1-based.  Files are written atomically (temp file + rename).

Exit codes: 0 success, 1 a check suite failed, 2 input/validation errors,
3 inference errors (zero evidence / impossible conditioning).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from typing import Optional, Sequence

import numpy as np

from . import _bits
from ._bits import NS_CELL, NS_MAIN, NS_REPLICA_A
from .diagnostics import (
    ColumnDependentSampler,
    HierarchicalArraySampler,
    TestReport,
    convergence_curve,
    exchangeability_test,
    lln_check,
    sampler_equivalence,
)
from .errors import DomainError, InferenceError, InputError, ResourceError
from .hiermodel import (
    HierModel,
    LatentAssignment,
    ObservationArray,
    load_model_file,
    sample_hierarchical,
)
from .inference import (
    PredictiveCell,
    PredictiveQuery,
    joint_mu_posterior,
    markov_discrepancy,
    oracle_joint,
    predictive,
    row_posterior_chain,
)
from .measures import PMF, load_measure_file, prohorov_distance, total_variation
from .representation import _scalar_invcdf
from . import _kernels


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".rowex-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        _atomic_write(out, text)


def _load_json(path: str, what: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {what} file {path}: {exc}") from exc


def _read_array_csv(path: str, model: HierModel) -> ObservationArray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            content = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read data file {path}: {exc}") from exc
    rows = [line.split(",") if line else [] for line in content.splitlines()]
    if not rows:
        raise InputError(f"data file {path} is empty")
    return ObservationArray.from_labels(model.alphabet, rows)


def _array_csv(rows: list[list[str]]) -> str:
    return "\n".join(",".join(row) for row in rows) + "\n"


def _parse_cols(raw: str, rows: int) -> list[int]:
    try:
        lengths = [int(tok) for tok in raw.split(",")]
    except ValueError as exc:
        raise InputError(f"--cols must be an integer or comma list, got {raw!r}") from exc
    if len(lengths) == 1:
        lengths = lengths * rows
    if len(lengths) != rows:
        raise InputError(f"--cols lists {len(lengths)} lengths for {rows} rows")
    if any(n < 0 for n in lengths):
        raise InputError("--cols lengths must be nonnegative")
    return lengths


def _simulate_representation(model: HierModel, lengths: list[int], seed: int):
    """Ragged sampling through the representation function's streams."""
    tab = model.tables()
    a = _bits.u01(_bits.frac_at(_bits.stream_key(seed, NS_MAIN, 0), 0))
    r = _scalar_invcdf(tab.prior_cum, a, tab.prior_cum.size)
    atom_idx = []
    rows = []
    for i, n in enumerate(lengths):
        b = _bits.u01(_bits.frac_at(_bits.stream_key(seed, NS_MAIN, i + 1), 0))
        t = _scalar_invcdf(tab.gen_cum[r], b, int(tab.n_atoms[r]))
        atom_idx.append(t)
        if n == 0:
            rows.append(np.empty(0, dtype=np.int64))
        else:
            rows.append(_kernels.row_cells(seed, NS_CELL, i, n, tab.sym_cum[r, t]))
    latent = LatentAssignment(r, tuple(atom_idx))
    return latent, ObservationArray(model.alphabet, rows)


def _cmd_simulate(args) -> int:
    model = load_model_file(args.model)
    lengths = _parse_cols(args.cols, args.rows)
    if args.method == "hierarchical":
        latent, X = sample_hierarchical(model, args.rows, lengths, args.seed)
    else:
        latent, X = _simulate_representation(model, lengths, args.seed)
    _emit(_array_csv(X.label_rows()), args.out)
    if args.emit_latents:
        _atomic_write(args.emit_latents, json.dumps(latent.to_json(), indent=2) + "\n")
    return 0


def _load_given_mus(path: str) -> list[PMF]:
    data = _load_json(path, "given-mus")
    if not isinstance(data, list):
        raise InputError(f"{path}: expected a JSON list of weight lists")
    return [PMF(entry) for entry in data]


def _cmd_infer(args) -> int:
    model = load_model_file(args.model)
    X = _read_array_csv(args.data, model)
    if args.row is not None:
        fixed = _load_given_mus(args.given_mus) if args.given_mus else []
        rp = row_posterior_chain(model, X, args.row, fixed)
        payload = {"row": args.row, **rp.to_json()}
    else:
        if args.given_mus:
            raise InputError("--given-mus requires --row")
        payload = joint_mu_posterior(model, X).to_json()
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return 0


def _cmd_predict(args) -> int:
    model = load_model_file(args.model)
    X = _read_array_csv(args.data, model)
    query = PredictiveQuery.from_json(_load_json(args.query, "query"))
    p = predictive(model, X, query)
    payload = {"probability": p, "cells": query.to_json()["cells"]}
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return 0


def _suite_equivalence(model, seed, replicates) -> list[TestReport]:
    return [sampler_equivalence(model, replicates, seed)]


def _suite_exchangeability(model, seed, replicates, adversarial) -> list[TestReport]:
    if adversarial:
        sampler = ColumnDependentSampler(2, 2)
    else:
        sampler = HierarchicalArraySampler(model, 2, 2)
    return [exchangeability_test(
        sampler, sigma=[1, 0], taus=[[1, 0], [0, 1]], K=replicates, seed=seed,
    )]


def _suite_lln(model, seed) -> list[TestReport]:
    scoring = np.arange(len(model.alphabet), dtype=np.float64)
    return [lln_check(model, scoring, n=20000, seed=seed)]


def _suite_convergence(model, seed) -> list[TestReport]:
    checkpoints = (100, 1000, 10000)
    n_seeds = 25
    curves = [
        convergence_curve(model, checkpoints, _bits.subseed(seed, NS_REPLICA_A, k))
        for k in range(n_seeds)
    ]
    means = [float(np.mean([c[i][1] for c in curves]))
             for i in range(len(checkpoints))]
    # mean distance must shrink (5% slack absorbs sampling noise; models
    # with degenerate rows contribute exact zeros on both sides)
    shrinking = all(b <= a * 1.05 + 1e-12 for a, b in zip(means, means[1:]))
    final = means[-1]
    threshold = 0.05
    return [TestReport(
        "empirical-convergence", threshold, shrinking and final < threshold, seed,
        {"seeds": n_seeds, "checkpoints": list(checkpoints)},
        max_discrepancy=final,
        note="means " + " -> ".join(f"{v:.5f}" for v in means),
    )]


def _check_instance(model, seed):
    _, X = sample_hierarchical(model, 3, 3, seed)
    return X


def _suite_markov(model, seed) -> list[TestReport]:
    X = _check_instance(model, seed)
    worst = max(markov_discrepancy(model, X, m) for m in range(1, X.n_rows + 1))
    return [TestReport("markov-property", 1e-12, worst < 1e-12, seed,
                       {"rows": X.n_rows, "cols": list(X.lengths)},
                       max_discrepancy=worst)]


def _suite_oracle(model, seed) -> list[TestReport]:
    X = _check_instance(model, seed)
    oracle = oracle_joint(model, X)
    report = joint_mu_posterior(model, X)
    seen = set()
    worst = 0.0
    for r, t_tuple, _ in oracle.configurations():
        values = tuple(int(oracle.tab.value_id[r, t]) for t in t_tuple)
        if values in seen:
            continue
        seen.add(values)
        thetas = [oracle.tab.values[v] for v in values]
        want = oracle.atom_tuple_probability(thetas)
        got = report.atom_tuple_probability(thetas)
        denom = max(abs(want), 1e-300)
        worst = max(worst, abs(want - got) / denom)
    # single-cell predictives over the full alphabet must sum to one
    for i in range(X.n_rows):
        total = sum(
            predictive(model, X, PredictiveQuery((
                PredictiveCell(i + 1, X.lengths[i] + 1, (s,)),
            )))
            for s in model.alphabet.symbols
        )
        worst = max(worst, abs(total - 1.0))
    return [TestReport("oracle-equivalence", 1e-12, worst < 1e-12, seed,
                       {"rows": X.n_rows, "configurations": len(seen)},
                       max_discrepancy=worst)]


_ALL_SUITES = ("equivalence", "exchangeability", "lln", "convergence",
               "markov", "oracle")


def _cmd_check(args) -> int:
    model = load_model_file(args.model)
    selected = [name for name in _ALL_SUITES if getattr(args, name)]
    if not selected:
        selected = list(_ALL_SUITES)
    reports: list[TestReport] = []
    for name in selected:
        if name == "equivalence":
            reports += _suite_equivalence(model, args.seed, args.replicates)
        elif name == "exchangeability":
            reports += _suite_exchangeability(model, args.seed, args.replicates,
                                              args.adversarial)
        elif name == "lln":
            reports += _suite_lln(model, args.seed)
        elif name == "convergence":
            reports += _suite_convergence(model, args.seed)
        elif name == "markov":
            reports += _suite_markov(model, args.seed)
        elif name == "oracle":
            reports += _suite_oracle(model, args.seed)
    text = "".join(r.to_json_line() + "\n" for r in reports)
    _emit(text, args.out)
    return 0 if all(r.passed for r in reports) else 1


def _cmd_distance(args) -> int:
    m1 = load_measure_file(args.a)
    m2 = load_measure_file(args.b)
    if type(m1) is not type(m2):
        raise InputError("both measure files must hold the same kind of measure")
    ground = None
    if args.alphabet:
        from .measures import Alphabet

        ground = Alphabet.from_json(_load_json(args.alphabet, "alphabet"))
    if args.metric == "tv":
        if ground is not None:
            raise InputError("--alphabet only applies to --metric prohorov")
        d = total_variation(m1, m2)
    else:
        d = prohorov_distance(m1, m2, ground)
    sys.stdout.write(f"{d:.9f}\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rowex",
        description="Simulate, estimate, and run exact Bayesian inference "
                    "on row exchangeable arrays of discrete observations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample an array from a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", required=True,
                   help="columns per row: a single integer or a comma list")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("hierarchical", "representation"),
                   default="hierarchical")
    p.add_argument("--out", default=None, help="output CSV (stdout when omitted)")
    p.add_argument("--emit-latents", default=None, metavar="PATH",
                   help="also write the realized latent assignment JSON")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("infer", help="posterior over row distributions")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--row", type=int, default=None,
                   help="emit the single-row conditional for this row (1-based)")
    p.add_argument("--given-mus", default=None, metavar="PATH",
                   help="JSON list of fixed row-distribution weight lists "
                        "for rows 1..row-1")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("predict", help="probability of unobserved-cell events")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("check", help="run verification suites against a model")
    p.add_argument("--model", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicates", type=int, default=20000,
                   help="replicate arrays for the statistical suites")
    for name in _ALL_SUITES:
        p.add_argument(f"--{name}", action="store_true",
                       help=f"run the {name} suite (default: all suites)")
    p.add_argument("--adversarial", action="store_true",
                   help="swap in the designed column-dependent sampler "
                        "(the exchangeability suite must then fail)")
    p.add_argument("--out", default=None, help="report JSON lines (stdout default)")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("distance", help="distance between two measure files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--metric", choices=("prohorov", "tv"), required=True)
    p.add_argument("--alphabet", default=None,
                   help="alphabet JSON supplying the ground metric for PMFs")
    p.set_defaults(func=_cmd_distance)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, DomainError, ResourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InferenceError as exc:
        sys.stdout.write(json.dumps({"error": "zero_evidence", "message": str(exc)})
                         + "\n")
        print(f"inference error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
