"""Command line interface.

Subcommands cover the full pipeline: ``synth`` writes a synthetic dataset,
``fit`` fits the Gaussian category model, ``classify`` reports optimal
sets for new observations under a reward specification, ``tune`` runs the
leave-one-out cost selection, and ``conformal`` calibrates the cost whose
sets miss the truth a prescribed fraction of the time.

Exit codes: 0 on success, 2 for malformed inputs (bad file schemas or
unparseable values), 3 for incompatible dimensions or out-of-range
arguments, 4 for violated cross-validation preconditions.  All sampling is
driven by explicit ``--seed`` values and repeated runs write byte
identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .classifiers import brute_force_optimal, optimal_set
from .core import PosteriorVector
from .dataset import (
    format_float,
    generate_rows,
    load_dataset,
    load_generator_spec,
    write_dataset,
)
from .errors import (
    CategoryTooSmall,
    EmptyCategory,
    NoFeasibleB,
    OutOfRange,
    SchemaError,
    SetBayesError,
)
from .gaussian import (
    GaussianCategoryModel,
    calibrate_conformal_cost,
    conformal_coverage,
    fit,
    model_from_json,
    model_to_json,
    posterior_matrix,
)
from .rewards import BinaryReward, reward_spec_from_json
from .tuning import (
    CVConfig,
    WeightScheme,
    evaluate_curves,
    loocv_posteriors,
    make_weights,
    select_b_minimize,
    select_b_threshold,
)


def _err(message) -> None:
    print(f"error: {message}", file=sys.stderr)


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON in {path}: {exc}") from None


def _parse_reward(text: str):
    """(specification, raw JSON object) from a literal or an @file reference."""
    if text.startswith("@"):
        obj = _read_json(text[1:])
    else:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid reward JSON: {exc}") from None
    try:
        return reward_spec_from_json(obj), obj
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def _resolve_prior(text: str, counts) -> np.ndarray:
    """Prior weights from 'flat', 'prop', or an explicit JSON list."""
    n = len(counts)
    if text == "flat":
        return np.full(n, 1.0 / n)
    if text == "prop":
        total = sum(counts)
        return np.asarray(counts, dtype=float) / total
    try:
        values = json.loads(text)
    except json.JSONDecodeError:
        raise OutOfRange(
            f"prior must be 'flat', 'prop', or a JSON list, got {text!r}"
        ) from None
    arr = np.asarray(values, dtype=float)
    if arr.shape != (n,):
        raise OutOfRange(f"prior has {arr.size} entries, model has {n} categories")
    return arr


class _ModelFile:
    """The on-disk bundle: fitted model plus label bookkeeping."""

    def __init__(self, obj: dict):
        if not isinstance(obj, dict) or obj.get("format") != "setbayes-model-file":
            raise SchemaError("not a setbayes model file")
        try:
            self.model: GaussianCategoryModel = model_from_json(obj["model"])
            self.labels = tuple(str(s) for s in obj["labels"])
            names = obj.get("block_names")
            self.block_names = tuple(str(s) for s in names) if names else None
            self.feature_names = tuple(str(s) for s in obj["feature_names"])
            self.counts = tuple(int(c) for c in obj["counts"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed model file: {exc}") from None
        if len(self.labels) != self.model.n_categories:
            raise SchemaError("label list does not match the model's categories")


def _read_observations(path, feature_names) -> np.ndarray:
    """Numeric matrix of the named feature columns from a CSV file."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = None
        for row in reader:
            if row and row[0].lstrip().startswith("#"):
                continue
            header = [h.strip() for h in row]
            break
        if header is None:
            raise SchemaError("empty file; expected a header row")
        try:
            cols = [header.index(name) for name in feature_names]
        except ValueError:
            missing = sorted(set(feature_names) - set(header))
            raise SchemaError(f"missing feature column(s): {', '.join(missing)}") from None
        rows = []
        for row in reader:
            lineno = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise SchemaError(
                    f"line {lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                rows.append([float(row[c]) for c in cols])
            except ValueError as exc:
                raise SchemaError(f"line {lineno}: {exc}") from None
    if not rows:
        raise SchemaError("no observation rows")
    return np.asarray(rows, dtype=float)


def _cmd_synth(args) -> int:
    categories, feature_names = load_generator_spec(args.spec)
    rows, labels, blocks = generate_rows(categories, args.seed)
    metadata = {
        "command": "synth",
        "seed": args.seed,
        "categories": [
            {"label": c.label, "block": c.block, "count": c.count}
            for c in categories
        ],
    }
    write_dataset(args.out, feature_names, rows, labels, blocks, metadata)
    print(f"wrote {rows.shape[0]} rows x {rows.shape[1]} features to {args.out}")
    return 0


def _cmd_fit(args) -> int:
    loaded = load_dataset(args.data)
    model = fit(loaded.data, None, args.draws, args.seed, loaded.space)
    wrapper = {
        "format": "setbayes-model-file",
        "model": model_to_json(model),
        "labels": list(loaded.labels),
        "block_names": list(loaded.block_names) if loaded.block_names else None,
        "feature_names": list(loaded.feature_names),
        "counts": list(loaded.counts),
        "config": {"command": "fit", "draws": args.draws, "seed": args.seed},
    }
    _write_json(args.out, wrapper)
    print(f"{'category':>8}  {'label':<20}  {'block':<12}  {'count':>6}")
    for i, label in enumerate(loaded.labels, start=1):
        block = (
            loaded.block_names[loaded.space.block_of(i) - 1]
            if loaded.block_names
            else "-"
        )
        print(f"{i:>8}  {label:<20}  {block:<12}  {loaded.counts[i - 1]:>6}")
    print(f"model written to {args.out}")
    return 0


def _cmd_classify(args) -> int:
    bundle = _ModelFile(_read_json(args.model))
    spec, reward_obj = _parse_reward(args.reward)
    prior = _resolve_prior(args.prior, bundle.counts)
    points = _read_observations(args.data, bundle.feature_names)
    model = bundle.model
    post = posterior_matrix(model, prior, points)
    header = (
        ["row"]
        + [f"p_{label}" for label in bundle.labels]
        + ["set", "set_size", "value"]
        + (["oracle_value"] if args.oracle else [])
    )
    metadata = {
        "command": "classify",
        "reward": reward_obj,
        "prior": args.prior,
        "model_seed": model.seed,
        "model_draws": model.n_draws,
    }
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(metadata, sort_keys=True) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in range(points.shape[0]):
            pv = PosteriorVector(post[r], model.space)
            chosen, value = optimal_set(spec, pv)
            record = (
                [str(r + 1)]
                + [format_float(v) for v in pv.p]
                + [
                    ";".join(bundle.labels[i - 1] for i in chosen),
                    str(chosen.size),
                    format_float(value),
                ]
            )
            if args.oracle:
                record.append(format_float(brute_force_optimal(spec, pv).value))
            writer.writerow(record)
    print(f"classified {points.shape[0]} observations -> {args.out}")
    return 0


_VARIANTS = {
    "R1": BinaryReward.EXACT_SINGLETON,
    "R2": BinaryReward.WITHIN_BLOCK,
    "R3": BinaryReward.CONTAINS_TRUTH,
    "R4": BinaryReward.HITS_TRUE_BLOCK,
}


def _cmd_tune(args) -> int:
    loaded = load_dataset(args.data)
    prior = _resolve_prior(args.prior, loaded.counts)
    real_prior = None
    if args.real_prior is not None:
        real_prior = tuple(json.loads(args.real_prior))
    scheme = WeightScheme(args.weights, real_prior)
    weights = make_weights(scheme, loaded.counts)
    held = loocv_posteriors(
        loaded.data,
        loaded.space,
        prior,
        None,
        args.draws,
        args.seed,
        threads=args.threads,
    )

    def config(variant: BinaryReward) -> CVConfig:
        return CVConfig(
            args.epsilon,
            args.delta,
            scheme,
            variant,
            args.grid_lo,
            args.grid_hi,
            args.grid_step,
            args.draws,
            args.seed,
        )

    report = evaluate_curves(
        config(BinaryReward.CONTAINS_TRUTH), None, loaded.space, prior, weights, held=held
    )
    metadata = {
        "command": "tune",
        "epsilon": args.epsilon,
        "delta": args.delta,
        "weights": args.weights,
        "real_prior": list(real_prior) if real_prior else None,
        "prior": args.prior,
        "grid": [args.grid_lo, args.grid_hi, args.grid_step],
        "draws": args.draws,
        "seed": args.seed,
        "labels": list(loaded.labels),
        "block_names": list(loaded.block_names) if loaded.block_names else None,
        "counts": list(loaded.counts),
    }
    with open(args.out_curve, "w", newline="", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(metadata, sort_keys=True) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["b", "rate_R1", "rate_R2", "rate_R3", "rate_R4"])
        for row in report.rate_rows():
            writer.writerow([format_float(v) for v in row])

    selections: dict[str, dict] = {"threshold": {}, "minimize": {}}
    for name in ("R3", "R4"):
        cfg = config(_VARIANTS[name])
        try:
            sel = select_b_threshold(cfg, report)
            selections["threshold"][name] = {
                "selected_b": sel.cost,
                "within_cost": args.epsilon * sel.cost,
                "non_reward_rate": sel.non_reward_rate,
                "at_grid_top": sel.at_grid_top,
                "display": sel.display(),
            }
            print(f"{name} threshold rule: b = {sel.display()} "
                  f"(non-reward {sel.non_reward_rate:.4f})")
        except NoFeasibleB as exc:
            selections["threshold"][name] = {"selected_b": None, "note": str(exc)}
            print(f"{name} threshold rule: no feasible cost ({exc})")
    for name in ("R1", "R2"):
        cfg = config(_VARIANTS[name])
        sel = select_b_minimize(cfg, report, held, weights)
        selections["minimize"][name] = {
            "selected_b": sel.cost,
            "within_cost": args.epsilon * sel.cost,
            "non_reward_rate": sel.non_reward_rate,
            "refined": sel.refined,
        }
        print(f"{name} minimum rule:   b = {sel.cost:.4f} "
              f"(non-reward {sel.non_reward_rate:.4f})")
    _write_json(args.out_selection, {"config": metadata, "selection": selections})
    print(f"curve -> {args.out_curve}\nselection -> {args.out_selection}")
    return 0


def _cmd_conformal(args) -> int:
    bundle = _ModelFile(_read_json(args.model))
    prior = _resolve_prior(args.prior, bundle.counts)
    cost = calibrate_conformal_cost(
        bundle.model, prior, args.delta, args.samples, args.seed
    )
    print(f"conformal cost: {format_float(cost)}")
    report = {
        "config": {
            "command": "conformal",
            "delta": args.delta,
            "samples": args.samples,
            "seed": args.seed,
            "prior": args.prior,
            "model_seed": bundle.model.seed,
            "model_draws": bundle.model.n_draws,
        },
        "cost": cost,
    }
    if args.audit:
        coverage = conformal_coverage(
            bundle.model, prior, cost, args.audit_samples, args.seed
        )
        print(f"fresh-sample coverage: {format_float(coverage)}")
        report["config"]["audit_samples"] = args.audit_samples
        report["coverage"] = coverage
    if args.out:
        _write_json(args.out, report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="setbayes",
        description="Set-valued Bayes classification with partial reject options.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic Gaussian dataset CSV")
    p.add_argument("--spec", required=True, help="generator spec JSON file")
    p.add_argument("--out", required=True, help="output dataset CSV")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("fit", help="fit the Gaussian category model to a dataset")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--out", required=True, help="output model JSON")
    p.add_argument("--draws", type=int, default=1000, help="Monte Carlo draws per category")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("classify", help="optimal sets for new observations")
    p.add_argument("--model", required=True, help="model JSON from fit")
    p.add_argument("--data", required=True, help="observations CSV")
    p.add_argument("--reward", required=True,
                   help="reward spec JSON literal or @file")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--prior", default="prop",
                   help="'flat', 'prop' (training counts), or a JSON list")
    p.add_argument("--oracle", action="store_true",
                   help="add the exhaustive-search value column")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("tune", help="leave-one-out tuning of the cost parameters")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--out-curve", required=True, help="output rate-curve CSV")
    p.add_argument("--out-selection", required=True, help="output selection JSON")
    p.add_argument("--epsilon", type=float, default=1.0,
                   help="within cost as a multiple of the cross cost")
    p.add_argument("--delta", type=float, default=0.05,
                   help="non-reward bound for the threshold rule")
    p.add_argument("--weights", default="per_observation",
                   choices=["per_observation", "per_category", "rarity"])
    p.add_argument("--real-prior", default=None,
                   help="JSON list of real-world frequencies (rarity weights)")
    p.add_argument("--prior", default="prop")
    p.add_argument("--grid-lo", type=float, default=0.05)
    p.add_argument("--grid-hi", type=float, default=5.0)
    p.add_argument("--grid-step", type=float, default=0.05)
    p.add_argument("--draws", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("conformal", help="calibrate the coverage-controlling cost")
    p.add_argument("--model", required=True, help="model JSON from fit")
    p.add_argument("--delta", type=float, required=True,
                   help="target miss probability in (0, 1)")
    p.add_argument("--prior", default="prop")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--audit", action="store_true",
                   help="estimate coverage on a fresh sample")
    p.add_argument("--audit-samples", type=int, default=10000)
    p.add_argument("--out", default=None, help="optional JSON report")
    p.set_defaults(func=_cmd_conformal)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SchemaError as exc:
        _err(exc)
        return 2
    except ValueError as exc:
        _err(exc)
        return 2
    except (CategoryTooSmall, EmptyCategory) as exc:
        _err(exc)
        return 4
    except OSError as exc:
        _err(exc)
        return 3
    except SetBayesError as exc:
        _err(exc)
        return 3


def entry_point() -> None:  # pragma: no cover
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    entry_point()
