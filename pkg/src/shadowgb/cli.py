"""Command-line entry point: ``shadowgb {run,fit,predict,sweep-theta}``.

Exit status is 0 on success, 1 when data or a model file cannot be used and
2 for invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .benchmarks import available, resolve
from .classifier import REGIONS, UNCERTAIN, ShadowClassifier, fit
from .data import Dataset, MinMaxScaling
from .errors import ConfigurationError, ContractViolation, DatasetError, DatasetParseError
from .evaluation import CostMatrix, run_experiment, theta_grid_search
from .granulation import write_trace
from .granular_ball import SPLIT_METHODS

CLASSIFIER_FLAGS = {"shadow3wc": "shadow_3wc", "gbknn": "gbknn_baseline"}
SPLIT_FLAGS = {m.replace("_", "-"): m for m in SPLIT_METHODS}

DEFAULTS = {
    "classifier": "shadow3wc",
    "theta": 0.5,
    "sigma": 1.0,
    "alpha_step": 0.005,
    "split": "two-means",
    "noise": [0.0],
    "folds": 10,
    "seed": 0,
    "cost_correct": 0.0,
    "cost_wrong": 10.0,
    "cost_defer": 2.0,
    "jobs": 1,
    "trace": False,
    "thetas": [round(0.1 * k, 1) for k in range(1, 10)],
}


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    # defaults stay None so config-file values can be told apart from flags
    p.add_argument("--config", type=Path, help="JSON file with option values; flags take precedence")
    p.add_argument("--dataset", help="CSV/LIBSVM path or a benchmark name (see --list-datasets)")
    p.add_argument("--theta", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--alpha-step", type=float, dest="alpha_step")
    p.add_argument("--split", choices=sorted(SPLIT_FLAGS))
    p.add_argument("--seed", type=int)
    p.add_argument("--trace", action="store_true", default=None, help="write one JSON line per generation split")


def _experiment(p: argparse.ArgumentParser) -> None:
    p.add_argument("--classifier", choices=sorted(CLASSIFIER_FLAGS))
    p.add_argument("--noise", type=_float_list, help="comma-separated training label-noise rates")
    p.add_argument("--folds", type=int)
    p.add_argument("--cost-correct", type=float, dest="cost_correct")
    p.add_argument("--cost-wrong", type=float, dest="cost_wrong")
    p.add_argument("--cost-defer", type=float, dest="cost_defer")
    p.add_argument("--jobs", type=int, help="worker processes for folds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shadowgb", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--list-datasets", action="store_true", help="print known dataset names and exit")
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="cross-validated experiment, one report per noise rate")
    _common(run)
    _experiment(run)
    run.add_argument("--out", type=Path, help="output directory (default: results)")

    fitp = sub.add_parser("fit", help="fit on a whole dataset and save the classifier as JSON")
    _common(fitp)
    fitp.add_argument("--model", type=Path, required=True)

    pred = sub.add_parser("predict", help="classify the rows of a CSV with a saved classifier")
    pred.add_argument("--model", type=Path, required=True)
    pred.add_argument("--queries", type=Path, required=True, help="CSV of feature rows, no label column")
    pred.add_argument("--has-header", action="store_true")

    sweep = sub.add_parser("sweep-theta", help="experiment per theta; CSV table plus recommended theta")
    _common(sweep)
    _experiment(sweep)
    sweep.add_argument("--thetas", type=_float_list)
    sweep.add_argument("--out", type=Path, help="CSV file (default: stdout)")
    return parser


def _flatten(doc: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in doc.items():
        key = f"{prefix}{k}".replace("-", "_")
        if isinstance(v, dict):
            out.update(_flatten(v, key + "_"))
        else:
            out[key] = v
    return out


def resolve_options(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    opts = dict(DEFAULTS)
    if getattr(args, "config", None) is not None:
        try:
            doc = json.loads(args.config.read_text())
        except OSError as exc:
            raise DatasetError(f"cannot read config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ConfigurationError(f"{args.config}: expected a JSON object")
        # a "costs" section maps onto cost_* keys
        opts.update(_flatten({("cost" if k == "costs" else k): v for k, v in doc.items()}))
    opts.update({k: v for k, v in vars(args).items() if v is not None and k != "config"})
    if isinstance(opts.get("noise"), (int, float)):
        opts["noise"] = [opts["noise"]]
    if isinstance(opts.get("noise"), str):
        opts["noise"] = _float_list(opts["noise"])
    if isinstance(opts.get("thetas"), str):
        opts["thetas"] = _float_list(opts["thetas"])
    return opts


def _validate(opts: dict, needs_dataset: bool = True) -> None:
    if needs_dataset and not opts.get("dataset"):
        raise ConfigurationError("--dataset is required")
    if not 0.0 <= opts["theta"] <= 1.0:
        raise ConfigurationError(f"--theta must lie in [0, 1], got {opts['theta']}")
    if opts["sigma"] <= 0:
        raise ConfigurationError(f"--sigma must be positive, got {opts['sigma']}")
    if not 0.0 < opts["alpha_step"] <= 0.1:
        raise ConfigurationError(f"--alpha-step must lie in (0, 0.1], got {opts['alpha_step']}")
    if opts["split"] not in SPLIT_FLAGS:
        raise ConfigurationError(f"--split must be one of {sorted(SPLIT_FLAGS)}")
    if opts["classifier"] not in CLASSIFIER_FLAGS:
        raise ConfigurationError(f"--classifier must be one of {sorted(CLASSIFIER_FLAGS)}")
    if not opts["noise"]:
        raise ConfigurationError("--noise needs at least one rate")
    for r in opts["noise"]:
        if not 0.0 <= r <= 1.0:
            raise ConfigurationError(f"noise rate {r} outside [0, 1]")
    if opts["folds"] < 2:
        raise ConfigurationError(f"--folds must be at least 2, got {opts['folds']}")
    if opts["jobs"] < 1:
        raise ConfigurationError(f"--jobs must be at least 1, got {opts['jobs']}")


def _costs(opts) -> CostMatrix:
    return CostMatrix(opts["cost_correct"], opts["cost_wrong"], opts["cost_defer"])


def _noise_tag(rate: float) -> str:
    return f"{rate:g}".replace(".", "p")


def cmd_run(opts: dict) -> int:
    _validate(opts)
    costs = _costs(opts)
    ds = resolve(opts["dataset"])
    out = Path(opts.get("out") or "results")
    out.mkdir(parents=True, exist_ok=True)
    kind = CLASSIFIER_FLAGS[opts["classifier"]]
    sections = []
    for rate in opts["noise"]:
        report = run_experiment(
            ds,
            rate,
            opts["theta"],
            opts["folds"],
            opts["seed"],
            costs,
            kind,
            sigma=opts["sigma"],
            alpha_step=opts["alpha_step"],
            split_method=SPLIT_FLAGS[opts["split"]],
            jobs=opts["jobs"],
            trace_dir=out if opts["trace"] else None,
        )
        stem = f"{ds.name or 'dataset'}_{opts['classifier']}_noise{_noise_tag(rate)}"
        (out / f"{stem}.csv").write_text(report.to_csv())
        doc = report.to_dict()
        doc["config"]["dataset_spec"] = str(opts["dataset"])
        doc["config"]["jobs"] = opts["jobs"]
        sections.append(doc)
        a = report.aggregate
        print(
            f"noise={rate:g} accuracy={a['accuracy']:.4f} precision={a['precision']:.4f} "
            f"recall={a['recall']:.4f} f1={a['f1']:.4f} ur={a['ur']:.4f} cost={a['cost']:.4f} "
            f"balls={a['ball_count']:.1f}"
        )
    report_path = out / f"{ds.name or 'dataset'}_{opts['classifier']}.json"
    report_path.write_text(json.dumps({"reports": sections}, indent=1, sort_keys=True) + "\n")
    print(f"wrote {report_path}")
    return 0


def cmd_fit_save(opts: dict, model_path: Path) -> int:
    _validate(opts)
    ds = resolve(opts["dataset"])
    if ds.class_count < 2:
        raise ConfigurationError("classification needs at least two classes")
    scaling = MinMaxScaling.fit(ds.features)
    train = Dataset(
        scaling.apply(ds.features), ds.labels, ds.class_count, normalized=True, label_names=ds.label_names, name=ds.name
    )
    clf = fit(
        train,
        opts["theta"],
        opts["sigma"],
        alpha_step=opts["alpha_step"],
        split_method=SPLIT_FLAGS[opts["split"]],
        seed=opts["seed"],
        scaling=scaling,
    )
    clf.save(model_path)
    if opts["trace"]:
        trace_path = model_path.with_suffix(".trace.jsonl")
        with open(trace_path, "w") as fh:
            write_trace(clf.space.history, fh)
    print(f"{len(clf)} balls from {ds.n} samples -> {model_path}")
    return 0


def load_queries(path: Path, has_header: bool = False) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if has_header and lineno == 1:
                continue
            if not rec or all(not v.strip() for v in rec):
                continue
            try:
                rows.append([float(v) for v in rec])
            except ValueError:
                raise DatasetParseError(path, lineno, "non-numeric value") from None
            if len(rows[-1]) != len(rows[0]):
                raise DatasetParseError(path, lineno, f"expected {len(rows[0])} fields, found {len(rows[-1])}")
    if not rows:
        return np.zeros((0, 0))
    return np.asarray(rows)


def cmd_predict(model_path: Path, query_path: Path, has_header: bool = False, out=None) -> int:
    out = out or sys.stdout
    clf = ShadowClassifier.load(model_path)
    X = load_queries(query_path, has_header)
    if X.size == 0:
        return 0
    if X.shape[1] != clf.dimension:
        raise ConfigurationError(f"queries have {X.shape[1]} features, model expects {clf.dimension}")
    pred = clf.predict_raw(X)
    for i, (label, region) in enumerate(zip(pred.labels, pred.regions)):
        name = "UNCERTAIN" if label == UNCERTAIN else clf.label_names[label]
        out.write(f"{i},{name},{REGIONS[region]}\n")
    return 0


def cmd_sweep_theta(opts: dict, thetas) -> int:
    _validate(opts)
    if not thetas:
        raise ConfigurationError("theta grid is empty")
    if len(opts["noise"]) != 1:
        raise ConfigurationError("sweep-theta takes a single --noise rate")
    costs = _costs(opts)
    ds = resolve(opts["dataset"])
    search = theta_grid_search(
        ds,
        thetas,
        opts["noise"][0],
        opts["folds"],
        opts["seed"],
        costs=costs,
        classifier_kind=CLASSIFIER_FLAGS[opts["classifier"]],
        sigma=opts["sigma"],
        alpha_step=opts["alpha_step"],
        split_method=SPLIT_FLAGS[opts["split"]],
        jobs=opts["jobs"],
    )
    text = search.to_csv()
    if opts.get("out"):
        Path(opts["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_datasets:
        print("\n".join(available()))
        return 0
    if args.command is None:
        parser.print_help()
        return 2
    try:
        if args.command == "predict":
            return cmd_predict(args.model, args.queries, args.has_header)
        opts = resolve_options(args)
        if args.command == "run":
            return cmd_run(opts)
        if args.command == "fit":
            return cmd_fit_save(opts, args.model)
        return cmd_sweep_theta(opts, opts["thetas"])
    except (ConfigurationError, ContractViolation) as exc:
        print(f"shadowgb: configuration error: {exc}", file=sys.stderr)
        return 2
    except DatasetError as exc:
        print(f"shadowgb: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"shadowgb: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
