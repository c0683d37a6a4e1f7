"""Command-line interface: ``rfspp {simulate,pca,fit,classify,detect,eval}``.

Exit codes: 0 success, 2 usage error, 3 data/validation error, 4 numerical
failure.  Any flag may also be given in a JSON file passed with
``--config``; flags on the command line take precedence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import eval as ev
from .core import Dataset, UnitContext, dumps_jsonl, read_jsonl
from .errors import DataValidationError, RFSError
from .infer import BagClassifier, NoveltyDetector, verdict_record
from .learn import FitConfig, fit_with_report
from .models import IidClusterModel, model_from_dict
from .preprocess import Projection, fit_pca
from .sim import NORMAL, ScenarioSpec, generate

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4


class UsageError(Exception):
    pass


def write_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataValidationError(f"{path}: invalid JSON ({exc.msg})") from None


def load_model(path, unit: float | None = None) -> IidClusterModel:
    model = model_from_dict(_read_json(path))
    if unit is not None:
        model = IidClusterModel(model.cardinality, model.feature, UnitContext(unit))
    return model


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, [])]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _read_jsonl_lines(path) -> list[dict]:
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if line.strip():
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataValidationError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    _require(args, "scenario", "seed")
    try:
        spec = ScenarioSpec(args.scenario, args.seed, args.trial)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    train, test = generate(spec)
    out = Path(args.out_dir)
    train_path = Path(args.train_out or out / f"{spec.name}_train.jsonl")
    test_path = Path(args.test_out or out / f"{spec.name}_test.jsonl")
    meta_path = Path(args.meta_out or out / f"{spec.name}_meta.json")
    write_atomic(train_path, dumps_jsonl(train))
    write_atomic(test_path, dumps_jsonl(test))
    meta = spec.metadata() | {"train_size": len(train), "test_size": len(test)}
    write_atomic(meta_path, _dump(meta))
    print(f"wrote {len(train)} train and {len(test)} test patterns")
    return 0


def cmd_pca(args) -> int:
    _require(args, "input", "out")
    data = read_jsonl(args.input)
    if args.projection:
        proj = Projection.from_dict(_read_json(args.projection))
    else:
        _require(args, "dim")
        proj = fit_pca(data, args.dim)
        if args.projection_out:
            write_atomic(args.projection_out, _dump(proj.to_dict()))
    write_atomic(args.out, dumps_jsonl(proj.apply(data)))
    print(f"projected to {proj.target_dim}-D, retained variance {proj.retained_variance:.6f}")
    return 0


def cmd_fit(args) -> int:
    _require(args, "train", "out")
    data = read_jsonl(args.train)
    if args.label is not None:
        data = data.with_label(args.label)
    cfg = FitConfig(
        cardinality_family=args.family,
        categorical_max=args.max_card,
        smoothing=args.smoothing,
        covariance_ridge=args.ridge,
        unit=UnitContext(args.unit),
    )
    model, report = fit_with_report(data, cfg)
    write_atomic(args.out, _dump(model.to_dict()))
    if args.report:
        write_atomic(args.report, _dump(report.to_dict()))
    print(f"fitted {cfg.cardinality_family} model on {report.n_patterns} patterns")
    return 0


def cmd_classify(args) -> int:
    _require(args, "models", "test", "out")
    models = [load_model(p, args.unit) for p in args.models]
    clf = BagClassifier(models, args.priors, scorer=args.scorer)
    data = read_jsonl(args.test, dim=clf.dim)
    lines, preds = [], []
    for it in data.items:
        res = clf.classify(it.pattern)
        preds.append(res.label)
        lines.append(json.dumps({
            "id": it.id,
            "label": res.label,
            "log_posteriors": [None if v == float("-inf") else v for v in res.log_posteriors],
        }))
    write_atomic(args.out, "".join(l + "\n" for l in lines))
    truth = data.labels
    if all(t is not None for t in truth):
        print(f"accuracy {ev.accuracy(preds, truth):.6f}")
    return 0


def cmd_detect(args) -> int:
    _require(args, "test", "out")
    if args.detector:
        det = NoveltyDetector.from_dict(_read_json(args.detector))
    else:
        _require(args, "model", "train")
        if not 1 <= args.q < args.Q:
            raise UsageError(f"need 1 <= q < Q, got q={args.q}, Q={args.Q}")
        model = load_model(args.model, args.unit)
        train = read_jsonl(args.train, dim=model.dim)
        det = NoveltyDetector.fit(model, args.scorer, train.patterns, args.q, args.Q)
    if args.detector_out:
        write_atomic(args.detector_out, _dump(det.to_dict()))
    data = read_jsonl(args.test, dim=det.model.dim)
    lines, flagged = [], []
    for it in data.items:
        v = det.detect(it.pattern)
        flagged.append(v.anomaly)
        lines.append(json.dumps(verdict_record(it.id, v)))
    write_atomic(args.out, "".join(l + "\n" for l in lines))
    if all(l is not None for l in data.labels):
        res = ev.f1(flagged, [l != args.normal_label for l in data.labels])
        print(f"precision {res.precision:.6f} recall {res.recall:.6f} f1 {res.f1:.6f}")
    return 0


def _truth_by_id(path) -> dict[str, int | None]:
    data = read_jsonl(path)
    return {it.id: it.label for it in data.items}


def _paired(pred_path, truth_path, key):
    truth = _truth_by_id(truth_path)
    preds, gold = [], []
    for rec in _read_jsonl_lines(pred_path):
        rid = str(rec.get("id"))
        if rid not in truth or truth[rid] is None:
            raise DataValidationError(f"no labeled truth for id {rid!r}")
        preds.append(rec[key])
        gold.append(truth[rid])
    return preds, gold


def cmd_eval(args) -> int:
    proto = args.protocol
    report: dict
    csv_rows: list = []
    if proto == "accuracy":
        _require(args, "predictions", "truth")
        preds, gold = _paired(args.predictions, args.truth, "label")
        report = {"protocol": proto, "n": len(preds), "accuracy": ev.accuracy(preds, gold)}
    elif proto == "f1":
        _require(args, "predictions", "truth")
        verdicts, gold = _paired(args.predictions, args.truth, "verdict")
        res = ev.f1([v == "anomaly" for v in verdicts], [g != args.normal_label for g in gold])
        report = {"protocol": proto, "n": len(verdicts), **res.__dict__}
    elif proto == "cv":
        _require(args, "data", "seed")
        data = read_jsonl(args.data)
        report = ev.cross_validate_classification(data, args.k, args.seed)
        csv_rows = report["folds"]
    elif proto == "classification3":
        _require(args, "seed")
        report = ev.run_classification3(args.seed, args.trials)
        csv_rows = report["trials"]
    elif proto == "novelty1":
        _require(args, "seed")
        if not 1 <= args.q < args.Q:
            raise UsageError(f"need 1 <= q < Q, got q={args.q}, Q={args.Q}")
        report = ev.run_novelty1(args.seed, args.trials, args.q, args.Q)
        csv_rows = report["trials"]
        if args.boxplot_csv:
            write_atomic(args.boxplot_csv, ev.rows_to_csv(report["boxplot"]))
        report = {k: v for k, v in report.items() if k != "boxplot"}
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown protocol {proto!r}")
    text = ev.to_json(report)
    if args.out_json:
        write_atomic(args.out_json, text)
    if args.out_csv and csv_rows:
        write_atomic(args.out_csv, ev.rows_to_csv(csv_rows))
    agg = report.get("aggregate")
    if agg:
        for k, v in agg.items():
            print(f"{k}: {v['mean']:.6f} +/- {v['std']:.6f}")
    else:
        print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file supplying default values for any flag")

    parser = argparse.ArgumentParser(prog="rfspp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="generate a simulated scenario")
    p.add_argument("--scenario", choices=["classification3", "novelty1"])
    p.add_argument("--seed", type=int)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--train-out")
    p.add_argument("--test-out")
    p.add_argument("--meta-out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pca", parents=[common], help="project pooled features with PCA")
    p.add_argument("--input")
    p.add_argument("--out")
    p.add_argument("--dim", type=int)
    p.add_argument("--projection-out", help="save the fitted projection")
    p.add_argument("--projection", help="apply a saved projection instead of fitting")
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("fit", parents=[common], help="fit an iid-cluster model")
    p.add_argument("--train")
    p.add_argument("--label", type=int, help="fit only patterns with this label")
    p.add_argument("--family", choices=["poisson", "categorical"], default="poisson")
    p.add_argument("--smoothing", choices=["none", "add_one"], default="none")
    p.add_argument("--max-card", type=int, default=0)
    p.add_argument("--ridge", type=float, default=None)
    p.add_argument("--unit", type=float, default=1.0)
    p.add_argument("--out")
    p.add_argument("--report")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("classify", parents=[common], help="MAP classification of patterns")
    p.add_argument("--models", nargs="+")
    p.add_argument("--priors", nargs="+", type=float)
    p.add_argument("--scorer", choices=["rfs", "nb"], default="rfs")
    p.add_argument("--unit", type=float, default=None, help="override the models' unit")
    p.add_argument("--test")
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("detect", parents=[common], help="quantile-threshold novelty detection")
    p.add_argument("--model")
    p.add_argument("--detector", help="saved detector (skips threshold fitting)")
    p.add_argument("--scorer", choices=["nb", "rfs", "ranking"], default="ranking")
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--Q", type=int, default=10)
    p.add_argument("--unit", type=float, default=None, help="override the model's unit")
    p.add_argument("--train")
    p.add_argument("--test")
    p.add_argument("--out")
    p.add_argument("--detector-out")
    p.add_argument("--normal-label", type=int, default=NORMAL)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", parents=[common], help="metrics and experiment protocols")
    p.add_argument("--protocol", choices=["accuracy", "f1", "cv", "classification3", "novelty1"],
                   default="accuracy")
    p.add_argument("--predictions")
    p.add_argument("--truth")
    p.add_argument("--normal-label", type=int, default=NORMAL)
    p.add_argument("--data")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--Q", type=int, default=10)
    p.add_argument("--out-json")
    p.add_argument("--out-csv")
    p.add_argument("--boxplot-csv")
    p.set_defaults(func=cmd_eval)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        if not isinstance(cfg, dict):
            parser.error("config must be a JSON object")
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = set(cfg) - known
        if unknown:
            parser.error(f"unknown config keys: {sorted(unknown)}")
        # config values become defaults, so explicit flags still win
        subparser.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"rfspp {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RFSError as exc:
        print(f"rfspp {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"rfspp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"rfspp {args.command}: invalid value: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
