"""Command-line interface for the full pipeline.

Typical flow:

    visus synth --config synth.conf --out data/
    visus ingest --ehr data/ehr --ivom data/ivom.csv --oct data/oct/manifest.csv \\
        --salt s3cret --out corpus.json
    visus ontology map --in corpus.json --out corpus.json --report unmapped.txt
    visus oct train --corpus corpus.json --biomarker elm --kind logreg --seed 7 \\
        --out models/oct_elm.json
    visus oct complete --corpus corpus.json --models-dir models --out corpus.json
    visus features build --corpus corpus.json --out windows.jsonl
    visus train --model mlp_lda --windows windows.jsonl --seed 7 --out models/mlp_lda.json
    visus predict --model models/mlp_lda.json --corpus corpus.json --patient <id> --eye left
    visus eval --pred preds.jsonl --truth windows.jsonl --expert annotations.jsonl
    visus serve --corpus corpus.json --models-dir models --annotations-log annotations.jsonl
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import evaluation, features, ontology, synth
from . import oct as octmod
from . import predict as predictmod
from .cohort import WslLabel, wsl_distribution
from .errors import InvalidConfig, VisusError
from .ingest import build_corpus, load_corpus, save_corpus
from .nn import TrainConfig
from .service import serve


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return args.func(args) or 0
    except VisusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="visus", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("synth", help="generate a synthetic data set")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--patients", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse, pseudonymize, merge, and clean")
    p.add_argument("--ehr", required=True, help="directory of .xdt files")
    p.add_argument("--ivom", required=True, help="injection CSV")
    p.add_argument("--oct", required=True, help="OCT manifest CSV")
    p.add_argument("--salt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="write the cleaning report here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("ontology", help="text-rule mapping")
    onto_sub = p.add_subparsers(dest="subcommand")
    pm = onto_sub.add_parser("map", help="attach disease flags to diagnoses")
    pm.add_argument("--rules", help="rule file (defaults to the shipped rules)")
    pm.add_argument("--in", dest="infile", required=True)
    pm.add_argument("--out", required=True)
    pm.add_argument("--report", help="write unmapped strings here")
    pm.set_defaults(func=cmd_ontology_map)

    p = sub.add_parser("stats", help="predictive statistics")
    stats_sub = p.add_subparsers(dest="subcommand")
    pw = stats_sub.add_parser("wsl", help="winner/stabilizer/loser distribution")
    pw.add_argument("--corpus", required=True)
    pw.add_argument("--disease")
    pw.add_argument("--with", dest="comorbidity")
    pw.add_argument("--out", required=True)
    pw.add_argument("--csv", help="also write a plottable CSV here")
    pw.set_defaults(func=cmd_stats_wsl)

    p = sub.add_parser("oct", help="biomarker classification")
    oct_sub = p.add_subparsers(dest="subcommand")
    pt = oct_sub.add_parser("train", help="train one biomarker's two-stage model")
    pt.add_argument("--corpus", required=True)
    pt.add_argument("--biomarker", required=True, choices=sorted(features.BIOMARKER_ROWS))
    pt.add_argument("--kind", default="logreg", choices=sorted(octmod.SLICE_CLASSIFIER_KINDS))
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--resolution", type=int, default=octmod.DEFAULT_RESOLUTION)
    pt.add_argument("--out", required=True)
    pt.set_defaults(func=cmd_oct_train)
    pc = oct_sub.add_parser("complete", help="fill unknown biomarker labels")
    pc.add_argument("--corpus", required=True)
    pc.add_argument("--models-dir", required=True)
    pc.add_argument("--out", required=True)
    pc.set_defaults(func=cmd_oct_complete)

    p = sub.add_parser("features", help="feature windows")
    feat_sub = p.add_subparsers(dest="subcommand")
    pf = feat_sub.add_parser("build", help="build factorized windows")
    pf.add_argument("--corpus", required=True)
    pf.add_argument("--out", required=True)
    pf.add_argument("--ablate", choices=features.ABLATION_MODES)
    pf.set_defaults(func=cmd_features_build)

    p = sub.add_parser("train", help="fit a VA predictor")
    p.add_argument("--model", required=True, choices=predictmod.MODEL_KINDS)
    p.add_argument("--windows", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--patience", type=int, default=20)
    p.add_argument("--trees", type=int, default=25)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict VA progressions")
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--corpus")
    p.add_argument("--patient")
    p.add_argument("--eye", choices=("left", "right"))
    p.add_argument("--windows", help="batch mode: predict every window in this file")
    p.add_argument("--out", help="write JSON-lines here instead of stdout")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score predictions (and expert annotations)")
    p.add_argument("--pred", required=True, help="prediction JSON-lines")
    p.add_argument("--truth", required=True, help="window JSON-lines with targets")
    p.add_argument("--expert", help="annotation JSON-lines")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the dashboard service")
    p.add_argument("--corpus", required=True)
    p.add_argument("--models-dir", required=True)
    p.add_argument("--annotations-log", required=True)
    p.add_argument("--port", type=int, default=8077)
    p.add_argument("--ui", help="static dashboard bundle directory")
    p.set_defaults(func=cmd_serve)

    return parser


# -- command implementations ------------------------------------------------

def _read_flat_config(path: str) -> dict:
    """Flat key = value file; dotted keys build nested dicts."""
    out: dict = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if value.lower() in ("true", "false"):
                parsed: object = value.lower() == "true"
            else:
                try:
                    parsed = int(value)
                except ValueError:
                    try:
                        parsed = float(value)
                    except ValueError:
                        parsed = value.strip("\"'")
            target = out
            parts = key.split(".")
            for part in parts[:-1]:
                target = target.setdefault(part, {})
            target[parts[-1]] = parsed
    return out


def cmd_synth(args) -> int:
    kwargs = _read_flat_config(args.config) if args.config else {}
    if args.seed is not None:
        kwargs["seed"] = args.seed
    if args.patients is not None:
        kwargs["patients"] = args.patients
    unknown = set(kwargs) - set(synth.SynthConfig().__dict__)
    if unknown:
        raise InvalidConfig(f"unknown synth config keys: {sorted(unknown)}")
    config = synth.SynthConfig(**kwargs)
    truth = synth.generate_corpus(config, args.out)
    print(f"wrote {len(truth['patients'])} patients under {args.out}")
    return 0


def cmd_ingest(args) -> int:
    corpus, report = build_corpus(args.ehr, args.ivom, args.oct, args.salt)
    save_corpus(corpus, args.out)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")
    print(
        f"{len(corpus.patients)} patients -> {args.out} "
        f"({sum(report.counts.values())} cleaned entries, {len(corpus.warnings)} warnings)"
    )
    return 0


def cmd_ontology_map(args) -> int:
    rules = ontology.load_rules(args.rules) if args.rules else ontology.default_rules()
    corpus = load_corpus(args.infile)
    corpus, report = ontology.map_corpus(corpus, rules)
    save_corpus(corpus, args.out)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report.to_text())
    print(f"mapped {report.mapped}/{report.total} diagnosis strings explicitly")
    return 0


def cmd_stats_wsl(args) -> int:
    corpus = load_corpus(args.corpus)
    dist = wsl_distribution(corpus, args.disease, args.comorbidity)
    payload = {
        "disease": args.disease,
        "comorbidity": args.comorbidity,
        "buckets": dist.to_dict(),
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("bucket,eyes,patients,winner,stabilizer,loser\n")
            for name, row in payload["buckets"].items():
                fh.write(
                    f"{name},{row['eyes']},{row['patients']},"
                    f"{row['winner']!r},{row['stabilizer']!r},{row['loser']!r}\n"
                )
    print(f"wrote {args.out}")
    return 0


def _annotated_training_data(corpus, biomarker: str, resolution: int):
    stacks = []
    labels = []
    for patient in corpus.patients:
        for _side, eye in sorted(patient.eyes.items()):
            for scan in eye.oct_scans:
                state = scan.biomarkers.get(biomarker)
                if state is None or state.provenance != "annotated":
                    continue
                stacks.append(octmod.extract_slices(scan, resolution=resolution))
                labels.append(1 if state.label == "pathological" else 0)
    return np.array(stacks), np.array(labels)


def cmd_oct_train(args) -> int:
    corpus = load_corpus(args.corpus)
    stacks, labels = _annotated_training_data(corpus, args.biomarker, args.resolution)
    if len(labels) == 0:
        print("error: no annotated scans for this biomarker", file=sys.stderr)
        return 1
    model = octmod.train_two_stage(
        stacks, labels, args.biomarker, kind=args.kind, seed=args.seed,
        resolution=args.resolution,
    )
    octmod.save_model(model, args.out)
    print(
        f"{args.biomarker}/{args.kind}: slice F1 train {model.report.train_f1:.3f} "
        f"validation {model.report.validation_f1:.3f} -> {args.out}"
    )
    return 0


def cmd_oct_complete(args) -> int:
    corpus = load_corpus(args.corpus)
    models = {}
    for name in sorted(os.listdir(args.models_dir)):
        if name.startswith("oct_") and name.endswith(".json"):
            model = octmod.load_model(os.path.join(args.models_dir, name))
            models[model.biomarker] = model
    corpus, report = octmod.complete_documentation(corpus, models)
    save_corpus(corpus, args.out)
    print(
        f"completed {report.completed} labels "
        f"({report.already_known} already known, {len(report.skipped)} skipped)"
    )
    return 0


def cmd_features_build(args) -> int:
    corpus = load_corpus(args.corpus)
    windows = features.build_all_windows(corpus)
    if args.ablate:
        windows = features.ablate(windows, args.ablate)
    features.save_windows(windows, args.out)
    print(f"wrote {len(windows)} windows to {args.out}")
    return 0


def cmd_train(args) -> int:
    windows = features.load_windows(args.windows)
    train_set, val_set, _test = predictmod.split_dataset(windows, args.seed)
    config = TrainConfig(seed=args.seed, max_epochs=args.epochs, patience=args.patience)
    kind = args.model
    if kind == "statistical":
        predictor = predictmod.StatisticalEstimator().fit(train_set, seed=args.seed)
    elif kind == "ma":
        predictor = predictmod.MaEstimator().fit()
    elif kind == "weighted_ma":
        predictor = predictmod.WeightedMaEstimator().fit()
    elif kind in ("bagging", "random_forest"):
        predictor = predictmod.EnsembleVaPredictor(
            kind=kind, n_estimators=args.trees, seed=args.seed
        ).fit(train_set)
    elif kind == "mlp":
        predictor = predictmod.MlpVaPredictor().fit(train_set, val_set, config)
    else:
        predictor = predictmod.MlpLdaPredictor().fit(train_set, val_set, config)
    predictmod.save_model(predictor, args.out)
    print(f"trained {kind} on {len(train_set)} windows -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    predictor = predictmod.load_model(args.model)
    lines = []
    if args.windows:
        windows = features.load_windows(args.windows)
        results = predictmod.predict_many(predictor, windows)
    else:
        if not (args.corpus and args.patient and args.eye):
            print("error: need --windows or (--corpus --patient --eye)", file=sys.stderr)
            return 2
        corpus = load_corpus(args.corpus)
        patient = corpus.patient(args.patient)
        if patient is None:
            print(f"error: unknown patient {args.patient}", file=sys.stderr)
            return 1
        results = predictmod.predict_series(predictor, patient, args.eye)
    for res in results:
        lines.append(json.dumps(res.to_dict(), sort_keys=True))
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _labels_from_predictions(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            out[(d["patient"], d["eye"], d["index"])] = WslLabel(d["label"])
    return out


def _labels_from_annotations(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            out[(d["patient"], d["eye"], d["index"])] = WslLabel(d["label"])
    return out


def cmd_eval(args) -> int:
    truth_windows = features.load_windows(args.truth)
    truth = {w.key(): predictmod.truth_label(w) for w in truth_windows}
    preds = _labels_from_predictions(args.pred)
    if args.expert:
        expert = _labels_from_annotations(args.expert)
        comparison = evaluation.compare(preds, expert, truth)
        payload = comparison.to_dict()
        print(evaluation.format_report(comparison.model_report, "model"))
        print()
        print(evaluation.format_report(comparison.expert_report, "expert"))
    else:
        keys = sorted(set(preds) & set(truth))
        report = evaluation.metrics(
            evaluation.confusion([preds[k] for k in keys], [truth[k] for k in keys])
        )
        payload = report.to_dict()
        print(evaluation.format_report(report, "model"))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
            fh.write("\n")
    return 0


def cmd_serve(args) -> int:
    corpus = load_corpus(args.corpus)
    models = {}
    for name in sorted(os.listdir(args.models_dir)):
        if name.endswith(".json") and not name.startswith("oct_"):
            try:
                predictor = predictmod.load_model(os.path.join(args.models_dir, name))
            except (ValueError, KeyError):
                continue
            models[predictor.model_id] = predictor
    serve(corpus, models, args.annotations_log, port=args.port, ui_dir=args.ui)
    return 0


if __name__ == "__main__":
    sys.exit(main())
