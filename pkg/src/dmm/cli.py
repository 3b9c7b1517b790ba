"""Command-line entry point ``dmm``.

Exit status is 0 on success, 2 for configuration errors and 3 for data errors.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .embedding import embed_dataset, embed_indices
from .errors import ConfigError, DataError, DegenerateOperatorError, DmmError, EncodingError
from .kde import predict
from .metrics import metrics
from .operator import CLASS_NORMALIZED, COUNT_BASED
from .pipeline import PipelineOptions, fit_pipeline, load_model
from .report import summary_rows
from .runner import run
from .survey import load_dataset, load_features
from .synthetic import EXPERIMENTS, experiment_config, load_config

log = logging.getLogger("dmm")

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

_VARIANT_CHOICES = {
    "count": (COUNT_BASED,),
    "normalized": (CLASS_NORMALIZED,),
    "both": (COUNT_BASED, CLASS_NORMALIZED),
}
_RULE_CHOICES = {"ml": ("ml",), "map": ("map",), "both": ("ml", "map")}


def _rank_arg(text: str):
    return int(text) if text.isdigit() else text


def _bandwidth_arg(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--variant", choices=("count", "normalized"), default="count",
                   help="operator variant (default: count)")
    p.add_argument("--smoothing", type=float, default=0.0,
                   help="additive smoothing for the normalized variant")
    p.add_argument("--rank", type=_rank_arg, default="full_rank",
                   help="full_rank, gap, or an integer")
    p.add_argument("--kernel", choices=("gaussian", "epanechnikov"), default="gaussian")
    p.add_argument("--bandwidth", type=_bandwidth_arg, default="scott",
                   help="scott, cv, or a positive number")
    p.add_argument("--priors", choices=("uniform", "empirical"), default="uniform")


def _pipeline_options(args) -> PipelineOptions:
    return PipelineOptions(
        variant=_VARIANT_CHOICES[args.variant][0],
        smoothing=args.smoothing,
        rank=args.rank,
        kernel=args.kernel,
        bandwidth=args.bandwidth,
        priors=args.priors,
    )


def _load_labeled(args):
    return load_dataset(args.dataset, args.schema or "infer", label_column=args.label_column)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a named experiment or a config file")
    p.add_argument("experiment", help=f"one of {', '.join(EXPERIMENTS)} or a JSON config path")
    p.add_argument("--seed", type=int, default=None, help="base seed (default 0)")
    p.add_argument("--out", default=None, help="output directory (default results/<name>-seed<N>)")
    p.add_argument("--variant", choices=tuple(_VARIANT_CHOICES), default=None)
    p.add_argument("--rule", choices=tuple(_RULE_CHOICES), default=None)
    p.add_argument("--baselines", choices=("pca_knn", "none"), default=None)
    p.add_argument("--stability", action="store_true", help="attach perturbation diagnostics")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default DMM_THREADS)")

    for name, help_text in (("fit", "fit a model and save it as JSON"),
                            ("embed", "write latent coordinates of a labeled dataset")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("dataset")
        p.add_argument("--schema", default=None, help="schema JSON (default: infer from data)")
        p.add_argument("--label-column", default=None, help="label column (default: last)")
        p.add_argument("--out", required=True)
        _add_pipeline_args(p)
        if name == "embed":
            p.add_argument("--model-out", default=None, help="also save the fitted model")

    p = sub.add_parser("classify", help="predict labels with a saved model")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("--rule", choices=("ml", "map"), default="ml")
    p.add_argument("--label-column", default=None,
                   help="column holding true labels; when present, metrics are printed")
    p.add_argument("--out", default=None, help="predictions CSV (default: stdout)")
    return parser


def _cmd_run(args) -> int:
    if args.experiment in EXPERIMENTS:
        config = experiment_config(args.experiment, 0 if args.seed is None else args.seed)
    else:
        config = load_config(args.experiment, args.seed)
    changes = {}
    if args.variant:
        changes["variants"] = _VARIANT_CHOICES[args.variant]
    if args.rule:
        changes["rules"] = _RULE_CHOICES[args.rule]
    if args.baselines:
        changes["baselines"] = () if args.baselines == "none" else ("pca_knn",)
    if args.stability:
        changes["stability"] = True
    if changes:
        config = replace(config, **changes)
    report = run(config, threads=args.threads)
    out = Path(args.out) if args.out else Path("results") / f"{config.name}-seed{config.seed}"
    paths = report.write(out)
    header, rows = summary_rows(report.data)
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for row in rows:
        print("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    print(f"report written to {paths['report']}", file=sys.stderr)
    return EXIT_OK


def _cmd_fit(args) -> int:
    ds = _load_labeled(args)
    model = fit_pipeline(ds, _pipeline_options(args))
    model.save(args.out)
    print(f"fitted r={model.embedding.r} on n={ds.n}, d={ds.schema.d}; model written to {args.out}",
          file=sys.stderr)
    return EXIT_OK


def _cmd_embed(args) -> int:
    ds = _load_labeled(args)
    model = fit_pipeline(ds, _pipeline_options(args))
    z = embed_dataset(model.embedding, ds)
    names = ds.label_names or tuple(str(y) for y in range(ds.k))
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"z{i}" for i in range(z.shape[1])] + ["label"])
        for row, y in zip(z, ds.labels):
            writer.writerow([repr(float(v)) for v in row] + [names[y]])
    if args.model_out:
        model.save(args.model_out)
    return EXIT_OK


def _cmd_classify(args) -> int:
    model = load_model(args.model)
    codes = load_features(args.dataset, model.schema)
    latent = embed_indices(model.embedding, codes + model.schema.offsets_array)
    pred = predict(model.kde, latent, args.rule)
    names = model.kde.label_names or tuple(str(y) for y in range(model.kde.k))
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["prediction"])
        writer.writerows([names[y]] for y in pred)
    finally:
        if args.out:
            fh.close()
    if args.label_column:
        truth = load_dataset(args.dataset, model.schema, label_column=args.label_column,
                             label_names=names).labels
        m = metrics(pred, truth, model.kde.k)
        print(f"accuracy={m.accuracy:.4f} macro_f1={m.macro_f1:.4f} "
              f"balanced_accuracy={m.balanced_accuracy:.4f}", file=sys.stderr)
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "fit": _cmd_fit, "embed": _cmd_embed, "classify": _cmd_classify}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (DataError, EncodingError, DegenerateOperatorError) as exc:
        print(f"dmm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConfigError as exc:
        print(f"dmm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DmmError as exc:
        print(f"dmm: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"dmm: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
