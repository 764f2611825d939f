"""Command-line entry point: ``python -m graphsim <command> ...``.

Exit codes: 0 ok, 2 usage, 3 data error, 4 compute error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dataset import (
    ORACLES,
    LabelCache,
    generate_synthetic,
    label_pairs,
    load_corpus,
    save_corpus,
    split_corpus,
    training_pairs,
)
from .errors import DataError, GraphSimError, UsageError
from .evaluate import (
    baseline_scorers,
    benchmark_time,
    constant_scorer,
    model_scorer,
    run_eval,
    truth_scorer,
    write_matrix,
    write_report,
    write_rankings,
    write_timing,
)
from .model import MODELS, GSimCNN, ModelConfig, TrainConfig, load_model, train

log = logging.getLogger("graphsim")

ABLATION_MODES = {
    "L1-pad": {"scales_used": (1,), "matrix_mode": "pad_only"},
    "L1-resize": {"scales_used": (1,), "matrix_mode": "resize"},
    "full": {"scales_used": (1, 2, 3), "matrix_mode": "resize"},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_data_args(p, labels=True):
    p.add_argument("--corpus", required=True, help="corpus JSON Lines file")
    if labels:
        p.add_argument("--labels", required=True, help="ground-truth GED cache (JSON Lines)")
    p.add_argument("--split-seed", type=int, default=0)


def _add_train_args(p):
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="graphsim", description="Graph similarity via convolutional set matching.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--max-nodes", type=int, required=True)
    p.add_argument("--labels", type=int, default=4, help="label alphabet size (1 = unlabeled)")
    p.add_argument("--edge-prob", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("label", help="compute ground-truth GED for all split pairs")
    _add_data_args(p, labels=False)
    p.add_argument("--out", required=True, help="cache file; existing entries are reused")
    p.add_argument("--oracle", choices=sorted(ORACLES), default="exact")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("train", help="train a similarity model")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--model", choices=sorted(MODELS), default="gsimcnn")
    p.add_argument("--scales", default="1,2,3")
    p.add_argument("--matrix-mode", choices=("resize", "pad_only"), default="resize")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("eval", help="rank the database for every test query and report metrics")
    _add_data_args(p)
    p.add_argument("--method", required=True, help="astar, beam, hungarian, jonker_volgenant, model, constant or truth")
    p.add_argument("--model", help="trained model directory (for --method model)")
    p.add_argument("--beam-width", type=int, default=3)
    p.add_argument("--timing", action="store_true", help="record mean wall time per pair")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("rank", help="rank the database for one query")
    _add_data_args(p)
    p.add_argument("--query", required=True, help="query graph id")
    p.add_argument("--model", required=True, help="trained model directory")
    p.add_argument("--dump-matrices", action="store_true", help="write interaction matrices as CSV")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench", help="time GED methods on random corpus pairs")
    _add_data_args(p, labels=False)
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--methods", default="hungarian,jonker_volgenant,beam,astar")
    p.add_argument("--beam-width", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("ablate", help="compare single-scale pad/resize variants with the full model")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--full-model", help="reuse a trained full model instead of retraining it")
    p.add_argument("--out", required=True)
    return parser


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args):
    corpus = load_corpus(args.corpus)
    split = split_corpus(corpus, seed=args.split_seed)
    labels = LabelCache(args.labels) if getattr(args, "labels", None) else None
    return corpus, split, labels


def _hyper(args) -> TrainConfig:
    return TrainConfig(iterations=args.iterations, batch_size=args.batch_size, lr=args.lr, seed=args.seed)


def _write_history(path, history):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, ("iteration", "train_loss", "val_loss"), lineterminator="\n")
        w.writeheader()
        for row in history:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def cmd_gen(args):
    if args.count < 1 or args.max_nodes < 1 or args.labels < 1:
        raise UsageError("--count, --max-nodes and --labels must be positive")
    corpus = generate_synthetic(args.count, args.max_nodes, args.labels, args.seed, args.edge_prob)
    save_corpus(corpus, args.out)
    log.info("wrote %d graphs to %s", len(corpus), args.out)


def cmd_label(args):
    corpus, split, _ = _load(args)
    pairs = label_pairs(split, corpus, ORACLES[args.oracle], args.out, args.workers)
    log.info("%d labeled pairs in %s", len(pairs), args.out)


def cmd_train(args):
    corpus, split, labels = _load(args)
    try:
        scales = tuple(int(s) for s in args.scales.split(","))
    except ValueError:
        raise UsageError(f"bad --scales {args.scales!r}") from None
    config = ModelConfig.for_corpus(corpus, seed=args.seed, scales_used=scales, matrix_mode=args.matrix_mode)
    model = MODELS[args.model](config)
    result = train(model, corpus, split, labels, _hyper(args))
    out = _outdir(args.out)
    model.save(out)
    _write_history(out / "history.csv", result.history)


def _scorer_for(args, corpus, split, labels):
    if args.method == "model":
        if not args.model:
            raise UsageError("--method model needs --model")
        return model_scorer(load_model(args.model))
    if args.method == "truth":
        return truth_scorer(labels)
    if args.method == "constant":
        sims = [lp.sim for lp in labels.labeled(corpus, training_pairs(split))]
        return constant_scorer(float(np.mean(sims)) if sims else 0.5)
    scorers = baseline_scorers(args.beam_width)
    if args.method not in scorers:
        raise UsageError(f"unknown method {args.method!r}")
    return scorers[args.method]


def cmd_eval(args):
    corpus, split, labels = _load(args)
    scorer = _scorer_for(args, corpus, split, labels)
    report, rankings = run_eval(corpus, split, scorer, labels, args.method, timing=args.timing)
    out = _outdir(args.out)
    write_report(out / "report.csv", [report])
    write_rankings(out / "rankings.csv", rankings)


def cmd_rank(args):
    corpus, split, labels = _load(args)
    if args.query not in corpus.by_id:
        raise DataError(f"unknown query id {args.query!r}")
    model = load_model(args.model)
    query = corpus[args.query]
    db = [corpus[i] for i in split.database if i != args.query]
    pred = model.predict([(query, g) for g in db])
    from .evaluate import RankingResult
    from .metrics import rank_order

    order = rank_order(pred, [g.id for g in db])
    truth = labels.labeled(corpus, [(query.id, db[i].id) for i in order])
    result = RankingResult(
        query.id,
        [db[i].id for i in order],
        [float(pred[i]) for i in order],
        [lp.sim for lp in truth],
        [lp.nged for lp in truth],
    )
    out = _outdir(args.out)
    write_rankings(out / "rankings.csv", [result])
    if args.dump_matrices:
        if not isinstance(model, GSimCNN):
            raise UsageError("--dump-matrices needs a GSimCNN model")
        mdir = _outdir(out / "matrices")
        for g in db:
            for scale, img in model.images([(query, g)]).items():
                write_matrix(mdir / f"{query.id}__{g.id}__scale{scale}.csv", img.data[0])


def cmd_bench(args):
    corpus, _, _ = _load(args)
    rng = np.random.default_rng(args.seed)
    ids = corpus.ids
    picks = rng.integers(0, len(ids), size=(args.pairs, 2))
    pairs = [(corpus[ids[a]], corpus[ids[b]]) for a, b in picks]
    available = baseline_scorers(args.beam_width)
    names = [m for m in args.methods.split(",") if m]
    unknown = [m for m in names if m not in available]
    if unknown:
        raise UsageError(f"unknown methods {unknown}")
    rows = benchmark_time({m: available[m] for m in names}, pairs)
    write_timing(_outdir(args.out) / "timing.csv", rows)


def cmd_ablate(args):
    corpus, split, labels = _load(args)
    reports = []
    for mode, overrides in ABLATION_MODES.items():
        if mode == "full" and args.full_model:
            model = load_model(args.full_model)
        else:
            model = GSimCNN(ModelConfig.for_corpus(corpus, seed=args.seed, **overrides))
            train(model, corpus, split, labels, _hyper(args))
        report, _ = run_eval(corpus, split, model_scorer(model), labels, mode)
        reports.append(report)
    write_report(_outdir(args.out) / "report.csv", reports)


COMMANDS = {
    "gen": cmd_gen,
    "label": cmd_label,
    "train": cmd_train,
    "eval": cmd_eval,
    "rank": cmd_rank,
    "bench": cmd_bench,
    "ablate": cmd_ablate,
}


def cli_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        COMMANDS[args.command](args)
    except GraphSimError as exc:
        print(f"graphsim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"graphsim: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0


def main() -> None:
    sys.exit(cli_dispatch())
