"""Command-line entry point: one executable, one subcommand per pipeline
stage, driven by a flat key=value config file that flags can override.

Exit codes: 0 success, 2 input error, 3 consistency error (fingerprint or
dimension mismatch), 4 internal numeric error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .baselines import LevDamRanker, exact_candidates
from .errors import ConsistencyError, InputError, NumericError
from .evaluation import compare_methods, read_gold_file
from .gazetteer import load_gazetteer
from .model import ModelConfig, load_checkpoint, save_checkpoint
from .pairgen import filter_ocr_pairs, gen_gazetteer_pairs, gen_ocr_pairs, postprocess
from .pairs import read_pairs_file, write_pairs_file
from .preprocess import PreprocessOptions
from .ranker import build_index, load_index, rank_on_the_fly, save_index
from .results import Candidate, RankedCandidates, read_ranked_jsonl, write_ranked_jsonl
from .trainer import SplitSpec, finetune, infer, train, write_inference_tsv

EXIT_INPUT = 2
EXIT_CONSISTENCY = 3
EXIT_NUMERIC = 4


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# every config key with its parser; unknown keys are rejected
CONFIG_KEYS = {
    # model architecture and optimization
    "rnn_type": str,
    "embedding_dim": int,
    "hidden_dim": int,
    "num_layers": int,
    "bidirectional": _bool,
    "ff_hidden_dim": int,
    "dropout_p": float,
    "learning_rate": float,
    "batch_size": int,
    "combination_mode": str,
    # preprocessing
    "ascii_normalize": _bool,
    "lowercase": _bool,
    "strip_whitespace": _bool,
    "boundary_marker": str,
    "max_seq_len": int,
    # dataset split
    "train_ratio": float,
    "val_ratio": float,
    "test_ratio": float,
    # training control
    "seed": int,
    "max_epochs": int,
    "patience": int,
    # paths
    "dataset_path": str,
    "output_dir": str,
    "model_path": str,
}

_MODEL_KEYS = (
    "rnn_type", "embedding_dim", "hidden_dim", "num_layers", "bidirectional",
    "ff_hidden_dim", "dropout_p", "learning_rate", "batch_size", "combination_mode",
)
_PREPROCESS_KEYS = (
    "ascii_normalize", "lowercase", "strip_whitespace", "boundary_marker", "max_seq_len",
)
_SPLIT_KEYS = ("train_ratio", "val_ratio", "test_ratio")


def parse_config_file(path: str | Path) -> dict:
    """Flat `key = value` lines; `#` starts a comment line; unknown keys
    are rejected so typos fail loudly."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"config file not found: {path}")
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise InputError(f"{path} line {lineno}: expected key = value")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in CONFIG_KEYS:
                raise InputError(f"{path} line {lineno}: unknown config key {key!r}")
            try:
                values[key] = CONFIG_KEYS[key](raw)
            except ValueError as exc:
                raise InputError(f"{path} line {lineno}: bad value for {key}: {exc}") from exc
    return values


@dataclass
class ToolConfig:
    model: ModelConfig
    preprocess: PreprocessOptions
    split: SplitSpec
    seed: int
    max_epochs: int
    patience: int
    dataset_path: str | None
    output_dir: str | None
    model_path: str | None


def build_tool_config(values: dict) -> ToolConfig:
    seed = values.get("seed", 0)
    try:
        model = ModelConfig(**{k: values[k] for k in _MODEL_KEYS if k in values})
        preprocess = PreprocessOptions(**{k: values[k] for k in _PREPROCESS_KEYS if k in values})
        split = SplitSpec(**{k: values[k] for k in _SPLIT_KEYS if k in values}, seed=seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return ToolConfig(
        model=model,
        preprocess=preprocess,
        split=split,
        seed=seed,
        max_epochs=values.get("max_epochs", 40),
        patience=values.get("patience", 1),
        dataset_path=values.get("dataset_path"),
        output_dir=values.get("output_dir"),
        model_path=values.get("model_path"),
    )


def _load_tool_config(args, overrides: dict) -> ToolConfig:
    values = parse_config_file(args.config) if args.config else {}
    for key, value in overrides.items():
        if value is not None:
            values[key] = value
    return build_tool_config(values)


def _read_queries(path: str) -> list[str]:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"queries file not found: {path}")
    with open(p, encoding="utf-8") as fh:
        queries = [line.rstrip("\n") for line in fh if line.strip()]
    if not queries:
        raise InputError(f"queries file {path} is empty")
    return queries


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_gen_pairs(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.mode == "gazetteer":
        gz = load_gazetteer(args.input)
        pairs, gen_report = gen_gazetteer_pairs(
            gz,
            seed=args.seed,
            sim_threshold=args.sim_threshold,
            km_threshold=args.km_threshold,
            sample_size=args.sample_size,
        )
    else:
        aligned = _read_aligned_tokens(args.input)
        filtered, drops = filter_ocr_pairs(aligned)
        pairs, gen_report = gen_ocr_pairs(filtered, seed=args.seed)
        gen_report.drops.update(drops)
    train_val, test, post_report = postprocess(pairs, seed=args.seed)
    write_pairs_file(out_dir / "pairs_train_val.tsv", train_val)
    write_pairs_file(out_dir / "pairs_test.tsv", test)
    payload = {
        "seed": args.seed,
        "mode": args.mode,
        "generation": {"counts": gen_report.counts, "drops": gen_report.drops},
        "postprocess": {"counts": post_report.counts, "drops": post_report.drops},
    }
    with open(out_dir / "report.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, ensure_ascii=False, sort_keys=True, indent=1)
        fh.write("\n")
    print(
        f"gen-pairs: {len(train_val)} train+val, {len(test)} test pairs "
        f"written to {out_dir} (seed {args.seed})"
    )
    return 0


def _read_aligned_tokens(path: str) -> list[tuple[str, str]]:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"aligned token file not found: {path}")
    out = []
    with open(p, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise InputError(f"line {lineno}: expected 2 tab-separated fields")
            out.append((parts[0], parts[1]))
    return out


def _write_train_outputs(out_dir: Path, checkpoint, log, seed: int, extra: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    fingerprint = save_checkpoint(checkpoint, out_dir / "model.ckpt")
    log.to_tsv(out_dir / "epoch_log.tsv")
    payload = {
        "seed": seed,
        "selected_epoch": log.selected_epoch,
        "fingerprint": fingerprint,
        "metrics": checkpoint.metrics,
        **extra,
    }
    with open(out_dir / "train_report.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, ensure_ascii=False, sort_keys=True, indent=1)
        fh.write("\n")
    print(
        f"selected epoch {log.selected_epoch}, "
        f"val loss {checkpoint.metrics.get('val_loss', float('nan')):.6f}, "
        f"fingerprint {fingerprint[:12]}..."
    )


def cmd_train(args) -> int:
    cfg = _load_tool_config(
        args,
        {
            "dataset_path": args.dataset,
            "output_dir": args.out,
            "seed": args.seed,
            "max_epochs": args.max_epochs,
            "patience": args.patience,
        },
    )
    if not cfg.dataset_path:
        raise InputError("no dataset: set dataset_path in the config or pass --dataset")
    if not cfg.output_dir:
        raise InputError("no output directory: set output_dir or pass --out")
    pairs = read_pairs_file(cfg.dataset_path)
    checkpoint, log, test_pairs = train(
        cfg.model, cfg.preprocess, pairs, cfg.split,
        max_epochs=cfg.max_epochs, patience=cfg.patience, seed=cfg.seed,
    )
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_pairs_file(out_dir / "pairs_heldout_test.tsv", test_pairs)
    _write_train_outputs(out_dir, checkpoint, log, cfg.seed, {"mode": "train"})
    return 0


def cmd_finetune(args) -> int:
    cfg = _load_tool_config(
        args,
        {
            "dataset_path": args.dataset,
            "output_dir": args.out,
            "model_path": args.model,
            "seed": args.seed,
            "max_epochs": args.max_epochs,
            "patience": args.patience,
        },
    )
    if not cfg.model_path:
        raise InputError("no parent model: set model_path or pass --model")
    if not cfg.dataset_path or not cfg.output_dir:
        raise InputError("finetune needs dataset_path and output_dir")
    checkpoint = load_checkpoint(cfg.model_path)
    pairs = read_pairs_file(cfg.dataset_path)
    tuned, log = finetune(
        checkpoint, pairs, cfg.split,
        max_epochs=cfg.max_epochs, patience=cfg.patience, seed=cfg.seed,
    )
    _write_train_outputs(
        Path(cfg.output_dir), tuned, log, cfg.seed,
        {"mode": "finetune", "parent_fingerprint": tuned.parent_fingerprint},
    )
    return 0


def cmd_inference(args) -> int:
    checkpoint = load_checkpoint(args.model)
    result = infer(checkpoint, args.input)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_inference_tsv(result, out_dir / "predictions.tsv")
    payload = {"loss": result.loss, **result.metrics.to_dict()}
    with open(out_dir / "metrics.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, ensure_ascii=False, sort_keys=True, indent=1)
        fh.write("\n")
    print(
        f"inference: {len(result.pairs)} pairs, "
        f"F1 {result.metrics.f1:.4f}, accuracy {result.metrics.accuracy:.4f}"
    )
    return 0


def cmd_index(args) -> int:
    checkpoint = load_checkpoint(args.model)
    gz = load_gazetteer(args.gazetteer, checkpoint.preprocess)
    started = time.perf_counter()
    index = build_index(checkpoint, gz, threads=args.threads)
    save_index(index, args.out)
    elapsed = time.perf_counter() - started
    print(f"index: {len(index)} altnames x {index.dim} dims in {elapsed:.2f}s -> {args.out}")
    return 0


def cmd_rank(args) -> int:
    checkpoint = load_checkpoint(args.model)
    queries = _read_queries(args.queries)
    if args.on_the_fly:
        if not args.gazetteer:
            raise InputError("--on-the-fly needs --gazetteer")
        gz = load_gazetteer(args.gazetteer, checkpoint.preprocess)
        index = build_index(checkpoint, gz)
    else:
        if not args.index:
            raise InputError("rank needs --index (or --on-the-fly with --gazetteer)")
        index = load_index(args.index)
    started = time.perf_counter()
    results = rank_on_the_fly(checkpoint, index, queries, args.k, threads=args.threads)
    elapsed = time.perf_counter() - started
    write_ranked_jsonl(args.out, results)
    print(f"rank: {len(queries)} queries, k={args.k}, wall time {elapsed:.3f}s -> {args.out}")
    return 0


def cmd_baseline_rank(args) -> int:
    gz = load_gazetteer(args.gazetteer)
    queries = _read_queries(args.queries)
    started = time.perf_counter()
    if args.method == "levdam":
        ranker = LevDamRanker(gz.unique_altnames(), id_map=gz.alt_index)
        results = [ranker.rank(q, args.k) for q in queries]
    else:
        results = []
        for q in queries:
            matches = sorted(exact_candidates(q, gz))[: args.k]
            items = [Candidate(m, 0.0, gz.alt_index[m]) for m in matches]
            results.append(RankedCandidates(query=q, items=items, k=args.k))
    elapsed = time.perf_counter() - started
    write_ranked_jsonl(args.out, results)
    print(
        f"baseline-rank[{args.method}]: {len(queries)} queries, "
        f"wall time {elapsed:.3f}s -> {args.out}"
    )
    return 0


def cmd_evaluate(args) -> int:
    gold = read_gold_file(args.gold)
    gz = load_gazetteer(args.gazetteer)
    per_method = {}
    for spec in args.results:
        name, _, path = spec.partition("=")
        if not path:
            raise InputError(f"--results wants NAME=FILE, got {spec!r}")
        per_method[name] = read_ranked_jsonl(path)
    times = {}
    for spec in args.time or []:
        name, _, value = spec.partition("=")
        try:
            times[name] = float(value)
        except ValueError:
            raise InputError(f"--time wants NAME=SECONDS, got {spec!r}") from None
    report = compare_methods(
        per_method, gold, gz, tolerance_km=args.tolerance_km, times=times or None
    )
    report.to_tsv(args.out_prefix + ".tsv")
    report.to_json(args.out_prefix + ".json")
    print(
        f"evaluate: {len(gold)} gold queries, {len(report.excluded_queries)} excluded, "
        f"report -> {args.out_prefix}.tsv/.json"
    )
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topomatch",
        description=(
            "Fuzzy toponym matching and gazetteer candidate ranking. "
            "File formats: pair TSV 'string1<TAB>string2<TAB>TRUE|FALSE'; "
            "gazetteer TSV 'id<TAB>primary<TAB>lat<TAB>lon<TAB>altname'; "
            "gold TSV 'toponym<TAB>lat<TAB>lon'; queries: one per line; "
            "ranked output: JSON lines {query, candidates:[{altname, distance, "
            "location_ids}]}. Config file: flat 'key = value' lines (see README "
            "for every key); flags override config values."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-pairs", help="generate a balanced labeled pair dataset")
    p.add_argument("--mode", choices=("gazetteer", "ocr"), required=True)
    p.add_argument("--input", required=True, help="gazetteer TSV or aligned-token TSV")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sim-threshold", type=float, default=0.25,
                   help="similarity floor for challenging positives (gazetteer mode)")
    p.add_argument("--km-threshold", type=float, default=50.0,
                   help="exclusion radius for challenging negatives (gazetteer mode)")
    p.add_argument("--sample-size", type=int, default=50,
                   help="random sample size for trivial negatives (gazetteer mode)")
    p.set_defaults(func=cmd_gen_pairs)

    p = sub.add_parser("train", help="train a pair classifier from scratch")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--dataset", help="labeled pair TSV (overrides dataset_path)")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-epochs", type=int, dest="max_epochs")
    p.add_argument("--patience", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("finetune", help="continue training an existing checkpoint")
    p.add_argument("--config")
    p.add_argument("--model", help="parent checkpoint (overrides model_path)")
    p.add_argument("--dataset")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-epochs", type=int, dest="max_epochs")
    p.add_argument("--patience", type=int)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("inference", help="label a pair file with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="labeled pair TSV")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_inference)

    p = sub.add_parser("index", help="vectorize a gazetteer with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--gazetteer", required=True)
    p.add_argument("--out", required=True, help="index file path")
    p.add_argument("--threads", type=int, default=1,
                   help="worker parallelism; results are identical for any value")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("rank", help="rank gazetteer candidates for query toponyms")
    p.add_argument("--model", required=True)
    p.add_argument("--queries", required=True, help="one query per line")
    p.add_argument("-k", type=int, default=20)
    p.add_argument("--index", help="prebuilt index file")
    p.add_argument("--on-the-fly", action="store_true",
                   help="build the index in memory from --gazetteer")
    p.add_argument("--gazetteer")
    p.add_argument("--out", required=True, help="ranked JSONL output")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("baseline-rank", help="rank with a classical baseline")
    p.add_argument("--method", choices=("levdam", "exact"), required=True)
    p.add_argument("--gazetteer", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("-k", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline_rank)

    p = sub.add_parser("evaluate", help="compare ranked results against gold coordinates")
    p.add_argument("--gold", required=True, help="TSV: toponym, lat, lon")
    p.add_argument("--results", nargs="+", required=True, metavar="NAME=FILE")
    p.add_argument("--gazetteer", required=True)
    p.add_argument("--tolerance-km", type=float, default=10.0, dest="tolerance_km")
    p.add_argument("--time", nargs="*", metavar="NAME=SECONDS",
                   help="wall times to fill the report's time column")
    p.add_argument("--out-prefix", required=True, dest="out_prefix")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConsistencyError as exc:
        print(f"consistency error: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
