"""Dataset splitting, the training loop with per-epoch logging and early
stopping, fine-tuning of existing checkpoints, and file-level inference."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .evaluation import BinaryMetrics, binary_metrics
from .model import (
    AdamState,
    ModelCheckpoint,
    ModelConfig,
    backward_and_step,
    classify_pairs,
    init_model,
    loss_bce,
)
from .pairs import LabeledPair, read_pairs_file
from .preprocess import (
    EncodedString,
    PreprocessOptions,
    VocabularyMap,
    build_vocab,
    encode,
    normalize_string,
)


@dataclass(frozen=True)
class SplitSpec:
    """Train/validation/test ratios; defaults keep 10% held out and split
    the rest 80/20."""

    train_ratio: float = 0.72
    val_ratio: float = 0.18
    test_ratio: float = 0.10
    seed: int = 0

    def __post_init__(self) -> None:
        ratios = (self.train_ratio, self.val_ratio, self.test_ratio)
        if any(r < 0 for r in ratios):
            raise ValueError("split ratios must be non-negative")
        if abs(sum(ratios) - 1.0) > 1e-9:
            raise ValueError(f"split ratios must sum to 1, got {sum(ratios)}")


def _largest_remainder_sizes(n: int, ratios: tuple[float, ...]) -> list[int]:
    raw = [r * n for r in ratios]
    sizes = [int(x) for x in raw]
    remainder = n - sum(sizes)
    fractions = sorted(
        range(len(ratios)), key=lambda i: (-(raw[i] - sizes[i]), i)
    )
    for i in fractions[:remainder]:
        sizes[i] += 1
    return sizes


def split_dataset(
    pairs: list[LabeledPair], spec: SplitSpec
) -> tuple[list[LabeledPair], list[LabeledPair], list[LabeledPair]]:
    """Disjoint, exhaustive, seeded shuffle split with largest-remainder
    rounding. A split whose ratio is positive must receive at least one item."""
    if not pairs:
        raise InputError("cannot split an empty dataset")
    ratios = (spec.train_ratio, spec.val_ratio, spec.test_ratio)
    sizes = _largest_remainder_sizes(len(pairs), ratios)
    for size, ratio, name in zip(sizes, ratios, ("train", "val", "test")):
        if size == 0 and ratio > 0:
            raise InputError(f"{name} split would be empty at ratio {ratio}")
    perm = np.random.default_rng(spec.seed).permutation(len(pairs))
    out = []
    start = 0
    for size in sizes:
        out.append([pairs[i] for i in perm[start : start + size]])
        start += size
    return out[0], out[1], out[2]


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    train_metrics: BinaryMetrics
    val_metrics: BinaryMetrics


@dataclass
class EpochLog:
    records: list[EpochRecord] = field(default_factory=list)
    selected_epoch: int = 0

    _COLUMNS = (
        "epoch",
        "train_loss",
        "val_loss",
        "train_accuracy",
        "val_accuracy",
        "train_precision",
        "val_precision",
        "train_recall",
        "val_recall",
        "train_macro_f1",
        "val_macro_f1",
        "selected",
    )

    def to_tsv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\t".join(self._COLUMNS) + "\n")
            for r in self.records:
                cells = [
                    str(r.epoch),
                    f"{r.train_loss:.6f}",
                    f"{r.val_loss:.6f}",
                    f"{r.train_metrics.accuracy:.6f}",
                    f"{r.val_metrics.accuracy:.6f}",
                    f"{r.train_metrics.precision:.6f}",
                    f"{r.val_metrics.precision:.6f}",
                    f"{r.train_metrics.recall:.6f}",
                    f"{r.val_metrics.recall:.6f}",
                    f"{r.train_metrics.macro_f1:.6f}",
                    f"{r.val_metrics.macro_f1:.6f}",
                    "*" if r.epoch == self.selected_epoch else "",
                ]
                fh.write("\t".join(cells) + "\n")


class EarlyStopper:
    """Stop once validation loss has not improved for `patience`
    consecutive epochs; remembers the best epoch seen."""

    def __init__(self, patience: int):
        if patience < 1:
            raise ValueError("patience must be >= 1")
        self.patience = patience
        self.best_loss = float("inf")
        self.best_epoch = 0
        self.bad_epochs = 0

    def update(self, epoch: int, val_loss: float) -> bool:
        """Record an epoch; returns True when it improved on the best."""
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.bad_epochs = 0
            return True
        self.bad_epochs += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.bad_epochs >= self.patience


class _EncodedDataset:
    """Pairs normalized and encoded once; rows that normalize empty are
    dropped (callers are told how many)."""

    def __init__(self, pairs, vocab: VocabularyMap, opts: PreprocessOptions):
        self.enc1: list[EncodedString] = []
        self.enc2: list[EncodedString] = []
        labels = []
        self.dropped = 0
        for p in pairs:
            s1 = normalize_string(p.s1, opts)
            s2 = normalize_string(p.s2, opts)
            if s1 is None or s2 is None:
                self.dropped += 1
                continue
            self.enc1.append(encode(s1, vocab, opts))
            self.enc2.append(encode(s2, vocab, opts))
            labels.append(p.label)
        self.labels = np.array(labels, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.enc1)


def _evaluate_split(params, config, data: _EncodedDataset) -> tuple[float, BinaryMetrics]:
    probs = classify_pairs(params, config, data.enc1, data.enc2)
    loss = float(np.mean(loss_bce(probs, data.labels)))
    preds = [bool(p >= 0.5) for p in probs]
    labels = [bool(y) for y in data.labels]
    return loss, binary_metrics(preds, labels)


def _fit(
    params,
    config: ModelConfig,
    vocab: VocabularyMap,
    opts: PreprocessOptions,
    train_pairs: list[LabeledPair],
    val_pairs: list[LabeledPair],
    max_epochs: int,
    patience: int,
    seed: int,
    parent_fingerprint: str | None,
    learning_rate: float | None = None,
) -> tuple[ModelCheckpoint, EpochLog]:
    train_data = _EncodedDataset(train_pairs, vocab, opts)
    val_data = _EncodedDataset(val_pairs, vocab, opts)
    if len(train_data) == 0:
        raise InputError("training split is empty")
    if len(val_data) == 0:
        raise InputError("validation split is empty")

    adam = AdamState(params)
    rng = np.random.default_rng(seed)
    log = EpochLog()
    stopper = EarlyStopper(patience)
    best_params = params.copy()
    best_val_metrics: BinaryMetrics | None = None

    n = len(train_data)
    for epoch in range(1, max_epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            sel = order[start : start + config.batch_size]
            backward_and_step(
                params,
                adam,
                config,
                [train_data.enc1[i] for i in sel],
                [train_data.enc2[i] for i in sel],
                train_data.labels[sel],
                learning_rate if learning_rate is not None else config.learning_rate,
                rng,
            )
        train_loss, train_metrics = _evaluate_split(params, config, train_data)
        val_loss, val_metrics = _evaluate_split(params, config, val_data)
        log.records.append(EpochRecord(epoch, train_loss, val_loss, train_metrics, val_metrics))
        if stopper.update(epoch, val_loss):
            best_params = params.copy()
            best_val_metrics = val_metrics
        elif stopper.should_stop:
            break

    log.selected_epoch = stopper.best_epoch
    metrics = {"val_loss": stopper.best_loss}
    if best_val_metrics is not None:
        metrics.update({f"val_{k}": v for k, v in best_val_metrics.to_dict().items() if k != "zero_division"})
    checkpoint = ModelCheckpoint(
        config=config,
        params=best_params,
        vocab=vocab,
        preprocess=opts,
        epoch=stopper.best_epoch,
        metrics=metrics,
        parent_fingerprint=parent_fingerprint,
    )
    return checkpoint, log


def train(
    config: ModelConfig,
    opts: PreprocessOptions,
    pairs: list[LabeledPair],
    split: SplitSpec,
    max_epochs: int = 40,
    patience: int = 1,
    seed: int = 0,
) -> tuple[ModelCheckpoint, EpochLog, list[LabeledPair]]:
    """Train from scratch; returns (checkpoint, log, held-out test pairs).

    The vocabulary is built from the train and validation strings; test and
    future data may hit UNK. Stops once validation loss has failed to
    improve for `patience` consecutive epochs and returns the parameters of
    the best-validation-loss epoch.
    """
    train_pairs, val_pairs, test_pairs = split_dataset(pairs, split)
    corpus = []
    for p in train_pairs + val_pairs:
        for s in (p.s1, p.s2):
            norm = normalize_string(s, opts)
            if norm is not None:
                corpus.append(norm)
    if not corpus:
        raise InputError("no usable training strings after normalization")
    vocab = build_vocab(corpus)
    params = init_model(config, vocab, seed)
    checkpoint, log = _fit(
        params, config, vocab, opts, train_pairs, val_pairs,
        max_epochs, patience, seed, parent_fingerprint=None,
    )
    return checkpoint, log, test_pairs


def finetune(
    checkpoint: ModelCheckpoint,
    pairs: list[LabeledPair],
    split: SplitSpec,
    max_epochs: int = 40,
    patience: int = 1,
    seed: int = 0,
    learning_rate: float | None = None,
) -> tuple[ModelCheckpoint, EpochLog]:
    """Continue training an existing checkpoint on a new dataset.

    The vocabulary stays frozen (new characters encode as UNK) and the
    optimizer state starts fresh; the parent checkpoint's fingerprint is
    recorded for provenance. learning_rate overrides the checkpoint's
    configured rate when given.
    """
    parent = checkpoint.fingerprint
    if max_epochs == 0:
        clone = ModelCheckpoint(
            config=checkpoint.config,
            params=checkpoint.params.copy(),
            vocab=checkpoint.vocab,
            preprocess=checkpoint.preprocess,
            epoch=0,
            metrics={},
            parent_fingerprint=parent,
        )
        return clone, EpochLog()
    train_pairs, val_pairs, _ = split_dataset(pairs, split)
    params = checkpoint.params.copy()
    return _fit(
        params, checkpoint.config, checkpoint.vocab, checkpoint.preprocess,
        train_pairs, val_pairs, max_epochs, patience, seed,
        parent_fingerprint=parent, learning_rate=learning_rate,
    )


@dataclass
class InferenceResult:
    pairs: list[LabeledPair]
    probabilities: np.ndarray
    predictions: list[bool]
    metrics: BinaryMetrics
    loss: float


def infer(checkpoint: ModelCheckpoint, pairs_path: str | Path) -> InferenceResult:
    """Eval-mode predictions plus aggregate metrics for a labeled pair file."""
    pairs = read_pairs_file(pairs_path)
    if not pairs:
        raise InputError(f"no pairs in {pairs_path}")
    opts = checkpoint.preprocess
    vocab = checkpoint.vocab
    enc1, enc2 = [], []
    for i, p in enumerate(pairs, start=1):
        s1 = normalize_string(p.s1, opts)
        s2 = normalize_string(p.s2, opts)
        if s1 is None or s2 is None:
            raise InputError(f"pair {i}: empty string after normalization")
        enc1.append(encode(s1, vocab, opts))
        enc2.append(encode(s2, vocab, opts))
    probs = classify_pairs(checkpoint.params, checkpoint.config, enc1, enc2)
    labels = [p.label for p in pairs]
    preds = [bool(p >= 0.5) for p in probs]
    loss = float(np.mean(loss_bce(probs, np.array(labels, dtype=np.float64))))
    return InferenceResult(
        pairs=pairs,
        probabilities=probs.astype(np.float64),
        predictions=preds,
        metrics=binary_metrics(preds, labels),
        loss=loss,
    )


def write_inference_tsv(result: InferenceResult, path: str | Path) -> None:
    """Inputs plus probability and predicted label, one row per pair."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p, prob, pred in zip(result.pairs, result.probabilities, result.predictions):
            label = "TRUE" if p.label else "FALSE"
            predicted = "TRUE" if pred else "FALSE"
            fh.write(f"{p.s1}\t{p.s2}\t{label}\t{prob!r}\t{predicted}\n")
