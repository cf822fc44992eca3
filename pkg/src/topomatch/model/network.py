"""Forward and backward passes of the siamese recurrent pair classifier.

All numerics are hand-written numpy. Gradients are exact analytic
derivatives of the mean binary cross-entropy of a pair batch; they are
pinned by finite-difference tests rather than an autodiff framework.

Two execution disciplines coexist:

* training: variable batch geometry, dropout, gradient caches;
* evaluation: every string is encoded inside a constant-shape batch of
  EVAL_BATCH rows (short chunks are padded with copies of the last row and
  the padding outputs discarded).  With fixed GEMM shapes a row's result is
  bit-identical no matter which other strings share its batch, which is
  what makes vector indexes reproducible and self-distances exactly zero.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericError
from ..preprocess import PAD_INDEX, EncodedString, VocabularyMap
from .config import ModelConfig

EVAL_BATCH = 64

_GATES = {"gru": 3, "lstm": 4, "rnn": 1}


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # exp overflow for very negative inputs saturates to exactly 0, which is
    # the correct limit; silence the spurious warning
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


class ModelParameters:
    """Named parameter arrays with a single shared storage.

    Both branches of the siamese network read the same arrays; there is no
    copy to keep in sync.
    """

    def __init__(self, arrays: dict[str, np.ndarray]):
        self.arrays = arrays

    @property
    def dtype(self) -> np.dtype:
        return self.arrays["embedding"].dtype

    def names(self) -> list[str]:
        return list(self.arrays)

    def copy(self) -> "ModelParameters":
        return ModelParameters({k: v.copy() for k, v in self.arrays.items()})

    def astype(self, dtype) -> "ModelParameters":
        return ModelParameters({k: v.astype(dtype) for k, v in self.arrays.items()})

    def check_finite(self) -> None:
        for name, a in self.arrays.items():
            if not np.all(np.isfinite(a)):
                raise NumericError(f"non-finite values in parameter {name!r}")

    def total_size(self) -> int:
        return sum(a.size for a in self.arrays.values())

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.arrays.items()}


def _direction_names(config: ModelConfig) -> tuple[str, ...]:
    return ("f", "b") if config.bidirectional else ("f",)


def recurrent_param_names(config: ModelConfig) -> list[str]:
    names = []
    for layer in range(config.num_layers):
        for d in _direction_names(config):
            for part in ("w_ih", "w_hh", "b_ih", "b_hh"):
                names.append(f"rnn.l{layer}.{d}.{part}")
    return names


def init_model(
    config: ModelConfig,
    vocab: VocabularyMap,
    seed: int,
    dtype=np.float32,
) -> ModelParameters:
    """Initialize parameters deterministically from a seed.

    Embedding rows are uniform in +-0.1 with the PAD row forced to zero;
    all recurrent and feedforward parameters are uniform in
    +-1/sqrt(hidden_dim).
    """
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(config.hidden_dim)
    g = config.num_gates
    h = config.hidden_dim
    arrays: dict[str, np.ndarray] = {}

    emb = rng.uniform(-0.1, 0.1, size=(vocab.size, config.embedding_dim))
    emb[PAD_INDEX] = 0.0
    arrays["embedding"] = emb.astype(dtype)

    for layer in range(config.num_layers):
        in_dim = config.layer_input_dim(layer)
        for d in _direction_names(config):
            prefix = f"rnn.l{layer}.{d}"
            arrays[f"{prefix}.w_ih"] = rng.uniform(-bound, bound, (in_dim, g * h)).astype(dtype)
            arrays[f"{prefix}.w_hh"] = rng.uniform(-bound, bound, (h, g * h)).astype(dtype)
            arrays[f"{prefix}.b_ih"] = rng.uniform(-bound, bound, g * h).astype(dtype)
            arrays[f"{prefix}.b_hh"] = rng.uniform(-bound, bound, g * h).astype(dtype)

    d_vec = config.vector_dim
    arrays["ff.w1"] = rng.uniform(-bound, bound, (d_vec, config.ff_hidden_dim)).astype(dtype)
    arrays["ff.b1"] = rng.uniform(-bound, bound, config.ff_hidden_dim).astype(dtype)
    arrays["ff.w2"] = rng.uniform(-bound, bound, (config.ff_hidden_dim, 1)).astype(dtype)
    arrays["ff.b2"] = rng.uniform(-bound, bound, 1).astype(dtype)
    return ModelParameters(arrays)


def count_params(config: ModelConfig, vocab: VocabularyMap) -> int:
    """Closed-form parameter count matching init_model exactly."""
    g = config.num_gates
    h = config.hidden_dim
    total = vocab.size * config.embedding_dim
    for layer in range(config.num_layers):
        in_dim = config.layer_input_dim(layer)
        per_direction = g * (h * in_dim + h * h + 2 * h)
        total += per_direction * config.num_directions
    total += config.vector_dim * config.ff_hidden_dim + config.ff_hidden_dim
    total += config.ff_hidden_dim + 1
    return total


# ---------------------------------------------------------------------------
# recurrent cells: one time step, batched
# ---------------------------------------------------------------------------


def _step_gru(x_t, h, w_ih, w_hh, b_ih, b_hh, hd):
    gi = x_t @ w_ih + b_ih
    gh = h @ w_hh + b_hh
    r = _sigmoid(gi[:, :hd] + gh[:, :hd])
    z = _sigmoid(gi[:, hd : 2 * hd] + gh[:, hd : 2 * hd])
    gh_n = gh[:, 2 * hd :]
    n = np.tanh(gi[:, 2 * hd :] + r * gh_n)
    h_new = (1.0 - z) * n + z * h
    return h_new, (r, z, n, gh_n)


def _step_lstm(x_t, s, w_ih, w_hh, b_ih, b_hh, hd):
    h, c = s
    pre = x_t @ w_ih + b_ih + h @ w_hh + b_hh
    i = _sigmoid(pre[:, :hd])
    f = _sigmoid(pre[:, hd : 2 * hd])
    g = np.tanh(pre[:, 2 * hd : 3 * hd])
    o = _sigmoid(pre[:, 3 * hd :])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    return (h_new, c_new), (i, f, g, o, tc)


def _step_rnn(x_t, h, w_ih, w_hh, b_ih, b_hh, hd):
    h_new = np.tanh(x_t @ w_ih + b_ih + h @ w_hh + b_hh)
    return h_new, ()


# ---------------------------------------------------------------------------
# one direction of one layer over a batch of sequences
# ---------------------------------------------------------------------------


class _DirectionCache:
    __slots__ = ("h_seq", "c_seq", "gates")

    def __init__(self, h_seq, c_seq, gates):
        self.h_seq = h_seq
        self.c_seq = c_seq
        self.gates = gates


def _run_direction(config, x, lengths, w_ih, w_hh, b_ih, b_hh, reverse, want_cache):
    """Run one direction over positions 0..T-1 with length masking.

    A row's state freezes (bitwise copy) on steps at or beyond its true
    length, so padding never influences the result and the recorded state
    sequence is independent of the batch's padded length.
    """
    B, T, _ = x.shape
    hd = config.hidden_dim
    dtype = x.dtype
    kind = config.rnn_type
    h = np.zeros((B, hd), dtype=dtype)
    c = np.zeros((B, hd), dtype=dtype) if kind == "lstm" else None
    h_seq = np.empty((B, T, hd), dtype=dtype)
    c_seq = np.empty((B, T, hd), dtype=dtype) if (kind == "lstm" and want_cache) else None
    gates: list = [None] * T if want_cache else None
    order = range(T - 1, -1, -1) if reverse else range(T)

    for t in order:
        active = (lengths > t)[:, None]
        x_t = x[:, t]
        if kind == "gru":
            h_new, gate = _step_gru(x_t, h, w_ih, w_hh, b_ih, b_hh, hd)
            h = np.where(active, h_new, h)
        elif kind == "lstm":
            (h_new, c_new), gate = _step_lstm(x_t, (h, c), w_ih, w_hh, b_ih, b_hh, hd)
            h = np.where(active, h_new, h)
            c = np.where(active, c_new, c)
            if c_seq is not None:
                c_seq[:, t] = c
        else:
            h_new, gate = _step_rnn(x_t, h, w_ih, w_hh, b_ih, b_hh, hd)
            h = np.where(active, h_new, h)
        h_seq[:, t] = h
        if want_cache:
            gates[t] = gate
    return h_seq, _DirectionCache(h_seq, c_seq, gates)


def _backward_direction(config, dh_seq, x, lengths, w_ih, w_hh, cache, reverse, grads, prefix):
    """Backpropagate one direction; returns gradient w.r.t. the layer input."""
    B, T, _ = x.shape
    hd = config.hidden_dim
    dtype = x.dtype
    kind = config.rnn_type
    h_seq = cache.h_seq
    zeros_h = np.zeros((B, hd), dtype=dtype)
    dh = np.zeros((B, hd), dtype=dtype)
    dc = np.zeros((B, hd), dtype=dtype) if kind == "lstm" else None
    dx = np.zeros_like(x)
    dw_ih = grads[f"{prefix}.w_ih"]
    dw_hh = grads[f"{prefix}.w_hh"]
    db_ih = grads[f"{prefix}.b_ih"]
    db_hh = grads[f"{prefix}.b_hh"]

    order = range(T - 1, -1, -1) if reverse else range(T)
    for t in reversed(order):
        active = (lengths > t)[:, None]
        prev_t = t + 1 if reverse else t - 1
        h_prev = h_seq[:, prev_t] if 0 <= prev_t < T else zeros_h
        dh_tot = dh + dh_seq[:, t]
        x_t = x[:, t]

        if kind == "gru":
            r, z, n, gh_n = cache.gates[t]
            dn = dh_tot * (1.0 - z)
            dz = dh_tot * (h_prev - n)
            dpre_n = dn * (1.0 - n * n)
            dr = dpre_n * gh_n
            dpre_r = dr * r * (1.0 - r)
            dpre_z = dz * z * (1.0 - z)
            dgi = np.concatenate([dpre_r, dpre_z, dpre_n], axis=1)
            dgh = np.concatenate([dpre_r, dpre_z, dpre_n * r], axis=1)
            dgi *= active
            dgh *= active
            dh_prev_cell = dh_tot * z + dgh @ w_hh.T
        elif kind == "lstm":
            i, f, g, o, tc = cache.gates[t]
            if reverse:
                c_prev = cache.c_seq[:, t + 1] if t + 1 < T else zeros_h
            else:
                c_prev = cache.c_seq[:, t - 1] if t >= 1 else zeros_h
            do = dh_tot * tc
            dc_tot = dc + dh_tot * o * (1.0 - tc * tc)
            di = dc_tot * g
            dg = dc_tot * i
            df = dc_tot * c_prev
            dpre = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g * g),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            dpre *= active
            dgi = dpre
            dgh = dpre
            dh_prev_cell = dgh @ w_hh.T
            dc = np.where(active, dc_tot * f, dc)
        else:
            h_t = h_seq[:, t]  # equals tanh(pre) on active rows
            dpre = dh_tot * (1.0 - h_t * h_t)
            dpre *= active
            dgi = dpre
            dgh = dpre
            dh_prev_cell = dgh @ w_hh.T

        dw_ih += x_t.T @ dgi
        db_ih += dgi.sum(axis=0)
        dw_hh += h_prev.T @ dgh
        db_hh += dgh.sum(axis=0)
        dx[:, t] = dgi @ w_ih.T
        dh = np.where(active, dh_prev_cell, dh_tot)
    return dx


# ---------------------------------------------------------------------------
# full encoder: embedding + stacked (bi)directional recurrence
# ---------------------------------------------------------------------------


class _EncodeCache:
    __slots__ = ("indices", "lengths", "emb_mask", "layer_inputs", "layer_masks", "dir_caches")

    def __init__(self):
        self.indices = None
        self.lengths = None
        self.emb_mask = None
        self.layer_inputs = []
        self.layer_masks = []
        self.dir_caches = []


def _dropout_mask(rng, shape, p, dtype):
    keep = rng.random(shape) >= p
    return keep.astype(dtype) / dtype.type(1.0 - p)


def encode_batch(
    params: ModelParameters,
    config: ModelConfig,
    indices: np.ndarray,
    lengths: np.ndarray,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
    want_cache: bool = False,
):
    """Encode a padded index batch into per-string vectors of vector_dim.

    Only positions 0..true_length-1 of each row influence its vector.
    Returns (vectors, cache); cache is None unless requested.
    """
    dtype = params.dtype
    drop = train_mode and config.dropout_p > 0.0
    if drop and rng is None:
        raise ValueError("train-mode dropout needs an rng")
    cache = _EncodeCache() if want_cache else None
    x = params.arrays["embedding"][indices]
    if drop:
        mask = _dropout_mask(rng, x.shape, config.dropout_p, np.dtype(dtype))
        x = x * mask
        if want_cache:
            cache.emb_mask = mask
    if want_cache:
        cache.indices = indices
        cache.lengths = lengths

    B = indices.shape[0]
    final_f = None
    final_b = None
    for layer in range(config.num_layers):
        if want_cache:
            cache.layer_inputs.append(x)
        outs = []
        layer_dirs = []
        for d in _direction_names(config):
            prefix = f"rnn.l{layer}.{d}"
            h_seq, dcache = _run_direction(
                config,
                x,
                lengths,
                params.arrays[f"{prefix}.w_ih"],
                params.arrays[f"{prefix}.w_hh"],
                params.arrays[f"{prefix}.b_ih"],
                params.arrays[f"{prefix}.b_hh"],
                reverse=(d == "b"),
                want_cache=want_cache,
            )
            outs.append(h_seq)
            layer_dirs.append(dcache)
        if want_cache:
            cache.dir_caches.append(layer_dirs)
        out = outs[0] if len(outs) == 1 else np.concatenate(outs, axis=2)
        if not np.all(np.isfinite(out)):
            raise NumericError(f"non-finite activation in recurrent layer {layer}")
        final_f = outs[0]
        final_b = outs[1] if len(outs) == 2 else None
        if layer < config.num_layers - 1:
            if drop:
                mask = _dropout_mask(rng, out.shape, config.dropout_p, np.dtype(dtype))
                out = out * mask
                if want_cache:
                    cache.layer_masks.append(mask)
            elif want_cache:
                cache.layer_masks.append(None)
            x = out

    rows = np.arange(B)
    vec_f = final_f[rows, lengths - 1]
    if final_b is not None:
        vectors = np.concatenate([vec_f, final_b[:, 0]], axis=1)
    else:
        vectors = vec_f.copy()
    return vectors, cache


def encode_backward(
    params: ModelParameters,
    config: ModelConfig,
    dvec: np.ndarray,
    cache: _EncodeCache,
    grads: dict[str, np.ndarray],
) -> None:
    """Accumulate parameter gradients for one encoder branch."""
    hd = config.hidden_dim
    lengths = cache.lengths
    B, T = cache.indices.shape[0], cache.indices.shape[1]
    rows = np.arange(B)
    dtype = dvec.dtype

    dh_f = np.zeros((B, T, hd), dtype=dtype)
    dh_f[rows, lengths - 1] = dvec[:, :hd]
    if config.bidirectional:
        dh_b = np.zeros((B, T, hd), dtype=dtype)
        dh_b[:, 0] = dvec[:, hd:]
    else:
        dh_b = None

    for layer in range(config.num_layers - 1, -1, -1):
        x = cache.layer_inputs[layer]
        dir_caches = cache.dir_caches[layer]
        dx = _backward_direction(
            config, dh_f, x, lengths,
            params.arrays[f"rnn.l{layer}.f.w_ih"],
            params.arrays[f"rnn.l{layer}.f.w_hh"],
            dir_caches[0], False, grads, f"rnn.l{layer}.f",
        )
        if config.bidirectional:
            dx += _backward_direction(
                config, dh_b, x, lengths,
                params.arrays[f"rnn.l{layer}.b.w_ih"],
                params.arrays[f"rnn.l{layer}.b.w_hh"],
                dir_caches[1], True, grads, f"rnn.l{layer}.b",
            )
        if layer > 0:
            mask = cache.layer_masks[layer - 1]
            if mask is not None:
                dx = dx * mask
            dh_f = np.ascontiguousarray(dx[:, :, :hd])
            dh_b = np.ascontiguousarray(dx[:, :, hd:]) if config.bidirectional else None
        else:
            if cache.emb_mask is not None:
                dx = dx * cache.emb_mask
            np.add.at(grads["embedding"], cache.indices, dx)


# ---------------------------------------------------------------------------
# pair combination and classifier head
# ---------------------------------------------------------------------------


def combine(h1: np.ndarray, h2: np.ndarray) -> np.ndarray:
    """Elementwise 1 - (h1 - h2)^2; symmetric in its arguments."""
    if h1.shape != h2.shape:
        raise ValueError(f"dimension mismatch: {h1.shape} vs {h2.shape}")
    diff = h1 - h2
    return 1.0 - diff * diff


class _HeadCache:
    __slots__ = ("h1", "h2", "c_raw", "c_in", "drop_mask", "a1", "r1")

    def __init__(self, h1, h2, c_raw, c_in, drop_mask, a1, r1):
        self.h1 = h1
        self.h2 = h2
        self.c_raw = c_raw
        self.c_in = c_in
        self.drop_mask = drop_mask
        self.a1 = a1
        self.r1 = r1


def head_forward(params, config, h1, h2, train_mode=False, rng=None, want_cache=False):
    """Combined vector -> ReLU hidden layer -> sigmoid output probability."""
    c_raw = combine(h1, h2)
    drop_mask = None
    c_in = c_raw
    if train_mode and config.dropout_p > 0.0:
        drop_mask = _dropout_mask(rng, c_raw.shape, config.dropout_p, np.dtype(params.dtype))
        c_in = c_raw * drop_mask
    a1 = c_in @ params.arrays["ff.w1"] + params.arrays["ff.b1"]
    r1 = np.maximum(a1, 0.0)
    logit = r1 @ params.arrays["ff.w2"] + params.arrays["ff.b2"]
    p = _sigmoid(logit[:, 0])
    cache = _HeadCache(h1, h2, c_raw, c_in, drop_mask, a1, r1) if want_cache else None
    return p, cache


def head_backward(params, dlogit, cache, grads):
    """Backprop the head; returns (dh1, dh2) for the two branches."""
    grads["ff.w2"] += cache.r1.T @ dlogit
    grads["ff.b2"] += dlogit.sum(axis=0)
    dr1 = dlogit @ params.arrays["ff.w2"].T
    da1 = dr1 * (cache.a1 > 0)
    grads["ff.w1"] += cache.c_in.T @ da1
    grads["ff.b1"] += da1.sum(axis=0)
    dc = da1 @ params.arrays["ff.w1"].T
    if cache.drop_mask is not None:
        dc = dc * cache.drop_mask
    diff = cache.h1 - cache.h2
    dh1 = dc * (-2.0 * diff)
    return dh1, -dh1


def loss_bce(p, label) -> float | np.ndarray:
    """Binary cross-entropy with probability clamped to [1e-7, 1 - 1e-7]."""
    p = np.clip(p, 1e-7, 1.0 - 1e-7)
    y = np.asarray(label, dtype=np.float64)
    return -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))


# ---------------------------------------------------------------------------
# batches of encoded pairs
# ---------------------------------------------------------------------------


def stack_encodings(encodings: list[EncodedString]) -> tuple[np.ndarray, np.ndarray]:
    """Stack EncodedStrings into (indices, lengths), trimming the time axis
    to the batch's longest true length."""
    lengths = np.array([e.true_length for e in encodings], dtype=np.int64)
    t_max = int(lengths.max())
    indices = np.stack([e.indices[:t_max] for e in encodings]).astype(np.int64)
    return indices, lengths


def pair_loss_and_grads(
    params: ModelParameters,
    config: ModelConfig,
    enc1: list[EncodedString],
    enc2: list[EncodedString],
    labels: np.ndarray,
    rng: np.random.Generator | None = None,
    train_mode: bool = True,
):
    """Mean pair BCE and exact gradients for every parameter.

    Both branches accumulate into a single gradient dict, mirroring the
    shared parameter storage.
    """
    idx1, len1 = stack_encodings(enc1)
    idx2, len2 = stack_encodings(enc2)
    v1, cache1 = encode_batch(params, config, idx1, len1, train_mode, rng, want_cache=True)
    v2, cache2 = encode_batch(params, config, idx2, len2, train_mode, rng, want_cache=True)
    p, hcache = head_forward(params, config, v1, v2, train_mode, rng, want_cache=True)
    y = np.asarray(labels, dtype=params.dtype)
    loss = float(np.mean(loss_bce(p, y)))

    grads = params.zeros_like()
    b = p.shape[0]
    dlogit = ((p - y) / b).astype(params.dtype)[:, None]
    dh1, dh2 = head_backward(params, dlogit, hcache, grads)
    encode_backward(params, config, dh1, cache1, grads)
    encode_backward(params, config, dh2, cache2, grads)
    return loss, grads


def backward_and_step(params, adam, config, enc1, enc2, labels, learning_rate, rng):
    """One optimization step; returns the mean batch loss."""
    loss, grads = pair_loss_and_grads(params, config, enc1, enc2, labels, rng, train_mode=True)
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {name!r}")
    adam.step(params, grads, learning_rate)
    return loss


# ---------------------------------------------------------------------------
# evaluation-mode encoding with constant batch geometry
# ---------------------------------------------------------------------------


def encode_strings(
    params: ModelParameters,
    config: ModelConfig,
    encodings: list[EncodedString],
    threads: int = 1,
) -> np.ndarray:
    """Vectorize strings in eval mode.

    Chunks of exactly EVAL_BATCH rows keep every GEMM shape constant, so a
    string's vector does not depend on its companions (bitwise). Chunks are
    independent; `threads` parallelizes them without changing any bit.
    """
    n = len(encodings)
    if n == 0:
        return np.zeros((0, config.vector_dim), dtype=params.dtype)
    out = np.empty((n, config.vector_dim), dtype=params.dtype)

    def run_chunk(start: int) -> None:
        chunk = encodings[start : start + EVAL_BATCH]
        real = len(chunk)
        if real < EVAL_BATCH:
            chunk = chunk + [chunk[-1]] * (EVAL_BATCH - real)
        idx, lens = stack_encodings(chunk)
        vecs, _ = encode_batch(params, config, idx, lens, train_mode=False)
        out[start : start + real] = vecs[:real]

    starts = list(range(0, n, EVAL_BATCH))
    if threads <= 1 or len(starts) <= 1:
        for start in starts:
            run_chunk(start)
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_chunk, starts))
    return out


def encode_string(params: ModelParameters, config: ModelConfig, enc: EncodedString) -> np.ndarray:
    """Vector of a single string (same bits as inside any batch)."""
    return encode_strings(params, config, [enc])[0]


def classify_pairs(
    params: ModelParameters,
    config: ModelConfig,
    enc1: list[EncodedString],
    enc2: list[EncodedString],
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Match probabilities for aligned pair lists (eval mode by default)."""
    if len(enc1) != len(enc2):
        raise ValueError("pair lists must have equal length")
    if train_mode:
        idx1, len1 = stack_encodings(enc1)
        idx2, len2 = stack_encodings(enc2)
        v1, _ = encode_batch(params, config, idx1, len1, True, rng)
        v2, _ = encode_batch(params, config, idx2, len2, True, rng)
        p, _ = head_forward(params, config, v1, v2, True, rng)
        return p
    v1 = encode_strings(params, config, enc1)
    v2 = encode_strings(params, config, enc2)
    n = len(enc1)
    out = np.empty(n, dtype=params.dtype)
    for start in range(0, n, EVAL_BATCH):
        end = min(start + EVAL_BATCH, n)
        real = end - start
        a = v1[start:end]
        b = v2[start:end]
        if real < EVAL_BATCH:
            pad = EVAL_BATCH - real
            a = np.concatenate([a, np.repeat(a[-1:], pad, axis=0)])
            b = np.concatenate([b, np.repeat(b[-1:], pad, axis=0)])
        p, _ = head_forward(params, config, a, b)
        out[start:end] = p[:real]
    return out


def classify_pair(
    params: ModelParameters,
    config: ModelConfig,
    enc1: EncodedString,
    enc2: EncodedString,
) -> float:
    """Eval-mode probability that a single pair matches."""
    return float(classify_pairs(params, config, [enc1], [enc2])[0])
