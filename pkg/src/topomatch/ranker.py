"""Gazetteer vectorization and exact top-k candidate ranking by L2 distance.

The vector index is built once per (model, gazetteer); queries are then a
single matrix product plus a per-query partial selection. Selection uses
squared distances from the norm expansion; the reported distances of the
selected pool are recomputed directly, so a query identical to an indexed
name comes back at distance exactly 0.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, InputError
from .gazetteer import Gazetteer
from .model import ModelCheckpoint, encode_strings
from .preprocess import PreprocessOptions, encode, normalize_string
from .results import Candidate, RankedCandidates

INDEX_MAGIC = b"DZVIX1"
INDEX_VERSION = 1


@dataclass
class VectorIndex:
    """Dense altname vectors plus row metadata and the producing model's
    fingerprint."""

    vectors: np.ndarray  # float32, shape (N, D)
    altnames: list[str]
    location_ids: list[tuple[str, ...]]
    fingerprint: str
    preprocess: PreprocessOptions

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2:
            raise ValueError("index vectors must be a 2-D matrix")
        if self.vectors.dtype != np.float32:
            raise ValueError("index vectors must be float32")
        n = self.vectors.shape[0]
        if len(self.altnames) != n or len(self.location_ids) != n:
            raise ValueError("row metadata length must match the matrix")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]


def build_index(
    checkpoint: ModelCheckpoint, gazetteer: Gazetteer, threads: int = 1
) -> VectorIndex:
    """Vectorize every unique normalized altname in eval mode."""
    altnames = gazetteer.unique_altnames()
    if not altnames:
        raise InputError("gazetteer has no usable altnames")
    opts = checkpoint.preprocess
    encs = []
    for name in altnames:
        s = normalize_string(name, opts)
        if s is None:
            raise InputError(f"altname {name!r} is empty after normalization")
        encs.append(encode(s, checkpoint.vocab, opts))
    vectors = encode_strings(
        checkpoint.params, checkpoint.config, encs, threads=threads
    ).astype(np.float32, copy=False)
    return VectorIndex(
        vectors=np.ascontiguousarray(vectors),
        altnames=altnames,
        location_ids=[gazetteer.alt_index[name] for name in altnames],
        fingerprint=checkpoint.fingerprint,
        preprocess=opts,
    )


def vectorize_queries(checkpoint: ModelCheckpoint, queries: list[str]) -> np.ndarray:
    """Vectors for query strings, in input order."""
    if not queries:
        return np.zeros((0, checkpoint.config.vector_dim), dtype=np.float32)
    opts = checkpoint.preprocess
    encs = []
    for i, q in enumerate(queries):
        s = normalize_string(q, opts)
        if s is None:
            raise InputError(f"query {i + 1} ({q!r}) is empty after normalization")
        encs.append(encode(s, checkpoint.vocab, opts))
    return encode_strings(checkpoint.params, checkpoint.config, encs).astype(
        np.float32, copy=False
    )


def _rank_rows(
    index: VectorIndex,
    query_vectors: np.ndarray,
    queries: list[str],
    k: int,
    x_norms: np.ndarray,
) -> list[RankedCandidates]:
    x = index.vectors
    n = len(index)
    kk = min(k, n)
    q_norms = np.einsum("ij,ij->i", query_vectors, query_vectors)
    scores = x_norms[None, :] - 2.0 * (query_vectors @ x.T) + q_norms[:, None]
    out = []
    for row, query in enumerate(queries):
        s = scores[row]
        if kk < n:
            part = np.argpartition(s, kk - 1)[:kk]
            thresh = float(s[part].max())
            # generous slack: the float32 expansion may misorder near-ties,
            # the exact recomputation below restores the true order
            pool = np.flatnonzero(s <= thresh + 1e-3 * max(1.0, abs(thresh)))
        else:
            pool = np.arange(n)
        diff = (x[pool] - query_vectors[row]).astype(np.float64)
        exact = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        order = sorted(range(len(pool)), key=lambda t: (exact[t], index.altnames[pool[t]]))
        items = [
            Candidate(
                altname=index.altnames[pool[t]],
                distance=float(exact[t]),
                location_ids=index.location_ids[pool[t]],
            )
            for t in order[:kk]
        ]
        out.append(RankedCandidates(query=query, items=items, k=k))
    return out


def rank(
    index: VectorIndex,
    query_vectors: np.ndarray,
    k: int,
    queries: list[str] | None = None,
    threads: int = 1,
    block: int = 64,
) -> list[RankedCandidates]:
    """Exact k smallest L2 distances per query via full scan.

    Ties resolve by altname; asking for more rows than the index holds
    returns everything. Results do not depend on `threads`.
    """
    if k < 1:
        raise InputError("k must be >= 1")
    if query_vectors.ndim != 2 or query_vectors.shape[1] != index.dim:
        raise ConsistencyError(
            f"query dimension {query_vectors.shape} does not match index dim {index.dim}"
        )
    m = query_vectors.shape[0]
    if queries is None:
        queries = [str(i) for i in range(m)]
    if len(queries) != m:
        raise InputError("query text list does not match the vector matrix")
    x_norms = np.einsum("ij,ij->i", index.vectors, index.vectors)
    blocks = [
        (query_vectors[s : s + block], queries[s : s + block])
        for s in range(0, m, block)
    ]
    if threads <= 1 or len(blocks) <= 1:
        results = [_rank_rows(index, qv, qs, k, x_norms) for qv, qs in blocks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(lambda b: _rank_rows(index, b[0], b[1], k, x_norms), blocks)
            )
    return [r for chunk in results for r in chunk]


def rank_on_the_fly(
    checkpoint: ModelCheckpoint,
    index: VectorIndex,
    raw_queries: list[str],
    k: int,
    threads: int = 1,
) -> list[RankedCandidates]:
    """Vectorize then rank; refuses an index from a different model."""
    if index.fingerprint != checkpoint.fingerprint:
        raise ConsistencyError(
            "index fingerprint does not match the checkpoint; "
            "rebuild the index with this model"
        )
    qv = vectorize_queries(checkpoint, raw_queries)
    return rank(index, qv, k, queries=raw_queries, threads=threads)


# ---------------------------------------------------------------------------
# persistence: binary matrix + JSON-lines metadata sidecar
# ---------------------------------------------------------------------------


def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.jsonl")


def save_index(index: VectorIndex, path: str | Path) -> None:
    path = Path(path)
    n, d = index.vectors.shape
    with open(path, "wb") as fh:
        fh.write(INDEX_MAGIC)
        fh.write(np.uint32(INDEX_VERSION).tobytes())
        fh.write(np.uint64(n).tobytes())
        fh.write(np.uint32(d).tobytes())
        fh.write(np.ascontiguousarray(index.vectors, dtype="<f4").tobytes())
    with open(_meta_path(path), "w", encoding="utf-8", newline="\n") as fh:
        header = {
            "fingerprint": index.fingerprint,
            "preprocess": index.preprocess.to_dict(),
            "rows": n,
            "dim": d,
        }
        fh.write(json.dumps(header, ensure_ascii=False, sort_keys=True) + "\n")
        for altname, ids in zip(index.altnames, index.location_ids):
            fh.write(
                json.dumps(
                    {"altname": altname, "location_ids": list(ids)},
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )


def load_index(path: str | Path) -> VectorIndex:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"index file not found: {path}")
    meta_file = _meta_path(path)
    if not meta_file.is_file():
        raise InputError(f"index metadata sidecar not found: {meta_file}")
    with open(path, "rb") as fh:
        magic = fh.read(len(INDEX_MAGIC))
        if magic != INDEX_MAGIC:
            raise InputError(f"{path} is not a vector index (bad magic)")
        version = int(np.frombuffer(fh.read(4), dtype=np.uint32)[0])
        if version != INDEX_VERSION:
            raise InputError(f"unsupported index version {version}")
        n = int(np.frombuffer(fh.read(8), dtype=np.uint64)[0])
        d = int(np.frombuffer(fh.read(4), dtype=np.uint32)[0])
        payload = fh.read()
    expected = n * d * 4
    if len(payload) != expected:
        raise ConsistencyError(f"index payload is {len(payload)} bytes, expected {expected}")
    vectors = np.frombuffer(payload, dtype="<f4").reshape(n, d).copy()

    altnames: list[str] = []
    location_ids: list[tuple[str, ...]] = []
    with open(meta_file, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("rows") != n or header.get("dim") != d:
            raise ConsistencyError("index metadata header disagrees with the binary file")
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            altnames.append(obj["altname"])
            location_ids.append(tuple(obj["location_ids"]))
    if len(altnames) != n:
        raise ConsistencyError(f"metadata has {len(altnames)} rows, index has {n}")
    return VectorIndex(
        vectors=vectors,
        altnames=altnames,
        location_ids=location_ids,
        fingerprint=header["fingerprint"],
        preprocess=PreprocessOptions.from_dict(header["preprocess"]),
    )
