"""LIBSVM-format ingestion, dataset registry, and deterministic subsetting.

Files are parsed in one streaming pass (SUSY/HIGGS are multi-GB); rows are
stored CSR-style with 0-based indices. Labels {-1,+1} or {0,1} normalize to
{0,1}. ``write_libsvm`` emits a canonical form ("+1"/"-1" labels, shortest
round-trip float values) so write(parse(f)) is byte-stable on canonical files.

Fetching is explicit (CLI `datasets fetch`); optimization runs never touch
the network. Downloads cache under $STOFFAR_DATA_DIR (default ~/.stoffar).
"""

from __future__ import annotations

import bz2
import io
import os
import urllib.request
from array import array
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ParseError(ValueError):
    def __init__(self, line_no: int, msg: str):
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no


@dataclass
class SparseDataset:
    name: str
    N: int
    n: int
    indptr: np.ndarray   # int64, len N+1
    indices: np.ndarray  # int32, 0-based, strictly increasing per row
    data: np.ndarray     # float64
    labels: np.ndarray   # float64 in {0, 1}

    def row(self, i: int):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def max_row_norm(self) -> float:
        sq = np.zeros(self.N)
        np.add.at(sq, np.repeat(np.arange(self.N), np.diff(self.indptr)), self.data ** 2)
        return float(np.sqrt(sq.max())) if self.N else 0.0


@dataclass(frozen=True)
class DatasetInfo:
    name: str
    samples: int
    features: int
    url: str
    sha256: str | None = None  # unknown entries are not verified


_LIBSVM_BASE = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/"

REGISTRY = {
    "a9a": DatasetInfo("a9a", 32561, 123, _LIBSVM_BASE + "a9a"),
    "ijcnn1": DatasetInfo("ijcnn1", 49990, 22, _LIBSVM_BASE + "ijcnn1.bz2"),
    "w8a": DatasetInfo("w8a", 49749, 300, _LIBSVM_BASE + "w8a"),
    "SUSY": DatasetInfo("SUSY", 5000000, 18, _LIBSVM_BASE + "SUSY.bz2"),
    "HIGGS": DatasetInfo("HIGGS", 11000000, 28, _LIBSVM_BASE + "HIGGS.bz2"),
}

_LABEL_MAP = {"1": 1.0, "+1": 1.0, "1.0": 1.0, "-1": 0.0, "-1.0": 0.0, "0": 0.0, "0.0": 0.0}


def parse_libsvm(source, n_features: int | None = None, name: str = "") -> SparseDataset:
    """Parse a LIBSVM text stream/path; n inferred as the max index if not given."""
    close = False
    if isinstance(source, (str, Path)):
        name = name or Path(source).name
        source = open(source, "rt", encoding="utf-8")
        close = True
    indptr = array("q", [0])
    indices = array("l")
    data = array("d")
    labels = array("d")
    max_index = 0
    try:
        for line_no, line in enumerate(source, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split()
            lab = _LABEL_MAP.get(tokens[0])
            if lab is None:
                raise ParseError(line_no, f"non-binary label {tokens[0]!r}")
            labels.append(lab)
            prev = 0
            for tok in tokens[1:]:
                try:
                    idx_s, val_s = tok.split(":", 1)
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise ParseError(line_no, f"malformed token {tok!r}") from None
                if idx <= prev:
                    raise ParseError(line_no, f"index {idx} not strictly increasing")
                if idx < 1:
                    raise ParseError(line_no, f"index {idx} is not 1-based")
                prev = idx
                indices.append(idx - 1)
                data.append(val)
            max_index = max(max_index, prev)
            indptr.append(len(indices))
    finally:
        if close:
            source.close()
    n = n_features if n_features is not None else max_index
    if max_index > n:
        raise ParseError(0, f"feature index {max_index} exceeds declared dimension {n}")
    return SparseDataset(name=name, N=len(labels), n=n,
                         indptr=np.frombuffer(indptr, dtype=np.int64).copy(),
                         indices=np.frombuffer(indices, dtype=np.int64).astype(np.int32),
                         data=np.frombuffer(data, dtype=np.float64).copy(),
                         labels=np.frombuffer(labels, dtype=np.float64).copy())


def _fmt_value(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def write_libsvm(ds: SparseDataset, dest) -> None:
    close = False
    if isinstance(dest, (str, Path)):
        dest = open(dest, "wt", encoding="utf-8")
        close = True
    try:
        for i in range(ds.N):
            idx, val = ds.row(i)
            parts = ["+1" if ds.labels[i] == 1.0 else "-1"]
            parts.extend(f"{j + 1}:{_fmt_value(v)}" for j, v in zip(idx, val))
            dest.write(" ".join(parts) + "\n")
    finally:
        if close:
            dest.close()


def dumps(ds: SparseDataset) -> str:
    buf = io.StringIO()
    write_libsvm(ds, buf)
    return buf.getvalue()


def subset(ds: SparseDataset, count: int, seed: int = 0) -> SparseDataset:
    """Deterministic pseudo-random subsample preserving the feature dimension."""
    if count > ds.N:
        raise ValueError(f"count {count} exceeds dataset size {ds.N}")
    if count == ds.N:
        rows = np.arange(ds.N)
    else:
        rng = np.random.default_rng(seed)
        rows = np.sort(rng.choice(ds.N, size=count, replace=False))
    lens = np.diff(ds.indptr)[rows]
    indptr = np.zeros(count + 1, dtype=np.int64)
    np.cumsum(lens, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int32)
    data = np.empty(indptr[-1], dtype=np.float64)
    for j, r in enumerate(rows):
        lo, hi = ds.indptr[r], ds.indptr[r + 1]
        indices[indptr[j]:indptr[j + 1]] = ds.indices[lo:hi]
        data[indptr[j]:indptr[j + 1]] = ds.data[lo:hi]
    return SparseDataset(name=f"{ds.name}[{count}]", N=count, n=ds.n,
                         indptr=indptr, indices=indices, data=data,
                         labels=ds.labels[rows].copy())


def data_dir() -> Path:
    return Path(os.environ.get("STOFFAR_DATA_DIR", Path.home() / ".stoffar"))


def fetch(name: str, directory: Path | None = None, force: bool = False) -> Path:
    """Download a registry dataset into the cache; returns the local path."""
    info = REGISTRY.get(name)
    if info is None:
        raise KeyError(f"unknown dataset {name!r}; known: {sorted(REGISTRY)}")
    directory = Path(directory) if directory else data_dir()
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / name
    if target.exists() and not force:
        return target
    tmp = directory / (name + ".part")
    with urllib.request.urlopen(info.url, timeout=60) as resp, open(tmp, "wb") as out:
        while True:
            chunk = resp.read(1 << 20)
            if not chunk:
                break
            out.write(chunk)
    if info.url.endswith(".bz2"):
        with bz2.open(tmp, "rb") as src, open(target, "wb") as out:
            while True:
                chunk = src.read(1 << 20)
                if not chunk:
                    break
                out.write(chunk)
        tmp.unlink()
    else:
        tmp.rename(target)
    return target


def load(ref: str, directory: Path | None = None, n_features: int | None = None) -> SparseDataset:
    """Load by registry name (from the cache) or by explicit path."""
    p = Path(ref)
    if p.exists():
        info = REGISTRY.get(p.name)
        nf = n_features if n_features is not None else (info.features if info else None)
        return parse_libsvm(p, n_features=nf)
    info = REGISTRY.get(ref)
    if info is None:
        raise FileNotFoundError(f"{ref!r} is neither a file nor a registry dataset")
    cached = (Path(directory) if directory else data_dir()) / ref
    if not cached.exists():
        raise FileNotFoundError(
            f"dataset {ref!r} is not cached; run `stoffar datasets fetch {ref}` first")
    return parse_libsvm(cached, n_features=info.features, name=ref)


def synthetic_binary(N: int, n: int = 123, nnz: int = 14, seed: int = 7,
                     name: str = "synthetic") -> SparseDataset:
    """Deterministic a9a-style surrogate: sparse binary rows, logistic labels.

    Used for desk-scale runs where the real LIBSVM files are unavailable.
    """
    rng = np.random.default_rng(seed)
    w_true = rng.standard_normal(n) * (2.0 / np.sqrt(nnz))
    bias = -0.2
    indptr = np.zeros(N + 1, dtype=np.int64)
    all_idx = []
    labels = np.empty(N)
    for i in range(N):
        k = int(rng.integers(max(2, nnz - 4), nnz + 5))
        idx = np.sort(rng.choice(n, size=min(k, n), replace=False))
        if i == 0:
            idx[-1] = n - 1  # pin the dimension so n is inferable from the file
            idx = np.unique(idx)
        all_idx.append(idx)
        indptr[i + 1] = indptr[i] + len(idx)
        margin = w_true[idx].sum() + bias
        labels[i] = 1.0 if rng.uniform() < 1.0 / (1.0 + np.exp(-margin)) else 0.0
    indices = np.concatenate(all_idx).astype(np.int32)
    return SparseDataset(name=name, N=N, n=n, indptr=indptr, indices=indices,
                         data=np.ones(indptr[-1]), labels=labels)
