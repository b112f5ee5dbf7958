"""Embedding dataset store: JSON-Lines interchange format, validation, fold splits.

File layout (one dataset per file):
  line 1    manifest object:
            {"d_s": int, "d_m": int, "dataset": str, "split": str,
             "semantic_encoder": str, "sentiment_encoder": str,
             "encoding": "plain" | "b16"}
  lines 2+  one record object per line with keys exactly
            id, text, ancestor, y, e_ct, e_st_ep, e_st_ip, e_st_full,
            z_ep, z_ip, z_full
            ancestor may be null; e_st_full may be null (test-only files).

Vectors are plain decimal arrays by default.  With encoding "b16" every
vector is a hex string of the little-endian float64 bytes, which is exact
and roughly 2x smaller than decimals for large files.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

RECORD_KEYS = (
    "id", "text", "ancestor", "y",
    "e_ct", "e_st_ep", "e_st_ip", "e_st_full",
    "z_ep", "z_ip", "z_full",
)

MANIFEST_KEYS = (
    "d_s", "d_m", "dataset", "split",
    "semantic_encoder", "sentiment_encoder", "encoding",
)


@dataclass
class EmbeddingRecord:
    """One sample: semantic vector, sentiment vectors, sarcasm and polarity labels."""

    id: str
    text: str
    ancestor: str | None
    y: int
    e_ct: np.ndarray
    e_st_ep: np.ndarray
    e_st_ip: np.ndarray
    e_st_full: np.ndarray | None
    z_ep: int
    z_ip: int
    z_full: int


@dataclass
class DatasetManifest:
    d_s: int
    d_m: int
    dataset: str = "unnamed"
    split: str = "unnamed"
    semantic_encoder: str = "unknown"
    sentiment_encoder: str = "unknown"
    encoding: str = "plain"

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in MANIFEST_KEYS}


@dataclass
class Dataset:
    """Immutable after load; safe for concurrent reads."""

    records: list[EmbeddingRecord]
    d_s: int
    d_m: int
    manifest: DatasetManifest
    _cache: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.records)

    def _stacked(self, key: str, getter) -> np.ndarray:
        if key not in self._cache:
            self._cache[key] = np.asarray([getter(r) for r in self.records], dtype=np.float64)
        return self._cache[key]

    def semantic_matrix(self) -> np.ndarray:
        return self._stacked("e_ct", lambda r: r.e_ct)

    def explicit_matrix(self) -> np.ndarray:
        return self._stacked("e_ep", lambda r: r.e_st_ep)

    def implicit_matrix(self) -> np.ndarray:
        return self._stacked("e_ip", lambda r: r.e_st_ip)

    def labels(self) -> np.ndarray:
        if "y" not in self._cache:
            self._cache["y"] = np.asarray([r.y for r in self.records], dtype=np.int64)
        return self._cache["y"]

    def polarity_explicit(self) -> np.ndarray:
        if "z_ep" not in self._cache:
            self._cache["z_ep"] = np.asarray([r.z_ep for r in self.records], dtype=np.int64)
        return self._cache["z_ep"]

    def polarity_implicit(self) -> np.ndarray:
        if "z_ip" not in self._cache:
            self._cache["z_ip"] = np.asarray([r.z_ip for r in self.records], dtype=np.int64)
        return self._cache["z_ip"]

    def subset(self, indices) -> "Dataset":
        recs = [self.records[i] for i in indices]
        return Dataset(records=recs, d_s=self.d_s, d_m=self.d_m, manifest=self.manifest)

    def record_by_id(self, rec_id: str) -> EmbeddingRecord:
        for r in self.records:
            if r.id == rec_id:
                return r
        raise DataError(f"no record with id {rec_id!r}")


@dataclass
class FoldPlan:
    k: int
    assignments: np.ndarray  # record index -> fold index
    seed: int

    def fold_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def other_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def _vec_to_json(v: np.ndarray | None, encoding: str):
    if v is None:
        return None
    if encoding == "b16":
        return np.asarray(v, dtype="<f8").tobytes().hex()
    return [float(x) for x in v]


def _vec_from_json(v, encoding: str, what: str, line_no: int) -> np.ndarray | None:
    if v is None:
        return None
    if encoding == "b16":
        if not isinstance(v, str):
            raise DataError(f"line {line_no}: {what} must be a hex string under b16 encoding")
        try:
            return np.frombuffer(bytes.fromhex(v), dtype="<f8").copy()
        except ValueError as e:
            raise DataError(f"line {line_no}: bad b16 vector in {what}: {e}") from e
    if not isinstance(v, list):
        raise DataError(f"line {line_no}: {what} must be an array of numbers")
    try:
        return np.asarray(v, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise DataError(f"line {line_no}: non-numeric entry in {what}") from e


def _check_binary(value, name: str, line_no: int) -> int:
    if value not in (0, 1) or isinstance(value, bool):
        raise DataError(f"line {line_no}: label {name} outside {{0,1}} (got {value!r})")
    return int(value)


def _parse_record(obj: dict, encoding: str, line_no: int) -> EmbeddingRecord:
    missing = [k for k in RECORD_KEYS if k not in obj]
    if missing:
        raise DataError(f"line {line_no}: record missing keys {missing}")
    extra = [k for k in obj if k not in RECORD_KEYS]
    if extra:
        raise DataError(f"line {line_no}: unknown record keys {extra}")

    y = _check_binary(obj["y"], "y", line_no)
    z_ep = _check_binary(obj["z_ep"], "z_ep", line_no)
    z_ip = _check_binary(obj["z_ip"], "z_ip", line_no)
    z_full = _check_binary(obj["z_full"], "z_full", line_no)
    expected_ip = z_ep if y == 0 else 1 - z_ep
    if z_ip != expected_ip:
        raise DataError(f"z-consistency violated at line {line_no}: "
                        f"y={y}, z_ep={z_ep} requires z_ip={expected_ip}, got {z_ip}")

    e_ct = _vec_from_json(obj["e_ct"], encoding, "e_ct", line_no)
    e_ep = _vec_from_json(obj["e_st_ep"], encoding, "e_st_ep", line_no)
    e_ip = _vec_from_json(obj["e_st_ip"], encoding, "e_st_ip", line_no)
    e_full = _vec_from_json(obj["e_st_full"], encoding, "e_st_full", line_no)
    if e_ct is None or e_ep is None or e_ip is None:
        raise DataError(f"line {line_no}: e_ct, e_st_ep and e_st_ip may not be null")

    text = obj["text"]
    if not isinstance(text, str):
        raise DataError(f"line {line_no}: text must be a string")
    if text == "":
        warnings.warn(f"line {line_no}: empty text; projection display will fall back to the id")

    ancestor = obj["ancestor"]
    if ancestor is not None and not isinstance(ancestor, str):
        raise DataError(f"line {line_no}: ancestor must be a string or null")

    return EmbeddingRecord(
        id=str(obj["id"]), text=text, ancestor=ancestor, y=y,
        e_ct=e_ct, e_st_ep=e_ep, e_st_ip=e_ip, e_st_full=e_full,
        z_ep=z_ep, z_ip=z_ip, z_full=z_full,
    )


def load_dataset(path) -> Dataset:
    """Load and validate a dataset file.

    Dimensions d_s/d_m are read from the manifest and enforced on every record.
    Raises DataError with the offending line number on any malformed content.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except FileNotFoundError:
        raise DataError(f"dataset file not found: {path}") from None

    if not lines:
        raise DataError(f"{path}: empty file (manifest line required)")

    try:
        manifest_obj = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise DataError(f"line 1: malformed manifest JSON: {e}") from e
    if not isinstance(manifest_obj, dict):
        raise DataError("line 1: manifest must be a JSON object")
    missing = [k for k in MANIFEST_KEYS if k not in manifest_obj]
    if missing:
        raise DataError(f"line 1: manifest missing keys {missing}")
    encoding = manifest_obj["encoding"]
    if encoding not in ("plain", "b16"):
        raise DataError(f"line 1: unknown encoding {encoding!r}")
    d_s, d_m = manifest_obj["d_s"], manifest_obj["d_m"]
    if not (isinstance(d_s, int) and d_s > 0 and isinstance(d_m, int) and d_m > 0):
        raise DataError("line 1: d_s and d_m must be positive integers")
    manifest = DatasetManifest(**{k: manifest_obj[k] for k in MANIFEST_KEYS})

    records = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataError(f"line {i}: malformed record JSON: {e}") from e
        rec = _parse_record(obj, encoding, i)
        if rec.e_ct.shape != (d_s,):
            raise DataError(f"line {i}: dimension mismatch: e_ct has length "
                            f"{rec.e_ct.shape[0]}, manifest d_s={d_s}")
        for name, v in (("e_st_ep", rec.e_st_ep), ("e_st_ip", rec.e_st_ip),
                        ("e_st_full", rec.e_st_full)):
            if v is not None and v.shape != (d_m,):
                raise DataError(f"line {i}: dimension mismatch: {name} has length "
                                f"{v.shape[0]}, manifest d_m={d_m}")
        records.append(rec)

    if not records:
        raise DataError(f"{path}: no records")
    return Dataset(records=records, d_s=d_s, d_m=d_m, manifest=manifest)


def write_dataset(ds: Dataset, path, encoding: str | None = None) -> None:
    """Write a dataset in the interchange format with canonical field order."""
    enc = encoding if encoding is not None else ds.manifest.encoding
    if enc not in ("plain", "b16"):
        raise DataError(f"unknown encoding {enc!r}")
    manifest = ds.manifest.to_dict()
    manifest["encoding"] = enc
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(manifest) + "\n")
        for r in ds.records:
            obj = {
                "id": r.id, "text": r.text, "ancestor": r.ancestor, "y": r.y,
                "e_ct": _vec_to_json(r.e_ct, enc),
                "e_st_ep": _vec_to_json(r.e_st_ep, enc),
                "e_st_ip": _vec_to_json(r.e_st_ip, enc),
                "e_st_full": _vec_to_json(r.e_st_full, enc),
                "z_ep": r.z_ep, "z_ip": r.z_ip, "z_full": r.z_full,
            }
            fh.write(json.dumps(obj) + "\n")


def split_folds(ds: Dataset, k: int, seed: int) -> FoldPlan:
    """Stratified k-fold assignment, deterministic for a given seed.

    Items of each class are dealt round-robin with a pointer persisting across
    classes, so per-class counts per fold and total fold sizes both differ by
    at most one.  Falls back to a plain shuffle split (with a warning) when a
    class has fewer than k members.
    """
    n = len(ds)
    if not (2 <= k <= n):
        raise DataError(f"fold count k={k} out of range [2, {n}]")
    rng = np.random.default_rng(seed)
    y = ds.labels()
    assignments = np.empty(n, dtype=np.int64)

    class_counts = [int(np.sum(y == c)) for c in (0, 1)]
    if min(c for c in class_counts if c > 0) < k:
        warnings.warn(f"a class has fewer than k={k} members; using non-stratified folds")
        order = rng.permutation(n)
        for pos, idx in enumerate(order):
            assignments[idx] = pos % k
        return FoldPlan(k=k, assignments=assignments, seed=seed)

    pointer = 0
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(len(idx))]
        for j, record_index in enumerate(idx):
            assignments[record_index] = (pointer + j) % k
        pointer = (pointer + len(idx)) % k
    return FoldPlan(k=k, assignments=assignments, seed=seed)
