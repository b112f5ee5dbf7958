import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from protosarc.data import Dataset, DatasetManifest, EmbeddingRecord


def make_record(i, y, z_ep, e_ct, e_ep, e_ip, e_full=None, text=None):
    z_ip = z_ep if y == 0 else 1 - z_ep
    return EmbeddingRecord(
        id=f"r{i}", text=text if text is not None else f"sample text {i}",
        ancestor=None, y=y,
        e_ct=np.asarray(e_ct, dtype=np.float64),
        e_st_ep=np.asarray(e_ep, dtype=np.float64),
        e_st_ip=np.asarray(e_ip, dtype=np.float64),
        e_st_full=None if e_full is None else np.asarray(e_full, dtype=np.float64),
        z_ep=z_ep, z_ip=z_ip, z_full=z_ep,
    )


def tiny_dataset(n=12, d_s=4, d_m=4, seed=0):
    """Hand-sized dataset with both classes and both polarities present."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        y = i % 2
        z_ep = (i // 2) % 2
        records.append(make_record(
            i, y, z_ep,
            e_ct=rng.normal(y * 2.0, 0.5, d_s),
            e_ep=rng.normal(z_ep * 2.0 - 1.0, 0.5, d_m),
            e_ip=rng.normal((z_ep if y == 0 else 1 - z_ep) * 2.0 - 1.0, 0.5, d_m),
            e_full=rng.normal(z_ep * 2.0 - 1.0, 0.5, d_m),
        ))
    manifest = DatasetManifest(d_s=d_s, d_m=d_m, dataset="tiny", split="test",
                               semantic_encoder="none", sentiment_encoder="none")
    return Dataset(records=records, d_s=d_s, d_m=d_m, manifest=manifest)


@pytest.fixture
def sample_file(tmp_path):
    """A small valid dataset file in the interchange format (d_s=4, d_m=4)."""
    manifest = {"d_s": 4, "d_m": 4, "dataset": "fixture", "split": "train",
                "semantic_encoder": "none", "sentiment_encoder": "none",
                "encoding": "plain"}
    recs = [
        {"id": "a", "text": "first sample", "ancestor": None, "y": 0,
         "e_ct": [0.0, 1.0, 2.0, 3.0], "e_st_ep": [0.5, 0.5, 0.5, 0.5],
         "e_st_ip": [0.5, 0.5, 0.5, 0.5], "e_st_full": [1.0, 0.0, 0.0, 0.0],
         "z_ep": 1, "z_ip": 1, "z_full": 1},
        {"id": "b", "text": "second sample", "ancestor": "a parent post", "y": 1,
         "e_ct": [1.0, 1.0, 1.0, 1.0], "e_st_ep": [0.1, 0.2, 0.3, 0.4],
         "e_st_ip": [-0.1, -0.2, -0.3, -0.4], "e_st_full": [0.0, 1.0, 0.0, 0.0],
         "z_ep": 1, "z_ip": 0, "z_full": 1},
        {"id": "c", "text": "third sample", "ancestor": None, "y": 0,
         "e_ct": [-1.0, 0.0, 1.0, 0.5], "e_st_ep": [0.9, 0.8, 0.7, 0.6],
         "e_st_ip": [0.9, 0.8, 0.7, 0.6], "e_st_full": None,
         "z_ep": 0, "z_ip": 0, "z_full": 0},
    ]
    path = tmp_path / "fixture.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(manifest) + "\n")
        for r in recs:
            fh.write(json.dumps(r) + "\n")
    return path
