"""File formats: dataset JSON, expressibility results, histogram CSV, checkpoints.

Every JSON document carries a ``meta`` block ``{version, schema, seed,
config_digest}``. Dataset files::

    {"meta": {...}, "n_qubits": 4, "kind": "spt" | "artificial",
     "generator": {...},                       # artificial only
     "items": [{"re": [...], "im": [...], "label": 0, "provenance": {...}}]}
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .core import Statevector
from .physics import LabeledDataset, LabeledItem

DATASET_SCHEMA = "bqcnn.dataset/1"
EXPRESSIBILITY_SCHEMA = "bqcnn.expressibility/1"
CHECKPOINT_SCHEMA = "bqcnn.checkpoint/1"


class SchemaError(ValueError):
    pass


def config_digest(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode()).hexdigest()[:12]


def make_meta(schema: str, seed, config: dict) -> dict:
    return {"version": __version__, "schema": schema, "seed": seed, "config_digest": config_digest(config)}


def header_lines(meta: dict) -> list[str]:
    return [f"{k}={v}" for k, v in meta.items()]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(doc), indent=1, sort_keys=True) + "\n")


def dataset_to_dict(ds: LabeledDataset, seed=None) -> dict:
    config = {k: v for k, v in ds.meta.items() if k != "generator"}
    doc = {
        "meta": make_meta(DATASET_SCHEMA, seed, config),
        "n_qubits": ds.n_qubits,
        "kind": ds.meta.get("kind"),
        "items": [
            {
                "re": it.state.amplitudes.real.tolist(),
                "im": it.state.amplitudes.imag.tolist(),
                "label": it.label,
                "provenance": it.provenance,
            }
            for it in ds.items
        ],
    }
    for key, value in ds.meta.items():
        if key not in ("kind",):
            doc.setdefault(key, value)
    return doc


def dataset_from_dict(doc: dict) -> LabeledDataset:
    try:
        schema = doc["meta"]["schema"]
        n = int(doc["n_qubits"])
        raw = doc["items"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"not a dataset document: missing {exc}") from None
    if schema != DATASET_SCHEMA:
        raise SchemaError(f"unsupported dataset schema {schema!r}")
    items = []
    for i, item in enumerate(raw):
        try:
            amps = np.asarray(item["re"], dtype=float) + 1j * np.asarray(item["im"], dtype=float)
            state = Statevector(n, amps)
            items.append(LabeledItem(state, int(item["label"]), item.get("provenance", {})))
        except (KeyError, ValueError) as exc:
            raise SchemaError(f"item {i}: {exc}") from None
    meta = {k: v for k, v in doc.items() if k not in ("items", "meta", "n_qubits")}
    return LabeledDataset(n, items, meta)


def save_dataset(path, ds: LabeledDataset, seed=None) -> None:
    write_json(path, dataset_to_dict(ds, seed))


def load_dataset(path) -> LabeledDataset:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return dataset_from_dict(doc)


def write_histogram_csv(path, hist, n_qubits: int, meta: dict) -> None:
    masses = hist.haar_masses(n_qubits)
    with open(path, "w", newline="") as fh:
        for line in header_lines(meta):
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin", "lo", "hi", "count", "frequency", "haar_mass"])
        for i in range(hist.n_bins):
            w.writerow([i, f"{hist.edges[i]:.6g}", f"{hist.edges[i + 1]:.6g}", int(hist.counts[i]),
                        f"{hist.counts[i] / hist.n_samples:.12g}", f"{masses[i]:.12g}"])


def read_csv_rows(path) -> list[dict]:
    with open(path) as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))
