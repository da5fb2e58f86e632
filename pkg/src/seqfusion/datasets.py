"""Reading and writing datasets on disk.

A dataset directory holds a JSON manifest plus CSV files:

* ``static.csv``: header ``sample_id, <feature names...>, label``.
* dynamic data, either long-form ``dynamic.csv`` with columns
  ``sample_id, feature_id, t, value`` or one wide file per dynamic feature
  (``sample_id, t0, t1, ...``).

UCR-style text files (one sample per line: label followed by the sequence)
are read directly, or through a manifest with ``"format": "ucr"`` naming a
train and test file.
"""

from __future__ import annotations

import csv
import json
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .core import Dataset, SplitPlan
from .exceptions import DatasetLoadError

MANIFEST_FORMAT = "seqfusion.dataset"
MANIFEST_VERSION = 1


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _float(cell: str, path, row, column) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DatasetLoadError(f"non-numeric value {cell!r}", path, row, column) from None
    if not np.isfinite(value):
        raise DatasetLoadError(f"non-finite value {cell!r}", path, row, column)
    return value


def _int(cell: str, path, row, column) -> int:
    try:
        return int(cell)
    except ValueError:
        raise DatasetLoadError(f"expected an integer, got {cell!r}", path, row, column) from None


def _coerce_label(text: str, class_labels: tuple):
    for lab in class_labels:
        if str(lab) == text:
            return lab
    return text


def _read_csv(path: Path) -> list[list[str]]:
    if not path.exists():
        raise DatasetLoadError("file not found", path)
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def _read_static(path: Path, n_s: int, class_labels: tuple):
    rows = _read_csv(path)
    if not rows:
        raise DatasetLoadError("empty static file", path)
    header = rows[0]
    if header[0] != "sample_id" or header[-1] != "label":
        raise DatasetLoadError("static header must start with sample_id and end with label", path, 1)
    if len(header) - 2 != n_s:
        raise DatasetLoadError(f"manifest declares n_s={n_s}, file has {len(header) - 2} features", path, 1)
    ids, static, labels = [], [], []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DatasetLoadError(f"expected {len(header)} cells, got {len(row)}", path, r)
        ids.append(_int(row[0], path, r, header[0]))
        static.append([_float(c, path, r, header[j + 1]) for j, c in enumerate(row[1:-1])])
        labels.append(_coerce_label(row[-1], class_labels))
    static = np.array(static, dtype=np.float64).reshape(len(ids), n_s)
    return ids, static, labels


def _read_long_dynamic(path: Path, index: dict, n_d: int, l_d: int) -> np.ndarray:
    rows = _read_csv(path)
    expected = ["sample_id", "feature_id", "t", "value"]
    if not rows or rows[0] != expected:
        raise DatasetLoadError(f"long-form header must be {','.join(expected)}", path, 1)
    dynamic = np.full((len(index), n_d, l_d), np.nan)
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise DatasetLoadError(f"expected 4 cells, got {len(row)}", path, r)
        sid = _int(row[0], path, r, "sample_id")
        f = _int(row[1], path, r, "feature_id")
        t = _int(row[2], path, r, "t")
        if sid not in index:
            raise DatasetLoadError(f"sample_id {sid} not present in static file", path, r, "sample_id")
        if not 0 <= f < n_d:
            raise DatasetLoadError(f"feature_id {f} outside 0..{n_d - 1}", path, r, "feature_id")
        if not 0 <= t < l_d:
            raise DatasetLoadError(f"t={t} outside 0..{l_d - 1}", path, r, "t")
        dynamic[index[sid], f, t] = _float(row[3], path, r, "value")
    missing = np.argwhere(np.isnan(dynamic))
    if len(missing):
        i, f, t = missing[0]
        sid = next(s for s, k in index.items() if k == i)
        raise DatasetLoadError(f"missing value for sample_id {sid}, feature {f}, t={t}", path)
    return dynamic


def _read_wide_dynamic(paths: list[Path], index: dict, n_d: int, l_d: int) -> np.ndarray:
    if len(paths) != n_d:
        raise DatasetLoadError(f"manifest declares n_d={n_d} but lists {len(paths)} dynamic files")
    dynamic = np.empty((len(index), n_d, l_d))
    for f, path in enumerate(paths):
        rows = _read_csv(path)
        if not rows or rows[0][0] != "sample_id":
            raise DatasetLoadError("wide dynamic header must start with sample_id", path, 1)
        if len(rows[0]) - 1 != l_d:
            raise DatasetLoadError(f"manifest declares l_d={l_d}, file has {len(rows[0]) - 1} time steps", path, 1)
        seen = set()
        for r, row in enumerate(rows[1:], start=2):
            if len(row) != l_d + 1:
                raise DatasetLoadError(f"expected {l_d + 1} cells, got {len(row)}", path, r)
            sid = _int(row[0], path, r, "sample_id")
            if sid not in index:
                raise DatasetLoadError(f"sample_id {sid} not present in static file", path, r, "sample_id")
            dynamic[index[sid], f] = [_float(c, path, r, rows[0][j + 1]) for j, c in enumerate(row[1:])]
            seen.add(sid)
        if len(seen) != len(index):
            missing = sorted(set(index) - seen)[0]
            raise DatasetLoadError(f"sample_id {missing} has no row", path)
    return dynamic


def read_ucr(path) -> tuple[np.ndarray, list]:
    """Parse a UCR-style file: ``label v1 ... v_l`` per line, comma, tab or space separated."""
    path = Path(path)
    if not path.exists():
        raise DatasetLoadError("file not found", path)
    seqs, labels = [], []
    length = None
    with open(path) as fh:
        for r, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = [c for c in re.split(r"[,\t ]+", line) if c]
            if length is None:
                length = len(cells) - 1
                if length < 1:
                    raise DatasetLoadError("line has no sequence values", path, r)
            elif len(cells) - 1 != length:
                raise DatasetLoadError(f"expected {length} values, got {len(cells) - 1}", path, r)
            lab = _float(cells[0], path, r, 1)
            labels.append(int(lab) if lab.is_integer() else lab)
            seqs.append([_float(c, path, r, j + 2) for j, c in enumerate(cells[1:])])
    if not seqs:
        raise DatasetLoadError("no samples", path)
    return np.array(seqs, dtype=np.float64), labels


def ucr_dataset(seqs: np.ndarray, labels: list, name: str, class_labels=None, sample_ids=None) -> Dataset:
    """Univariate dataset whose static features are the spatialized sequence."""
    classes = sorted(set(labels), reverse=True) if class_labels is None else list(class_labels)
    if len(classes) != 2:
        raise DatasetLoadError(f"binary labels required, found {len(classes)} classes in {name}")
    return Dataset(
        seqs.copy(), seqs[:, None, :], np.array(labels), tuple(classes), sample_ids,
        name=name, static_from_dynamic=True,
    )


def _load_ucr_manifest(doc: dict, base: Path):
    parts, seqs, labels = [], [], []
    for part, key in enumerate(("train", "test")):
        if key not in doc:
            continue
        s, lab = read_ucr(base / doc[key])
        if seqs and s.shape[1] != seqs[0].shape[1]:
            raise DatasetLoadError("train and test sequence lengths differ", base / doc[key])
        seqs.append(s)
        labels.extend(lab)
        parts.extend([part] * len(lab))
    if not seqs:
        raise DatasetLoadError("ucr manifest needs 'train' and/or 'test'", base)
    data = ucr_dataset(np.vstack(seqs), labels, doc.get("name", base.name), doc.get("class_labels"))
    _check_declared(doc, data, base)
    plan = SplitPlan("train-test", np.array(parts), 0) if len(set(parts)) == 2 else None
    return data, plan


def _check_declared(doc: dict, data: Dataset, where):
    for key in ("n_s", "n_d", "l_d"):
        if key in doc and int(doc[key]) != getattr(data, key):
            raise DatasetLoadError(f"manifest declares {key}={doc[key]}, data has {getattr(data, key)}", where)


def load_dataset_with_split(path) -> tuple[Dataset, SplitPlan | None]:
    """Load a dataset and, when the files define one, its train/test partition."""
    path = Path(path)
    if not path.exists():
        raise DatasetLoadError("file not found", path)
    if path.suffix.lower() not in (".json", ".manifest"):
        seqs, labels = read_ucr(path)
        return ucr_dataset(seqs, labels, path.stem), None
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetLoadError(f"manifest is not valid JSON: {exc.msg}", path, exc.lineno) from None
    base = path.parent
    if doc.get("format") == "ucr":
        return _load_ucr_manifest(doc, base)
    if doc.get("format") != MANIFEST_FORMAT:
        raise DatasetLoadError(f"unknown manifest format {doc.get('format')!r}", path)
    try:
        n_s, n_d, l_d = int(doc["n_s"]), int(doc["n_d"]), int(doc["l_d"])
        class_labels = tuple(doc["class_labels"])
        static_file = base / doc["static"]
        dyn = doc["dynamic"]
    except KeyError as exc:
        raise DatasetLoadError(f"manifest is missing {exc.args[0]!r}", path) from None
    ids, static, labels = _read_static(static_file, n_s, class_labels)
    if len(set(ids)) != len(ids):
        raise DatasetLoadError("duplicate sample_id", static_file)
    index = {sid: i for i, sid in enumerate(ids)}
    if dyn.get("layout") == "long":
        dynamic = _read_long_dynamic(base / dyn["path"], index, n_d, l_d)
    elif dyn.get("layout") == "wide":
        dynamic = _read_wide_dynamic([base / p for p in dyn["paths"]], index, n_d, l_d)
    else:
        raise DatasetLoadError(f"unknown dynamic layout {dyn.get('layout')!r}", path)
    try:
        data = Dataset(
            static, dynamic, np.array(labels, dtype=object if not labels else None), class_labels,
            np.array(ids), name=doc.get("name", base.name),
            static_from_dynamic=bool(doc.get("static_from_dynamic", False)),
            groups=None if doc.get("groups") is None else np.array(doc["groups"]),
        )
    except ValueError as exc:
        raise DatasetLoadError(str(exc), static_file) from None
    plan = None
    if doc.get("test_ids") is not None:
        test = set(int(i) for i in doc["test_ids"])
        plan = SplitPlan("train-test", np.array([1 if i in test else 0 for i in ids]), 0)
    return data, plan


def load_dataset(path) -> Dataset:
    return load_dataset_with_split(path)[0]


def save_dataset(data: Dataset, directory, layout: str = "long", test_ids=None) -> Path:
    """Write ``data`` under ``directory``; returns the manifest path.

    Floats are written with ``repr`` so a reload is bit-identical.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    buf = _Buf()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sample_id", *[f"s{j}" for j in range(data.n_s)], "label"])
    for i in range(data.n_samples):
        w.writerow([int(data.sample_ids[i]), *map(repr, data.static[i].tolist()), data.labels[i]])
    atomic_write_text(directory / "static.csv", buf.text())
    if layout == "long":
        buf = _Buf()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample_id", "feature_id", "t", "value"])
        for i in range(data.n_samples):
            sid = int(data.sample_ids[i])
            for f in range(data.n_d):
                for t, v in enumerate(data.dynamic[i, f].tolist()):
                    w.writerow([sid, f, t, repr(v)])
        atomic_write_text(directory / "dynamic.csv", buf.text())
        dyn = {"layout": "long", "path": "dynamic.csv"}
    elif layout == "wide":
        paths = []
        for f in range(data.n_d):
            buf = _Buf()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["sample_id", *[f"t{t}" for t in range(data.l_d)]])
            for i in range(data.n_samples):
                w.writerow([int(data.sample_ids[i]), *map(repr, data.dynamic[i, f].tolist())])
            name = f"dynamic_{f}.csv"
            atomic_write_text(directory / name, buf.text())
            paths.append(name)
        dyn = {"layout": "wide", "paths": paths}
    else:
        raise ValueError(f"unknown layout {layout!r}")
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "name": data.name,
        "n_s": data.n_s,
        "n_d": data.n_d,
        "l_d": data.l_d,
        "class_labels": [_jsonable(c) for c in data.class_labels],
        "static": "static.csv",
        "dynamic": dyn,
        "static_from_dynamic": data.static_from_dynamic,
        "groups": None if data.groups is None else data.groups.tolist(),
        "test_ids": None if test_ids is None else [int(i) for i in test_ids],
    }
    path = directory / "manifest.json"
    atomic_write_text(path, json.dumps(manifest, indent=2) + "\n")
    return path


def _jsonable(value):
    return value.item() if isinstance(value, np.generic) else value


class _Buf:
    def __init__(self):
        self.parts = []

    def write(self, s):
        self.parts.append(s)

    def text(self) -> str:
        return "".join(self.parts)


def describe(data: Dataset) -> dict:
    """Dimensions, class balance and per-feature summaries."""
    pos = int(data.is_pos.sum())
    summary = {
        "name": data.name,
        "n_samples": data.n_samples,
        "n_s": data.n_s,
        "n_d": data.n_d,
        "l_d": data.l_d,
        "class_counts": {str(data.pos_label): pos, str(data.neg_label): data.n_samples - pos},
        "static_from_dynamic": data.static_from_dynamic,
        "static": [],
        "dynamic": [],
    }
    for j in range(data.n_s):
        col = data.static[:, j]
        summary["static"].append(
            {"feature": j, "mean": float(col.mean()), "std": float(col.std()), "min": float(col.min()), "max": float(col.max())}
        )
    for f in range(data.n_d):
        ch = data.dynamic[:, f]
        summary["dynamic"].append(
            {"feature": f, "mean": float(ch.mean()), "std": float(ch.std()), "min": float(ch.min()), "max": float(ch.max())}
        )
    return summary
