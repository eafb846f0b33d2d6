"""File formats: spec JSON, dataset/label/matrix CSV, binary matrices,
JSON reports, and an SVG heatmap emitter.

All writers are deterministic byte-for-byte given the same inputs, so
seeded reruns reproduce identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from sdpcluster.gmm import GaussianMixtureSpec

MATRIX_FLOAT_FMT = "%.17g"
SVG_MAX_N = 300


def spec_to_dict(spec: GaussianMixtureSpec) -> dict:
    return {
        "dim": spec.dim,
        "clusters": [
            {
                "mean": [float(x) for x in c.mean],
                "cov": [[float(x) for x in row] for row in c.cov],
                "size": c.size,
            }
            for c in spec.clusters
        ],
    }


def spec_from_dict(obj: dict) -> GaussianMixtureSpec:
    try:
        clusters = [(c["mean"], c["cov"], c["size"]) for c in obj["clusters"]]
        return GaussianMixtureSpec(dim=obj["dim"], clusters=clusters)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed mixture spec document: {exc}") from exc


def read_spec_json(path) -> GaussianMixtureSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))


def write_spec_json(path, spec: GaussianMixtureSpec) -> None:
    _write_text(path, json.dumps(spec_to_dict(spec), indent=2, sort_keys=True) + "\n")


def _write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_dataset_csv(path, points: np.ndarray, labels=None) -> None:
    """Feature columns x1..xd, then a label column; header required."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = points.shape
    if labels is None:
        labels = np.ones(n, dtype=int)
    labels = np.asarray(labels, dtype=int).ravel()
    lines = [",".join([f"x{j + 1}" for j in range(d)] + ["label"])]
    for i in range(n):
        lines.append(",".join([_fmt(v) for v in points[i]] + [str(labels[i])]))
    _write_text(path, "\n".join(lines) + "\n")


def read_dataset_csv(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Read a dataset CSV; tolerates plain numeric files without labels."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"empty dataset file: {path}")
    header = lines[0].split(",")
    has_header = not _is_numeric_row(header)
    label_col = None
    if has_header:
        names = [h.strip().lower() for h in header]
        if "label" in names:
            label_col = names.index("label")
        lines = lines[1:]
    rows = [ln.split(",") for ln in lines]
    data = np.array([[float(v) for v in row] for row in rows])
    if label_col is None:
        return data, None
    labels = data[:, label_col].astype(int)
    points = np.delete(data, label_col, axis=1)
    return points, labels


def _is_numeric_row(cells) -> bool:
    try:
        [float(c) for c in cells]
        return True
    except ValueError:
        return False


def write_labels_csv(path, labels) -> None:
    labels = np.asarray(labels, dtype=int).ravel()
    _write_text(path, "\n".join(["label"] + [str(v) for v in labels]) + "\n")


def read_labels_csv(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if lines and not _is_numeric_row([lines[0]]):
        lines = lines[1:]
    return np.array([int(float(v)) for v in lines])


def write_embedding_csv(path, coords: np.ndarray, labels=None) -> None:
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    n, k = coords.shape
    header = [f"dim_{j + 1}" for j in range(k)]
    if labels is not None:
        labels = np.asarray(labels, dtype=int).ravel()
        header.append("label")
    lines = [",".join(header)]
    for i in range(n):
        row = [_fmt(v) for v in coords[i]]
        if labels is not None:
            row.append(str(labels[i]))
        lines.append(",".join(row))
    _write_text(path, "\n".join(lines) + "\n")


def write_matrix_csv(path, matrix: np.ndarray) -> None:
    """Dense CSV, no header."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    np.savetxt(path, matrix, fmt=MATRIX_FLOAT_FMT, delimiter=",", newline="\n")


def read_matrix_csv(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))


def write_matrix_bin(path, matrix: np.ndarray) -> None:
    """Little-endian layout: one int64 n, then n*n row-major float64."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise ValueError(f"binary format stores square matrices, got {matrix.shape}")
    with open(path, "wb") as fh:
        fh.write(np.int64(n).astype("<i8").tobytes())
        fh.write(np.ascontiguousarray(matrix, dtype="<f8").tobytes())


def read_matrix_bin(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise ValueError(f"truncated binary matrix file: {path}")
    n = int(np.frombuffer(raw[:8], dtype="<i8")[0])
    expected = 8 + 8 * n * n
    if n < 0 or len(raw) != expected:
        raise ValueError(f"corrupt binary matrix file (n={n}, {len(raw)} bytes): {path}")
    return np.frombuffer(raw[8:], dtype="<f8").reshape(n, n).copy()


def read_matrix_auto(path, fmt: str | None = None) -> np.ndarray:
    if fmt == "bin" or (fmt is None and str(path).endswith(".bin")):
        return read_matrix_bin(path)
    return read_matrix_csv(path)


def write_json_report(path, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_csv_rows(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def svg_heatmap(path, matrix: np.ndarray, cell: int = 4) -> None:
    """Grayscale heatmap, one rect per cell; values clipped to [0, 1].

    High affinity renders dark. Limited to n <= 300 to keep files sane.
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    n, m = matrix.shape
    if max(n, m) > SVG_MAX_N:
        raise ValueError(f"heatmap supports up to {SVG_MAX_N} rows/cols, got {matrix.shape}")
    vals = np.clip(matrix, 0.0, 1.0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{m * cell}" height="{n * cell}">'
    ]
    for i in range(n):
        for j in range(m):
            g = int(round(255 * (1.0 - vals[i, j])))
            parts.append(
                f'<rect x="{j * cell}" y="{i * cell}" width="{cell}" height="{cell}" '
                f'fill="#{g:02x}{g:02x}{g:02x}"/>'
            )
    parts.append("</svg>")
    _write_text(path, "\n".join(parts) + "\n")
