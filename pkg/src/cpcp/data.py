"""File-backed datasets: feature views, labels, constraints, and the
synthetic multi-view fixture generator."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .propagation import ConstraintSet

_DELIMITERS = (",", ";", "\t")


def _detect_delimiter(line: str) -> str | None:
    """First delimiter present in the line; None means whitespace."""
    for d in _DELIMITERS:
        if d in line:
            return d
    return None


def _data_lines(path: str | Path):
    """Yield (lineno, stripped line) skipping blanks and # comments."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line


def load_features(path: str | Path) -> np.ndarray:
    """Numeric matrix, one instance per line; the column delimiter
    (comma, semicolon, tab, or whitespace) is detected from the first
    data line."""
    rows = []
    delimiter = None
    width = None
    for lineno, line in _data_lines(path):
        if delimiter is None and width is None:
            delimiter = _detect_delimiter(line)
        parts = line.split(delimiter)
        try:
            row = [float(p) for p in parts if p]
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ValidationError(
                f"{path}:{lineno}: expected {width} columns, found {len(row)}"
            )
        rows.append(row)
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def load_labels(path: str | Path) -> np.ndarray | list[list[int]]:
    """Ground-truth labels, one instance per line.

    A line may carry several integer labels (multi-label data). Returns
    a flat int array when every instance has exactly one label, else a
    list of label lists.
    """
    rows: list[list[int]] = []
    for lineno, line in _data_lines(path):
        parts = line.replace(",", " ").split()
        try:
            labels = [int(p) for p in parts]
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
        if not labels:
            raise ValidationError(f"{path}:{lineno}: empty label line")
        rows.append(labels)
    if not rows:
        raise ValidationError(f"{path}: no labels")
    if all(len(r) == 1 for r in rows):
        return np.asarray([r[0] for r in rows], dtype=np.int64)
    return rows


def primary_labels(truth: np.ndarray | list[list[int]]) -> np.ndarray:
    """Flat single-label view of the ground truth: the smallest label of
    each instance (identity for single-label data)."""
    if isinstance(truth, np.ndarray):
        return truth
    return np.asarray([min(r) for r in truth], dtype=np.int64)


def load_constraints(path: str | Path) -> ConstraintSet:
    """Pairs from lines 'i j flag' with flag +1 (must-link) or -1."""
    must, cannot = [], []
    for lineno, line in _data_lines(path):
        parts = line.replace(",", " ").split()
        if len(parts) != 3:
            raise ValidationError(
                f"{path}:{lineno}: expected 'i j flag', found {line!r}"
            )
        try:
            i, j, flag = (int(p) for p in parts)
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
        if flag == 1:
            must.append((i, j))
        elif flag == -1:
            cannot.append((i, j))
        else:
            raise ValidationError(
                f"{path}:{lineno}: flag must be +1 or -1, found {flag}"
            )
    return ConstraintSet(
        must=np.asarray(must, dtype=np.int64).reshape(-1, 2),
        cannot=np.asarray(cannot, dtype=np.int64).reshape(-1, 2),
    )


def save_matrix(path: str | Path, matrix: np.ndarray) -> None:
    np.savetxt(path, np.asarray(matrix), fmt="%.17g", delimiter=" ")


def save_labels(path: str | Path, labels: np.ndarray) -> None:
    np.savetxt(path, np.asarray(labels, dtype=np.int64), fmt="%d")


def save_constraints(path: str | Path, constraints: ConstraintSet) -> None:
    lines = [f"{i} {j} 1" for i, j in constraints.must]
    lines += [f"{i} {j} -1" for i, j in constraints.cannot]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


@dataclass(frozen=True)
class SyntheticData:
    """Multi-view fixture: one feature matrix per view plus labels."""

    views: list[np.ndarray]
    labels: np.ndarray
    noise_views: tuple[int, ...]


def generate_synthetic(
    n: int,
    clusters: int,
    view_dims: Sequence[int],
    noise_views: Sequence[int] = (),
    separation: float = 6.0,
    spread: float | Sequence[float] = 1.0,
    seed: int = 0,
) -> SyntheticData:
    """Gaussian-blob views over a shared labeling, with designated views
    replaced by pure structure-free noise.

    Blob centers sit on `clusters` orthonormal directions (a seeded
    random rotation) scaled by `separation`, so their pairwise distance
    is separation * sqrt(2) regardless of seed. `spread` is the blob
    standard deviation, scalar or per-view. Instances appear in a seeded
    random order.
    """
    if clusters < 2:
        raise ValidationError(f"need at least 2 clusters, got {clusters}")
    if n < clusters:
        raise ValidationError(f"need n >= clusters, got n={n}, c={clusters}")
    view_dims = list(view_dims)
    if not view_dims:
        raise ValidationError("at least one view is required")
    noise_views = tuple(sorted(set(int(v) for v in noise_views)))
    if noise_views and (noise_views[0] < 0 or noise_views[-1] >= len(view_dims)):
        raise ValidationError("noise view index out of range")
    for v, d in enumerate(view_dims):
        if v not in noise_views and d < clusters:
            raise ValidationError(
                f"view {v} needs dim >= {clusters} to place the blob centers"
            )
    if np.isscalar(spread):
        spreads = [float(spread)] * len(view_dims)
    else:
        spreads = [float(s) for s in spread]
        if len(spreads) != len(view_dims):
            raise ValidationError("one spread per view is required")

    rng = np.random.default_rng(seed)
    sizes = np.full(clusters, n // clusters)
    sizes[: n % clusters] += 1
    labels = rng.permutation(np.repeat(np.arange(clusters), sizes))

    views = []
    for v, d in enumerate(view_dims):
        if v in noise_views:
            views.append(separation * rng.standard_normal((n, d)))
            continue
        basis, _ = np.linalg.qr(rng.standard_normal((d, d)))
        centers = separation * basis[:, :clusters].T
        points = centers[labels] + spreads[v] * rng.standard_normal((n, d))
        views.append(points)
    return SyntheticData(views=views, labels=labels, noise_views=noise_views)
