"""Instance files and result documents.

Instance files are header-free text: one point per line, coordinates
separated by commas or whitespace, '#' starts a comment.  Result documents
are JSON with floats written in shortest round-trip form, so identical runs
produce byte-identical output.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

from .errors import InstanceFormatError
from .model import HardPartition, PointSet, SphericalMixture, validate_instance


def parse_instance_text(text: str) -> PointSet:
    rows: list[list[float]] = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        try:
            values = [float(tok) for tok in fields]
        except ValueError as err:
            raise InstanceFormatError(f"bad coordinate: {err}", line=lineno) from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise InstanceFormatError(
                f"expected {width} coordinates, got {len(values)}", line=lineno
            )
        rows.append(values)
    if not rows:
        raise InstanceFormatError("no points found")
    return PointSet(np.array(rows))


def load_instance(path: str | Path) -> PointSet:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise InstanceFormatError(f"cannot read {path}: {err}") from None
    return parse_instance_text(text)


def format_instance(points: np.ndarray) -> str:
    lines = [" ".join(repr(float(x)) for x in row) for row in np.atleast_2d(points)]
    return "\n".join(lines) + "\n"


def save_instance(ps: PointSet, path: str | Path) -> None:
    Path(path).write_text(format_instance(ps.points))


def load_labels(path: str | Path) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise InstanceFormatError(f"cannot read {path}: {err}") from None
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(int(line))
        except ValueError:
            raise InstanceFormatError(f"bad label {line!r}", line=lineno) from None
    if not out:
        raise InstanceFormatError("no labels found")
    return np.array(out, dtype=int)


def labels_to_partition(labels: np.ndarray) -> HardPartition:
    """Canonicalize arbitrary integer labels to 0-based cluster ids."""
    uniq, canon = np.unique(labels, return_inverse=True)
    return HardPartition(canon, len(uniq))


def instance_digest(ps: PointSet) -> dict:
    check = validate_instance(ps)
    return {
        "n": ps.n,
        "dim": ps.dim,
        "max_sq_dist": _jsonable(ps.max_sq_dist),
        "min_sq_dist": _jsonable(check.min_sq_dist),
        "separation_threshold": check.threshold,
        "well_defined": check.well_defined,
    }


def mixture_to_doc(mixture: SphericalMixture) -> list[dict]:
    return [
        {
            "weight": float(c.weight),
            "mean": [float(x) for x in c.mean],
            "variance": float(c.variance),
        }
        for c in mixture.components
    ]


def _jsonable(value):
    if isinstance(value, float) and value == float("inf"):
        return "inf"
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def render_document(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def write_document(doc: dict, output: str | None) -> None:
    text = render_document(doc)
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)
