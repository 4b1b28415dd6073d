"""
Writers for the files produced by the CLI: CSV tables, JSON reports and ASCII
meshes. Every float is written with 17 significant digits.
"""

from __future__ import annotations

import contextlib
import json
import sys
from typing import IO, Iterator

import numpy as np
import polars as pl

from nkmoment.image import Mesh
from nkmoment.utils import SCHEMA_VERSION, fmt_float

IMAGE_COLUMNS = ["X", "Y", "Z", "class"]


@contextlib.contextmanager
def open_output(path: str | None) -> Iterator[IO[str]]:
    """
    A text stream for `path`; None or "-" is stdout
    """
    if path is None or path == "-":
        yield sys.stdout
        return
    with open(path, "w", newline="\n") as f:
        yield f


def header(kind: str) -> str:
    return f"# nkmoment {kind} v{SCHEMA_VERSION}\n"


def csv_text(df: pl.DataFrame, kind: str) -> str:
    return header(kind) + df.write_csv(
        None, float_scientific=True, float_precision=16, line_terminator="\n"
    )


def image_frame(values: np.ndarray, classes: list[str]) -> pl.DataFrame:
    return pl.DataFrame(
        {
            "X": values[:, 0],
            "Y": values[:, 1],
            "Z": values[:, 2],
            "class": classes,
        }
    ).select(IMAGE_COLUMNS)


def json_text(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def mesh_text(mesh: Mesh) -> str:
    lines = [header("boundary-mesh").rstrip("\n")]
    lines.append(f"# vertices {mesh.vertex_count} faces {mesh.face_count}")
    lines.extend("v " + " ".join(fmt_float(c) for c in v) for v in mesh.vertices)
    lines.extend("f " + " ".join(str(int(i) + 1) for i in f) for f in mesh.faces)
    return "\n".join(lines) + "\n"


def read_mesh(text: str) -> Mesh:
    """
    Parse the ASCII mesh format back into arrays (0-based faces)
    """
    vertices, faces = [], []
    for line in text.splitlines():
        if line.startswith("v "):
            vertices.append([float(c) for c in line.split()[1:]])
        elif line.startswith("f "):
            faces.append([int(i) - 1 for i in line.split()[1:]])
    return Mesh(np.array(vertices), np.array(faces, dtype=int))


def write(path: str | None, text: str) -> None:
    with open_output(path) as f:
        f.write(text)
