import io
import json
import sys

import numpy as np
import polars as pl

from nkmoment import export
from nkmoment.image import boundary_mesh, grid_counts


def test_header():
    assert "# nkmoment image-sample v1\n" == export.header("image-sample")


def test_image_csv_round_trips_every_digit(rng):
    values = rng.uniform(-1.0, 1.0, (5, 3))
    values[0] = [1.0 / 3.0, -2.0 / 3.0, np.pi / 4.0]
    classes = ["interior"] * 4 + ["boundary"]
    text = export.csv_text(export.image_frame(values, classes), "image-sample")

    lines = text.splitlines()
    assert lines[0] == "# nkmoment image-sample v1"
    assert lines[1] == "X,Y,Z,class"
    assert len(lines) == 7
    for line, row, c in zip(lines[2:], values, classes):
        *numbers, label = line.split(",")
        assert [float(n) for n in numbers] == list(row)
        assert label == c

    df = pl.read_csv(io.StringIO(text), comment_prefix="#")
    assert df.columns == export.IMAGE_COLUMNS
    assert df["X"].to_list() == list(values[:, 0])


def test_json_text():
    text = export.json_text({"schema_version": 1, "x": 0.1})
    assert text.endswith("\n")
    assert json.loads(text) == {"schema_version": 1, "x": 0.1}


def test_mesh_text_and_read_back():
    mesh = boundary_mesh(5)
    text = export.mesh_text(mesh)
    lines = text.splitlines()
    vertices, faces = grid_counts(5)
    assert lines[0] == "# nkmoment boundary-mesh v1"
    assert lines[1] == f"# vertices {vertices} faces {faces}"
    assert sum(line.startswith("v ") for line in lines) == vertices
    assert sum(line.startswith("f ") for line in lines) == faces
    # faces are 1-based
    assert min(int(i) for line in lines if line.startswith("f ") for i in line.split()[1:]) == 1

    back = export.read_mesh(text)
    np.testing.assert_array_equal(back.vertices, mesh.vertices)
    np.testing.assert_array_equal(back.faces, mesh.faces)


def test_open_output(tmp_path):
    with export.open_output(None) as f:
        assert f is sys.stdout
    with export.open_output("-") as f:
        assert f is sys.stdout

    path = tmp_path / "out.json"
    export.write(str(path), "data\n")
    assert path.read_text() == "data\n"
