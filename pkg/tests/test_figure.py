from example.figure import render
from nkmoment.cli import main


def test_render_writes_png(tmp_path):
    mesh = tmp_path / "mesh.txt"
    image = tmp_path / "image.csv"
    out = tmp_path / "image.png"
    assert 0 == main(["boundary-mesh", "--samples", "5", "--quiet", "--out", str(mesh)])
    assert 0 == main(["image-sample", "--samples", "200", "--quiet", "--out", str(image)])

    render(str(mesh), str(image), str(out))
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_render_mesh_only(tmp_path):
    mesh = tmp_path / "mesh.txt"
    out = tmp_path / "mesh.png"
    assert 0 == main(["boundary-mesh", "--samples", "3", "--quiet", "--out", str(mesh)])
    render(str(mesh), None, str(out))
    assert out.exists()
