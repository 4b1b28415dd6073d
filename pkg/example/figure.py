"""
Render the image of the moment map: both boundary sheets, the tetrahedron
and (optionally) a scatter of sampled points.

    nkmoment boundary-mesh --samples 33 --out mesh.txt
    nkmoment image-sample --samples 20000 --out image.csv
    python -m example.figure mesh.txt --image image.csv --out image.png
"""

import argparse
import logging

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import polars as pl

from nkmoment.export import read_mesh
from nkmoment.image import EDGES, VERTICES

logger = logging.getLogger(__name__)

CLASS_COLORS = {"interior": "tab:blue", "boundary": "tab:orange", "vertex": "tab:red"}
# scatter gets unreadable past this
MAX_POINTS = 5_000


def draw_mesh(ax, mesh):
    X, Y, Z = mesh.vertices.T
    ax.plot_trisurf(X, Y, Z, triangles=mesh.faces, color="lightgrey", alpha=0.35, linewidth=0.1)


def draw_tetrahedron(ax):
    for a, b in EDGES:
        seg = VERTICES[[a, b]]
        ax.plot(seg[:, 0], seg[:, 1], seg[:, 2], color="black", linewidth=0.8)
    ax.scatter(*VERTICES.T, color="black", s=12)


def draw_samples(ax, df: pl.DataFrame):
    if df.height > MAX_POINTS:
        df = df.sample(MAX_POINTS, seed=0)
    for name, group in df.group_by("class"):
        label = name[0]
        ax.scatter(
            group["X"].to_numpy(),
            group["Y"].to_numpy(),
            group["Z"].to_numpy(),
            s=1,
            color=CLASS_COLORS.get(label, "tab:grey"),
            label=label,
        )
    ax.legend(loc="upper left", markerscale=6)


def render(mesh_path, image_path, out):
    with open(mesh_path) as f:
        mesh = read_mesh(f.read())
    logger.info(f"mesh: {mesh.vertex_count} vertices, {mesh.face_count} faces")

    fig = plt.figure(figsize=(6, 6))
    ax = fig.add_subplot(1, 1, 1, projection="3d")
    draw_mesh(ax, mesh)
    draw_tetrahedron(ax)
    if image_path:
        draw_samples(ax, pl.read_csv(image_path, comment_prefix="#"))

    ax.set_xlabel("X")
    ax.set_ylabel("Y")
    ax.set_zlabel("Z")
    ax.set_box_aspect((1, 1, 1))
    plt.savefig(out, bbox_inches="tight")
    plt.close(fig)
    logger.info(f"wrote {out}")


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("mesh", help="output of `nkmoment boundary-mesh`")
    parser.add_argument("--image", default=None, help="output of `nkmoment image-sample` (csv)")
    parser.add_argument("--out", default="image.png")
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    render(args.mesh, args.image, args.out)


if __name__ == "__main__":
    main()
