"""
Command line front end.

    nkmoment verify          run the invariant suite, JSON report
    nkmoment image-sample    nu of Haar-random points, CSV rows X,Y,Z,class
    nkmoment boundary-mesh   both boundary sheets as an ASCII mesh
    nkmoment fiber X Y Z     fibre classification and sample points

Exit status: 0 ok, 1 a check failed, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass

import numpy as np
import polars as pl
from tqdm import tqdm

from nkmoment import export
from nkmoment.differential import FDParams
from nkmoment.fibers import FiberTag, fiber_classify, fiber_sample
from nkmoment.image import DeltaTag, boundary_mesh, delta_classify_array, variety_F_array
from nkmoment.moment import MomentValue, nu, nu_batch
from nkmoment.quaternion import ImaginaryUnit, sample_units, triple_det
from nkmoment.torus import TorusSpec, orbit_dimension
from nkmoment.utils import (
    DEFAULT_FD_STEP,
    DEFAULT_SEED,
    FD_TOL,
    SCHEMA_VERSION,
    fmt_float,
)
from nkmoment.verify import VerifyContext, run_verify

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3

# vectors further than this from unit length are rejected, not normalised
VECTOR_NORM_TOL = 1e-6
# rows per sampling partition; each partition has its own spawned seed
CHUNK = 10_000

FORMATS = {
    "verify": ("json",),
    "image-sample": ("csv", "json"),
    "boundary-mesh": ("mesh",),
    "fiber": ("json", "csv"),
}
DEFAULT_SAMPLES = {
    "verify": 200,
    "image-sample": 10_000,
    "boundary-mesh": 65,
    "fiber": 8,
}
NAMED_AXES = {"i": (1.0, 0.0, 0.0), "j": (0.0, 1.0, 0.0), "k": (0.0, 0.0, 1.0)}


def parse_vector(text: str) -> tuple[float, float, float]:
    """
    "x,y,z" or one of i, j, k with an optional leading minus
    """
    name = text.strip().lower()
    sign = 1.0
    if name.startswith("-") and name[1:] in NAMED_AXES:
        sign, name = -1.0, name[1:]
    if name in NAMED_AXES:
        return tuple(sign * c for c in NAMED_AXES[name])
    try:
        parts = tuple(float(c) for c in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not a 3-vector")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"'{text}' needs 3 components")
    return parts


@dataclass(frozen=True)
class RunConfig:
    command: str
    A: tuple[float, float, float] = NAMED_AXES["i"]
    B: tuple[float, float, float] = NAMED_AXES["i"]
    C: tuple[float, float, float] = NAMED_AXES["j"]
    seed: int = DEFAULT_SEED
    samples: int | None = None
    tol: float = FD_TOL
    fd_step: float = DEFAULT_FD_STEP
    out: str | None = None
    format: str | None = None
    tau: tuple[float, float, float] | None = None
    verbose: bool = False
    quiet: bool = False

    def __post_init__(self):
        assert self.command in FORMATS, f"unknown command {self.command}"
        for name in ("A", "B", "C"):
            v = np.asarray(getattr(self, name), dtype=float)
            n = float(np.linalg.norm(v))
            if not math.isfinite(n) or abs(n - 1.0) > VECTOR_NORM_TOL:
                raise ValueError(f"--{name} must be a unit vector, got norm {n!r}")
            object.__setattr__(self, name, tuple(float(c) for c in v / n))
        if self.samples is None:
            object.__setattr__(self, "samples", DEFAULT_SAMPLES[self.command])
        if self.samples < 1:
            raise ValueError(f"--samples must be >= 1, got {self.samples}")
        if self.command == "boundary-mesh" and self.samples < 2:
            raise ValueError(f"mesh resolution must be >= 2, got {self.samples}")
        if not self.tol > 0:
            raise ValueError(f"--tol must be positive, got {self.tol!r}")
        if self.format is None:
            object.__setattr__(self, "format", FORMATS[self.command][0])
        if self.format not in FORMATS[self.command]:
            raise ValueError(
                f"--format {self.format} not available for {self.command}, "
                f"use one of {', '.join(FORMATS[self.command])}"
            )
        if self.command == "fiber" and self.tau is None:
            raise ValueError("fiber needs the three coordinates X Y Z")
        if self.tau is not None and not all(math.isfinite(c) for c in self.tau):
            raise ValueError(f"fiber coordinates must be finite, got {self.tau}")
        # raises on a step outside the supported range
        FDParams(step=self.fd_step)

    @property
    def spec(self) -> TorusSpec:
        return TorusSpec(*(ImaginaryUnit.from_vector(v) for v in (self.A, self.B, self.C)))

    @property
    def fd(self) -> FDParams:
        return FDParams(step=self.fd_step)

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> RunConfig:
        tau = (args.X, args.Y, args.Z) if args.command == "fiber" else None
        return cls(
            command=args.command,
            A=args.A,
            B=args.B,
            C=args.C,
            seed=args.seed,
            samples=args.samples,
            tol=args.tol,
            fd_step=args.fd_step,
            out=args.out,
            format=args.format,
            tau=tau,
            verbose=args.verbose,
            quiet=args.quiet,
        )


# --- commands -------------------------------------------------------------


def cmd_verify(cfg: RunConfig) -> int:
    ctx = VerifyContext(cfg.spec, cfg.seed, cfg.samples, cfg.tol, cfg.fd)
    report = run_verify(ctx, progress=not cfg.quiet)
    export.write(cfg.out, export.json_text(report))
    return EXIT_OK if report["passed"] else EXIT_FAILED


def sample_image(
    spec: TorusSpec, n: int, seed: int, progress: bool = False
) -> tuple[np.ndarray, list[str]]:
    """
    nu of n Haar-random points, partitioned in CHUNK rows with spawned seeds
    """
    chunks = [min(CHUNK, n - start) for start in range(0, n, CHUNK)]
    children = np.random.SeedSequence(seed).spawn(len(chunks))
    values = []
    for size, child in tqdm(
        list(zip(chunks, children)), desc="image", file=sys.stderr, disable=not progress
    ):
        rng = np.random.default_rng(child)
        values.append(nu_batch(spec, sample_units(rng, size), sample_units(rng, size)))
    values = np.vstack(values)
    classes = [tag.value for tag in delta_classify_array(values)]
    return values, classes


def cmd_image_sample(cfg: RunConfig) -> int:
    values, classes = sample_image(cfg.spec, cfg.samples, cfg.seed, not cfg.quiet)
    if cfg.format == "csv":
        text = export.csv_text(export.image_frame(values, classes), "image-sample")
    else:
        text = export.json_text(
            {
                "schema_version": SCHEMA_VERSION,
                "spec": cfg.spec.to_dict(),
                "seed": cfg.seed,
                "columns": export.IMAGE_COLUMNS,
                "rows": [[*map(float, v), c] for v, c in zip(values, classes)],
            }
        )
    export.write(cfg.out, text)
    outside = classes.count(DeltaTag.OUTSIDE.value)
    if outside:
        logger.error(f"{outside} sampled values classify as outside")
        return EXIT_FAILED
    return EXIT_OK


def cmd_boundary_mesh(cfg: RunConfig) -> int:
    mesh = boundary_mesh(cfg.samples)
    export.write(cfg.out, export.mesh_text(mesh))
    worst = float(np.max(np.abs(variety_F_array(mesh.vertices))))
    if worst > 1e-9:
        logger.error(f"mesh vertex off the variety by {worst:.3e}")
        return EXIT_FAILED
    return EXIT_OK


def fiber_report(cfg: RunConfig) -> dict:
    spec = cfg.spec
    tau = MomentValue(*cfg.tau)
    fiber = fiber_classify(tau, spec.C)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "spec": spec.to_dict(),
        "seed": cfg.seed,
        "tau": list(cfg.tau),
        "delta": fiber.delta.tag.value,
        "class": fiber.tag.value,
        "witnesses": [
            {"x": x.vec.tolist(), "y": y.vec.tolist(), "det": triple_det(x, y, spec.C)}
            for x, y in fiber.witnesses
        ],
        "samples": [],
    }
    if fiber.tag is FiberTag.EMPTY:
        return doc
    rng = np.random.default_rng(cfg.seed)
    for s in fiber_sample(tau, spec, cfg.samples, rng):
        doc["samples"].append(
            {
                "p": s.cfg.p.array.tolist(),
                "q": s.cfg.q.array.tolist(),
                "component": s.component,
                "residual": float(np.max(np.abs(nu(spec, s.cfg).array - tau.array))),
                "orbit_dimension": orbit_dimension(spec, s.cfg),
            }
        )
    return doc


def fiber_csv(doc: dict) -> str:
    columns = ["p_w", "p_x", "p_y", "p_z", "q_w", "q_x", "q_y", "q_z"]
    data = {c: [] for c in columns}
    data["component"] = []
    data["residual"] = []
    for row in doc["samples"]:
        for c, value in zip(columns, row["p"] + row["q"]):
            data[c].append(value)
        data["component"].append(row["component"])
        data["residual"].append(row["residual"])
    schema = {c: pl.Float64 for c in columns} | {"component": pl.Int64, "residual": pl.Float64}
    df = pl.DataFrame(data, schema=schema)
    comment = f"# class {doc['class']} tau {' '.join(fmt_float(t) for t in doc['tau'])}\n"
    return export.csv_text(df, "fiber") + comment


def cmd_fiber(cfg: RunConfig) -> int:
    doc = fiber_report(cfg)
    text = export.json_text(doc) if cfg.format == "json" else fiber_csv(doc)
    export.write(cfg.out, text)
    bad = [s for s in doc["samples"] if s["residual"] > 1e-9]
    return EXIT_FAILED if bad else EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "image-sample": cmd_image_sample,
    "boundary-mesh": cmd_boundary_mesh,
    "fiber": cmd_fiber,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--A", type=parse_vector, default=NAMED_AXES["i"], help="axis A (default i)")
    common.add_argument("--B", type=parse_vector, default=NAMED_AXES["i"], help="axis B (default i)")
    common.add_argument("--C", type=parse_vector, default=NAMED_AXES["j"], help="axis C (default j)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed (default 42)")
    common.add_argument(
        "--samples",
        type=int,
        default=None,
        help="sample count; mesh resolution for boundary-mesh",
    )
    common.add_argument(
        "--tol", type=float, default=FD_TOL, help="finite-difference check tolerance"
    )
    common.add_argument("--fd-step", type=float, default=DEFAULT_FD_STEP, help="finite-difference step")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", default=None, help="csv, json or mesh")
    common.add_argument("--verbose", action="store_true", help="debug logging")
    common.add_argument("--quiet", action="store_true", help="no progress bars, warnings only")

    parser = argparse.ArgumentParser(
        prog="nkmoment",
        description="Multi-moment map of the torus action on the nearly Kaehler S3xS3",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="run the invariant suite")
    sub.add_parser("image-sample", parents=[common], help="sample the image of nu")
    sub.add_parser("boundary-mesh", parents=[common], help="mesh the boundary of the image")
    fiber = sub.add_parser("fiber", parents=[common], help="classify the fibre over a point")
    for axis in ("X", "Y", "Z"):
        fiber.add_argument(axis, type=float, help=f"{axis} coordinate of the value")
    return parser


def configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    configure_logging(args.verbose, args.quiet)
    try:
        cfg = RunConfig.from_args(args)
    except ValueError as e:
        print(f"nkmoment {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        return COMMANDS[cfg.command](cfg)
    except OSError as e:
        logger.error(f"cannot write output: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
