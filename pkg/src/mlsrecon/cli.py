"""Command-line front end: generate, noise, smooth, lop, metrics, bench.

Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 numerical
failure. Every run echoes its resolved parameters as JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys


from . import __version__
from .bench import SurfaceKind, SyntheticSurface, generate_surface, run_benchmark
from .errors import (EmptyCloud, EmptyData, EmptyMesh, InvalidParam, ParseError,
                     ReconError, WorkerFailure)
from .io import read_cloud, read_mesh, write_cloud
from .kernels import KernelParams
from .lop import LopParams, lop_project
from .metrics import deviation, deviation_to_mesh
from .mls import MlsParams
from .noise import NoiseParams, add_noise
from .parallel import BACKENDS, parallel_smooth

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------- flag types


def _positive_real(s):
    v = _real(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {s!r}")
    return v


def _nonneg_real(s):
    v = _real(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {s!r}")
    return v


def _real(s):
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite, got {s!r}")
    return v


def _positive_int(s):
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {s!r}")
    return v


def _seed(s):
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("must be an unsigned 64-bit integer")
    return v


def _worker_list(s):
    try:
        vals = [int(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("worker counts must be positive")
    if 1 not in vals:
        raise argparse.ArgumentTypeError("worker counts must include 1")
    return vals


def _mu(s):
    v = _real(s)
    if not 0 <= v < 0.5:
        raise argparse.ArgumentTypeError(f"must lie in [0, 0.5), got {s!r}")
    return v


def _degree(s):
    v = _positive_int(s)
    if v > 4:
        raise argparse.ArgumentTypeError(f"must be between 1 and 4, got {s!r}")
    return v


# ---------------------------------------------------------------- parser


def _format_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--xyz", dest="fmt", action="store_const", const="xyz",
                   help="treat point files as XYZ regardless of extension")
    g.add_argument("--ply", dest="fmt", action="store_const", const="ply",
                   help="treat point files as ASCII PLY regardless of extension")


def _mls_flags(p):
    p.add_argument("--radius", type=_positive_real, required=True, help="kernel bandwidth h")
    p.add_argument("--degree", type=_degree, default=2)
    p.add_argument("--cutoff", type=_positive_real, default=3.0,
                   help="support radius as a multiple of h (default 3)")
    p.add_argument("--plane-tol", type=_positive_real, default=1e-10)
    p.add_argument("--max-iter", type=_positive_int, default=50)
    p.add_argument("--backend", choices=BACKENDS, default="thread")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mlsrecon", description="MLS and LOP point-cloud smoothing")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="sample a synthetic surface")
    p.add_argument("--kind", choices=[k.value for k in SurfaceKind], required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("-o", "--output", required=True)
    _format_flags(p)

    p = sub.add_parser("noise", help="add seeded Gaussian noise")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--sigma", type=_nonneg_real, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    _format_flags(p)

    p = sub.add_parser("smooth", help="MLS-project every point")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--workers", type=_positive_int, default=1)
    _mls_flags(p)
    _format_flags(p)

    p = sub.add_parser("lop", help="locally optimal projection")
    p.add_argument("--data", required=True)
    p.add_argument("--init", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--radius", type=_positive_real, required=True)
    p.add_argument("--cutoff", type=_positive_real, default=3.0)
    p.add_argument("--mu", type=_mu, default=0.4)
    p.add_argument("--iterations", type=_positive_int, default=30)
    p.add_argument("--tol", type=_positive_real, default=1e-7)
    _format_flags(p)

    p = sub.add_parser("metrics", help="deviation of a cloud from a reference")
    p.add_argument("--input", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--mesh", action="store_true", help="reference is a PLY triangle mesh")
    p.add_argument("--out", required=True)
    _format_flags(p)

    p = sub.add_parser("bench", help="time parallel smoothing")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--workers", type=_worker_list, required=True)
    p.add_argument("--reps", type=_positive_int, default=5)
    p.add_argument("--csv", required=True)
    _mls_flags(p)
    _format_flags(p)
    p.set_defaults(backend="process")
    return ap


# ---------------------------------------------------------------- commands


def _mls_params(a):
    return MlsParams(KernelParams(a.radius, a.cutoff), a.degree, a.plane_tol, a.max_iter)


def _cmd_generate(a):
    cloud = generate_surface(SyntheticSurface(a.kind, a.n, a.seed))
    write_cloud(cloud, a.output, a.fmt)


def _cmd_noise(a):
    cloud = read_cloud(a.input, a.fmt)
    write_cloud(add_noise(cloud, NoiseParams(a.sigma, a.seed)), a.output, a.fmt)


def _cmd_smooth(a):
    cloud = read_cloud(a.input, a.fmt)
    out, run = parallel_smooth(cloud, _mls_params(a), a.workers, backend=a.backend)
    s = run.summary
    print(json.dumps({"summary": s.as_dict()}), file=sys.stderr)
    if s.n and s.skipped == s.n:
        raise NumericalFailure("no point could be projected (every fit failed)")
    write_cloud(out, a.output, a.fmt)


def _cmd_lop(a):
    data = read_cloud(a.data, a.fmt)
    init = read_cloud(a.init, a.fmt)
    params = LopParams(KernelParams(a.radius, a.cutoff), a.mu, a.iterations, a.tol)
    res = lop_project(data, init, params)
    print(json.dumps({"iterations": res.iterations, "converged": res.converged,
                      "max_displacement": res.max_displacement,
                      "isolated": len(res.isolated), "coincident_pairs": res.coincident_pairs}),
          file=sys.stderr)
    if len(init) and len(res.isolated) == len(init):
        raise NumericalFailure("no point has data within the kernel support")
    write_cloud(res.cloud, a.output, a.fmt)


def _cmd_metrics(a):
    cloud = read_cloud(a.input, a.fmt)
    if a.mesh:
        report = deviation_to_mesh(cloud, read_mesh(a.reference))
    else:
        report = deviation(cloud, read_cloud(a.reference, a.fmt))
    with open(a.out, "w", encoding="ascii", newline="\n") as fh:
        fh.write(report.to_json() + "\n")


def _cmd_bench(a):
    cloud = read_cloud(a.input, a.fmt)
    report = run_benchmark(cloud, _mls_params(a), a.workers, a.reps, backend=a.backend)
    report.write_csv(a.csv)


_COMMANDS = {
    "generate": _cmd_generate, "noise": _cmd_noise, "smooth": _cmd_smooth,
    "lop": _cmd_lop, "metrics": _cmd_metrics, "bench": _cmd_bench,
}


def _resolved(a) -> dict:
    return {k: v for k, v in sorted(vars(a).items())}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps(_resolved(args)), file=sys.stderr)
    try:
        _COMMANDS[args.command](args)
    except (ParseError, EmptyCloud, EmptyData, EmptyMesh, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvalidParam as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, WorkerFailure, ReconError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
