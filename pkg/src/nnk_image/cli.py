"""Command line front end: ``nnk-image <subcommand> ...``.

Exit codes: 0 success, 2 invalid arguments, 3 I/O failure, 4 numerical failure.
"""

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .bench import BENCH_COLUMNS, bench_construction, center_crop
from .graph import FORMAT_VERSION, graph_stats, load_graph, save_graph, write_stats
from .imageio import file_sha256, read_image, write_image
from .kernel import KernelParams, bf_filter
from .lattice import precompute_window
from .oracle import NumericalDomainError
from .pipeline import (
    NoiseSpec,
    ThresholdRule,
    add_noise,
    build_graph,
    denoise_sgw,
    energy_compaction,
    psnr,
    ssim,
)
from .spectral import build_laplacian, design_wavelets, estimate_lambda_max

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4

COMPACTION_COLUMNS = (
    "image", "method", "M", "band", "fraction", "cumulative", "transform_fraction", "transform_cumulative",
)
SUITE_COLUMNS = (
    "image", "sigma", "method", "psnr", "ssim", "noisy_psnr", "edges",
    "graph_ms", "design_ms", "forward_ms", "inverse_ms", "total_ms",
)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    output: str = None
    window: int = 11
    sigma_d: float = None
    sigma_f: float = 30.0
    method: str = "nnk"
    scales: int = 6
    degree: int = 30
    threshold_mode: str = "soft"
    threshold_k: float = 3.0
    noise_sigma: float = None
    seed: int = 0
    threads: int = None
    presmooth: bool = False

    def validate(self):
        try:
            precompute_window(self.window)
        except ValueError as exc:
            raise UsageError(f"--window: {exc}") from None
        for flag, value in (("--sigma-d", self.sigma_d), ("--sigma-f", self.sigma_f)):
            if value is not None and not (math.isfinite(value) and value > 0):
                raise UsageError(f"{flag} must be finite and > 0, got {value}")
        if self.scales < 1:
            raise UsageError(f"--scales must be >= 1, got {self.scales}")
        if self.degree < 3:
            raise UsageError(f"--degree must be >= 3, got {self.degree}")
        if not (math.isfinite(self.threshold_k) and self.threshold_k >= 0):
            raise UsageError(f"--threshold-k must be finite and >= 0, got {self.threshold_k}")
        if self.noise_sigma is not None and not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise UsageError(f"--noise-sigma must be finite and >= 0, got {self.noise_sigma}")
        if self.threads is not None and self.threads < 1:
            raise UsageError(f"--threads must be >= 1, got {self.threads}")
        return self

    def kernel_params(self):
        return KernelParams.default(self.window, self.sigma_d, self.sigma_f)

    def to_dict(self):
        return asdict(self)


def _write_json(path, payload):
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _write_csv(path, columns, rows, cfg):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)
    _write_json(path + ".json", {"format_version": FORMAT_VERSION, "columns": list(columns), "config": cfg.to_dict()})


def _provenance(cfg):
    return {"format_version": FORMAT_VERSION, "tool_version": __version__, "config": cfg.to_dict()}


def _config(args, command):
    cfg = RunConfig(
        command=command,
        inputs=list(getattr(args, "input", None) or []),
        output=getattr(args, "output", None),
        window=getattr(args, "window", 11),
        sigma_d=getattr(args, "sigma_d", None),
        sigma_f=getattr(args, "sigma_f", 30.0),
        method=getattr(args, "method", "nnk"),
        scales=getattr(args, "scales", 6),
        degree=getattr(args, "degree", 30),
        threshold_mode=getattr(args, "threshold_mode", "soft"),
        threshold_k=getattr(args, "threshold_k", 3.0),
        noise_sigma=getattr(args, "noise_sigma", None),
        seed=getattr(args, "seed", 0),
        threads=getattr(args, "threads", None),
        presmooth=getattr(args, "presmooth", False),
    )
    return cfg.validate()


def _load(path):
    try:
        return read_image(path)
    except (OSError, ValueError) as exc:
        raise OSError(f"cannot read image {path}: {exc}") from exc


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _method_list(text):
    methods = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in methods if m not in ("nnk", "bf", "bf-filter")]
    if bad or not methods:
        raise argparse.ArgumentTypeError(f"methods must be among nnk, bf, bf-filter; got {text!r}")
    return methods


def cmd_build_graph(args):
    cfg = _config(args, "build-graph")
    img, _ = _load(args.input[0])
    graph = build_graph(img, cfg.method, cfg.window, cfg.kernel_params(), n_jobs=cfg.threads)
    save_graph(graph, args.output)
    stats = graph_stats(graph)
    stats["image_sha256"] = file_sha256(args.input[0])
    write_stats(stats, args.stats or args.output + ".json", config=cfg.to_dict())
    return EXIT_OK


def cmd_stats(args):
    graph = load_graph(args.graph)
    _write_json(args.output, {"format_version": FORMAT_VERSION, "graph": args.graph, "stats": graph_stats(graph)})
    return EXIT_OK


def cmd_add_noise(args):
    cfg = _config(args, "add-noise")
    img, peak = _load(args.input[0])
    noisy = add_noise(img, NoiseSpec(cfg.noise_sigma or 0.0, cfg.seed))
    write_image(args.output, noisy, int(peak))
    return EXIT_OK


def _denoise_one(path, cfg, method, sigma):
    img, peak = _load(path)
    reference = None
    noisy = img
    if sigma is not None:
        reference = img
        noisy = add_noise(img, NoiseSpec(sigma, cfg.seed))
    params = cfg.kernel_params()
    if method == "bf-filter":
        t0 = time.perf_counter()
        out = np.clip(bf_filter(noisy, precompute_window(cfg.window), params), 0, peak)
        elapsed = (time.perf_counter() - t0) * 1e3
        report = {"method": method, "timings_ms": {"filter": elapsed}, "edges": {}}
        if reference is not None:
            report.update(
                psnr_db=psnr(reference, out, peak), ssim=ssim(reference, out, peak),
                noisy_psnr_db=psnr(reference, noisy, peak),
            )
        return out, report, peak
    out, rep = denoise_sgw(
        noisy,
        method=method,
        window_size=cfg.window,
        params=params,
        num_scales=cfg.scales,
        cheby_degree=cfg.degree,
        rule=ThresholdRule(cfg.threshold_mode, cfg.threshold_k),
        peak=peak,
        presmooth=cfg.presmooth,
        reference=reference,
        n_jobs=cfg.threads,
    )
    return out, rep.to_dict(), peak


def cmd_denoise(args):
    cfg = _config(args, "denoise")
    methods = args.methods or [cfg.method]
    sigmas = args.sigmas if args.sigmas else [cfg.noise_sigma]
    single = len(cfg.inputs) == 1 and len(methods) == 1 and len(sigmas) == 1
    if not single and args.output and not os.path.isdir(args.output):
        os.makedirs(args.output, exist_ok=True)
    reports, rows = [], []
    for path in cfg.inputs:
        name = os.path.splitext(os.path.basename(path))[0]
        for sigma in sigmas:
            for method in methods:
                out, report, peak = _denoise_one(path, cfg, method, sigma)
                report.update(image=path, image_sha256=file_sha256(path), noise_sigma=sigma)
                reports.append(report)
                if args.output:
                    target = args.output if single else os.path.join(
                        args.output, f"{name}_s{sigma if sigma is not None else 'in'}_{method}.pgm"
                    )
                    write_image(target, out, int(peak))
                timings = report.get("timings_ms", {})
                rows.append({
                    "image": name, "sigma": sigma, "method": method,
                    "psnr": report.get("psnr_db"), "ssim": report.get("ssim"),
                    "noisy_psnr": report.get("noisy_psnr_db"),
                    "edges": report.get("edges", {}).get("undirected"),
                    "graph_ms": timings.get("graph"), "design_ms": timings.get("design"),
                    "forward_ms": timings.get("forward"), "inverse_ms": timings.get("inverse"),
                    "total_ms": sum(timings.values()),
                })
    payload = _provenance(cfg)
    if single:
        payload["report"] = reports[0]
    else:
        payload["reports"] = reports
    if args.report:
        _write_json(args.report, payload)
    if args.csv:
        _write_csv(args.csv, SUITE_COLUMNS, rows, cfg)
    if not args.report and not args.csv:
        _write_json("-", payload)
    return EXIT_OK


def cmd_compaction(args):
    cfg = _config(args, "compaction")
    rows = []
    for path in cfg.inputs:
        img, _ = _load(path)
        name = os.path.splitext(os.path.basename(path))[0]
        for method in args.methods:
            if method not in ("nnk", "bf"):
                raise UsageError("--methods for compaction must be nnk and/or bf")
            graph = build_graph(img, method, cfg.window, cfg.kernel_params(), n_jobs=cfg.threads)
            L = build_laplacian(graph)
            lmax = estimate_lambda_max(L)
            for degree in args.degrees:
                if degree < 3:
                    raise UsageError(f"--degrees entries must be >= 3, got {degree}")
                design = design_wavelets(lmax, cfg.scales, degree)
                ec = energy_compaction(img, graph, design, L=L, remove_mean=args.remove_mean)
                frac, cum = ec["fractions"], ec["cumulative"]
                tfrac = frac / frac.sum()
                tcum = np.cumsum(tfrac)
                for b in range(frac.size):
                    rows.append({
                        "image": name, "method": method, "M": degree, "band": b,
                        "fraction": repr(float(frac[b])), "cumulative": repr(float(cum[b])),
                        "transform_fraction": repr(float(tfrac[b])),
                        "transform_cumulative": repr(float(tcum[b])),
                    })
    _write_csv(args.output, COMPACTION_COLUMNS, rows, cfg)
    return EXIT_OK


def cmd_bench(args):
    cfg = _config(args, "bench")
    img, _ = _load(cfg.inputs[0])
    try:
        center_crop(img, args.crop)
    except ValueError as exc:
        raise UsageError(f"--crop: {exc}") from None
    rows = bench_construction(
        img, windows=args.windows, crop=args.crop, repeats=args.repeats,
        exact_pixels=args.exact_pixels, seed=cfg.seed, n_jobs=cfg.threads,
    )
    _write_csv(args.output, BENCH_COLUMNS, rows, cfg)
    return EXIT_OK


def _add_common(p, graph=True, spectral=False, denoise=False):
    if graph:
        p.add_argument("--window", type=int, default=11, help="odd window size (default 11)")
        p.add_argument("--sigma-d", type=float, default=None, help="spatial bandwidth (default window/4)")
        p.add_argument("--sigma-f", type=float, default=30.0, help="intensity bandwidth (default 30)")
        p.add_argument("--threads", type=int, default=None, help="worker threads for graph construction")
    if spectral:
        p.add_argument("--scales", type=int, default=6, help="number of wavelet scales J (default 6)")
    if denoise:
        p.add_argument("--degree", type=int, default=30, help="Chebyshev degree M (default 30)")
        p.add_argument("--threshold-mode", choices=("soft", "hard"), default="soft")
        p.add_argument("--threshold-k", type=float, default=3.0, help="threshold multiple of the band MAD noise estimate")
        p.add_argument("--noise-sigma", type=float, default=None, help="add Gaussian noise to the input first")
        p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="nnk-image", description="NNK image graphs and graph-wavelet experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="build an NNK or BF graph from an image")
    p.add_argument("input", nargs=1)
    p.add_argument("-o", "--output", required=True, help="graph file (.nnkg)")
    p.add_argument("--stats", default=None, help="stats JSON path (default OUTPUT.json)")
    p.add_argument("--method", choices=("nnk", "bf"), default="nnk")
    _add_common(p)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("stats", help="print statistics of a graph file")
    p.add_argument("graph")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("add-noise", help="add Gaussian noise to an image")
    p.add_argument("input", nargs=1)
    p.add_argument("-o", "--output", required=True, help="PGM, or .npy for unclipped floats")
    p.add_argument("--noise-sigma", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_add_noise)

    p = sub.add_parser("denoise", help="graph-wavelet denoising")
    p.add_argument("input", nargs="+")
    p.add_argument("-o", "--output", default=None, help="output PGM (single run) or directory")
    p.add_argument("--report", default=None, help="JSON report path")
    p.add_argument("--csv", default=None, help="suite CSV path")
    p.add_argument("--method", choices=("nnk", "bf", "bf-filter"), default="nnk")
    p.add_argument("--methods", type=_method_list, default=None, help="comma list, overrides --method")
    p.add_argument("--sigmas", type=_float_list, default=None, help="comma list of noise levels")
    p.add_argument("--presmooth", action="store_true", help="build the graph on a bilateral-filtered guide")
    _add_common(p, spectral=True, denoise=True)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("compaction", help="per-band energy fractions vs Chebyshev degree")
    p.add_argument("input", nargs="+")
    p.add_argument("-o", "--output", required=True, help="CSV path")
    p.add_argument("--methods", type=_method_list, default=["nnk", "bf"])
    p.add_argument("--degrees", type=_int_list, default=[10, 20, 30, 40, 50])
    p.add_argument("--remove-mean", action="store_true")
    _add_common(p, spectral=True)
    p.set_defaults(func=cmd_compaction)

    p = sub.add_parser("bench", help="per-pixel construction timings")
    p.add_argument("input", nargs=1)
    p.add_argument("-o", "--output", required=True, help="CSV path")
    p.add_argument("--crop", type=int, default=128)
    p.add_argument("--windows", type=_int_list, default=[3, 5, 7, 9, 11])
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--exact-pixels", type=int, default=64, help="pixels sampled for the exact solver")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"nnk-image {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, EOFError) as exc:
        print(f"nnk-image {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalDomainError, FloatingPointError, ArithmeticError) as exc:
        print(f"nnk-image {args.command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"nnk-image {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
