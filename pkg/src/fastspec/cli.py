"""Command-line entry point.

One image or a folder per invocation, plus a benchmark mode that times the
pipelines on generated synthetics and fits the runtime growth exponent.

Exit codes: 0 success, 2 usage, 3 config, 4 capacity, 5 convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import metrics as metrics_mod
from .affinity import AffinityParams, dump_matrix
from .config import load_config_file, merge_config
from .errors import (
    ArgumentError,
    CapacityError,
    ConfigError,
    ConvergenceError,
    FastspecError,
    FormatError,
)
from .fsc import fsc
from .image_io import (
    GrayImage,
    atomic_write_bytes,
    load_gray,
    load_mask,
    next_pow2,
    pad_to_pow2,
    resize_bilinear,
    resize_nearest_labels,
    write_labels,
)
from .mfsc import mfsc
from .ncut_baseline import ncut
from .quadtree import decompose, tree_to_dict
from .synth import stripes, two_region

IMAGE_SUFFIXES = {".pgm", ".png"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="segment",
        description="Quad-tree superpixel spectral segmentation (ncut / fsc / mfsc).",
    )
    ap.add_argument("config", nargs="?", default=None,
                    help="optional JSON config file; flags override its fields")
    ap.add_argument("--algorithm", choices=["ncut", "fsc", "mfsc"], default=None)
    ap.add_argument("--image", default=None, help="single input image (PGM or PNG)")
    ap.add_argument("--folder", default=None, help="folder of images for a batch run")
    ap.add_argument("--gt", default=None,
                    help="ground-truth mask (file for --image, folder for --folder)")
    ap.add_argument("--k", type=int, default=None, help="number of clusters")
    ap.add_argument("--t", type=float, default=None,
                    help="variance split threshold, 0-255 intensity domain")
    ap.add_argument("--r", type=float, default=None, help="pixel graph radius")
    ap.add_argument("--R", type=float, default=None, help="superpixel connection radius")
    ap.add_argument("--sigma-x", dest="sigma_x", type=float, default=None)
    ap.add_argument("--sigma-i", dest="sigma_i", type=float, default=None,
                    help="intensity scale, 0-255 domain")
    ap.add_argument("--sigma-c", dest="sigma_c", type=float, default=None)
    ap.add_argument("--alpha", type=float, default=None)
    ap.add_argument("--l-init", dest="l_init", type=int, default=None,
                    help="start level of the multiscale walk")
    ap.add_argument("--k-int", dest="k_int", type=int, default=None,
                    help="components kept at interior merges")
    ap.add_argument("--mode", choices=["exact", "approx"], default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--jobs", type=int, default=None, help="parallel batch items")
    ap.add_argument("--out-dir", dest="out_dir", default=None)
    ap.add_argument("--dump-tree", dest="dump_tree", action="store_true", default=None,
                    help="write the quad-tree (and merge trace for mfsc) as JSON")
    ap.add_argument("--dump-matrices", dest="dump_matrices", action="store_true",
                    default=None, help="write affinity matrices in MatrixMarket format")
    ap.add_argument("--cluster-superpixels", dest="cluster_superpixels",
                    action="store_true", default=None,
                    help="cluster superpixel rows and broadcast, instead of pixel rows")
    ap.add_argument("--literal-dice", dest="literal_dice", action="store_true",
                    default=None, help="Dice without the factor 2 (replication aid)")
    return ap


def _prepare_image(cfg, path):
    img = load_gray(path)
    geometry = cfg.geometry
    h, w = img.data.shape
    side = next_pow2(max(h, w))
    if h == w == side:
        return img
    if geometry == "pad":
        return pad_to_pow2(img)
    return resize_bilinear(img, side)


def _run_algorithm(cfg, img: GrayImage, batch: bool = False):
    side = img.width
    resolved = cfg.resolved(side, batch)
    p = cfg.affinity_params(side, batch)
    t_int = cfg.internal_t(side, batch)
    algo = resolved["algorithm"]
    seed = int(resolved["seed"])
    k = int(resolved["k"])
    common = dict(seed=seed, regularize=bool(resolved["regularize"]))
    if algo == "ncut":
        clusterer = resolved["clusterer"] or "kmeans"
        return ncut(img, p, k, clusterer=clusterer,
                    keep_matrices=bool(resolved["dump_matrices"]), **common)
    clusterer = resolved["clusterer"] or "fcm"
    pipeline_kw = dict(
        mode=resolved["mode"],
        min_block_side=int(resolved["min_block_side"]),
        clusterer=clusterer,
        cluster_superpixels=bool(resolved["cluster_superpixels"]),
        tol=float(resolved["tol"]),
        keep_matrices=bool(resolved["dump_matrices"]),
        **common,
    )
    if algo == "fsc":
        return fsc(img, p, t_int, k, max_iter=resolved["max_iter"], **pipeline_kw)
    return mfsc(
        img, p, t_int, k,
        l_init=int(resolved["l_init"]),
        k_int=int(resolved["k_int"]),
        collect_merges=bool(resolved["dump_tree"]),
        **pipeline_kw,
    )


def _write_json(path, payload: dict) -> None:
    atomic_write_bytes(path, (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode())


def _metrics_dict(result, gt, literal: bool) -> dict:
    pred = result.cropped()
    return {
        "acc": metrics_mod.acc(pred, gt),
        "ri": metrics_mod.rand_index(pred, gt),
        "dice": metrics_mod.dice(pred, gt, literal=literal),
    }


def _prepare_gt(cfg, gt_path, result):
    gt = load_mask(gt_path)
    if cfg.geometry == "rescale" and gt.shape != (result.height, result.width):
        gt = resize_nearest_labels(gt, result.width)
    if gt.shape != (result.height, result.width):
        raise ArgumentError(
            f"ground truth {gt.shape} does not match the label grid "
            f"({result.height}, {result.width})"
        )
    return gt


def run_single(cfg) -> int:
    image_path = Path(cfg.values["image"])
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    img = _prepare_image(cfg, image_path)

    start = time.perf_counter()
    result = _run_algorithm(cfg, img)
    total = time.perf_counter() - start

    stem = image_path.stem
    write_labels(result, out_dir / f"{stem}.labels.png", "png-palette")
    write_labels(result, out_dir / f"{stem}.labels.csv", "csv")
    timing = {stage: result.timings.get(stage, 0.0)
              for stage in ("decompose", "affinity", "eigen", "merge", "fcm")}
    timing["total"] = total
    _write_json(out_dir / f"{stem}.timing.json",
                {"stages": timing, "timestamp": time.time()})

    if cfg.values.get("gt"):
        gt = _prepare_gt(cfg, cfg.values["gt"], result)
        _write_json(out_dir / f"{stem}.metrics.json",
                    _metrics_dict(result, gt, bool(cfg.literal_dice)))

    if cfg.dump_tree and result.meta.get("algorithm") != "ncut":
        resolved = cfg.resolved(img.width)
        tree = decompose(img, cfg.internal_t(img.width),
                         min_block_side=int(resolved["min_block_side"]))
        payload = tree_to_dict(tree, img)
        if "merges" in result.meta:
            payload["merges"] = result.meta["merges"]
        _write_json(out_dir / f"{stem}.tree.json", payload)

    if cfg.dump_matrices:
        key = "W" if result.meta.get("algorithm") == "ncut" else "Wt"
        if key in result.meta:
            dump_matrix(result.meta[key], out_dir / f"{stem}.{key}.mtx")
    return 0


def _batch_item(cfg, path, gt_dir):
    img = _prepare_image(cfg, path)
    start = time.perf_counter()
    result = _run_algorithm(cfg, img, batch=True)
    elapsed = time.perf_counter() - start
    row = {
        "image": path.name,
        "algorithm": result.meta.get("algorithm", ""),
        "size": img.width,
        "time_s": elapsed,
        "acc": "",
        "dice": "",
        "ri": "",
    }
    warning = None
    if gt_dir is not None:
        candidates = [gt_dir / path.name] + [
            gt_dir / (path.stem + ext) for ext in sorted(IMAGE_SUFFIXES)
        ]
        gt_path = next((c for c in candidates if c.exists()), None)
        if gt_path is None:
            warning = f"warning: no ground truth for {path.name}"
        else:
            gt = _prepare_gt(cfg, gt_path, result)
            vals = _metrics_dict(result, gt, bool(cfg.literal_dice))
            row.update({k: f"{v:.6f}" for k, v in vals.items()})
    out_dir = Path(cfg.out_dir)
    write_labels(result, out_dir / f"{path.stem}.labels.png", "png-palette")
    return row, warning


def run_batch(cfg) -> int:
    folder = Path(cfg.values["folder"])
    files = sorted(p for p in folder.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise ArgumentError(f"no images found in {folder}")
    gt_dir = Path(cfg.values["gt"]) if cfg.values.get("gt") else None
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs = max(int(cfg.jobs), 1)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda f: _batch_item(cfg, f, gt_dir), files))
    else:
        results = [_batch_item(cfg, f, gt_dir) for f in files]

    rows = []
    for row, warning in results:
        if warning:
            print(warning, file=sys.stderr)
        rows.append(row)

    header = ["image", "algorithm", "size", "time_s", "acc", "dice", "ri"]
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(row[h]) if h != "time_s" else f"{row['time_s']:.4f}"
                              for h in header))

    def mean_of(key):
        vals = [float(r[key]) for r in rows if r[key] != ""]
        return f"{np.mean(vals):.6f}" if vals else ""

    mean_row = [
        "mean", rows[0]["algorithm"], "",
        f"{np.mean([r['time_s'] for r in rows]):.4f}",
        mean_of("acc"), mean_of("dice"), mean_of("ri"),
    ]
    lines.append(",".join(mean_row))
    atomic_write_bytes(out_dir / "summary.csv", ("\n".join(lines) + "\n").encode())
    print("\n".join(lines))
    return 0


def _fit_exponent(ns, times):
    slope, _ = np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(times, float)), 1)
    return float(slope)


def scaling_benchmark(sides=(64, 128, 256, 512), ncut_sides=(32, 64, 128),
                      repeats: int = 2, seed: int = 42,
                      algorithms=("mfsc", "ncut")) -> dict:
    """Time the pipelines on synthetics and fit log(time) against log(n).

    mfsc runs in approx mode on fixed-width stripes so the region count
    grows with the image; ncut runs on a connected two-region image within
    its capacity range. Returns the raw tables and fitted exponents.
    """
    report: dict = {}
    if "mfsc" in algorithms:
        p = AffinityParams(r=5.0, R=48.0, sigma_x=4.0, sigma_i=0.05,
                           sigma_c=0.2, alpha=0.45)
        times = []
        for side in sides:
            img, _ = stripes(side, width=16, noise=0.02, seed=seed)
            best = min(
                _timed(lambda: mfsc(img, p, 5e-3, 2, l_init=3, k_int=4,
                                    mode="approx", seed=seed))
                for _ in range(repeats)
            )
            times.append(best)
        report["mfsc"] = {
            "sides": list(sides),
            "n": [s * s for s in sides],
            "times_s": times,
            "exponent": _fit_exponent([s * s for s in sides], times),
        }
    if "ncut" in algorithms:
        p = AffinityParams(r=3.0, R=8.0, sigma_x=4.0, sigma_i=0.05,
                           sigma_c=0.2, alpha=0.45)
        times = []
        for side in ncut_sides:
            img, _ = two_region(side, boundary=0.4, noise=0.02, seed=seed)
            best = min(_timed(lambda: ncut(img, p, 2, seed=seed)) for _ in range(repeats))
            times.append(best)
        report["ncut"] = {
            "sides": list(ncut_sides),
            "n": [s * s for s in ncut_sides],
            "times_s": times,
            "exponent": _fit_exponent([s * s for s in ncut_sides], times),
        }
    return report


def _timed(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def scaling_report(cfg) -> int:
    sc = cfg.scaling or {}
    report = scaling_benchmark(
        sides=tuple(sc.get("sides", (64, 128, 256, 512))),
        ncut_sides=tuple(sc.get("ncut_sides", (32, 64, 128))),
        repeats=int(sc.get("repeats", 2)),
        seed=int(sc.get("seed", cfg.seed)),
        algorithms=tuple(sc.get("algorithms", ("mfsc", "ncut"))),
    )
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "scaling.json", {"report": report, "timestamp": time.time()})
    for algo, table in report.items():
        print(f"{algo}: exponent {table['exponent']:.3f}")
        for side, tm in zip(table["sides"], table["times_s"]):
            print(f"  side {side:>4}  n {side * side:>7}  {tm:.4f}s")
    return 0


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    flag_values = {k: v for k, v in vars(args).items() if k != "config"}
    try:
        json_values = load_config_file(args.config) if args.config else {}
        cfg = merge_config(flag_values, json_values)
        if cfg.scaling is not None:
            return scaling_report(cfg)
        if cfg.values.get("image"):
            return run_single(cfg)
        if cfg.values.get("folder"):
            return run_batch(cfg)
        print("error: one of --image, --folder, or a config with a "
              "'scaling' block is required", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 4
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return 5
    except (ArgumentError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    except FastspecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
