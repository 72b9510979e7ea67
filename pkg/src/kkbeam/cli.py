"""kkbeam command line driver.

Subcommands share one configuration (defaults, optional --config file,
then repeatable --key section.name=value overrides):

    simulate   synthesize element RF for the configured phantom
    compress   decompose element RF into virtual plane-wave traces
    beamform   form images from element or decomposed RF
    pipeline   simulate + decompose + beamform + metrics in one run
    support    tabulate the k-space support of the angle sets
    bench      staged throughput comparison on seeded noise data

Every run writes a sidecar <prefix>.cfg with the fully resolved
configuration (including the effective seed and thread count); re-running
a subcommand with --config pointing at the sidecar reproduces the outputs
bit for bit.

Exit codes: 0 success; 2 configuration or usage errors; 3 data errors
(malformed files, guard-band or ROI violations); 4 I/O failures.
Thread count resolution: --threads, else the KKBEAM_THREADS environment
variable, else run.threads from the config (0 keeps the runtime default).
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import bench as bench_mod
from .beamform import (
    build_das_luts,
    build_kk_luts,
    compound_coherent,
    compound_incoherent,
    das,
    intensity,
    kk,
)
from .compress import compress
from .config import DEG, MM, PipelineConfig, dump_config
from .core import AnalyticRF, CompressedRF, RFVolume
from .errors import ConfigError, DataError
from .metrics import Roi, gamma_match, gcnr, lateral_fwhm, peak_position
from .rffile import read_container, write_container
from .sampling import confocal_angles, support, support_histogram
from .simulate import simulate_rf
from .spectral import analytic_signal

ENV_THREADS = "KKBEAM_THREADS"


# ---- configuration plumbing ------------------------------------------


def _load_config(args) -> PipelineConfig:
    overrides = list(args.overrides or [])
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    if args.threads is not None:
        overrides.append(f"run.threads={args.threads}")
    elif os.environ.get(ENV_THREADS):
        overrides.append(f"run.threads={os.environ[ENV_THREADS]}")
    if args.config is not None:
        return PipelineConfig.from_file(args.config, overrides)
    return PipelineConfig().with_overrides(overrides)


def _apply_threads(cfg: PipelineConfig) -> None:
    if cfg.threads > 0:
        import numba

        try:
            numba.set_num_threads(cfg.threads)
        except ValueError as exc:
            raise ConfigError(f"cannot use {cfg.threads} threads: {exc}") from exc


def _out_dir(cfg: PipelineConfig) -> str:
    path = cfg.get("output", "directory")
    os.makedirs(path, exist_ok=True)
    return path


def _out_path(cfg: PipelineConfig, suffix: str) -> str:
    return os.path.join(_out_dir(cfg), cfg.get("output", "prefix") + suffix)


def _write_sidecar(cfg: PipelineConfig) -> str:
    path = _out_path(cfg, ".cfg")
    with open(path, "w", encoding="utf-8") as f:
        f.write(dump_config(cfg))
    return path


def _receive_sets(cfg: PipelineConfig):
    """Labeled receive angle sets the config asks for."""
    scheme = cfg.get("sampling", "scheme")
    if scheme == "uniform_vernier":
        return [(f"kk_j{j}", cfg.receive_set(j)) for j in cfg.get("sampling", "vernier_offsets")]
    if scheme == "confocal":
        return [("kk_confocal", cfg.receive_set())]
    return [("kk_explicit", cfg.receive_set())]


def _last_read_sample(cfg: PipelineConfig, receive_sets) -> int:
    """Largest sample index the kk beamformer will read on this grid."""
    grid = cfg.grid()
    params = cfg.acquisition()
    fs = cfg.array().sampling_frequency
    c = params.sound_speed
    x, z = grid.x, grid.z
    tin = np.full((grid.nx, grid.nz), -math.inf)
    for theta in params.transmit_angles:
        np.maximum(tin, x[:, None] * math.sin(theta) + z[None, :] * math.cos(theta), out=tin)
    tout = np.full((grid.nx, grid.nz), -math.inf)
    for _, receive in receive_sets:
        for theta in receive.angles:
            np.maximum(
                tout, z[None, :] * math.cos(theta) - x[:, None] * math.sin(theta), out=tout
            )
    tau_max = float((tin + tout).max()) / c
    bconf = cfg.beamform_config()
    return int(math.ceil((tau_max + bconf.pulse_delay - params.start_time) * fs)) + 1


# ---- output writers ---------------------------------------------------


def write_pgm16(path: str, mapped: np.ndarray) -> None:
    """16-bit big-endian binary PGM; rows are depth, columns lateral."""
    mapped = np.clip(np.asarray(mapped, dtype=np.float64), 0.0, 1.0)
    raster = np.round(mapped.T * 65535.0).astype(">u2")
    nz, nx = raster.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{nx} {nz}\n65535\n".encode("ascii"))
        f.write(raster.tobytes())


def write_raw_f32(path: str, pixels: np.ndarray) -> None:
    """Raw little-endian float32 dump, C order, shape (nx, nz)."""
    with open(path, "wb") as f:
        f.write(np.ascontiguousarray(pixels, dtype="<f4").tobytes())


def _write_images(cfg, intensities) -> tuple[list[str], dict]:
    """Raw intensity plus display PGM for each labeled image.

    Display levels of every image are gamma matched to the das image when
    one is present, otherwise to the image itself (exponent 0.5). Returns
    (paths, gamma by label).
    """
    reference = intensities.get("das")
    paths = []
    gammas = {}
    for label, img in intensities.items():
        ref = reference if reference is not None else img
        if img.pixels.max() <= 0:
            gamma, mapped = 1.0, np.zeros_like(img.pixels)
        else:
            if ref.pixels.max() <= 0:
                ref = img
            gamma, mapped = gamma_match(img, ref)
        gammas[label] = gamma
        raw = _out_path(cfg, f"_{label}.f32")
        write_raw_f32(raw, img.pixels)
        pgm = _out_path(cfg, f"_{label}.pgm")
        write_pgm16(pgm, mapped)
        paths += [raw, pgm]
    return paths, gammas


def _collect_metrics(cfg, intensities, gammas):
    rows = []
    mg = lambda key: cfg.get("metrics", key)
    for label, img in intensities.items():
        px, pz = peak_position(img)
        rows.append((label, "peak_x_mm", px / MM))
        rows.append((label, "peak_z_mm", pz / MM))
        rows.append((label, "gamma", gammas[label]))
        if mg("gcnr_enabled"):
            inside = Roi.circle(
                mg("gcnr_inside_x_mm") * MM,
                mg("gcnr_inside_z_mm") * MM,
                mg("gcnr_inside_radius_mm") * MM,
            )
            outside = Roi.rect(
                mg("gcnr_outside_x0_mm") * MM,
                mg("gcnr_outside_z0_mm") * MM,
                mg("gcnr_outside_x1_mm") * MM,
                mg("gcnr_outside_z1_mm") * MM,
            )
            rows.append((label, "gcnr", gcnr(img, inside, outside, mg("gcnr_num_bins"))))
        if mg("fwhm_enabled"):
            width = lateral_fwhm(
                img,
                mg("fwhm_x_mm") * MM,
                mg("fwhm_z_mm") * MM,
                mg("fwhm_window_mm") * MM,
            )
            rows.append((label, "fwhm_mm", width / MM))
    return rows


def _write_metrics(cfg, rows) -> str:
    path = _out_path(cfg, "_metrics.csv")
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["image", "metric", "value"])
        for label, metric, value in rows:
            writer.writerow([label, metric, repr(float(value))])
    return path


def _report(paths) -> None:
    for p in paths:
        print(f"wrote {p}")


# ---- image formation shared by beamform and pipeline -------------------


def _form_images(cfg: PipelineConfig, rf) -> dict:
    """Label -> ComplexImage for the configured method(s).

    rf may be an RFVolume or AnalyticRF (das and/or kk via in-memory
    decomposition) or a CompressedRF (kk only, angles from the data).
    """
    method = cfg.get("beamform", "method")
    grid = cfg.grid()
    bconf = cfg.beamform_config()
    images = {}
    if isinstance(rf, CompressedRF):
        if method == "das":
            raise ConfigError("das needs element data, but the input is decomposed")
        luts = build_kk_luts(grid, rf.params, rf.receive_angles)
        images["kk"] = kk(rf, luts, bconf)
        return images
    analytic = analytic_signal(rf) if isinstance(rf, RFVolume) else rf
    if method in ("das", "both"):
        luts = build_das_luts(grid, analytic.array, analytic.params)
        images["das"] = das(analytic, luts, bconf)
    if method in ("kk", "both"):
        receive_sets = _receive_sets(cfg)
        last_read = _last_read_sample(cfg, receive_sets)
        for label, receive in receive_sets:
            rfc = compress(analytic, receive, last_used_sample=last_read)
            luts = build_kk_luts(grid, rfc.params, receive)
            images[label] = kk(rfc, luts, bconf)
    return images


def _finish_images(cfg: PipelineConfig, images: dict) -> list[str]:
    """Detect, compound, write images and metrics; returns written paths."""
    intensities = {label: intensity(img) for label, img in images.items()}
    mode = cfg.get("compound", "mode")
    kk_images = [img for label, img in images.items() if label.startswith("kk")]
    if mode != "none" and kk_images:
        if mode == "coherent":
            intensities["kk_coh"] = compound_coherent(kk_images)
        else:
            intensities["kk_inc"] = compound_incoherent(kk_images)
    paths, gammas = _write_images(cfg, intensities)
    if cfg.get("metrics", "enabled"):
        rows = _collect_metrics(cfg, intensities, gammas)
        paths.append(_write_metrics(cfg, rows))
    return paths


# ---- subcommands -------------------------------------------------------


def _cmd_simulate(cfg: PipelineConfig, args) -> int:
    rf = simulate_rf(
        cfg.array(),
        cfg.acquisition(),
        cfg.phantom(),
        cfg.pulse(),
        noise_rms=cfg.get("phantom", "noise_rms"),
        seed=cfg.seed,
        geometric_spreading=cfg.get("phantom", "geometric_spreading"),
    )
    path = args.output or _out_path(cfg, ".rf")
    write_container(path, rf)
    _report([path, _write_sidecar(cfg)])
    return 0


def _cmd_compress(cfg: PipelineConfig, args) -> int:
    source = args.input or _out_path(cfg, ".rf")
    container = read_container(source)
    if isinstance(container, CompressedRF):
        raise ConfigError(f"{source} is already decomposed")
    analytic = (
        analytic_signal(container) if isinstance(container, RFVolume) else container
    )
    receive_sets = _receive_sets(cfg)
    if args.output and len(receive_sets) > 1:
        raise ConfigError("--output needs a single receive set")
    last_read = _last_read_sample(cfg, receive_sets)
    paths = []
    for label, receive in receive_sets:
        rfc = compress(analytic, receive, last_used_sample=last_read)
        suffix = label.removeprefix("kk_")
        path = args.output or _out_path(cfg, f"_{suffix}.rfc")
        write_container(path, rfc)
        paths.append(path)
    _report(paths + [_write_sidecar(cfg)])
    return 0


def _cmd_beamform(cfg: PipelineConfig, args) -> int:
    source = args.input or _out_path(cfg, ".rf")
    container = read_container(source)
    images = _form_images(cfg, container)
    paths = _finish_images(cfg, images)
    _report(paths + [_write_sidecar(cfg)])
    return 0


def _cmd_pipeline(cfg: PipelineConfig, args) -> int:
    rf = simulate_rf(
        cfg.array(),
        cfg.acquisition(),
        cfg.phantom(),
        cfg.pulse(),
        noise_rms=cfg.get("phantom", "noise_rms"),
        seed=cfg.seed,
        geometric_spreading=cfg.get("phantom", "geometric_spreading"),
    )
    rf_path = _out_path(cfg, ".rf")
    write_container(rf_path, rf)
    images = _form_images(cfg, rf)
    paths = _finish_images(cfg, images)
    _report([rf_path] + paths + [_write_sidecar(cfg)])
    return 0


def _cmd_support(cfg: PipelineConfig, args) -> int:
    params = cfg.acquisition()
    fc = cfg.array().center_frequency
    all_samples = []
    path = _out_path(cfg, "_support.csv")
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["set", "delta_theta_deg", "kx_per_mm"])
        for label, receive in _receive_sets(cfg):
            samples = support(params.transmit_angles, receive, fc, params.sound_speed)
            all_samples += samples
            for s in samples:
                writer.writerow([label, repr(s.delta_theta / DEG), repr(s.kx * MM)])
    edges, counts = support_histogram(all_samples, cfg.get("sampling", "histogram_bins"))
    hist_path = _out_path(cfg, "_support_hist.csv")
    with open(hist_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["bin_lo_deg", "bin_hi_deg", "count"])
        for k, count in enumerate(counts):
            writer.writerow([repr(edges[k] / DEG), repr(edges[k + 1] / DEG), int(count)])
    print(f"{len(all_samples)} support samples, delta_theta "
          f"{edges[0] / DEG:.3f}..{edges[-1] / DEG:.3f} deg")
    for k, count in enumerate(counts):
        bar = "#" * count if count <= 60 else "#" * 60 + "+"
        print(f"{edges[k] / DEG:8.3f} .. {edges[k + 1] / DEG:8.3f} deg {count:6d} {bar}")
    _report([path, hist_path, _write_sidecar(cfg)])
    return 0


def _cmd_bench(cfg: PipelineConfig, args) -> int:
    rf = bench_mod.noise_volume(cfg.array(), cfg.acquisition(), seed=cfg.seed)
    grid = cfg.grid()
    bconf = cfg.beamform_config()
    reps = cfg.get("bench", "repetitions")
    rows = []
    for method in cfg.get("bench", "methods"):
        if method == "das":
            rows.append(bench_mod.bench_das(rf, grid, reps, bconf))
        elif method == "kk":
            n = cfg.get("acquisition", "num_transmits")
            max_angle = cfg.get("acquisition", "max_angle_deg") * DEG
            for m in cfg.get("bench", "m_list"):
                receive = confocal_angles(n, m, max_angle)
                rows.append(bench_mod.bench_kk(rf, grid, receive, reps, bconf))
        else:
            raise ConfigError(f"unknown bench method {method!r}")
    path = _out_path(cfg, "_bench.csv")
    with open(path, "w", newline="", encoding="utf-8") as f:
        bench_mod.write_bench_csv(rows, f)
    print(bench_mod.format_bench_table(rows))
    _report([path, _write_sidecar(cfg)])
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "compress": _cmd_compress,
    "beamform": _cmd_beamform,
    "pipeline": _cmd_pipeline,
    "support": _cmd_support,
    "bench": _cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kkbeam",
        description="plane-wave ultrasound beamforming with receive decomposition",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "synthesize element RF for the configured phantom"),
        ("compress", "decompose element RF into virtual plane-wave traces"),
        ("beamform", "form images from element or decomposed RF"),
        ("pipeline", "simulate, decompose, beamform, and measure in one run"),
        ("support", "tabulate the k-space support of the angle sets"),
        ("bench", "staged throughput comparison on seeded noise data"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="configuration file (defaults apply without one)")
        p.add_argument(
            "--key",
            dest="overrides",
            action="append",
            metavar="SECTION.NAME=VALUE",
            help="override one configuration value (repeatable)",
        )
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--threads", type=int, help="override run.threads")
        if name in ("compress", "beamform"):
            p.add_argument("--input", help="input RF container path")
        if name in ("simulate", "compress"):
            p.add_argument("--output", help="output RF container path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        _apply_threads(cfg)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"kkbeam: configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"kkbeam: data error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"kkbeam: i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
