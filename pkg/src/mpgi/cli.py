"""Command-line entry point: ``mpgi <command> [options]``.

Every command accepts ``--config FILE`` (INI; keys are option names, any
section) and explicit flags, which win over the file. Outputs are computed in
memory first and only written once everything has succeeded.

Exit codes: 0 success, 2 configuration error, 3 no target, 4 I/O error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .hadamard import SizeLimitError
from .io import (FormatError, read_config, read_pgm, read_record_csv, write_float_csv,
                 write_manifest, write_pgm, write_record_csv)
from .metrics import block_average, evaluate, fit_and_score, noise_sweep, sweep_summary
from .ordering import AcquisitionPlan, sequence_patterns
from .recon import GRAM_K_MAX, fast_reconstruct, gi_correlate, gram_fwhm, progressive_snapshots
from .roi import NoTargetError, budget_report, composite, lock_target, roi_acquire
from .simulate import MODES, NoiseModel, Scene, noise_for_dsnr, run_acquisition, synthetic_scene

EXIT_OK, EXIT_CONFIG, EXIT_NO_TARGET, EXIT_IO = 0, 2, 3, 4
OUTPUT_ENV = "MPGI_OUTPUT_DIR"
_META_SECTIONS = {"run", "timings", "outputs"}
_INT_KEYS = {"K", "M", "seed", "scene_seed", "lock_tier", "max_lock_tier", "target_tier", "seeds"}
_FLOAT_KEYS = {"dsnr", "alpha"}
_BOOL_KEYS = {"progressive", "naive"}


def _parse_bool(s: str) -> bool:
    return s.strip().lower() in ("1", "true", "yes", "on")


class ConfigError(ValueError):
    pass


def _default_out() -> str:
    return os.environ.get(OUTPUT_ENV, "mpgi_out")


# ----- shared option handling -----

def _add_config(p):
    p.add_argument("--config", help="INI file; keys are option names (flags override)")


def _add_scene(p):
    g = p.add_argument_group("scene")
    g.add_argument("--scene", help="PGM file (P2/P5)")
    g.add_argument("--synthetic", help="synthetic scene name: square, bars, aircraft")
    g.add_argument("--scene-seed", type=int, help="seed for the synthetic generator (default 0)")
    g.add_argument("--K", type=int, help="log2 of the frame side (checked against the scene)")


def _add_noise(p):
    p.add_argument("--mode", choices=MODES, help="illumination mode (default differential)")
    p.add_argument("--dsnr", type=float, help="target DSNR in dB (default inf, noiseless)")
    p.add_argument("--seed", type=int, help="noise seed; required for any noisy run")


def _apply_config(args, defaults: dict):
    cfg = {}
    if getattr(args, "config", None):
        try:
            sections = read_config(args.config)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}")
        for name, items in sections.items():
            if name not in _META_SECTIONS:
                cfg.update({k.replace("-", "_"): v for k, v in items.items()})
    for key, default in defaults.items():
        if getattr(args, key, None) is not None:
            continue
        if key in cfg:
            raw = cfg[key]
            kind = (int if key in _INT_KEYS else float if key in _FLOAT_KEYS
                    else _parse_bool if key in _BOOL_KEYS else str)
            try:
                val = kind(raw)
            except ValueError:
                raise ConfigError(f"config value {key}={raw!r} is not valid")
            setattr(args, key, val)
        else:
            setattr(args, key, default)
    return args


def _load_scene(args) -> Scene:
    if bool(args.scene) == bool(args.synthetic):
        raise ConfigError("give exactly one of --scene or --synthetic")
    if args.scene:
        path = Path(args.scene)
        if not path.is_file():
            raise ConfigError(f"scene file not found: {path}")
        scene = Scene.from_array(np.clip(read_pgm(path), 0, 1), f"pgm:{path.resolve()}")
    else:
        if args.K is None:
            raise ConfigError("--K is required for synthetic scenes")
        try:
            scene = synthetic_scene(args.synthetic, args.K, args.scene_seed)
        except ValueError as exc:
            raise ConfigError(str(exc))
    if args.K is not None and args.K != scene.K:
        raise ConfigError(f"--K={args.K} does not match scene side {scene.side} (K={scene.K})")
    return scene


def _noise(args, scene: Scene, M: int):
    if args.dsnr is None or math.isinf(args.dsnr):
        return NoiseModel(target_dsnr_db=math.inf)
    if args.seed is None:
        raise ConfigError("--seed is required for a noisy run")
    if scene.flux <= 0:
        raise ConfigError("cannot calibrate noise on a scene with zero flux")
    return noise_for_dsnr(scene, args.dsnr, args.mode, M)


def _scene_echo(args, scene: Scene) -> dict:
    echo = {"K": scene.K}
    if args.scene:
        echo["scene"] = str(Path(args.scene).resolve())
    else:
        echo["synthetic"] = args.synthetic
        echo["scene_seed"] = args.scene_seed
    return echo


def _write_outputs(out: Path, files: dict, manifest: dict | None):
    """Write ``{name: writer}`` into ``out``; manifest last."""
    out.mkdir(parents=True, exist_ok=True)
    for name, writer in files.items():
        writer(out / name)
    if manifest is not None:
        manifest.setdefault("outputs", {})["files"] = ",".join(sorted(files))
        write_manifest(out / "manifest.ini", manifest)


def _run_section(command: str) -> dict:
    return {"tool": "mpgi", "version": __version__, "command": command}


# ----- commands -----

def cmd_gen_patterns(args) -> int:
    _apply_config(args, {"K": None, "M": None, "mode": "differential", "out": _default_out()})
    if args.K is None:
        raise ConfigError("--K is required")
    plan = _plan(args.K, args.M)
    files = {}
    pats = sequence_patterns(plan.K, 0, plan.M)
    for m, p in enumerate(pats):
        lit = (1 + p.astype(np.float64)) / 2
        if args.mode == "differential":
            files[f"pattern_{m:06d}_pos.pgm"] = lambda f, a=lit: write_pgm(f, a, 0, 1)
            files[f"pattern_{m:06d}_neg.pgm"] = lambda f, a=1 - lit: write_pgm(f, a, 0, 1)
        else:
            files[f"pattern_{m:06d}.pgm"] = lambda f, a=lit: write_pgm(f, a, 0, 1)
    manifest = {"run": _run_section("gen-patterns"),
                "config": {"K": plan.K, "M": plan.M, "mode": args.mode}}
    _write_outputs(Path(args.out), files, manifest)
    print(f"wrote {len(files)} patterns to {args.out}")
    return EXIT_OK


def _plan(K, M) -> AcquisitionPlan:
    try:
        return AcquisitionPlan(K, M)
    except (ValueError, SizeLimitError) as exc:
        raise ConfigError(str(exc))


def cmd_acquire(args) -> int:
    _apply_config(args, {"scene": None, "synthetic": None, "scene_seed": 0, "K": None, "M": None,
                         "mode": "differential", "dsnr": math.inf, "seed": None,
                         "out": _default_out()})
    t0 = time.perf_counter()
    scene = _load_scene(args)
    plan = _plan(scene.K, args.M)
    noise = _noise(args, scene, plan.M)
    t1 = time.perf_counter()
    seed = 0 if args.seed is None else args.seed
    record = run_acquisition(scene, plan, args.mode, noise, seed)
    t2 = time.perf_counter()
    config = _scene_echo(args, scene)
    config.update({"M": plan.M, "mode": args.mode, "dsnr": args.dsnr, "seed": seed})
    manifest = {
        "run": _run_section("acquire"),
        "config": config,
        "noise": {"kind": record.noise.kind, "sigma": repr(record.noise.sigma),
                  "achieved_dsnr_db": repr(record.achieved_dsnr_db)},
        "timings": {"load_s": f"{t1 - t0:.6f}", "acquire_s": f"{t2 - t1:.6f}"},
    }
    _write_outputs(Path(args.out), {"record.csv": lambda f: write_record_csv(f, record)}, manifest)
    print(f"acquired {record.M} measurements ({record.projections} projections) -> {args.out}")
    return EXIT_OK


def _record_context(record_path: Path, mode, K):
    """Mode and K from flags, else from a sibling manifest.ini, else defaults."""
    man = record_path.parent / "manifest.ini"
    cfg = {}
    if man.is_file():
        cfg = read_config(man).get("config", {})
    mode = mode or cfg.get("mode", "differential")
    K = K if K is not None else (int(cfg["K"]) if "K" in cfg else None)
    return mode, K


def cmd_reconstruct(args) -> int:
    _apply_config(args, {"mode": None, "K": None, "progressive": False, "naive": False,
                         "snapshot_dir": None, "reference": None, "out": None})
    path = Path(args.record)
    if not path.is_file():
        raise ConfigError(f"record file not found: {path}")
    mode, K = _record_context(path, args.mode, args.K)
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    record = read_record_csv(path, mode, K)
    if record.M > 4 ** record.K:
        raise ConfigError(f"record has {record.M} entries, more than 4**K for K={record.K}")
    method = "naive" if args.naive else "fast"
    t0 = time.perf_counter()
    if args.progressive:
        images = progressive_snapshots(record, record.K, method)
    else:
        images = [gi_correlate(record) if args.naive else fast_reconstruct(record)]
    t1 = time.perf_counter()
    reference = None
    if args.reference:
        ref_path = Path(args.reference)
        if not ref_path.is_file():
            raise ConfigError(f"reference file not found: {ref_path}")
        reference = Scene.from_array(np.clip(read_pgm(ref_path), 0, 1), str(ref_path))
        if reference.K != record.K:
            raise ConfigError(f"reference side {reference.side} does not match record K={record.K}")
    files = {}
    for img in images:
        stem = f"tier_{img.tier}_M{img.M}"
        files[f"{stem}.pgm"] = lambda f, im=img: write_pgm(f, im.pixels)
        files[f"{stem}.csv"] = lambda f, im=img: write_float_csv(f, im.native())
    if reference is not None:
        report = evaluate(images, reference, meta={"mode": mode, "method": method})
        files["report.csv"] = lambda f: Path(f).write_text(report.to_csv())
    out = Path(args.snapshot_dir or args.out or _default_out())
    manifest = {"run": _run_section("reconstruct"),
                "config": {"record": str(path.resolve()), "mode": mode, "K": record.K,
                           "naive": args.naive, "progressive": args.progressive,
                           **({"reference": str(Path(args.reference).resolve())}
                              if args.reference else {})},
                "timings": {"reconstruct_s": f"{t1 - t0:.6f}"}}
    _write_outputs(out, files, manifest)
    print(f"wrote {len(images)} image(s) to {out}")
    return EXIT_OK


def cmd_roi_run(args) -> int:
    _apply_config(args, {"scene": None, "synthetic": None, "scene_seed": 0, "K": None,
                         "lock_tier": 2, "max_lock_tier": None, "target_tier": None, "alpha": 1.0,
                         "mode": "differential", "dsnr": math.inf, "seed": None,
                         "out": _default_out()})
    scene = _load_scene(args)
    K = scene.K
    max_lock = K - 1 if args.max_lock_tier is None else args.max_lock_tier
    if not 0 <= args.lock_tier <= max_lock <= K:
        raise ConfigError(f"need 0 <= lock_tier <= max_lock_tier <= K, got "
                          f"{args.lock_tier}, {max_lock}, {K}")
    noise = _noise(args, scene, 4 ** K)
    seed = 0 if args.seed is None else args.seed
    t0 = time.perf_counter()
    full = run_acquisition(scene, AcquisitionPlan(K, 4 ** max_lock), args.mode, noise, seed)
    path, roi, snapshot = [], None, None
    for tier in range(args.lock_tier, max_lock + 1):
        path.append(tier)
        snapshot = fast_reconstruct(full.prefix(4 ** tier), K)
        try:
            roi = lock_target(snapshot, args.alpha)
            break
        except NoTargetError:
            continue
    if roi is None:
        raise NoTargetError(f"no target found at tiers {args.lock_tier}..{max_lock}")
    target_tier = roi.r if args.target_tier is None else args.target_tier
    if not 0 <= target_tier <= roi.r:
        raise ConfigError(f"target tier {target_tier} exceeds ROI tier {roi.r}")
    # ROI stream uses its own noise draw, keyed off the same seed
    roi_rec = roi_acquire(scene, roi, target_tier, args.mode, noise, seed + 1)
    roi_img = fast_reconstruct(roi_rec, roi.r)
    comp = composite(snapshot, roi_img, roi)
    t1 = time.perf_counter()
    budget = budget_report(path, roi, target_tier, K, args.mode)
    inside = fit_and_score(roi_img, scene.reflectance[roi.slices])
    config = _scene_echo(args, scene)
    config.update({"lock_tier": args.lock_tier, "max_lock_tier": max_lock, "target_tier": target_tier,
                   "alpha": args.alpha, "mode": args.mode, "dsnr": args.dsnr, "seed": seed})
    manifest = {
        "run": _run_section("roi-run"),
        "config": config,
        "roi": {"origin_row": roi.origin[0], "origin_col": roi.origin[1], "side": roi.side,
                "lock_tier": roi.lock_tier, "lock_path": ",".join(map(str, path))},
        "timings": {"pipeline_s": f"{t1 - t0:.6f}"},
    }
    files = {
        "composite.pgm": lambda f: write_pgm(f, comp.pixels),
        "composite.csv": lambda f: write_float_csv(f, comp.pixels),
        "budget.csv": lambda f: Path(f).write_text(budget.as_table()),
        "roi_score.csv": lambda f: Path(f).write_text(
            f"mse,psnr_db,pearson_r,max_abs\n{inside.mse!r},{inside.psnr_db!r},"
            f"{inside.pearson_r!r},{inside.max_abs!r}\n"),
    }
    _write_outputs(Path(args.out), files, manifest)
    print(f"ROI origin={roi.origin} side={roi.side} lock_tier={roi.lock_tier}")
    print(budget.as_table(), end="")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    _apply_config(args, {"K": None, "tiers": None, "mode": "differential", "out": None})
    if args.K is None:
        raise ConfigError("--K is required")
    if not 1 <= args.K <= GRAM_K_MAX:
        raise ConfigError(f"diagnose needs 1 <= K <= {GRAM_K_MAX}, got {args.K}")
    tiers = range(1, args.K + 1) if not args.tiers else [int(t) for t in str(args.tiers).split(",")]
    lines = ["kappa,M,fwhm"]
    for t in tiers:
        if not 0 <= t <= args.K:
            raise ConfigError(f"tier {t} out of range for K={args.K}")
        lines.append(f"{t},{4 ** t},{gram_fwhm(args.K, 4 ** t, args.mode)}")
    table = "\n".join(lines) + "\n"
    if args.out:
        _write_outputs(Path(args.out), {"fwhm.csv": lambda f: Path(f).write_text(table)}, None)
    print(table, end="")
    return EXIT_OK


def cmd_sweep(args) -> int:
    _apply_config(args, {"scene": None, "synthetic": None, "scene_seed": 0, "K": None,
                         "dsnr_list": "10,20,40", "seeds": 20, "mode": "differential",
                         "out": _default_out()})
    scene = _load_scene(args)
    try:
        dsnr = [float(d) for d in str(args.dsnr_list).split(",")]
    except ValueError:
        raise ConfigError(f"bad DSNR list {args.dsnr_list!r}")
    if args.seeds < 2:
        raise ConfigError("--seeds must be >= 2")
    sweep = noise_sweep(scene, scene.K, dsnr, range(args.seeds), args.mode)
    lines = ["dsnr_db,seed,tier,M,mse,psnr_db,pearson_r,achieved_dsnr_db"]
    for d, reports in sweep.items():
        for rep in reports:
            for r in rep.rows:
                lines.append(f"{d!r},{rep.meta['seed']},{r.tier},{r.M},{r.mse!r},{r.psnr_db!r},"
                             f"{r.pearson_r!r},{r.achieved_dsnr_db!r}")
    summary = ["dsnr_db,tier,psnr_mean,psnr_std,n_seeds"] + [
        f"{s['dsnr_db']!r},{s['tier']},{s['psnr_mean']!r},{s['psnr_std']!r},{s['n_seeds']}"
        for s in sweep_summary(sweep)]
    config = _scene_echo(args, scene)
    config.update({"dsnr_list": args.dsnr_list, "seeds": args.seeds, "mode": args.mode})
    manifest = {"run": _run_section("sweep"), "config": config}
    _write_outputs(Path(args.out), {
        "sweep.csv": lambda f: Path(f).write_text("\n".join(lines) + "\n"),
        "summary.csv": lambda f: Path(f).write_text("\n".join(summary) + "\n"),
    }, manifest)
    print("\n".join(summary))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpgi", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mpgi {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-patterns", help="write the progressive pattern sequence as PGM files")
    _add_config(p)
    p.add_argument("--K", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_patterns)

    p = sub.add_parser("acquire", help="simulate a bucket record")
    _add_config(p)
    _add_scene(p)
    p.add_argument("--M", type=int, help="number of measurements (default 4**K)")
    _add_noise(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_acquire)

    p = sub.add_parser("reconstruct", help="reconstruct images from a record CSV")
    _add_config(p)
    p.add_argument("record")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--K", type=int)
    p.add_argument("--progressive", action="store_const", const=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--fast", dest="naive", action="store_const", const=False)
    g.add_argument("--naive", dest="naive", action="store_const", const=True)
    p.add_argument("--snapshot-dir")
    p.add_argument("--reference", help="PGM ground truth; enables report.csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("roi-run", help="lock a target, refine it and composite")
    _add_config(p)
    _add_scene(p)
    p.add_argument("--lock-tier", type=int)
    p.add_argument("--max-lock-tier", type=int)
    p.add_argument("--target-tier", type=int)
    p.add_argument("--alpha", type=float)
    _add_noise(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_roi_run)

    p = sub.add_parser("diagnose", help="Gram FWHM table")
    _add_config(p)
    p.add_argument("--K", type=int)
    p.add_argument("--tiers", help="comma-separated tiers (default 1..K)")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("sweep", help="noise-vs-resolution study")
    _add_config(p)
    _add_scene(p)
    p.add_argument("--dsnr-list", help="comma-separated DSNR values in dB")
    p.add_argument("--seeds", type=int)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SizeLimitError) as exc:
        print(f"mpgi: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoTargetError as exc:
        print(f"mpgi: no target: {exc}", file=sys.stderr)
        return EXIT_NO_TARGET
    except (OSError, FormatError) as exc:
        print(f"mpgi: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
