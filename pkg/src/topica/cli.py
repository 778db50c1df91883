"""Command-line entry point: train, activate, analyze, render.

Every command is deterministic given its config and seed; rerunning a
command writes bit-identical files. Inputs are never mutated and all
outputs land under the directory (or file path) named by --out.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import activation as act
from . import analysis, estimation, images, stimulus, whitening as whit
from .errors import ConfigError, TopicaError
from .matrixio import format_float, read_meta
from .topography import Topography, build_topography, shuffle_topography

HEATMAP_SCALE = 16
HEATMAP_DIR = "heatmaps"
RECON_DIR = "recon"


@dataclass
class RunConfig:
    """Training pipeline settings from a `key = value` file and/or flags."""

    patch_side: int = 9
    n_patches: int = 20000
    k: int = 64
    map_width: int = 8
    map_height: int = 8
    radius: int = 1
    epsilon: float = 0.005
    step0: float = 0.1
    max_iters: int = 200
    tol: float = 1e-4
    seed: int = 0
    frame_rate: float = 24.0
    crop: tuple | None = None    # (left, top, width, height)
    batch_size: int = 0

    def validate(self) -> None:
        if self.patch_side < 2:
            raise ConfigError(f"patch_side must be >= 2, got {self.patch_side}")
        if self.n_patches < 1:
            raise ConfigError(f"n_patches must be >= 1, got {self.n_patches}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.map_width < 1 or self.map_height < 1:
            raise ConfigError(f"map must be at least 1x1, got "
                              f"{self.map_width}x{self.map_height}")
        if self.radius < 0:
            raise ConfigError(f"radius must be >= 0, got {self.radius}")
        if self.frame_rate <= 0:
            raise ConfigError(f"frame_rate must be > 0, got {self.frame_rate}")
        if self.k != self.map_width * self.map_height:
            raise ConfigError(f"k = {self.k} but the map has "
                              f"{self.map_width * self.map_height} cells")
        # Step sizes, epsilon, iteration counts get range-checked by TrainConfig.


def parse_crop(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 4:
        raise ConfigError(f"crop must be left,top,width,height, got {text!r}")
    try:
        left, top, width, height = (int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"crop values must be integers, got {text!r}") from None
    if width < 1 or height < 1 or left < 0 or top < 0:
        raise ConfigError(f"bad crop rectangle {text!r}")
    return left, top, width, height


_CONFIG_PARSERS = {
    "patch_side": int, "n_patches": int, "k": int, "map_width": int,
    "map_height": int, "radius": int, "epsilon": float, "step0": float,
    "max_iters": int, "tol": float, "seed": int, "frame_rate": float,
    "crop": parse_crop, "batch_size": int,
}


def load_run_config(path=None, overrides=None) -> RunConfig:
    """Config file first, then flag overrides; unknown keys are rejected."""
    config = RunConfig()
    if path is not None:
        for key, raw in read_meta(path).items():
            if key not in _CONFIG_PARSERS:
                raise ConfigError(f"{path}: unknown config key {key!r}")
            try:
                setattr(config, key, _CONFIG_PARSERS[key](raw))
            except ValueError:
                raise ConfigError(f"{path}: bad value for {key}: {raw!r}") from None
    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(config, key, value)
    config.validate()
    return config


def _train_config(config: RunConfig) -> estimation.TrainConfig:
    return estimation.TrainConfig(
        step0=config.step0, epsilon=config.epsilon, max_iters=config.max_iters,
        tol=config.tol, seed=config.seed, batch_size=config.batch_size,
    )


def cmd_train(args) -> int:
    overrides = {name: getattr(args, name) for name in
                 ("patch_side", "n_patches", "k", "map_width", "map_height", "radius",
                  "epsilon", "step0", "max_iters", "tol", "seed", "batch_size")}
    if args.crop is not None:
        overrides["crop"] = parse_crop(args.crop)
    config = load_run_config(args.config, overrides)
    loaded = images.load_images(args.images)
    prepared = []
    for img in loaded:
        if config.crop is not None:
            left, top, width, height = config.crop
            img = images.crop_image(img, top, left, height, width)
        prepared.append(images.normalize_image(img))
    patches = images.extract_patches_from_images(
        prepared, config.patch_side, config.n_patches, config.seed)
    model_w = whit.fit_whitening(patches, config.k)
    topo = build_topography(config.map_width, config.map_height, config.radius)
    model_b = estimation.train(patches, model_w, topo, _train_config(config))
    os.makedirs(args.out, exist_ok=True)
    whit.save_whitening(model_w, args.out)
    estimation.save_basis(model_b, args.out)
    last = model_b.training_log[-1]
    print(f"trained {model_b.kind} model: {model_b.n_units} units, "
          f"{len(model_b.training_log) - 1} iterations, "
          f"final objective {format_float(last.objective)}")
    return 0


def _load_model_dir(directory):
    model = estimation.load_basis(directory)
    model_w = whit.load_whitening(directory)
    estimation.check_model_pairing(model, model_w)
    return model, model_w


def _centered_origin(seq: images.FrameSequence, patch_side: int) -> tuple:
    frame = seq.frames[0]
    return (frame.height - patch_side) // 2, (frame.width - patch_side) // 2


def _prepare_frames(args, seq: images.FrameSequence) -> images.FrameSequence:
    frames = []
    for frame in seq.frames:
        if args.crop is not None:
            left, top, width, height = parse_crop(args.crop)
            frame = images.crop_image(frame, top, left, height, width)
        if args.resize_width is not None:
            frame = images.resize_to_width(frame, args.resize_width)
        frames.append(images.normalize_image(frame))
    return images.FrameSequence(frames=frames, frame_rate=seq.frame_rate)


def _thread_count() -> int:
    raw = os.environ.get("TOPICA_THREADS", "")
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"TOPICA_THREADS must be an integer, got {raw!r}") from None
        if value < 1:
            raise ConfigError(f"TOPICA_THREADS must be >= 1, got {value}")
        return value
    return min(4, os.cpu_count() or 1)


def _render_frames(arrays, lo: float, hi: float, directory) -> None:
    """Render frames concurrently, then write files in frame order."""
    os.makedirs(directory, exist_ok=True)
    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        rendered = list(pool.map(lambda a: images.GrayImage(np.ascontiguousarray(a)), arrays))
    for t, img in enumerate(rendered):
        path = os.path.join(directory, images.FRAME_NAME_FORMAT.format(t))
        images.write_image(path, img, lo=lo, hi=hi)


def _upscale(grid: np.ndarray, scale: int) -> np.ndarray:
    return np.repeat(np.repeat(grid, scale, axis=0), scale, axis=1)


def render_energy_heatmaps(trace: act.ActivationTrace, topo: Topography, directory) -> None:
    """One PGM per frame: unit energies on the lattice, nearest-neighbor
    upscaled, all frames scaled by the sequence-wide peak energy."""
    grid_index = topo.unit_grid()
    peak = float(trace.energies.max()) if trace.n_frames else 0.0
    arrays = (_upscale(trace.energies[t][grid_index], HEATMAP_SCALE)
              for t in range(trace.n_frames))
    _render_frames(arrays, 0.0, peak, directory)


def render_reconstructions(model: estimation.BasisModel, trace: act.ActivationTrace,
                           directory) -> None:
    recon = act.reconstruct(model, trace)
    side = recon.patch_side
    lo = float(recon.data.min()) if recon.data.size else 0.0
    hi = float(recon.data.max()) if recon.data.size else 0.0
    arrays = (recon.data[t].reshape(side, side) for t in range(recon.data.shape[0]))
    _render_frames(arrays, lo, hi, directory)


def cmd_activate(args) -> int:
    model, model_w = _load_model_dir(args.model)
    frame_rate = args.frame_rate
    if args.frames is not None:
        seq = _prepare_frames(args, images.load_sequence(args.frames))
        if frame_rate is None:
            frame_rate = seq.frame_rate
        if args.origin is not None:
            left, top = (int(p) for p in args.origin.split(","))
            origin = (top, left)
        else:
            origin = _centered_origin(seq, model.patch_side)
        patches = images.extract_fixed_patches(seq, origin, model.patch_side)
    elif args.bar is not None:
        spec = stimulus.BarStimulusSpec(
            patch_side=model.patch_side, thickness=args.bar_thickness,
            orientation=args.bar, n_frames=args.bar_frames)
        seq = stimulus.generate_moving_bar(spec)
        patches = images.extract_fixed_patches(seq, (0, 0), model.patch_side)
        if frame_rate is None:
            frame_rate = seq.frame_rate
    else:
        probe = stimulus.generate_single_basis_probe(model, args.probe)
        patches = images.PatchSet(probe.values.reshape(1, -1), model.patch_side,
                                  source_tag=f"probe(unit={args.probe})",
                                  per_patch_mean_removed=True)
        if frame_rate is None:
            frame_rate = 24.0
    trace = act.compute_activation(model, model_w, patches, frame_rate)
    os.makedirs(args.out, exist_ok=True)
    act.save_trace(trace, args.out)
    render_energy_heatmaps(trace, model.topo, os.path.join(args.out, HEATMAP_DIR))
    render_reconstructions(model, trace, os.path.join(args.out, RECON_DIR))
    print(f"activated {trace.n_frames} frames x {trace.n_units} units")
    return 0


def cmd_analyze(args) -> int:
    trace = act.load_trace(args.trace)
    os.makedirs(args.out, exist_ok=True)
    summary_path = os.path.join(args.out, "summary.txt")
    if args.mode == "autocorr":
        report = analysis.autocorrelation(trace, args.max_lag,
                                          shuffle_seed=args.shuffle_baseline,
                                          use_energy=args.energy)
        analysis.write_autocorr_csv(report, os.path.join(args.out, "autocorr.csv"))
        summary = analysis.format_summary(autocorr=report)
    elif args.mode == "adjacency":
        topo = _analysis_topo(args)
        report = analysis.adjacent_correlation(trace, topo)
        if args.compare is not None:
            other_trace = act.load_trace(args.compare)
            other_topo = (estimation.load_basis(args.compare_model).topo
                          if args.compare_model else topo)
            other = analysis.adjacent_correlation(other_trace, other_topo)
            report = analysis.compare_adjacency(report, other,
                                                n_permutations=args.permutations,
                                                seed=args.seed)
        analysis.write_adjacency_csv(report, os.path.join(args.out, "adjacency.csv"))
        summary = analysis.format_summary(adjacency=report)
    else:
        topo = _analysis_topo(args)
        value = analysis.cluster_locality(trace, topo, args.k)
        summary = analysis.format_summary(locality=value, locality_k=args.k)
    with open(summary_path, "w", encoding="ascii") as f:
        f.write(summary)
    sys.stdout.write(summary)
    return 0


def _analysis_topo(args) -> Topography:
    if args.model is None:
        raise ConfigError(f"--model is required for {args.mode} analysis")
    topo = estimation.load_basis(args.model).topo
    if args.shuffle_topo is not None:
        topo = shuffle_topography(topo, args.shuffle_topo)
    return topo


def cmd_render(args) -> int:
    model = estimation.load_basis(args.model)
    montage = render_montage(model)
    out_dir = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(out_dir, exist_ok=True)
    images.write_image(args.out, montage, lo=0.0, hi=1.0)
    print(f"wrote {montage.width}x{montage.height} montage to {args.out}")
    return 0


def render_montage(model: estimation.BasisModel) -> images.GrayImage:
    """Grid of basis images laid out by lattice cell, 1-pixel separators.

    Tile (x, y) holds the basis of the unit at lattice cell (x, y), each
    tile normalized to the full gray range on its own.
    """
    topo = model.topo
    side = model.patch_side
    tile = side + 1
    canvas = np.zeros((topo.height * tile + 1, topo.width * tile + 1))
    grid_index = topo.unit_grid()
    for y in range(topo.height):
        for x in range(topo.width):
            patch = model.basis[:, grid_index[y, x]].reshape(side, side)
            lo, hi = patch.min(), patch.max()
            if hi > lo:
                patch = (patch - lo) / (hi - lo)
            else:
                patch = np.zeros_like(patch)
            canvas[y * tile + 1:y * tile + 1 + side,
                   x * tile + 1:x * tile + 1 + side] = patch
    return images.GrayImage(canvas)


class _Parser(argparse.ArgumentParser):
    """argparse reports usage problems at exit code 2; this tool uses 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="topica",
                     description="Topographic ICA on image patches: train a model, "
                                 "activate it on frame sequences, analyze the traces.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_train = sub.add_parser("train", help="estimate a model from a directory of images")
    p_train.add_argument("--images", required=True, help="directory of PGM/PPM images")
    p_train.add_argument("--out", required=True, help="output directory for model files")
    p_train.add_argument("--config", help="key = value config file")
    p_train.add_argument("--patch-side", dest="patch_side", type=int)
    p_train.add_argument("--n-patches", dest="n_patches", type=int)
    p_train.add_argument("--k", type=int, help="retained principal components (= map cells)")
    p_train.add_argument("--map-width", dest="map_width", type=int)
    p_train.add_argument("--map-height", dest="map_height", type=int)
    p_train.add_argument("--radius", type=int, help="pooling radius; 0 trains plain ICA")
    p_train.add_argument("--epsilon", type=float)
    p_train.add_argument("--step0", type=float)
    p_train.add_argument("--max-iters", dest="max_iters", type=int)
    p_train.add_argument("--tol", type=float)
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--batch-size", dest="batch_size", type=int)
    p_train.add_argument("--crop", help="left,top,width,height applied to every image")
    p_train.set_defaults(func=cmd_train)

    p_act = sub.add_parser("activate", help="run a model over frames, a bar, or a probe")
    p_act.add_argument("--model", required=True, help="directory written by train")
    p_act.add_argument("--out", required=True)
    source = p_act.add_mutually_exclusive_group(required=True)
    source.add_argument("--frames", help="directory of frame_NNNNNN.pgm files")
    source.add_argument("--bar", choices=["horizontal", "vertical"],
                        help="synthetic moving-bar stimulus")
    source.add_argument("--probe", type=int, metavar="UNIT",
                        help="single-basis probe patch for one unit")
    p_act.add_argument("--origin", help="top-left patch corner as left,top "
                                        "(default: frame center)")
    p_act.add_argument("--crop", help="left,top,width,height applied to every frame")
    p_act.add_argument("--resize-width", dest="resize_width", type=int)
    p_act.add_argument("--frame-rate", dest="frame_rate", type=float)
    p_act.add_argument("--bar-frames", dest="bar_frames", type=int, default=16)
    p_act.add_argument("--bar-thickness", dest="bar_thickness", type=int, default=1)
    p_act.set_defaults(func=cmd_activate)

    p_an = sub.add_parser("analyze", help="temporal/spatial statistics of a trace")
    p_an.add_argument("--trace", required=True, help="directory written by activate")
    p_an.add_argument("--out", required=True)
    p_an.add_argument("--mode", required=True, choices=["autocorr", "adjacency", "locality"])
    p_an.add_argument("--model", help="model directory (topography source)")
    p_an.add_argument("--max-lag", dest="max_lag", type=int, default=10)
    p_an.add_argument("--shuffle-baseline", dest="shuffle_baseline", type=int, default=0,
                      help="seed for the frame-shuffled autocorrelation control")
    p_an.add_argument("--energy", action="store_true",
                      help="autocorrelation of energies instead of activations")
    p_an.add_argument("--compare", help="second trace directory for the permutation test")
    p_an.add_argument("--compare-model", dest="compare_model",
                      help="model directory for the second trace's topography")
    p_an.add_argument("--shuffle-topo", dest="shuffle_topo", type=int,
                      help="seed to shuffle unit positions before adjacency")
    p_an.add_argument("--permutations", type=int, default=10000)
    p_an.add_argument("--k", type=int, default=5, help="cluster size for locality mode")
    p_an.add_argument("--seed", type=int, default=0)
    p_an.set_defaults(func=cmd_analyze)

    p_r = sub.add_parser("render", help="montage of all basis images on the lattice")
    p_r.add_argument("--model", required=True)
    p_r.add_argument("--out", required=True, help="output PGM path")
    p_r.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except TopicaError as exc:
        print(f"topica: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"topica: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
