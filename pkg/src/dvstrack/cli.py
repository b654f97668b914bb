"""Command-line entry point: ``simulate``, ``track``, ``bench``, ``replay``.

Every command that writes a file also writes ``<file>.manifest``, a flat
``key=value`` record of the fully resolved options; ``replay MANIFEST``
re-runs the command from it.

Exit status: 0 success, 2 usage or input error, 3 I/O error, 4 empty
result (no complete time bin).
"""
from __future__ import annotations

import argparse
import hashlib
import os
import statistics
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .coding import BinningConfig, PolarityMode, bin_events, frame_to_gray
from .eventio import FormatError, read_events, write_aedat, write_events_text
from .simulator import (
    BallScene,
    InvalidSceneError,
    SensorParams,
    TexturePanScene,
    cluttered_texture,
    generate_events,
    render_scene,
)
from .tracker import BoundingBox, TrackerConfig, TrackerInitError, TrajectoryRecord, track

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_EMPTY = 0, 2, 3, 4
TRAJECTORY_HEADER = "bin,t_start_us,x,y,w,h,score,events"


class CliError(Exception):
    def __init__(self, message, status=EXIT_USAGE):
        super().__init__(message)
        self.status = status


def _pair(text):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return a, b


def _int_pair(text):
    a, b = _pair(text)
    if a != int(a) or b != int(b):
        raise argparse.ArgumentTypeError(f"expected two integers, got {text!r}")
    return int(a), int(b)


def _bbox(text):
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        vals = []
    if len(vals) != 4:
        raise argparse.ArgumentTypeError(f"expected X,Y,W,H integers, got {text!r}")
    return BoundingBox(*vals)


def _fmt_value(v):
    if isinstance(v, (tuple, list)):
        return ",".join(_fmt_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def atomic_write(path: Path, data: bytes):
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from None


def write_manifest(out: Path, args, extra=None):
    lines = [f"tool=dvstrack", f"version={__version__}"]
    for key, val in sorted(vars(args).items()):
        if key.startswith("_") or val is None:
            continue
        lines.append(f"{key}={_fmt_value(val)}")
    for key, val in (extra or {}).items():
        lines.append(f"{key}={_fmt_value(val)}")
    atomic_write(Path(str(out) + ".manifest"), ("\n".join(lines) + "\n").encode())


def _add_output(p, required=True):
    p.add_argument("--out", type=Path, required=required, help="output file")


def _add_tracking_flags(p):
    p.add_argument("--input", type=Path, required=True, help="event file (text or AEDAT 2.0)")
    p.add_argument("--bbox", type=_bbox, required=True, help="initial box X,Y,W,H on bin 0")
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--bin-ms", type=float, default=10.0)
    p.add_argument("--polarity", choices=[m.value for m in PolarityMode], default=PolarityMode.BOTH.value)
    d = TrackerConfig()
    p.add_argument("--gamma", type=int, default=d.search_radius, help="search radius (px)")
    p.add_argument("--alpha", type=int, default=d.positive_radius, help="positive radius (px)")
    p.add_argument("--neg-inner", type=int, default=d.neg_inner)
    p.add_argument("--neg-outer", type=int, default=d.neg_outer)
    p.add_argument("--negatives", type=int, default=d.negative_count)
    p.add_argument("--features", type=int, default=d.n_features)
    p.add_argument("--lambda", dest="lam", type=float, default=d.lam)
    p.add_argument("--sigma-floor", type=float, default=d.sigma_floor)
    p.add_argument("--seed", type=int, default=d.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dvstrack", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dvstrack {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="render a scene and write its DVS events")
    sim.add_argument("scene", choices=["ball", "texture"])
    sim.add_argument("--duration-s", type=float, default=6.0)
    sim.add_argument("--render-ms", type=float, default=1.0, help="intensity sampling period")
    sim.add_argument("--bin-preview-ms", type=float, default=10.0,
                     help="bin length used for the events-per-bin summary")
    sim.add_argument("--theta", type=float, default=0.1)
    sim.add_argument("--noise-rate", type=float, default=0.0, help="noise events per pixel per second")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--width", type=int, default=128)
    sim.add_argument("--height", type=int, default=128)
    sim.add_argument("--format", choices=["text", "aedat"], default="text")
    sim.add_argument("--velocity", type=_pair, default=(60.0, 60.0), help="VX,VY in px/s")
    sim.add_argument("--bg", type=float, default=1.0, help="background intensity")
    sim.add_argument("--bounce", action=argparse.BooleanOptionalAction, default=True)
    g = sim.add_argument_group("ball")
    g.add_argument("--start", type=_pair, default=(40.0, 40.0), help="ball center X,Y at t=0")
    g.add_argument("--radius", type=float, default=6.0)
    g.add_argument("--fg", type=float, default=10.0, help="ball intensity")
    g.add_argument("--margin", type=float, default=4.0, help="wall inset for bouncing (px)")
    g = sim.add_argument_group("texture")
    g.add_argument("--digit", choices=["3", "5"], default="3")
    g.add_argument("--digit-at", type=_int_pair, default=(52, 48))
    g.add_argument("--digit-size", type=_int_pair, default=(24, 32))
    g.add_argument("--clutter", type=int, default=12)
    g.add_argument("--clutter-seed", type=int, default=0)
    g.add_argument("--pan-limit", type=float, default=30.0, help="max pan offset (px) when bouncing")
    _add_output(sim)

    tr = sub.add_parser("track", help="track an object through an event file")
    _add_tracking_flags(tr)
    _add_output(tr)
    tr.add_argument("--render", type=Path, help="directory for per-bin PPM overlays")

    be = sub.add_parser("bench", help="measure tracking throughput")
    _add_tracking_flags(be)
    be.add_argument("--reps", type=int, default=3)
    _add_output(be, required=False)

    rp = sub.add_parser("replay", help="re-run a command from its manifest")
    rp.add_argument("manifest", type=Path)
    rp.add_argument("--out", type=Path, help="override the output path")
    rp.add_argument("--render", type=Path, help="override the render directory")
    return parser


def scene_from_args(args):
    geometry = (args.width, args.height)
    duration = int(round(args.duration_s * 1e6))
    period = int(round(args.render_ms * 1e3))
    if args.scene == "ball":
        return BallScene(start=args.start, velocity=args.velocity, radius=args.radius,
                         foreground=args.fg, background=args.bg, duration=duration,
                         render_period=period, geometry=geometry, bounce=args.bounce,
                         margin=args.margin)
    bitmap = cluttered_texture(geometry, args.digit, args.digit_at, args.digit_size,
                               args.clutter, args.bg, args.clutter_seed)
    return TexturePanScene(bitmap=bitmap, velocity=args.velocity, background=args.bg,
                           duration=duration, render_period=period, geometry=geometry,
                           pan_limit=args.pan_limit if args.bounce else None)


def cmd_simulate(args, out=None) -> int:
    out = out or sys.stdout
    try:
        spec = scene_from_args(args)
        params = SensorParams(theta=args.theta, noise_rate=args.noise_rate, seed=args.seed)
        stream = generate_events(render_scene(spec), params)
    except (InvalidSceneError, ValueError) as exc:
        raise CliError(f"invalid scene: {exc}")
    try:
        data = write_aedat(stream) if args.format == "aedat" else write_events_text(stream)
    except ValueError as exc:
        raise CliError(str(exc))
    atomic_write(args.out, data)
    write_manifest(args.out, args)
    bins = spec.duration / (args.bin_preview_ms * 1e3)
    print(f"events={len(stream)}", file=out)
    print(f"events_per_bin={len(stream) / bins:.2f}", file=out)
    return EXIT_OK


def _load_frames(args):
    path = args.input
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise CliError(f"input file not found: {path}")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}")
    try:
        stream = read_events(data, (args.width, args.height))
    except FormatError as exc:
        raise CliError(f"{path}: {exc}")
    from .events import validate_stream

    report = validate_stream(stream)
    if not report.ok:
        raise CliError(f"{path}: {report.messages()[0]}")
    cfg = BinningConfig(int(round(args.bin_ms * 1e3)), args.polarity)
    return stream, cfg, hashlib.sha256(data).hexdigest()


def tracker_config(args) -> TrackerConfig:
    try:
        return TrackerConfig(search_radius=args.gamma, positive_radius=args.alpha,
                             neg_inner=args.neg_inner, neg_outer=args.neg_outer,
                             negative_count=args.negatives, n_features=args.features,
                             lam=args.lam, sigma_floor=args.sigma_floor, seed=args.seed)
    except ValueError as exc:
        raise CliError(f"invalid tracker options: {exc}")


def _run_tracking(stream, bin_cfg, args):
    frames = bin_events(stream, bin_cfg)
    if not frames:
        raise CliError("no complete time bin in the input", EXIT_EMPTY)
    if not args.bbox.fits(frames[0].geometry):
        raise CliError(f"box {tuple(args.bbox)} does not fit the {frames[0].geometry} frame")
    try:
        return frames, track(frames, args.bbox, tracker_config(args))
    except TrackerInitError as exc:
        raise CliError(str(exc))


def format_trajectory(records) -> bytes:
    lines = [TRAJECTORY_HEADER]
    for r in records:
        b = r.bbox
        lines.append(f"{r.bin_index},{r.t_start},{b.x},{b.y},{b.w},{b.h},{r.score!r},{r.events_in_bin}")
    return ("\n".join(lines) + "\n").encode()


def parse_trajectory(data: bytes) -> list[TrajectoryRecord]:
    lines = data.decode().splitlines()
    if not lines or lines[0] != TRAJECTORY_HEADER:
        raise ValueError("not a trajectory file")
    out = []
    for line in lines[1:]:
        k, t, x, y, w, h, s, e = line.split(",")
        out.append(TrajectoryRecord(int(k), int(t), BoundingBox(int(x), int(y), int(w), int(h)),
                                    float(s), int(e)))
    return out


def render_ppm(frame, bbox) -> bytes:
    """Count frame as gray RGB with the box outlined in 1-px red."""
    gray = frame_to_gray(frame)
    H, W = gray.shape
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    x0, y0 = bbox.x, bbox.y
    x1, y1 = bbox.x + bbox.w - 1, bbox.y + bbox.h - 1
    red = np.array([255, 0, 0], dtype=np.uint8)
    rgb[y0, x0:x1 + 1] = red
    rgb[y1, x0:x1 + 1] = red
    rgb[y0:y1 + 1, x0] = red
    rgb[y0:y1 + 1, x1] = red
    return f"P6\n{W} {H}\n255\n".encode() + rgb.tobytes()


def cmd_track(args, out=None) -> int:
    out = out or sys.stdout
    stream, bin_cfg, digest = _load_frames(args)
    frames, records = _run_tracking(stream, bin_cfg, args)
    atomic_write(args.out, format_trajectory(records))
    if args.render is not None:
        try:
            args.render.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise CliError(f"cannot create {args.render}: {exc.strerror or exc}", EXIT_IO)
        for frame, rec in zip(frames, records):
            atomic_write(args.render / f"bin_{rec.bin_index:05d}.ppm", render_ppm(frame, rec.bbox))
    write_manifest(args.out, args, {"input_sha256": digest})
    print(f"bins={len(records)}", file=out)
    return EXIT_OK


def bench_report(stream, bin_cfg, args) -> dict:
    times = []
    for _ in range(max(args.reps, 1)):
        t0 = time.perf_counter()
        frames, records = _run_tracking(stream, bin_cfg, args)
        times.append(time.perf_counter() - t0)
    n_bins = len(records)
    W, H = stream.geometry
    mean_events = float(np.mean([r.events_in_bin for r in records]))
    return {
        "bins": n_bins,
        "reps": len(times),
        "median_seconds": statistics.median(times),
        "bins_per_second": n_bins / statistics.median(times),
        "mean_events_per_bin": mean_events,
        "data_reduction_ratio": mean_events / (W * H),
    }


def cmd_bench(args, out=None) -> int:
    out = out or sys.stdout
    stream, bin_cfg, digest = _load_frames(args)
    report = bench_report(stream, bin_cfg, args)
    text = "".join(f"{k}={_fmt_value(v) if not isinstance(v, float) else f'{v:.6g}'}\n"
                   for k, v in report.items())
    out.write(text)
    if args.out is not None:
        atomic_write(args.out, text.encode())
        write_manifest(args.out, args, {"input_sha256": digest})
    return EXIT_OK


def read_manifest(path: Path) -> dict[str, str]:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise CliError(f"cannot read manifest {path}: {exc.strerror or exc}")
    kv = {}
    for line in lines:
        if line.strip():
            k, _, v = line.partition("=")
            kv[k] = v
    if kv.get("tool") != "dvstrack" or "command" not in kv:
        raise CliError(f"{path} is not a dvstrack manifest")
    return kv


def argv_from_manifest(kv: dict[str, str], out=None, render=None) -> list[str]:
    kv = dict(kv)
    command = kv.pop("command")
    for k in ("tool", "version", "input_sha256"):
        kv.pop(k, None)
    if out is not None:
        kv["out"] = str(out)
    if render is not None:
        kv["render"] = str(render)
    argv = [command]
    if command == "simulate":
        argv.append(kv.pop("scene"))
    for key, val in kv.items():
        flag = "--lambda" if key == "lam" else "--" + key.replace("_", "-")
        if val in ("True", "False"):
            argv.append(flag if val == "True" else "--no-" + flag[2:])
        else:
            argv.append(f"{flag}={val}")
    return argv


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            argv2 = argv_from_manifest(read_manifest(args.manifest), args.out, args.render)
            args = parser.parse_args(argv2)
        return {"simulate": cmd_simulate, "track": cmd_track, "bench": cmd_bench}[args.command](args)
    except CliError as exc:
        print(f"dvstrack: error: {exc}", file=sys.stderr)
        return exc.status


if __name__ == "__main__":
    sys.exit(main())
