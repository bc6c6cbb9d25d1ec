"""Command line: serve the session, replay headless, render fields, benchmark.

Exit codes: 0 success, 1 runtime failure, 2 flag/usage errors. Log verbosity
comes from the SONOMAT_LOG environment variable (DEBUG/INFO/WARNING/...).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import statistics
import sys
import time

import numpy as np

from sonomat import __version__
from sonomat.acoustics import TransducerArray, field_slice, focus_phases, write_grid
from sonomat.acoustics.kernel import BACKEND, available_backends
from sonomat.config import Config, ConfigError, load_config, validate_config
from sonomat.geometry import Point3D
from sonomat.metrics import export_metrics
from sonomat.session import Session, run_replay
from sonomat.tracking import load_replay


def _load_config_arg(path: str | None) -> Config:
    if path is None:
        return validate_config({})
    return load_config(path)


def _parse_plane(spec: str) -> tuple[str, float]:
    axis, _, offset = spec.partition("=")
    axis = axis.strip().lower()
    if axis not in ("x", "y", "z") or not offset:
        raise argparse.ArgumentTypeError(f"plane must look like z=0.15, got {spec!r}")
    try:
        return axis, float(offset)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad plane offset in {spec!r}") from None


def _parse_point(spec: str) -> Point3D:
    parts = spec.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"point must be x,y,z, got {spec!r}")
    try:
        return Point3D(*(float(p) for p in parts))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sonomat",
        description="mobile phased-array haptics: simulate, replay, render, benchmark",
    )
    parser.add_argument("--version", action="version", version=f"sonomat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the WebSocket session service")
    serve.add_argument("--config", help="config JSON path (defaults apply if omitted)")
    serve.add_argument("--port", type=int, default=8765)
    serve.add_argument("--host", default="127.0.0.1")

    replay = sub.add_parser("replay", help="headless run over a recorded hand stream")
    replay.add_argument("--config", help="config JSON path")
    replay.add_argument("--input", required=True,
                        help="hand-frame JSONL path ('demo' for the shipped file)")
    replay.add_argument("--metrics", required=True, help="metrics CSV output path")
    replay.add_argument("--scenario", help="scenario name or JSON path to load")
    replay.add_argument("--hashes", help="optional path for the per-tick state-hash log")

    fieldp = sub.add_parser("field", help="render a pressure-field slice")
    fieldp.add_argument("--config", help="config JSON path")
    fieldp.add_argument("--focus", type=_parse_point, required=True, metavar="X,Y,Z")
    fieldp.add_argument("--plane", type=_parse_plane, required=True, metavar="AXIS=OFFSET")
    fieldp.add_argument("--extent", type=float, required=True, help="slice side length, m")
    fieldp.add_argument("--res", type=float, required=True, help="cell size, m")
    fieldp.add_argument("--out", required=True, help="output path (.pgm or .csv)")

    bench = sub.add_parser("bench", help="tick rate and kernel throughput")
    bench.add_argument("--config", help="config JSON path")
    bench.add_argument("--seconds", type=float, default=1.0, help="sim seconds per tick run")
    return parser


def demo_replay_path() -> str:
    from importlib import resources

    return str(resources.files("sonomat").joinpath("data/two_hands.jsonl"))


def cmd_replay(args) -> int:
    config = _load_config_arg(args.config)
    path = demo_replay_path() if args.input == "demo" else args.input
    frames = load_replay(path)
    hash_log: list[str] | None = [] if args.hashes else None

    session = Session(config)
    if args.scenario:
        session.load_scenario(args.scenario)
    ordered = sorted(frames, key=lambda f: f.t)
    max_t = ordered[-1].t if ordered else 0.0
    n_ticks = int(max_t * config.control_hz) + 1
    i = 0
    for _ in range(n_ticks):
        t_now = session.sim_time
        while i < len(ordered) and ordered[i].t <= t_now:
            session.submit_frame(ordered[i])
            i += 1
        session.tick()
        if hash_log is not None:
            hash_log.append(session.state_hash())
    export_metrics(session.metrics, config, args.metrics)
    if hash_log is not None:
        with open(args.hashes, "w", encoding="utf-8") as fh:
            fh.write("\n".join(hash_log) + "\n")
    print(f"replayed {len(frames)} frames over {n_ticks} ticks -> {args.metrics}")
    return 0


def cmd_field(args) -> int:
    config = _load_config_arg(args.config)
    array = TransducerArray(
        rows=config.array_rows, cols=config.array_cols, pitch=config.array_pitch,
        element_radius=config.element_radius, frequency=config.frequency,
        speed_of_sound=config.speed_of_sound,
        reference_amplitude=config.reference_amplitude,
        mount_height=0.0,
    )
    solution = focus_phases(array, args.focus, z_min=config.focus_z_min)
    axis, offset = args.plane
    grid = field_slice(array, solution, axis, offset, args.extent, args.res)
    write_grid(grid, args.out)
    i, j = grid.argmax_cell()
    print(
        f"{grid.values.shape[1]}x{grid.values.shape[0]} slice ({axis}={offset:g}) "
        f"-> {args.out}; max at cell ({i}, {j}), {grid.unset_count} unset"
    )
    return 0


def cmd_bench(args) -> int:
    config = _load_config_arg(args.config)
    rng = np.random.default_rng(config.seed)

    # kernel throughput, both backends when available
    array = TransducerArray(
        rows=config.array_rows, cols=config.array_cols, pitch=config.array_pitch,
        element_radius=config.element_radius, frequency=config.frequency,
        speed_of_sound=config.speed_of_sound,
    )
    solution = focus_phases(array, Point3D(0.0, 0.0, 0.15))
    points = np.column_stack([
        rng.uniform(-0.05, 0.05, 20_000),
        rng.uniform(-0.05, 0.05, 20_000),
        rng.uniform(0.05, 0.30, 20_000),
    ])
    kernel_args = (
        points, array.element_positions(),
        np.array(solution.phases), np.array(solution.amplitudes),
        array.wavenumber, array.element_radius, array.reference_amplitude,
    )
    print(f"active kernel backend: {BACKEND}")
    for name, fn in sorted(available_backends().items()):
        times = []
        for _ in range(5):
            start = time.perf_counter()
            fn(*kernel_args)
            times.append(time.perf_counter() - start)
        per_eval = statistics.median(times) / (len(points) * array.element_count)
        print(
            f"  {name:>8}: {len(points) / statistics.median(times):,.0f} points/s, "
            f"{1.0 / per_eval:,.0f} element-evaluations/s"
        )

    # session tick rate (fixed seed, one tracked hand)
    ticks = max(1, int(args.seconds * config.control_hz))
    times = []
    for _ in range(5):
        session = Session(config)
        from sonomat.tracking import HandFrame

        session.submit_frame(HandFrame(0.0, "left", (0.275, 0.275, 0.18), True))
        start = time.perf_counter()
        for _ in range(ticks):
            session.tick()
        times.append(time.perf_counter() - start)
    print(f"  session: {ticks / statistics.median(times):,.0f} ticks/s "
          f"(median of 5 runs of {ticks} ticks)")
    return 0


def cmd_serve(args) -> int:
    from sonomat.server import serve_forever

    config = _load_config_arg(args.config)
    serve_forever(config, host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("SONOMAT_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "serve":
            return cmd_serve(args)
        if args.command == "replay":
            return cmd_replay(args)
        if args.command == "field":
            return cmd_field(args)
        return cmd_bench(args)
    except ConfigError as exc:
        print(f"sonomat: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"sonomat: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1


if __name__ == "__main__":
    sys.exit(main())
