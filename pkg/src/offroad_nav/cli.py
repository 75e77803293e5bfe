"""Command-line front end.

    offroad-nav run       --config scenario.json --out DIR [--seed N] [--layers a,b]
    offroad-nav replay    --clouds c0.csv c1.csv ... --poses poses.csv --out DIR [--config F] [--layers a,b]
    offroad-nav bench     --config scenario.json [--iterations N] [--out DIR]
    offroad-nav dump-map  --config scenario.json --out DIR [--seed N] [--layers a,b]
    offroad-nav plot-data --config scenario.json --out DIR [--seed N] [--candidate-every N] [--pursuit-comparison]

Exit codes: 0 goal reached / success, 1 bench budget missed, 2 collision,
3 timeout, 64 bad command line or config, 65 bad input data.  Set
OFFROAD_NAV_LOG (DEBUG, INFO, WARNING, ...) for log output on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from .errors import ConfigError, InvalidInputError, NoPathError, RoiOverrunError
from .gridio import bundle_dumps, costmap_dump, write_grid, write_path_csv

EXIT_OK = 0
EXIT_BUDGET = 1
EXIT_USAGE = 64
EXIT_DATA = 65

LOG_ENV = "OFFROAD_NAV_LOG"

REPLAY_HELP = """\
Recorded input: one CSV file per scan with lines 'x,y,z' (world meters, '#'
comments allowed) plus a pose file with one line 'stamp,x,y,heading' per scan,
in the same order as the cloud files."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _layers(text: str | None) -> list[str] | None:
    if text is None:
        return None
    names = [s.strip() for s in text.split(",") if s.strip()]
    if not names:
        raise argparse.ArgumentTypeError("empty layer list")
    return names


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="offroad-nav", description="Wrap-around elevation mapping and trajectory sampling.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a closed-loop scenario and write its logs")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--layers", type=_layers, help="comma-separated final map layers to dump")

    rep = sub.add_parser("replay", help="map recorded clouds offline", epilog=REPLAY_HELP,
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    rep.add_argument("--config", help="scenario file for mapping parameters (defaults otherwise)")
    rep.add_argument("--clouds", nargs="+", required=True)
    rep.add_argument("--poses", required=True)
    rep.add_argument("--out", required=True)
    rep.add_argument("--layers", type=_layers)

    ben = sub.add_parser("bench", help="time each stage against its rate budget")
    ben.add_argument("--config", required=True)
    ben.add_argument("--iterations", type=int, default=100)
    ben.add_argument("--out", default="bench_report")

    dump = sub.add_parser("dump-map", help="map the start pose and dump layers and the A* path")
    dump.add_argument("--config", required=True)
    dump.add_argument("--out", required=True)
    dump.add_argument("--seed", type=int)
    dump.add_argument("--layers", type=_layers)

    plot = sub.add_parser("plot-data", help="write plot-ready CSVs for a scenario run")
    plot.add_argument("--config", required=True)
    plot.add_argument("--out", required=True)
    plot.add_argument("--seed", type=int)
    plot.add_argument("--candidate-every", type=int, default=30,
                      help="keep the candidate set of every n-th sampler cycle")
    plot.add_argument("--pursuit-comparison", action="store_true",
                      help="also write the pure pursuit versus trajectory sampling comparison")
    return p


def _load(args):
    from .sim.config import load_config

    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _dump_bundle(out: Path, bundle, cmap, layers) -> None:
    out.mkdir(parents=True, exist_ok=True)
    names = list(bundle.layers()) + ["cost"] if layers is None else layers
    for dump in bundle_dumps(bundle, [n for n in names if n != "cost"]):
        write_grid(out / f"{dump.layer}.grid", dump)
    if "cost" in names:
        write_grid(out / "cost.grid", costmap_dump(cmap, "cost", bundle.stamp))


def cmd_run(args) -> int:
    from .sim.harness import run_scenario

    cfg = _load(args)
    runlog = run_scenario(cfg)
    out = Path(args.out)
    runlog.write(out)
    if args.layers is not None and runlog.final_bundle is not None:
        _dump_bundle(out / "maps", runlog.final_bundle, runlog.final_costmap, args.layers)
    s = runlog.summary()
    print(f"{cfg.name}: {s['termination']} after {s['sim_time_s']:.2f} s, path {s['path_length_m']:.2f} m, "
          f"min clearance {s['min_clearance_m']:.3f} m, collisions {s['collisions']}")
    return runlog.exit_code


def cmd_replay(args) -> int:
    from .sim.config import ScenarioConfig, load_config
    from .sim.replay import load_recording, replay, write_replay

    cfg = load_config(args.config) if args.config else ScenarioConfig()
    steps = replay(cfg, load_recording(args.clouds, args.poses))
    written = write_replay(steps, args.out, args.layers)
    print(f"replayed {len(steps)} scan(s), wrote {len(written)} grid file(s) to {args.out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    from .sim.bench import run_bench

    if args.iterations < 1:
        raise ConfigError("must be >= 1", field="iterations")
    report = run_bench(_load(args), args.iterations)
    report.write(args.out)
    print(report.format_text())
    return EXIT_OK if report.passed else EXIT_BUDGET


def cmd_dump_map(args) -> int:
    from .sim.bench import record_inputs
    from .sim.harness import Pipeline

    cfg = _load(args)
    pipe = Pipeline(cfg)
    inputs = record_inputs(cfg)
    for pose, cloud in inputs:
        pipe.ingest(cloud, pose)
    pose = inputs[-1][0]
    pipe.update_map(pose, inputs[-1][1].stamp)
    out = Path(args.out)
    _dump_bundle(out, pipe.bundle, pipe.costmap, args.layers)
    path = pipe.replan(pose)
    if path is None:
        print("A* found no path; layers written without a path")
    else:
        write_path_csv(out / "astar_path.csv", path)
        print(f"wrote layers and a {len(path)}-point A* path to {out}")
    return EXIT_OK


def _write_poses(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "score", "step", "x", "y", "heading"])
        w.writerows(rows)


def cmd_plot_data(args) -> int:
    from .sim.harness import run_scenario

    if args.candidate_every < 1:
        raise ConfigError("must be >= 1", field="candidate-every")
    cfg = _load(args)
    runlog = run_scenario(cfg, candidate_every=args.candidate_every)
    out = Path(args.out)
    runlog.write(out)
    if runlog.paths:
        write_path_csv(out / "astar_initial.csv", runlog.paths[0][1])
        write_path_csv(out / "astar_final.csv", runlog.paths[-1][1])
    write_path_csv(out / "executed.csv", runlog.executed_path())
    rows = []
    for cycle, (t, sel) in enumerate(runlog.candidates):
        for i, traj in enumerate(sel.poses):
            for k, (x, y, h) in enumerate(traj):
                rows.append([f"{cycle}:{i}", sel.scores[i], k, x, y, h])
    _write_poses(out / "candidates.csv", rows)
    with open(out / "obstacles.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "x0", "y0", "x1", "y1", "height"])
        for c in cfg.terrain.cylinders:
            w.writerow(["cylinder", c.x, c.y, c.radius, "", c.height])
        for b in cfg.terrain.boxes:
            w.writerow(["box", b.xmin, b.ymin, b.xmax, b.ymax, b.height])
    if args.pursuit_comparison:
        _write_pursuit_comparison(out / "pursuit_comparison")
    print(f"{cfg.name}: {runlog.termination}; plot data in {out}")
    return EXIT_OK


def _write_pursuit_comparison(out: Path) -> None:
    from .sampler import evaluate, lookahead_target, pure_pursuit_rollout
    from .sim.scenarios import obstacle_on_path

    sc = obstacle_on_path()
    c = sc.sampler
    out.mkdir(parents=True, exist_ok=True)
    write_path_csv(out / "astar_path.csv", sc.path)
    pp = pure_pursuit_rollout(sc.path, sc.robot, c.speed, c.lookahead, c.omega_max, c.horizon, c.dt)
    sel = evaluate(sc.profiles, sc.costmap, lookahead_target(sc.path, sc.robot, c.lookahead), sc.robot, c)
    _write_poses(out / "pure_pursuit.csv", [["pp", "", k, *p] for k, p in enumerate(pp)])
    _write_poses(out / "winner.csv", [["best", sel.best.score, k, *p] for k, p in enumerate(sel.best.poses)])
    _write_poses(out / "candidates.csv", [[i, sel.scores[i], k, *p] for i, traj in enumerate(sel.poses)
                                          for k, p in enumerate(traj)])
    write_grid(out / "cost.grid", costmap_dump(sc.costmap))
    (out / "target.json").write_text(json.dumps(dict(zip(("x", "y", "heading"), sel.target))), encoding="utf-8")


COMMANDS = {"run": cmd_run, "replay": cmd_replay, "bench": cmd_bench, "dump-map": cmd_dump_map,
            "plot-data": cmd_plot_data}


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidInputError, RoiOverrunError, NoPathError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
