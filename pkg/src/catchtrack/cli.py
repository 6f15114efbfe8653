"""Command-line entry point: ``simulate``, ``run``, ``score`` and ``bench``.

Exit codes: 0 success, 1 internal error, 2 input error. Every command's
stdout and output files depend only on its flags; wall-clock timings go to
stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from typing import Dict, List, Optional, Sequence

from . import __version__
from .buffers import CostReport
from .config import TABLE, RunConfig, load_config
from .errors import BootstrapUnderflow, CatchTrackError, InputError, LayoutError
from .metrics import MODES, accuracy, final_score, match_events, report_lines
from .pipeline import Pipeline, feature_path_bytes
from .scenario import Scenario, dumps, format_events, load, load_events, save
from .simulator import NoiseSpec, ScenarioSpec, corrupt, preset_counts, simulate, truth_from_scenario

log = logging.getLogger("catchtrack")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2


def _flag(key: str) -> str:
    return "--" + key.replace(".", "-").replace("_", "-")


def _dest(key: str) -> str:
    return "cfg:" + key


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline configuration (flags override --config)")
    g.add_argument("--config", metavar="FILE", help="key=value config file")
    for key, spec in TABLE.items():
        names = [_flag(key)]
        if key in ("arc.enabled", "ci.enabled"):
            names.append("--" + key.split(".")[0])
        elif key.startswith("noise."):
            names.append(_flag(key[len("noise."):]))
        default = "auto" if spec.default is None else spec.default
        g.add_argument(*names, dest=_dest(key), metavar="V", default=None,
                       help=f"{spec.doc} [default: {default}]")


def _config(args) -> RunConfig:
    values: Dict[str, str] = {}
    if args.config:
        values.update(load_config(args.config))
    for key in TABLE:
        v = getattr(args, _dest(key))
        if v is not None:
            values[key] = v
    return RunConfig().with_values(values)


def _add_spec_flags(p: argparse.ArgumentParser, inline: bool = False) -> None:
    # run/bench already use --seed and --theta for the pipeline config
    pre = "--scenario-" if inline else "--"
    g = p.add_argument_group("scenario generation") if inline else p
    g.add_argument("--preset", help="NpMb actor counts, e.g. 7p3b")
    g.add_argument("--persons", type=int)
    g.add_argument("--balls", type=int)
    g.add_argument("--frames", type=int, default=900)
    g.add_argument(pre + "seed", dest="spec_seed", type=int, default=0, help="generator seed")
    g.add_argument("--width", type=int, default=960)
    g.add_argument("--height", type=int, default=540)
    g.add_argument(pre + "theta", dest="spec_theta", type=int, default=8,
                   help="minimum flight frames in the generated scenario")


def _scenario_spec(args, noise: Optional[NoiseSpec] = None) -> ScenarioSpec:
    try:
        if args.preset:
            counts = dict(zip(("persons", "balls"), preset_counts(args.preset)))
        else:
            if args.persons is None or args.balls is None:
                raise InputError("give --preset or both --persons and --balls")
            counts = {"persons": args.persons, "balls": args.balls}
        return ScenarioSpec(
            **counts, frames=args.frames, width=args.width, height=args.height,
            theta=args.spec_theta, seed=args.spec_seed, noise=noise or NoiseSpec(),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)


# ---------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    noise = NoiseSpec(
        fp_rate=args.fp_rate, fn_rate=args.fn_rate, jitter_px=args.jitter_px,
        feature_noise=args.feature_noise, id_confusion=args.id_confusion,
        confine_to_possession=args.confine,
    ) if _any_noise(args) else None
    spec = _scenario_spec(args, noise)
    scen, truth = simulate(spec)
    if args.out and args.out != "-":
        save(scen, args.out)
        print(f"events={len(truth.events)}")
    else:
        sys.stdout.write(dumps(scen))
        print(f"events={len(truth.events)}", file=sys.stderr)
    return EXIT_OK


def _any_noise(args) -> bool:
    return any(getattr(args, k) for k in ("fp_rate", "fn_rate", "jitter_px", "feature_noise", "id_confusion"))


def _load_scenario(args, cfg: RunConfig) -> Scenario:
    if args.scenario:
        scen = load(args.scenario)
    else:
        scen, _ = simulate(_scenario_spec(args))
    noise = cfg.noise
    if not noise.is_zero:
        truth = truth_from_scenario(scen) if noise.confine_to_possession else None
        theta = cfg.resolved_theta(scen.theta)
        scen.frames = corrupt(
            scen.frames, noise, cfg.seed, truth=truth, persons=scen.persons, balls=scen.balls,
            width=scen.width, height=scen.height, theta=theta, dim=cfg.dim,
        )
    return scen


def cmd_run(args) -> int:
    cfg = _config(args)
    scen = _load_scenario(args, cfg)
    events, report = Pipeline(scen, cfg).run()
    _write(args.events_out, format_events(events))
    if args.report_out:
        _write(args.report_out, report.to_text(cfg.alpha))
    if args.events_out and args.events_out != "-":
        print(f"events={len(events)}")
    return EXIT_OK


def cmd_score(args) -> int:
    pred = load_events(args.pred)
    gt = load_events(args.gt)
    m = match_events(pred, gt, tol=args.tol, mode=args.mode)
    score = None
    if args.report:
        try:
            with open(args.report, encoding="ascii") as fh:
                rep = CostReport.from_text(fh.read())
        except OSError as exc:
            raise InputError(f"cannot read cost report: {exc}") from None
        score = final_score(accuracy(m), rep, args.alpha)
    print("\n".join(report_lines(m, args.tol, score)))
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    scen = _load_scenario(args, cfg)
    out: List[str] = [
        f"frames={scen.T}",
        f"identities={scen.N}",
        f"frame_bytes={scen.height * scen.width * 3}",
        f"crop_side={cfg.crop_side}",
    ]
    moved, extract, events, walls = {}, {}, {}, {}
    for mode in ("crops", "full_frame"):
        run_cfg = cfg.with_values({"feature_mode": mode})
        t0 = time.perf_counter()
        events[mode], rep = Pipeline(scen, run_cfg).run()
        walls[mode] = time.perf_counter() - t0
        moved[mode] = feature_path_bytes(rep)
        extract[mode] = rep.bytes_read["extract"]
        out += [
            f"{mode}.feature_path_bytes={moved[mode]}",
            f"{mode}.extract_read_bytes={extract[mode]}",
            f"{mode}.extract_invocations={rep.invocations['extract']}",
            f"{mode}.total_bytes={rep.total_bytes}",
        ]
    ratio = moved["full_frame"] / moved["crops"] if moved["crops"] else float("nan")
    extract_ratio = extract["full_frame"] / extract["crops"] if extract["crops"] else float("nan")
    out += [
        f"ratio={ratio:.6f}",
        f"extract_ratio={extract_ratio:.6f}",
        f"events_equal={int(events['crops'] == events['full_frame'])}",
    ]
    _write(args.out, "\n".join(out) + "\n")
    for mode, w in walls.items():
        print(f"wall_seconds.{mode}={w:.3f}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="catchtrack", description="Ball catch/throw detection pipeline")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a scenario file")
    _add_spec_flags(s)
    s.add_argument("--fp-rate", type=float, default=0.0)
    s.add_argument("--fn-rate", type=float, default=0.0)
    s.add_argument("--jitter-px", type=int, default=0)
    s.add_argument("--feature-noise", type=float, default=0.0)
    s.add_argument("--id-confusion", type=float, default=0.0)
    s.add_argument("--confine", action="store_true", help="misses/swaps only inside possessions")
    s.add_argument("-o", "--out", help="scenario path (default stdout)")
    s.set_defaults(func=cmd_simulate)

    for name, func, helptext in (
        ("run", cmd_run, "run the pipeline on a scenario"),
        ("bench", cmd_bench, "compare crop-records and full-frame feature paths"),
    ):
        r = sub.add_parser(name, help=helptext)
        r.add_argument("--scenario", help="scenario file; otherwise one is generated from the flags below")
        _add_spec_flags(r, inline=True)
        _add_config_flags(r)
        if name == "run":
            r.add_argument("-o", "--events-out", help="event file (default stdout)")
            r.add_argument("--report-out", help="cost report file")
        else:
            r.add_argument("-o", "--out", help="report file (default stdout)")
        r.set_defaults(func=func)

    sc = sub.add_parser("score", help="score predicted events against ground truth")
    sc.add_argument("pred", help="predicted events file")
    sc.add_argument("gt", help="ground-truth events or scenario file")
    sc.add_argument("--tol", type=int, default=10, help="frame tolerance, inclusive")
    sc.add_argument("--mode", choices=MODES, default="greedy")
    sc.add_argument("--report", help="cost report from run, to compute the score")
    sc.add_argument("--alpha", type=float, default=0.0, help="per-invocation energy weight")
    sc.set_defaults(func=cmd_score)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, LayoutError, BootstrapUnderflow, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CatchTrackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort exit code contract
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
