"""Command line interface.

Subcommands: simulate, track, evaluate, optimize, bench. Configuration
overrides take the same flat key=value form everywhere; --set touches the
tracker, --gate-set the gate, --synth-set the generator.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .bench import measure_pipeline_cost, pv_cost_vs_fs, tracker_cost_ratio
from .errors import ConfigurationError, FileFormatError, SwphaseError
from .gate import GateConfig, calibrate_gate
from .io import (apply_config, config_echo, hash_file, parse_stage_runs,
                 read_hypnogram, read_recording, read_trigger_log,
                 write_hypnogram, write_phase_track, write_recording,
                 write_trigger_log)
from .optimize import default_grid, grid_search_cv, make_pipeline_evaluator
from .pipeline import SessionResult, evaluate_session, run_session
from .synth import SynthSpec, default_hypnogram, generate
from .trackers import ALGORITHMS, TrackerConfig


def _pairs(values) -> dict:
    out = {}
    for item in values or []:
        if "=" not in item:
            raise ConfigurationError(f"expected key=value, got {item!r}")
        key, _, val = item.partition("=")
        out[key.strip()] = val.strip()
    return out


def _tracker_config(args) -> TrackerConfig:
    cfg = TrackerConfig(algorithm=args.algorithm)
    return apply_config(cfg, _pairs(args.set)).validate()


def _gate_config(args) -> GateConfig:
    cfg = GateConfig(onoff_enabled=getattr(args, "onoff", False))
    return apply_config(cfg, _pairs(args.gate_set)).validate()


def cmd_simulate(args) -> int:
    if args.stages:
        hyp = parse_stage_runs(args.stages)
    else:
        hyp = default_hypnogram(args.cycles)
    spec = SynthSpec(hypnogram=hyp, seed=args.seed)
    spec = apply_config(spec, _pairs(args.synth_set)).validate()
    out = generate(spec)
    write_recording(args.out, out.recording)
    if args.hypnogram_out:
        write_hypnogram(args.hypnogram_out, hyp)
    if args.phase_out:
        write_phase_track(args.phase_out, out.true_phase)
    dur = out.recording.duration_s
    print(f"wrote {args.out}: {len(out.recording.samples)} samples, "
          f"fs={out.recording.fs:g} Hz, {dur / 3600:.2f} h, "
          f"{len(hyp)} epochs, seed={spec.seed}")
    return 0


def cmd_track(args) -> int:
    recording = read_recording(args.input)
    if args.hypnogram:
        recording.hypnogram = read_hypnogram(args.hypnogram)
    cfg = _tracker_config(args)
    gate_cfg = _gate_config(args)
    session = run_session(recording, cfg, gate_cfg, streaming=args.streaming)
    provenance = {
        "input_sha256": hash_file(args.input),
        "tracker_config": config_echo(session.tracker_config),
        "gate_config": config_echo(gate_cfg),
    }
    write_trigger_log(args.out, session.log, provenance)
    n_del = len(session.delivered())
    print(f"wrote {args.out}: {len(session.log)} candidates, "
          f"{n_del} delivered, suppressed {session.suppression_counts()}")
    return 0


def cmd_evaluate(args) -> int:
    recording = read_recording(args.input)
    recording.hypnogram = read_hypnogram(args.hypnogram)
    provenance, log = read_trigger_log(args.triggers)
    algos = {e.algorithm for e in log}
    algo = args.algorithm or (algos.pop() if len(algos) == 1 else None)
    if algo is None:
        raise ConfigurationError(
            "trigger log holds multiple algorithms; pass --algorithm")
    gate_cfg = _gate_config(args)
    cfg = TrackerConfig(algorithm=algo, sample_rate_hz=recording.fs)
    from .dsp import PreprocessChain
    from .gate import gate_flags_batch
    y = PreprocessChain(recording.fs).run(recording.samples)
    flags = gate_flags_batch(y, recording.fs, gate_cfg)
    session = SessionResult(log=log, window_flags=flags, tracker_config=cfg,
                            gate_config=gate_cfg, fs=recording.fs)
    report = evaluate_session(recording, session)

    lines = [
        f"algorithm            {report.algorithm}",
        f"candidates           {report.n_candidates}",
        f"delivered            {report.n_delivered}",
        f"outside oracle mask  {report.n_oracle_dropped}",
    ]
    payload = {
        "algorithm": report.algorithm,
        "n_candidates": report.n_candidates,
        "n_delivered": report.n_delivered,
        "n_oracle_dropped": report.n_oracle_dropped,
        "suppression_counts": report.suppression_counts,
    }
    if report.circular_mean_deg is not None:
        up = report.trigger_phases_deg
        up_pct = (100.0 * float(np.count_nonzero(
            (up > 0.0) & (up <= 90.0))) / len(up)) if len(up) else 0.0
        lines += [
            f"circular mean        {report.circular_mean_deg:.2f} deg",
            f"circular sd          {report.circular_sd_deg:.2f} deg",
            f"cmae45               {report.cmae45_deg:.2f} deg "
            f"(norm {report.cmae45_norm:.4f})",
            f"up-phase fraction    {up_pct:.1f} %",
        ]
        payload.update(circular_mean_deg=report.circular_mean_deg,
                       circular_sd_deg=report.circular_sd_deg,
                       cmae45_deg=report.cmae45_deg,
                       cmae45_norm=report.cmae45_norm,
                       up_phase_pct=up_pct)
    else:
        lines.append("circular mean        undefined")
    if report.pas_report is not None:
        p = report.pas_report
        lines += [
            f"pas (all)            {p.pas_all:.2f} %",
            f"pas (in up-phase)    {p.pas_in_up:.2f} %",
            f"pas (not up-phase)   {p.pas_not_up:.2f} %",
            f"qualifying windows   {p.qualifying_windows}",
        ]
        payload.update(pas_all=p.pas_all, pas_in_up=p.pas_in_up,
                       pas_not_up=p.pas_not_up,
                       qualifying_windows=p.qualifying_windows)
    if report.targeting is not None:
        t = report.targeting
        lines.append(f"wave capacity        low {t.low_capacity_pct:.1f} % "
                     f"({t.n_low} waves), high {t.high_capacity_pct:.1f} % "
                     f"({t.n_high} waves)")
        payload.update(low_capacity_pct=t.low_capacity_pct,
                       high_capacity_pct=t.high_capacity_pct,
                       n_low_waves=t.n_low, n_high_waves=t.n_high)
    if report.intervals is not None:
        lines.append(f"median interval      {report.intervals.median_s:.3f} s")
        payload.update(median_interval_s=report.intervals.median_s)
    lines.append(f"suppressed           {report.suppression_counts}")
    print("\n".join(lines))
    if args.json:
        with open(args.json, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
    return 0


def _load_corpus(paths):
    recordings = []
    for path in paths:
        rec = read_recording(path)
        stem = str(path)
        for suffix in (".swp", ".bin", ".csv"):
            if stem.lower().endswith(suffix):
                stem = stem[: -len(suffix)]
                break
        rec.hypnogram = read_hypnogram(stem + ".hyp.csv")
        recordings.append(rec)
    return recordings


def cmd_optimize(args) -> int:
    recordings = _load_corpus(args.inputs)
    if args.grid:
        from .io import read_config
        raw = read_config(args.grid)
        grid = {}
        for key, val in raw.items():
            vals = [v.strip() for v in val.split(",") if v.strip()]
            if key in ("maf_span",):
                grid[key] = [int(v) for v in vals]
            else:
                grid[key] = [float(v) for v in vals]
    else:
        grid = default_grid(args.algorithm)
    gate_cfg = _gate_config(args)
    evaluate = make_pipeline_evaluator(recordings, args.algorithm, gate_cfg)
    outcome = grid_search_cv(recordings, grid, evaluate, k=args.k,
                             seed=args.seed)
    best = outcome.best
    print(f"grid: {len(outcome.results)} combos x {len(recordings)} recordings, "
          f"k={args.k}, seed={args.seed}")
    print(f"best combo: {best.combo}")
    print(f"  ed_error={best.ed_error:.4f} mean_val_ed={best.mean_val_ed:.4f} "
          f"mean_opt_ed={best.mean_opt_ed:.4f}")
    cm, pnu, piu = best.val_objectives
    print(f"  pooled validation: cmae_norm={cm:.4f} "
          f"pas_not_up_norm={pnu:.4f} pas_in_up_norm={piu:.4f}")
    if args.json:
        rows = [{"combo": r.combo, "ed_error": r.ed_error,
                 "mean_val_ed": r.mean_val_ed, "mean_opt_ed": r.mean_opt_ed,
                 "fold_val_ed": r.fold_val_ed, "fold_opt_ed": r.fold_opt_ed}
                for r in outcome.results]
        with open(args.json, "w", encoding="utf-8") as f:
            json.dump({"algorithm": args.algorithm, "k": args.k,
                       "seed": args.seed, "best": rows and
                       {"combo": best.combo, "ed_error": best.ed_error},
                       "results": rows}, f, indent=2)
            f.write("\n")
    return 0


def cmd_bench(args) -> int:
    reports = {}
    for algo in (args.algorithm,) if args.algorithm else ALGORITHMS:
        rep = measure_pipeline_cost(algo, fs=args.fs, reps=args.reps)
        reports[algo] = rep
        stages = " ".join(f"{name}={s.median_ns:.0f}ns"
                          for name, s in rep.stages.items())
        print(f"{algo:>4}: {stages} total={rep.total_median_ns:.0f}ns "
              f"rcr={rep.rcr:.5f} efficiency={rep.efficiency_pct:.2f}%")
    if not args.algorithm or args.algorithm in ("pll", "pv"):
        ratio = tracker_cost_ratio(fs=args.fs, reps=args.reps)
        print(f"pv/pll tracker cost ratio: {ratio:.2f}")
    if args.fs_sweep:
        sweep = pv_cost_vs_fs()
        pretty = ", ".join(f"{fs:g} Hz: {ns:.0f}ns" for fs, ns in sweep.items())
        print(f"pv tracker cost vs fs (span scaled): {pretty}")
    if args.json:
        payload = {a: {"rcr": r.rcr, "efficiency_pct": r.efficiency_pct,
                       "stages": {n: s.median_ns for n, s in r.stages.items()},
                       "op_counts": r.op_counts}
                   for a, r in reports.items()}
        with open(args.json, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
    return 0


def cmd_calibrate(args) -> int:
    recording = read_recording(args.input)
    recording.hypnogram = read_hypnogram(args.hypnogram)
    cfg = calibrate_gate(recording)
    for key, val in sorted(cfg.__dict__.items()):
        print(f"{key} = {val}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swphase",
                                description="slow-wave phase tracking toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic recording")
    sim.add_argument("--out", required=True)
    sim.add_argument("--hypnogram-out")
    sim.add_argument("--phase-out", help="true phase sidecar file")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--cycles", type=int, default=4,
                     help="sleep cycles when --stages is not given")
    sim.add_argument("--stages", help='run-length stages, e.g. "W*10 N2*30"')
    sim.add_argument("--synth-set", action="append", metavar="KEY=VALUE")
    sim.set_defaults(func=cmd_simulate)

    trk = sub.add_parser("track", help="run a tracker over a recording")
    trk.add_argument("--input", required=True)
    trk.add_argument("--out", required=True)
    trk.add_argument("--algorithm", choices=ALGORITHMS, default="pv")
    trk.add_argument("--hypnogram")
    trk.add_argument("--set", action="append", metavar="KEY=VALUE")
    trk.add_argument("--gate-set", action="append", metavar="KEY=VALUE")
    trk.add_argument("--onoff", action="store_true",
                     help="enable the 6 s ON / 6 s OFF protocol")
    trk.add_argument("--streaming", action="store_true",
                     help="per-sample reference path (slower, same output)")
    trk.set_defaults(func=cmd_track)

    ev = sub.add_parser("evaluate", help="judge a trigger log against the oracle")
    ev.add_argument("--input", required=True)
    ev.add_argument("--triggers", required=True)
    ev.add_argument("--hypnogram", required=True)
    ev.add_argument("--algorithm", choices=ALGORITHMS)
    ev.add_argument("--gate-set", action="append", metavar="KEY=VALUE")
    ev.add_argument("--onoff", action="store_true")
    ev.add_argument("--json", help="write the report as JSON here")
    ev.set_defaults(func=cmd_evaluate)

    opt = sub.add_parser("optimize", help="cross-validated grid search")
    opt.add_argument("inputs", nargs="+",
                     help="recordings; CORPUS.hyp.csv sidecars must exist")
    opt.add_argument("--algorithm", choices=ALGORITHMS, required=True)
    opt.add_argument("-k", type=int, default=5)
    opt.add_argument("--seed", type=int, default=0)
    opt.add_argument("--grid", help="file of key = v1,v2,... lines")
    opt.add_argument("--gate-set", action="append", metavar="KEY=VALUE")
    opt.add_argument("--json")
    opt.set_defaults(func=cmd_optimize, onoff=False)

    ben = sub.add_parser("bench", help="per-sample cost measurement")
    ben.add_argument("--algorithm", choices=ALGORITHMS)
    ben.add_argument("--fs", type=float, default=250.0)
    ben.add_argument("--reps", type=int, default=5)
    ben.add_argument("--fs-sweep", action="store_true")
    ben.add_argument("--json")
    ben.set_defaults(func=cmd_bench)

    cal = sub.add_parser("calibrate", help="gate thresholds from a scored recording")
    cal.add_argument("--input", required=True)
    cal.add_argument("--hypnogram", required=True)
    cal.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except FileFormatError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except SwphaseError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
