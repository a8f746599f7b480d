"""Command-line entry point: extract, simulate, evaluate, heater-bench.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 benchmark mismatch.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench, evaluation, filtration, meterdata, pipeline, synthhome
from .eventdetect import DetectionError
from .filtration import ConditionError
from .meterdata import MeterDataError
from .pipeline import DatabaseError, PipelineParams
from .synthhome import ScenarioError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BENCH = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_recording(path: str):
    p = Path(path)
    if p.suffix.lower() == ".csv":
        return meterdata.load_samples_csv(p)
    return meterdata.load_waveform_frames(p)


def _load_conditions(spec: str | None):
    if spec is None or spec == "builtin:default":
        return filtration.default_condition_table()
    return filtration.load_condition_table(spec)


def cmd_extract(args) -> int:
    try:
        rows = _load_conditions(args.conditions)
        params = PipelineParams()
        if args.params:
            params = PipelineParams.from_dict(json.loads(Path(args.params).read_text(encoding="utf-8")))
    except (ConditionError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        rec = _load_recording(args.input)
        db = pipeline.run_extraction(rec, rows, params)
    except (MeterDataError, DetectionError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    pipeline.save_database(db, args.out)
    print(pipeline.summary_table(db))
    if args.series_dir:
        for path in pipeline.write_step_series(db, args.series_dir):
            print(f"wrote {path}")
    found = sum(e.found for e in db.appliances)
    print(f"{found}/{len(db.appliances)} appliances found; database written to {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        if args.scenario == "builtin:heater-lab":
            scenario = synthhome.heater_lab_scenario()
            rec, truth = synthhome.heater_lab_scenarios(args.seed)
        else:
            scenario = synthhome.load_scenario(args.scenario)
            rec, truth = synthhome.generate(scenario, args.seed, args.days)
    except ScenarioError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    samples = prefix.with_name(prefix.name + "_samples.csv")
    truth_path = prefix.with_name(prefix.name + "_truth.csv")
    meterdata.save_samples_csv(rec, samples)
    synthhome.save_truth_csv(truth, truth_path)
    print(f"wrote {samples} ({rec.n} s, phases {'/'.join(sorted(rec.phases))})")
    print(f"wrote {truth_path} ({len(truth.events)} events)")
    if args.frames_seconds:
        frames = synthhome.synthesize_frames(scenario, rec, truth, args.frames_start, args.frames_seconds)
        frames_path = prefix.with_name(prefix.name + "_frames.lswf")
        meterdata.save_waveform_frames(frames, frames_path, rec.epoch)
        print(f"wrote {frames_path} ({len(frames)} frames)")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    try:
        db = pipeline.load_database(args.db)
        truth = synthhome.load_truth_csv(args.truth)
    except (DatabaseError, ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    report = evaluation.evaluate(db, truth)
    print(report.table())
    if args.out:
        report.save_json(args.out)
        print(f"report written to {args.out}")
    return EXIT_OK


def cmd_heater_bench(args) -> int:
    result = bench.run_heater_bench(args.seed)
    print(bench.format_bench(result))
    return EXIT_OK if result.passed else EXIT_BENCH


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="loadsig", description="Appliance signature extraction from whole-house power data.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("extract", help="run the extraction pipeline on a recording")
    e.add_argument("--input", required=True, help="samples CSV or binary waveform-frame file")
    e.add_argument("--conditions", help="condition table JSON (default: built-in table)")
    e.add_argument("--params", help="pipeline parameter JSON")
    e.add_argument("--out", required=True, help="signature database JSON to write")
    e.add_argument("--series-dir", help="also write per-appliance cycle step series CSVs here")
    e.set_defaults(func=cmd_extract)

    s = sub.add_parser("simulate", help="generate a synthetic recording and its ground truth")
    s.add_argument("--scenario", default="builtin:default",
                   help="scenario JSON, builtin:default or builtin:heater-lab")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--days", type=int, default=7)
    s.add_argument("--out-prefix", required=True)
    s.add_argument("--frames-seconds", type=int, default=0,
                   help="also export this many seconds of waveform frames")
    s.add_argument("--frames-start", type=int, default=0)
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("evaluate", help="compare a signature database with ground truth")
    v.add_argument("--db", required=True)
    v.add_argument("--truth", required=True)
    v.add_argument("--out", help="machine-readable report JSON")
    v.set_defaults(func=cmd_evaluate)

    h = sub.add_parser("heater-bench", help="heater association benchmark")
    h.add_argument("--seed", type=int, default=0)
    h.set_defaults(func=cmd_heater_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
