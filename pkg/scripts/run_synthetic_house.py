"""Extract signatures from the default synthetic house and score them against ground truth."""
import argparse
import time

from loadsig import evaluation, filtration, pipeline, synthhome


def check(report, injected):
    bad = []
    for a in report.appliances:
        if a.appliance not in injected:
            continue
        if not a.found:
            bad.append(f"{a.appliance}: not found")
            continue
        if a.precision < 0.95 or a.recall < 0.95:
            bad.append(f"{a.appliance}: precision {a.precision:.3f}, recall {a.recall:.3f}")
        for c in a.classes:
            if not c.matched:
                bad.append(f"{a.appliance} class {c.label}: unmatched")
            elif abs(c.err_P) > 2:
                bad.append(f"{a.appliance} class {c.label}: P {c.err_P:+.2f}%")
            elif abs(c.true_Q_var) > 20 and abs(c.err_Q) > 10:
                bad.append(f"{a.appliance} class {c.label}: Q {c.err_Q:+.2f}%")
            elif c.true_THD_pct > 5 and abs(c.err_THD) > 10:
                bad.append(f"{a.appliance} class {c.label}: THD {c.err_THD:+.2f}%")
    return bad


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--days", type=int, default=7)
    ap.add_argument("--verbose", action="store_true", help="print the full tables for each seed")
    args = ap.parse_args()
    scenario = synthhome.default_scenario()
    injected = {a.name for a in scenario.appliances}
    rows = filtration.default_condition_table()
    n_ok = 0
    for seed in args.seeds:
        t0 = time.perf_counter()
        rec, truth = synthhome.generate(scenario, seed, args.days)
        db = pipeline.run_extraction(rec, rows)
        report = evaluation.evaluate(db, truth)
        bad = check(report, injected)
        n_ok += not bad
        if args.verbose:
            print(pipeline.summary_table(db))
            print(report.table())
        print(f"seed {seed}: {'OK' if not bad else '; '.join(bad)} ({time.perf_counter() - t0:.1f} s)")
    print(f"{n_ok}/{len(args.seeds)} seeds meet every check")


if __name__ == "__main__":
    main()
