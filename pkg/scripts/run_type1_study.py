"""Type-I error sub-grid: rejection rates under the global null for each effect.

Example (the desk-scale reproduction, roughly a minute per setting):

    python scripts/run_type1_study.py --setting S1 S2 --sizes 20 --out type1.tsv
"""

import argparse
import sys

from rank_mctp.simulation import COVARIANCES, SETTINGS, TESTS, SimConfig, StudyReport, type1_study


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--setting", nargs="+", default=["S1", "S2"], choices=sorted(SETTINGS))
    ap.add_argument("--cov", nargs="+", default=["CS"], choices=COVARIANCES)
    ap.add_argument("--sizes", nargs="+", type=int, default=[20])
    ap.add_argument("--contrasts", nargs="+", default=["centering"])
    ap.add_argument("--tests", nargs="+", default=["mctp", "bootmctp", "ats"], choices=TESTS)
    ap.add_argument("--runs", type=int, default=1000)
    ap.add_argument("--bootstrap", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", help="write here instead of stdout; .json selects JSON")
    args = ap.parse_args(argv)

    rows, cfg = [], None
    for setting in args.setting:
        for cov in args.cov:
            cfg = SimConfig(setting=setting, cov=cov, runs=args.runs, B=args.bootstrap, seed=args.seed)
            rep = type1_study(cfg, tests=args.tests, contrasts=args.contrasts, sizes=args.sizes,
                              threads=args.threads)
            rows += rep.rows
            print(f"{setting} {cov}: {rep.runtime_s:.1f} s", file=sys.stderr)
    report = StudyReport(rows, {"study": "type1", **vars(args)}, 0.0)
    text = report.to_json() if (args.out or "").endswith(".json") else report.to_tsv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
