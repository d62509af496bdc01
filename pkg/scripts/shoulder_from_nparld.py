"""Convert a wide export of the nparLD ``shoulder`` data to the long CSV used by the tests.

In R: ``library(nparLD); data(shoulder); write.csv(shoulder, "shoulder_wide.csv", row.names = FALSE)``
then ``python scripts/shoulder_from_nparld.py shoulder_wide.csv tests/fixtures/shoulder_long.csv``.

Every column other than the subject and group columns is taken as one
repeated measure, in file order, and renamed ``timepoint 1`` ... ``timepoint d``.
"""

import argparse
import csv
import sys


def convert(src, dst, subject_col, group_col):
    reader = csv.DictReader(src)
    if subject_col not in reader.fieldnames or group_col not in reader.fieldnames:
        sys.exit(f"expected columns {subject_col!r} and {group_col!r}, found {reader.fieldnames}")
    times = [c for c in reader.fieldnames if c not in (subject_col, group_col)]
    writer = csv.writer(dst, lineterminator="\n")
    writer.writerow(["subject", "group", "time", "value"])
    rows = 0
    for row in reader:
        for j, col in enumerate(times, start=1):
            writer.writerow([row[subject_col], row[group_col], f"timepoint {j}", row[col]])
        rows += 1
    return rows, len(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("wide")
    ap.add_argument("long")
    ap.add_argument("--subject", default="Subject")
    ap.add_argument("--group", default="group")
    args = ap.parse_args(argv)
    with open(args.wide, newline="") as src, open(args.long, "w", newline="") as dst:
        n, d = convert(src, dst, args.subject, args.group)
    print(f"wrote {n} subjects x {d} repeated measures to {args.long}", file=sys.stderr)


if __name__ == "__main__":
    main()
