#!/usr/bin/env python3
"""Convert a numeric ARFF file (dense or sparse rows) to the CSV layout hraml reads.

Example: the Mulan emotions set has 72 features followed by 6 labels, so
    tools/arff_to_csv.py emotions.arff data/emotions.csv
produces a file usable with label_columns "last:6".
"""

import argparse
import csv
import re
import sys


def parse_arff(lines):
    names = []
    rows = []
    in_data = False
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        lower = line.lower()
        if not in_data:
            if lower.startswith("@attribute"):
                match = re.match(r"@attribute\s+('[^']*'|\"[^\"]*\"|\S+)\s+(.+)", line, re.IGNORECASE)
                if not match:
                    raise ValueError(f"cannot parse attribute line: {line}")
                names.append(match.group(1).strip("'\""))
            elif lower.startswith("@data"):
                in_data = True
            continue
        if line.startswith("{"):
            values = ["0"] * len(names)
            body = line.strip("{}").strip()
            if body:
                for item in body.split(","):
                    index, value = item.strip().split(None, 1)
                    values[int(index)] = value.strip()
        else:
            values = [v.strip() for v in line.split(",")]
        if len(values) != len(names):
            raise ValueError(f"row has {len(values)} values, expected {len(names)}")
        for v in values:
            float(v)
        rows.append(values)
    return names, rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("arff")
    parser.add_argument("csv")
    args = parser.parse_args(argv)
    with open(args.arff, encoding="utf-8") as f:
        names, rows = parse_arff(f)
    with open(args.csv, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(names)
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows x {len(names)} columns to {args.csv}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
