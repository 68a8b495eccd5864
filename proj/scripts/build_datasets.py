#!/usr/bin/env python3
"""Rebuild data/auto-mpg.csv and data/new-thyroid-2class.csv from PyPI-distributed copies.

Auto-MPG comes from the vega_datasets wheel (cars.json); rows with a missing
mpg or horsepower value are dropped, leaving the usual 392.

New-thyroid comes from the KEEL "new-thyroid1" file in the keel_ds wheel. KEEL
only publishes one-vs-rest relabelings of this set (and both of its variants
carry the same positive class), so the file written here keeps the original
215 rows and 5 attributes with a two-class label: hyper vs other. Place the
three-class UCI file at data/new-thyroid.csv (last column = class) to use it
instead.

    python3 scripts/build_datasets.py [--out data]
"""

import argparse
import json
import pathlib
import subprocess
import sys
import tempfile
import zipfile

ORIGIN = {"USA": 1, "Europe": 2, "Japan": 3}


def fetch_wheel(name, version, workdir):
    subprocess.run(
        [sys.executable, "-m", "pip", "download", f"{name}=={version}",
         "--no-deps", "-q", "-d", str(workdir)],
        check=True,
    )
    return next(workdir.glob(f"{name.replace('-', '_')}-{version}-*.whl"))


def auto_mpg(wheel, out):
    cars = json.loads(zipfile.ZipFile(wheel).read("vega_datasets/_data/cars.json"))
    rows = []
    for c in cars:
        if c["Miles_per_Gallon"] is None or c["Horsepower"] is None:
            continue
        rows.append((
            c["Cylinders"], c["Displacement"], c["Horsepower"], c["Weight_in_lbs"],
            c["Acceleration"], int(c["Year"][:4]) - 1900, ORIGIN[c["Origin"]],
            c["Miles_per_Gallon"],
        ))
    with open(out, "w") as f:
        f.write("cylinders,displacement,horsepower,weight,acceleration,model_year,origin,mpg\n")
        for r in rows:
            f.write(",".join(f"{v:g}" for v in r) + "\n")
    return len(rows)


def keel_rows(text):
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        *feat, label = [t.strip() for t in line.split(",")]
        yield tuple(feat), label == "positive"


def new_thyroid(wheel, out):
    z = zipfile.ZipFile(wheel)
    rows = list(keel_rows(z.read("keel_ds/data/imbalanced/raw/new-thyroid1.dat").decode()))
    with open(out, "w") as f:
        f.write("t3_resin,thyroxin,triiodothyronine,tsh,tsh_diff,class\n")
        for feat, hyper in rows:
            f.write(",".join(feat) + (",hyper\n" if hyper else ",other\n"))
    return len(rows)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        n = auto_mpg(fetch_wheel("vega_datasets", "0.9.0", tmp), out / "auto-mpg.csv")
        print(f"auto-mpg.csv: {n} rows")
        n = new_thyroid(fetch_wheel("keel_ds", "0.2.5", tmp), out / "new-thyroid-2class.csv")
        print(f"new-thyroid-2class.csv: {n} rows")


if __name__ == "__main__":
    main()
