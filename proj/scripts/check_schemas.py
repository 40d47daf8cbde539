#!/usr/bin/env python3
"""Run every dtoda command and validate its JSON artifacts against schemas/.

Usage: check_schemas.py DTODA SOURCE_DIR WORK_DIR

Each command runs twice; the second run must reproduce stdout and every
written file byte for byte.
"""
import json
import shutil
import subprocess
import sys
from pathlib import Path

import jsonschema

DTODA = str(Path(sys.argv[1]).resolve())
SRC, WORK = Path(sys.argv[2]).resolve(), Path(sys.argv[3]).resolve()
SCHEMAS = SRC / "schemas"
failures = []


def validator(name):
    schema = json.loads((SCHEMAS / f"{name}.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    return jsonschema.Draft202012Validator(schema)


def validate(name, doc, what):
    errors = sorted(validator(name).iter_errors(doc), key=lambda e: list(e.path))
    for e in errors[:3]:
        failures.append(f"{what}: {name}: {'/'.join(map(str, e.path))}: {e.message}")
    print(f"{'ok  ' if not errors else 'FAIL'} {what} against {name}")


def write(name, obj):
    path = WORK / name
    path.write_text(json.dumps(obj))
    return name


def run(args, out_dir, expect=0):
    proc = subprocess.run([DTODA, *args, "--output-dir", out_dir], cwd=WORK, capture_output=True, text=True)
    if proc.returncode != expect:
        failures.append(f"{' '.join(args)}: exit {proc.returncode}, expected {expect}: {proc.stderr.strip()}")
    return proc


def snapshot(out_dir):
    d = WORK / out_dir
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())} if d.exists() else {}


def run_twice(args, out_dir, expect=0):
    first = run(args, out_dir, expect)
    files = snapshot(out_dir)
    second = run(args, out_dir, expect)
    if first.stdout != second.stdout:
        failures.append(f"{' '.join(args)}: stdout differs between runs")
    if files != snapshot(out_dir):
        failures.append(f"{' '.join(args)}: written files differ between runs")
    return json.loads(first.stdout) if first.stdout else None


def main():
    if WORK.exists():
        shutil.rmtree(WORK)
    WORK.mkdir(parents=True)

    sigma1 = {"family": "homogeneous", "c": 1.0, "alpha": 1.0, "r0_sq": 0.0, "r1_sq": 100.0}
    cyl = {"family": "cylinder", "R": 1.0, "r0_sq": 0.4, "r1_sq": 100.0}
    gen = {"family": "general", "C1": 1.0, "C0": 2.0, "k": 4.0, "r0_sq": 0.5, "r1_sq": 50.0}
    tab = {"family": "tabulated", "U": [0.1 * i * i for i in range(40)], "r0_sq": 0.2, "r1_sq": 40.0}
    ellipse = {"r": 1.2, "coeffs": [[0.0, 0.0], [0.1, 0.0]]}
    circle = {"r": 1.5, "coeffs": [[0.0, 0.0]]}
    targets = {"t0": 1.44, "t": [[0.0, 0.0], [0.05, 0.0]]}

    for name, obj in [("s1", sigma1), ("cyl", cyl), ("gen", gen), ("tab", tab)]:
        validate("density", obj, f"{name}.json")
        write(f"{name}.json", obj)
    for name, obj in [("ellipse", ellipse), ("circle", circle)]:
        validate("map", obj, f"{name}.json")
        write(f"{name}.json", obj)
    validate("moments", targets, "targets.json")
    write("targets.json", targets)
    write("targets_gen.json", {"t0": 2.5, "t": [[0.0, 0.0], [0.05, 0.0]]})

    doc = run_twice(["moments", "--map", "ellipse.json", "--density", "s1.json", "-N", "6"], "mom")
    validate("moments_output", doc, "moments stdout")
    validate("moments", doc, "moments stdout as input")
    doc = run_twice(["moments", "--random", "3", "--seed", "11", "--density", "cyl.json", "--random-radius", "2"], "momr")
    validate("moments_output", doc, "moments --random stdout")

    doc = run_twice(["tau", "--map", "circle.json", "--density", "s1.json"], "tau")
    validate("tau_output", doc, "tau stdout")
    doc = run_twice(["tau", "--moments", "targets_gen.json", "--density", "gen.json", "--method", "moment_identity"], "taug")
    validate("tau_output", doc, "tau --moments stdout")

    doc = run_twice(["invert", "--targets", "targets.json", "--density", "s1.json"], "inv")
    validate("invert_output", doc, "invert stdout")
    validate("invert_output", json.loads((WORK / "inv" / "map.json").read_text()), "invert map.json")
    validate("map", doc, "invert output as map input")

    for method in ("moment", "front"):
        doc = run_twice(["grow", "--method", method, "--init", "ellipse.json", "--density", "s1.json",
                         "--dt", "0.02", "--steps", "2", "--svg"], f"grow_{method}")
        validate("trajectory", doc, f"grow {method} stdout")
        out = WORK / f"grow_{method}"
        validate("trajectory", json.loads((out / "trajectory.json").read_text()), f"grow {method} trajectory.json")
        for p in sorted(out.glob("step_*.json")):
            validate("grow_step", json.loads(p.read_text()), f"grow {method} {p.name}")

    doc = run_twice(["verify", "--suite", "gradient,w,reality", "--map", "ellipse.json", "--density", "s1.json",
                     "--point", "3,0.5"], "ver")
    validate("verify_output", doc, "verify stdout")
    doc = run_twice(["verify", "--suite", "dkdv,parameter", "--base", "targets.json", "--density", "cyl.json"], "verc")
    validate("verify_output", doc, "verify cylinder stdout")
    doc = run_twice(["verify", "--suite", "gradient", "--map", "ellipse.json", "--density", "s1.json", "--tol", "1e-30"],
                    "verf", expect=2)
    validate("verify_output", doc, "failing verify stdout")

    doc = run_twice(["cone", "--map", "ellipse.json", "--alpha", "2", "--svg"], "cone")
    validate("transform_output", doc, "cone stdout")
    doc = run_twice(["cylinder", "--map", "ellipse.json", "--density", "cyl.json"], "cyl")
    validate("transform_output", doc, "cylinder stdout")

    for args in (["moments", "--map", "missing.json", "--density", "s1.json"],
                 ["invert", "--targets", "targets.json", "--density", "tab.json", "--max-iter", "0"],
                 ["bogus"]):
        proc = run(args, "err", expect=1)
        try:
            validate("error", json.loads(proc.stderr), f"stderr of {' '.join(args)}")
        except json.JSONDecodeError:
            failures.append(f"{' '.join(args)}: stderr is not JSON: {proc.stderr!r}")

    if failures:
        print("\n".join(failures))
        return 1
    print("all artifacts valid and reproducible")
    return 0


if __name__ == "__main__":
    sys.exit(main())
