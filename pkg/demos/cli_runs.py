"""
Driving geomech from its command line
=====================================

Runs pendulum.cfg through the CLI entry point inside a scratch directory,
then tightens the energy tolerance with --set to show exit status 2.
"""
import json
import os
import tempfile
from pathlib import Path

from geomech.cli import main

config = Path(__file__).with_name("pendulum.cfg").resolve()

with tempfile.TemporaryDirectory() as scratch:
    os.chdir(scratch)
    status = main(["run", str(config)])
    report = json.loads(Path("pendulum.csv.report.json").read_text())
    rows = Path("pendulum.csv").read_text().splitlines()
    print(f"exit {status}; {len(rows)} lines; first rows:")
    print("\n".join(rows[:4]))
    print(json.dumps(report, indent=2))

    status = main(["run", str(config), "--set", "tolerance.H=1e-8"])
    print(f"with tolerance.H=1e-8 the run exits {status}")
