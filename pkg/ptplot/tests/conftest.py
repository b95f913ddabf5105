"""Fixtures: reference CSVs produced by the spectral engine's CLI.

The engine is exercised strictly through its command-line interface and file
formats; nothing from it is imported.
"""

import subprocess
import sys

import pytest


def run_engine(*argv):
    proc = subprocess.run(
        [sys.executable, "-m", "ptspec.cli", *argv], capture_output=True, text=True
    )
    if proc.returncode != 0:
        raise RuntimeError(
            f"engine call failed ({proc.returncode}): {' '.join(argv)}\n{proc.stderr}"
        )
    return proc


@pytest.fixture(scope="session")
def reference_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("reference")

    # sweep crossing the periodic model's symmetry-breaking threshold
    scan_csv = root / "scan_e10.csv"
    run_engine(
        "scan", "--model", "E10", "--g-min", "3.3", "--g-max", "4.6", "--g-step", "0.1",
        "--ladder", "32", "--window", "30", "--out", str(scan_csv),
    )

    # all-real sweep (below the threshold)
    real_csv = root / "scan_e10_real.csv"
    run_engine(
        "scan", "--model", "E10", "--g-min", "3.0", "--g-max", "3.4", "--g-step", "0.1",
        "--ladder", "32", "--window", "30", "--out", str(real_csv),
    )

    # frontier fit report for the overlay
    fit_json = root / "fit.json"
    run_engine("fit", "--in", str(scan_csv), "--form", "power", "--report", str(fit_json))

    # cubic-model convergence data: one solve per cutoff, merged
    conv_csv = root / "convergence_e12.csv"
    merged = []
    for i, n in enumerate((10, 15, 20, 30, 40, 60, 80, 100)):
        out = root / f"e12_{n}.csv"
        run_engine("solve", "--model", "E12", "--cutoffs", str(n), "--k", "7", "--out", str(out))
        lines = out.read_text().splitlines()
        if i == 0:
            merged.append(lines[0])
        merged.extend(lines[1:])
    conv_csv.write_text("\n".join(merged) + "\n")

    return root
