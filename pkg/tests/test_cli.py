import csv
import json

import numpy as np
import pytest

from ptspec.cli import main


def run_cli(*argv):
    return main(list(argv))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------

def test_presets_lists_all_models(capsys):
    assert run_cli("presets") == 0
    out = capsys.readouterr().out
    for name in ("E1", "E2", "E3", "E4", "E10", "E11", "E12"):
        assert f"== {name} ==" in out


def test_solve_e1_g0(tmp_path, capsys):
    out = tmp_path / "levels.csv"
    code = run_cli("solve", "--model", "E1", "--g", "0", "--cutoffs", "20,20",
                   "--window", "6", "--out", str(out))
    assert code == 0
    rows = read_csv(out)
    res = sorted(float(r["re"]) for r in rows)
    assert res[0] == pytest.approx(1.0, abs=1e-10)
    # degeneracy pattern 1, 2, 3 for the lowest three energies
    assert sum(1 for r in res if abs(r - 1) < 1e-9) == 1
    assert sum(1 for r in res if abs(r - 2) < 1e-9) == 2
    assert sum(1 for r in res if abs(r - 3) < 1e-9) == 3
    assert "lowest Re = 1.000000" in capsys.readouterr().out
    assert (tmp_path / "levels.csv.manifest.json").exists()


def test_solve_e3_lowest_level(tmp_path, capsys):
    out = tmp_path / "levels.csv"
    assert run_cli("solve", "--model", "E3", "--g", "0", "--cutoffs", "8,8,8",
                   "--window", "4", "--out", str(out)) == 0
    rows = read_csv(out)
    assert min(float(r["re"]) for r in rows) == pytest.approx(1.5, abs=1e-10)


def test_solve_e12_seven_levels_match_oracle(tmp_path):
    out = tmp_path / "e12.csv"
    assert run_cli("solve", "--model", "E12", "--cutoffs", "100", "--k", "7",
                   "--out", str(out)) == 0
    rows = read_csv(out)
    assert len(rows) == 7
    from ptspec.assemble import Truncation, assemble_any
    from ptspec.hamiltonian import preset
    from ptspec.linalg import dense_eigenvalues

    oracle = dense_eigenvalues(assemble_any(preset("E12"), Truncation((100,)), 1.0))[:7]
    got = np.array(sorted((complex(float(r["re"]), float(r["im"])) for r in rows), key=lambda z: z.real))
    assert np.max(np.abs(got - oracle)) < 1e-8


def test_ladder_command(tmp_path, capsys):
    out = tmp_path / "ladder.csv"
    assert run_cli("ladder", "--model", "E12", "--g", "1.0", "--ladder", "60,70,80",
                   "--window", "20", "--out", str(out)) == 0
    rows = read_csv(out)
    assert rows
    assert all(float(r["rel_change"]) < 1e-6 for r in rows)


def test_fit_command_recovers_power_law(tmp_path):
    # synthetic scan CSV following the power-law frontier exactly
    scan_csv = tmp_path / "scan.csv"
    header = "model,g,cutoffs,level_index,re,im,rel_change,residual,is_complex"
    lines = [header]
    a, b, c = 2.32, 0.046, -0.615
    for i in range(40):
        g = 0.06 + i * 0.01
        f = a * (g - b) ** c
        lines.append(f"E2,{g!r},50x50,0,{f!r},0.08,0,1e-12,1")
        lines.append(f"E2,{g!r},50x50,1,{f!r},-0.08,0,1e-12,1")
        lines.append(f"E2,{g!r},50x50,2,{f + 3.0!r},0.3,0,1e-12,1")
    scan_csv.write_text("\n".join(lines) + "\n")
    report = tmp_path / "fit.json"
    code = run_cli("fit", "--in", str(scan_csv), "--form", "power", "--report", str(report))
    assert code == 0
    doc = json.loads(report.read_text())
    assert doc["form"] == "power"
    assert doc["params"] == pytest.approx([a, b, c], abs=1e-6)
    assert doc["critical_estimate"] == pytest.approx(b, abs=1e-6)


def test_scan_to_fit_pipeline_smoke(tmp_path):
    scan_csv = tmp_path / "scan.csv"
    assert run_cli(
        "scan", "--model", "E10", "--g-min", "3.5", "--g-max", "5.0", "--g-step", "0.25",
        "--ladder", "48", "--window", "40", "--out", str(scan_csv)
    ) == 0
    report = tmp_path / "fit.json"
    code = run_cli("fit", "--in", str(scan_csv), "--form", "power", "--report", str(report))
    assert code == 0
    doc = json.loads(report.read_text())
    assert len(doc["params"]) == 3 and len(doc["sigmas"]) == 3


def test_scan_manifest_round_trip(tmp_path):
    first = tmp_path / "a.csv"
    assert run_cli(
        "scan", "--model", "E10", "--g-min", "3.3", "--g-max", "3.6", "--g-step", "0.1",
        "--ladder", "32", "--window", "30", "--out", str(first)
    ) == 0
    manifest = str(first) + ".manifest.json"
    second = tmp_path / "b.csv"
    assert run_cli("scan", "--config", manifest, "--out", str(second)) == 0
    assert first.read_bytes() == second.read_bytes()


def test_export_matrix_market(tmp_path):
    out = tmp_path / "e1.mtx"
    assert run_cli("export", "--model", "E1", "--g", "0.1", "--cutoffs", "8,8",
                   "--out", str(out)) == 0
    head = out.read_text().splitlines()[0]
    assert "complex general" in head


def test_solve_idempotent(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for out in (a, b):
        assert run_cli("solve", "--model", "E12", "--cutoffs", "60", "--k", "5",
                       "--out", str(out)) == 0
    assert a.read_bytes() == b.read_bytes()


def test_usage_errors_exit_2(tmp_path):
    assert run_cli("solve", "--model", "E99", "--cutoffs", "4,4",
                   "--out", str(tmp_path / "x.csv")) == 2
    assert run_cli("nonsense") == 2
    # wrong cutoff arity for the model
    assert run_cli("solve", "--model", "E1", "--cutoffs", "4",
                   "--out", str(tmp_path / "y.csv")) == 2


def test_validate_passes(capsys):
    assert run_cli("validate") == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    assert "FAIL" not in out
