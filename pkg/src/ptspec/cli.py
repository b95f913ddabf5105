"""Command-line driver.

Exit codes: 0 success, 2 bad flags or usage, 3 numerical/solver failure
(validate returns the number of failed checks, capped at 99).  Numeric output
goes to CSV at full precision; the human summary on stdout is rounded.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .arnoldi import lowest_eigenvalues
from .assemble import Truncation, assemble_any, write_matrix_market
from .errors import PtspecError
from .hamiltonian import (
    PRESET_NAMES,
    TwoByTwoSpec,
    eigs_2x2,
    preset,
    spec_to_json,
)
from .linalg import dense_eigenvalues
from .scan import (
    ScanConfig,
    compute_point,
    critical_estimate,
    resolve_model,
    run_scan,
)
from .spectra import (
    CSV_COLUMNS,
    ConvergedLevel,
    levels_to_rows,
    preset_exceptional_point,
)
from .fit import (
    FORM_LOG,
    FORM_POWER,
    FrontierPoint,
    fit_frontier,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
VALIDATE_EXIT_CAP = 99


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok)


def _write_rows(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _emit_manifest(path: str, payload: dict) -> None:
    payload = dict(payload)
    payload.setdefault("version", __version__)
    payload.setdefault("created_unix", time.time())
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_presets(args) -> int:
    for name in PRESET_NAMES:
        print(f"== {name} ==")
        print(spec_to_json(preset(name)))
    return EXIT_OK


def _solve_spectrum(model: str, g: float, cutoffs, k, window, sigma, tol):
    spec = resolve_model(model)
    trunc = Truncation(cutoffs)
    mat = assemble_any(spec, trunc, g)
    if k is None:
        vals = dense_eigenvalues(mat)
        bound = mat.dim * np.finfo(float).eps * float(np.linalg.norm(mat.values))
        pairs = [(complex(v), bound / max(abs(v), 1e-300)) for v in vals]
    else:
        got = lowest_eigenvalues(mat, min(k, mat.dim - 2), sigma=sigma, tol=tol)
        pairs = [(p.value, p.residual) for p in got]
    if window is not None:
        pairs = [(v, r) for v, r in pairs if v.real <= window]
    return spec, trunc, pairs


def cmd_solve(args) -> int:
    spec, trunc, pairs = _solve_spectrum(
        args.model, args.g, _parse_ints(args.cutoffs), args.k, args.window, args.sigma, args.tol
    )
    levels = [
        ConvergedLevel(value=v, rel_change=math.nan, ladder=(trunc,), residual=r)
        for v, r in pairs
    ]
    rows = levels_to_rows(args.model, args.g, trunc.label(), levels, with_classification=True)
    _write_rows(args.out, CSV_COLUMNS + ("is_complex",), rows)
    _emit_manifest(
        args.out + ".manifest.json",
        {
            "command": "solve",
            "model": args.model,
            "g": args.g,
            "cutoffs": list(trunc.cutoffs),
            "k": args.k,
            "window": args.window,
        },
    )
    n_complex = sum(1 for v, _ in pairs if abs(v.imag) > 1e-6)
    lowest = min((v.real for v, _ in pairs), default=math.nan)
    print(
        f"{args.model} at g={args.g}: {len(pairs)} levels "
        f"({len(pairs) - n_complex} real, {n_complex} complex), lowest Re = {lowest:.6f}"
    )
    return EXIT_OK


def cmd_ladder(args) -> int:
    config = ScanConfig(
        model=args.model,
        g_min=args.g,
        g_max=args.g,
        g_step=1.0,
        ladder=_ladder_from_arg(args.model, args.ladder),
        window=args.window,
        solver=args.solver,
        out=None,
    )
    rec = compute_point(config, 0, args.g)
    if rec.status != "ok":
        print(f"solver failure: {rec.error}", file=sys.stderr)
        return EXIT_NUMERIC
    levels = [l.to_level(config.ladder) for l in rec.levels]
    label = "+".join(t.label() for t in config.ladder)
    rows = levels_to_rows(args.model, args.g, label, levels, with_classification=True)
    _write_rows(args.out, CSV_COLUMNS + ("is_complex",), rows)
    _emit_manifest(
        args.out + ".manifest.json",
        {
            "command": "ladder",
            "model": args.model,
            "g": args.g,
            "ladder": [list(t.cutoffs) for t in config.ladder],
            "window": args.window,
        },
    )
    n_complex = sum(1 for l in rec.levels if l.is_complex)
    print(
        f"{args.model} at g={args.g}: {len(rec.levels)} converged levels "
        f"({len(rec.levels) - n_complex} real, {n_complex} complex)"
    )
    return EXIT_OK


def _ladder_from_arg(model: str, ladder_arg: str) -> tuple[Truncation, ...]:
    spec = resolve_model(model)
    n_modes = spec.n_modes
    return tuple(Truncation((n,) * n_modes) for n in _parse_ints(ladder_arg))


def cmd_scan(args) -> int:
    workers = args.workers
    env = os.environ.get("PTSPEC_WORKERS")
    if env and getattr(args, "workers_not_set", True):
        workers = int(env)
    config = ScanConfig(
        model=args.model,
        g_min=args.g_min,
        g_max=args.g_max,
        g_step=args.g_step,
        ladder=_ladder_from_arg(args.model, args.ladder),
        window=args.window,
        worker_count=workers,
        out=args.out,
        resume=args.resume,
        force=args.force,
        solver=args.solver,
    )
    result = run_scan(config)
    gaps = [p for p in result.points if p.status != "ok"]
    est_note = ""
    try:
        est = critical_estimate(result)
        if est.lower_bound_only:
            est_note = f"; no complex levels, onset > {est.g_onset:.4f}"
        else:
            est_note = f"; onset ~ {est.g_onset:.4f} +- {est.uncertainty:.4f}"
    except PtspecError:
        pass
    print(
        f"scan {args.model}: {len(result.points)} points, {len(gaps)} gaps, "
        f"csv -> {args.out}{est_note}"
    )
    # per-point failures are gap records by design; the sweep still succeeded
    return EXIT_OK


def cmd_fit(args) -> int:
    points = _frontier_from_csv(args.infile)
    if len(points) < 5:
        print("not enough complex-bearing grid points to fit", file=sys.stderr)
        return EXIT_NUMERIC
    fit = fit_frontier(points, form=args.form)
    report = {
        "form": fit.form,
        "params": list(fit.params),
        "sigmas": list(fit.sigmas),
        "residual_norm": fit.residual_norm,
        "n_points": fit.n_points,
        "degenerate": fit.degenerate,
        "extrapolated": fit.extrapolated,
        "start_b": fit.start_b,
        "critical_estimate": fit.b,
    }
    Path(args.report).write_text(json.dumps(report, indent=2) + "\n")
    names = ("a", "b", "c") if args.form == FORM_POWER else ("a", "b", "d")
    pretty = ", ".join(
        f"{n}={v:.4g}+-{s:.2g}" for n, v, s in zip(names, fit.params, fit.sigmas)
    )
    print(f"{args.form} fit over {fit.n_points} points: {pretty}")
    return EXIT_OK


def _frontier_from_csv(path: str) -> list[FrontierPoint]:
    best: dict[float, float] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            if row.get("is_complex", "0") != "1":
                continue
            g = float(row["g"])
            re = float(row["re"])
            if g not in best or re < best[g]:
                best[g] = re
    return [FrontierPoint(g=g, f=f) for g, f in sorted(best.items())]


def cmd_export(args) -> int:
    spec = resolve_model(args.model)
    trunc = Truncation(_parse_ints(args.cutoffs))
    mat = assemble_any(spec, trunc, args.g)
    write_matrix_market(mat, args.out)
    print(f"wrote {mat.dim}x{mat.dim} matrix ({mat.nnz} nonzeros) to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate: the analytic cross-check suite
# ---------------------------------------------------------------------------

def two_by_two_grid_check(n_r: int, n_s: int, n_t: int):
    """Batched QR eigenvalues of the 2x2 model over a parameter grid versus
    the closed form.

    Returns (max pairing difference, reality-boundary agreement flag,
    min |discriminant| over the grid).  The reality comparison is exact: the
    closed form produces zero imaginary parts precisely when
    s^2 >= r^2 sin^2(theta).
    """
    r = np.linspace(0.1, 2.0, n_r)
    s = np.linspace(0.041, 1.941, n_s)
    t = np.linspace(0.033, 3.123, n_t)
    R, S, T = (a.ravel() for a in np.meshgrid(r, s, t, indexing="ij"))
    mats = np.zeros((R.size, 2, 2), dtype=complex)
    mats[:, 0, 0] = R * np.exp(1j * T)
    mats[:, 1, 1] = R * np.exp(-1j * T)
    mats[:, 0, 1] = mats[:, 1, 0] = S
    numer = np.linalg.eigvals(mats)
    disc = S**2 - (R * np.sin(T)) ** 2
    root = np.sqrt(disc.astype(complex))
    base = R * np.cos(T)
    closed = np.stack([base + root, base - root], axis=1)
    d_same = np.maximum(np.abs(numer[:, 0] - closed[:, 0]), np.abs(numer[:, 1] - closed[:, 1]))
    d_swap = np.maximum(np.abs(numer[:, 0] - closed[:, 1]), np.abs(numer[:, 1] - closed[:, 0]))
    worst = float(np.minimum(d_same, d_swap).max())
    closed_real = np.abs(closed.imag).max(axis=1) == 0.0
    qr_real = np.abs(numer.imag).max(axis=1) < 1e-10
    boundary_ok = bool(np.all(closed_real == (disc >= 0)) and np.all(qr_real == (disc >= 0)))
    return worst, boundary_ok, float(np.abs(disc).min())


def _multiset_max_distance(a, b) -> float:
    """Largest pairing distance under an optimal one-to-one assignment;
    robust against the ordering ambiguity of near-degenerate conjugate
    pairs."""
    import scipy.optimize

    a = np.asarray(a)
    b = np.asarray(b)
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def cmd_validate(args) -> int:
    checks = []

    def record(name: str, measured, expected, tol: float, ok=None):
        if ok is None:
            ok = abs(measured - expected) < tol
        checks.append((name, measured, expected, tol, ok))

    # closed-form 2x2 model against the dense QR route, including the
    # split between all-real and conjugate-pair spectra; grid offsets keep
    # the points a safe distance from the defective boundary, where finite
    # precision cannot resolve eigenvalues to 1e-12
    worst, boundary_ok, _ = two_by_two_grid_check(n_r=20, n_s=20, n_t=21)
    record("2x2 closed form vs QR (max |diff|)", worst, 0.0, 1e-12)
    record("2x2 reality iff s^2 >= r^2 sin^2(theta)", float(boundary_ok), 1.0, 0.5)

    # finite-domain benchmarks: thresholds of the periodic and box models
    try:
        g10 = preset_exceptional_point(
            preset("E10"), (0, 1), 3.3, 3.6, Truncation((64,)), g_tol=1e-4
        )
        record("E10 critical coupling", g10, 3.4645, 0.005)
    except PtspecError as exc:
        checks.append(("E10 critical coupling", math.nan, 3.4645, 0.005, False))
        print(f"E10 check failed: {exc}", file=sys.stderr)
    try:
        g11 = preset_exceptional_point(
            preset("E11"), (0, 1), 12.0, 12.6, Truncation((64,)), g_tol=1e-3
        )
        record("E11 critical coupling", g11, 12.31, 0.05)
    except PtspecError as exc:
        checks.append(("E11 critical coupling", math.nan, 12.31, 0.05, False))
        print(f"E11 check failed: {exc}", file=sys.stderr)

    # sign of the coupling cannot matter (reflection symmetry of one mode)
    spec1 = preset("E1")
    trunc = Truncation((12, 12))
    plus = dense_eigenvalues(assemble_any(spec1, trunc, 0.2))
    minus = dense_eigenvalues(assemble_any(spec1, trunc, -0.2))
    record("E1 spectrum symmetry under g -> -g", _multiset_max_distance(plus, minus), 0.0, 1e-8)

    # complex eigenvalues occur in conjugate pairs
    vals = dense_eigenvalues(assemble_any(spec1, Truncation((14, 14)), 0.5))
    cplx = vals[np.abs(vals.imag) > 1e-9]
    worst_pair = 0.0
    for v in cplx:
        worst_pair = max(worst_pair, float(np.min(np.abs(cplx - np.conj(v)))))
    record("conjugation closure of complex levels", worst_pair, 0.0, 1e-9)

    n_fail = 0
    width = max(len(c[0]) for c in checks) + 2
    print(f"{'check':<{width}} {'measured':>16} {'expected':>12} {'tol':>9} result")
    for name, measured, expected, tol, ok in checks:
        status = "PASS" if ok else "FAIL"
        if not ok:
            n_fail += 1
        print(f"{name:<{width}} {measured:>16.9g} {expected:>12g} {tol:>9g} {status}")
    return min(n_fail, VALIDATE_EXIT_CAP)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptspec",
        description="Spectra and phase-transition scans of PT-symmetric Hamiltonians",
        epilog="exit codes: 0 ok, 2 usage error, 3 numerical failure",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("presets", help="list built-in models as JSON").set_defaults(fn=cmd_presets)

    p = sub.add_parser("solve", help="one spectrum at fixed coupling")
    p.add_argument("--model", help="preset name or spec JSON path")
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--cutoffs", help="per-mode cutoffs, e.g. 40,40")
    p.add_argument("--k", type=int, default=None, help="number of lowest levels (default: all)")
    p.add_argument("--window", type=float, default=None, help="keep Re <= window")
    p.add_argument("--sigma", type=float, default=-0.5)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_solve, _required=("model", "cutoffs"))

    p = sub.add_parser("ladder", help="converged levels across a truncation ladder")
    p.add_argument("--model")
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--ladder", help="per-rung cutoff applied to all modes, e.g. 80,90,100")
    p.add_argument("--window", type=float)
    p.add_argument("--solver", choices=("auto", "dense", "arnoldi"), default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ladder, _required=("model", "ladder", "window"))

    p = sub.add_parser("scan", help="coupling sweep with checkpoint/resume")
    p.add_argument("--model")
    p.add_argument("--g-min", type=float)
    p.add_argument("--g-max", type=float)
    p.add_argument("--g-step", type=float)
    p.add_argument("--ladder")
    p.add_argument("--window", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--resume", action="store_true")
    p.add_argument("--force", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--solver", choices=("auto", "dense", "arnoldi"), default="auto")
    p.set_defaults(fn=cmd_scan, _required=("model", "g_min", "g_max", "g_step", "ladder", "window"))

    p = sub.add_parser("fit", help="fit the complex-frontier curve from a scan CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--form", choices=(FORM_POWER, FORM_LOG), default=FORM_POWER)
    p.add_argument("--report", required=True)
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("validate", help="analytic cross-check suite")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("export", help="dump an assembled matrix in Matrix Market format")
    p.add_argument("--model")
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--cutoffs")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_export, _required=("model", "cutoffs"))
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # --config FILE provides values for flags not given explicitly
    config_path = None
    if "--config" in argv:
        i = argv.index("--config")
        try:
            config_path = argv[i + 1]
        except IndexError:
            print("--config needs a path", file=sys.stderr)
            return EXIT_USAGE
        del argv[i : i + 2]
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    if config_path:
        try:
            overrides = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"cannot read config {config_path}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        if "config" in overrides:  # accept a scan manifest directly
            overrides = overrides["config"]
        explicit = {a.lstrip("-").replace("-", "_").split("=")[0] for a in argv if a.startswith("--")}
        for key, value in overrides.items():
            attr = key.replace("-", "_")
            if hasattr(args, attr) and attr not in explicit and value is not None:
                if attr == "ladder" and isinstance(value, list):
                    value = ",".join(str(v["cutoffs"][0] if isinstance(v, dict) else v) for v in value)
                setattr(args, attr, value)
    missing = [name for name in getattr(args, "_required", ()) if getattr(args, name) is None]
    if missing:
        flags = ", ".join("--" + m.replace("_", "-") for m in missing)
        print(f"missing required flags (or config entries): {flags}", file=sys.stderr)
        return EXIT_USAGE
    args.workers_not_set = "--workers" not in {a.split("=")[0] for a in argv}
    try:
        return args.fn(args)
    except PtspecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        from .errors import DomainError, UnknownPresetError

        if isinstance(exc, (DomainError, UnknownPresetError)):
            return EXIT_USAGE
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
