"""Coupling-constant sweeps with checkpoint/resume and onset estimation.

Each grid point assembles the model over a truncation ladder, solves for the
windowed spectrum, runs the ladder convergence filter, and classifies the
surviving levels.  Points are independent tasks; results are merged in grid
order so the output CSV is identical no matter how many workers ran or in
which order they finished.  Per-point failures become gap records rather than
aborting an hour-long sweep.
"""

from __future__ import annotations

import hashlib
import json
import os
import subprocess
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .arnoldi import DEFAULT_SEED, EigsConfig, eigs
from .assemble import Truncation, assemble_any
from .errors import (
    ConfigMismatchError,
    DomainError,
    PartialResultError,
    PtspecError,
    ResourceLimitError,
)
from .hamiltonian import HamiltonianSpec, preset, spec_from_json
from .linalg import DENSE_EIG_CAP, dense_eigenvalues
from .spectra import (
    CONV_THRESHOLD,
    CSV_COLUMNS_SCAN,
    IMAG_THRESHOLD,
    MATCH_CAP,
    Classification,
    ConvergedLevel,
    Spectrum,
    classify,
    ladder_filter,
    levels_to_rows,
)

WINDOW_SLACK = 1.0  # extra real-part margin kept while matching across rungs
K_MARGIN = 2.0  # diagonal-count margin when sizing the Arnoldi request


def resolve_model(name_or_path: str) -> HamiltonianSpec:
    """A preset name, or a path to a spec JSON file."""
    if os.path.exists(name_or_path):
        return spec_from_json(Path(name_or_path).read_text())
    return preset(name_or_path)


# ---------------------------------------------------------------------------
# configuration and result records
# ---------------------------------------------------------------------------

@dataclass
class ScanConfig:
    model: str
    g_min: float
    g_max: float
    g_step: float
    ladder: tuple[Truncation, ...]
    window: float
    conv_threshold: float = CONV_THRESHOLD
    imag_threshold: float = IMAG_THRESHOLD
    match_cap: float = MATCH_CAP
    worker_count: int = 1
    out: str | None = None
    resume: bool = False
    force: bool = False
    solver: str = "auto"  # auto | dense | arnoldi
    sigma: complex = -0.5
    tol: float = 1e-10
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.g_step <= 0:
            raise DomainError("g_step must be positive")
        if self.g_max < self.g_min:
            raise DomainError("g_max must be at least g_min")
        self.ladder = tuple(
            t if isinstance(t, Truncation) else Truncation(tuple(t)) for t in self.ladder
        )
        if not self.ladder:
            raise DomainError("ladder must contain at least one truncation")
        dims = [t.dim for t in self.ladder]
        if any(b <= a for a, b in zip(dims, dims[1:])):
            raise DomainError("ladder must strictly increase in dimension")
        if self.solver not in ("auto", "dense", "arnoldi"):
            raise DomainError("solver must be auto, dense, or arnoldi")

    def grid(self) -> np.ndarray:
        n = int(np.floor((self.g_max - self.g_min) / self.g_step + 1e-9)) + 1
        return self.g_min + self.g_step * np.arange(n)

    def physics_dict(self) -> dict:
        """The fields that determine numerical results (hashing / resume)."""
        return {
            "model": self.model,
            "g_min": self.g_min,
            "g_max": self.g_max,
            "g_step": self.g_step,
            "ladder": [
                {"cutoffs": list(t.cutoffs), "sectors": list(t.sectors) if t.sectors else None}
                for t in self.ladder
            ],
            "window": self.window,
            "conv_threshold": self.conv_threshold,
            "imag_threshold": self.imag_threshold,
            "match_cap": self.match_cap,
            "solver": self.solver,
            "sigma": [self.sigma.real, self.sigma.imag]
            if isinstance(self.sigma, complex)
            else [float(self.sigma), 0.0],
            "tol": self.tol,
            "seed": self.seed,
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.physics_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class LevelRecord:
    re: float
    im: float
    rel_change: float
    residual: float
    is_complex: bool

    def to_level(self, ladder: tuple[Truncation, ...]) -> ConvergedLevel:
        return ConvergedLevel(
            value=complex(self.re, self.im),
            rel_change=self.rel_change,
            ladder=ladder,
            residual=self.residual,
        )


@dataclass
class PointRecord:
    index: int
    g: float
    status: str  # "ok" or "gap"
    levels: list[LevelRecord] = field(default_factory=list)
    error: str | None = None
    duration_s: float = 0.0
    warnings: list[str] = field(default_factory=list)

    def has_complex(self, window: float | None = None) -> bool:
        for lvl in self.levels:
            if lvl.is_complex and (window is None or lvl.re <= window):
                return True
        return False


@dataclass
class ScanResult:
    config: ScanConfig
    points: list[PointRecord]
    meta: dict = field(default_factory=dict)

    def csv_rows(self) -> list[list[str]]:
        label = "+".join(t.label() for t in self.config.ladder)
        rows = []
        for p in self.points:
            if p.status != "ok":
                continue
            levels = [l.to_level(self.config.ladder) for l in p.levels]
            rows.extend(
                levels_to_rows(
                    self.config.model,
                    p.g,
                    label,
                    levels,
                    with_classification=True,
                    imag_threshold=self.config.imag_threshold,
                )
            )
        return rows

    def to_csv_text(self) -> str:
        lines = [",".join(CSV_COLUMNS_SCAN)]
        for row in self.csv_rows():
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_text())

    def manifest_dict(self) -> dict:
        return {
            "config": self.physics_and_run_config(),
            "config_hash": self.config.config_hash(),
            "version": self.meta.get("version", __version__),
            "seed": self.config.seed,
            "points": [
                {
                    "index": p.index,
                    "g": p.g,
                    "status": p.status,
                    "n_levels": len(p.levels),
                    "duration_s": p.duration_s,
                    "error": p.error,
                }
                for p in self.points
            ],
            "created_unix": self.meta.get("created_unix"),
        }

    def physics_and_run_config(self) -> dict:
        d = self.config.physics_dict()
        d["worker_count"] = self.config.worker_count
        d["out"] = self.config.out
        return d

    def write_manifest(self, path) -> None:
        Path(path).write_text(json.dumps(self.manifest_dict(), indent=2) + "\n")


# ---------------------------------------------------------------------------
# single-point computation
# ---------------------------------------------------------------------------

def _arnoldi_request_size(mat, window: float) -> int:
    diag = mat.diagonal().real
    return int(np.count_nonzero(diag < window + K_MARGIN)) + 8


def _solve_windowed(mat, window: float, config: ScanConfig) -> list[tuple[complex, float]]:
    """All eigenvalues with real part <= window, each with a residual.

    Dense path: full spectrum via the QR oracle; the residual column then
    carries the backward-error bound dim*eps*||A||_F / |value| rather than a
    measured quantity.  Arnoldi path: shift-invert about config.sigma with the
    request sized from the diagonal; partial convergence is accepted and the
    converged subset used.
    """
    dim = mat.dim
    use_dense = config.solver == "dense" or (config.solver == "auto" and dim <= DENSE_EIG_CAP)
    if config.solver == "dense" and dim > DENSE_EIG_CAP:
        raise ResourceLimitError(
            f"dense solver forced but dim {dim} exceeds the cap {DENSE_EIG_CAP}"
        )
    if use_dense:
        vals = dense_eigenvalues(mat)
        bound = dim * np.finfo(float).eps * float(np.linalg.norm(mat.values))
        out = [
            (complex(v), bound / max(abs(v), np.finfo(float).tiny))
            for v in vals
            if v.real <= window
        ]
        return out
    k = min(_arnoldi_request_size(mat, window), dim - 2)
    if k < 1:
        raise DomainError("window excludes the whole spectrum")
    cfg = EigsConfig(
        k=k,
        which="smallest-real-part",
        m=min(dim, max(2 * k + 20, 40)),
        tol=config.tol,
        max_restarts=120,
        mode="shift-invert",
        sigma=config.sigma,
        seed=config.seed,
    )
    try:
        pairs = eigs(mat, cfg)
    except PartialResultError as err:
        pairs = list(err.converged)
    return [(p.value, p.residual) for p in pairs if p.value.real <= window]


def compute_point(config: ScanConfig, index: int, g: float) -> PointRecord:
    """Assemble, solve, ladder-filter, and classify one grid point."""
    t0 = time.perf_counter()
    spec = resolve_model(config.model)
    window_eff = config.window + max(WINDOW_SLACK, 4 * config.match_cap)
    try:
        spectra = []
        for trunc in config.ladder:
            mat = assemble_any(spec, trunc, g)
            eigenvalues = _solve_windowed(mat, window_eff, config)
            spectra.append(
                Spectrum(
                    model=config.model,
                    g=g,
                    truncation=trunc,
                    eigenvalues=eigenvalues,
                    window=window_eff,
                )
            )
        if len(spectra) == 1:
            # single-rung ladder: no convergence information, keep everything
            levels = [
                ConvergedLevel(value=v, rel_change=0.0, ladder=tuple(config.ladder), residual=r)
                for v, r in spectra[0].eigenvalues
            ]
        else:
            levels = ladder_filter(
                spectra, threshold=config.conv_threshold, match_cap=config.match_cap
            )
        levels = [l for l in levels if l.value.real <= config.window]
        cls = classify(levels, imag_threshold=config.imag_threshold)
        records = [
            LevelRecord(
                re=l.value.real,
                im=l.value.imag,
                rel_change=l.rel_change,
                residual=l.residual,
                is_complex=abs(l.value.imag) > config.imag_threshold,
            )
            for l in sorted(cls.all_levels(), key=lambda l: (l.value.real, l.value.imag))
        ]
        return PointRecord(
            index=index,
            g=g,
            status="ok",
            levels=records,
            duration_s=time.perf_counter() - t0,
            warnings=list(cls.warnings),
        )
    except PtspecError as exc:
        return PointRecord(
            index=index,
            g=g,
            status="gap",
            error=f"{type(exc).__name__}: {exc}",
            duration_s=time.perf_counter() - t0,
        )


# ---------------------------------------------------------------------------
# checkpointing
# ---------------------------------------------------------------------------

def _ckpt_dir(config: ScanConfig) -> Path | None:
    if config.out is None:
        return None
    return Path(str(config.out) + ".ckpt")


def _point_path(ckpt: Path, index: int) -> Path:
    return ckpt / f"point_{index:06d}.json"


def _write_point_atomic(ckpt: Path, record: PointRecord) -> None:
    payload = asdict(record)
    fd, tmp = tempfile.mkstemp(dir=ckpt, prefix=".tmp_point_")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh)
        os.replace(tmp, _point_path(ckpt, record.index))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_point(ckpt: Path, index: int) -> PointRecord | None:
    path = _point_path(ckpt, index)
    if not path.exists():
        return None
    d = json.loads(path.read_text())
    d["levels"] = [LevelRecord(**l) for l in d["levels"]]
    return PointRecord(**d)


def _prepare_ckpt(config: ScanConfig) -> Path | None:
    ckpt = _ckpt_dir(config)
    if ckpt is None:
        return None
    marker = ckpt / "manifest.json"
    if ckpt.exists():
        recorded = None
        if marker.exists():
            recorded = json.loads(marker.read_text()).get("config_hash")
        if config.resume:
            if recorded != config.config_hash() and not config.force:
                raise ConfigMismatchError(
                    "existing checkpoints were written with a different configuration; "
                    "pass force to overwrite"
                )
            if recorded != config.config_hash():
                for p in ckpt.glob("point_*.json"):
                    p.unlink()
        else:
            for p in ckpt.glob("point_*.json"):
                p.unlink()
    ckpt.mkdir(parents=True, exist_ok=True)
    marker.write_text(
        json.dumps({"config_hash": config.config_hash(), "config": config.physics_dict()})
    )
    return ckpt


# ---------------------------------------------------------------------------
# the sweep driver
# ---------------------------------------------------------------------------

def _version_string() -> str:
    try:
        desc = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if desc.returncode == 0:
            return f"{__version__}+{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def run_scan(config: ScanConfig) -> ScanResult:
    """Sweep the coupling grid; identical output regardless of worker count.

    With resume enabled, grid points already checkpointed under a matching
    config hash are loaded instead of recomputed, so an interrupted sweep
    finishes with the same bytes an uninterrupted one produces.
    """
    grid = config.grid()
    ckpt = _prepare_ckpt(config)
    records: dict[int, PointRecord] = {}

    todo = []
    for i, g in enumerate(grid):
        cached = _read_point(ckpt, i) if (ckpt is not None and config.resume) else None
        if cached is not None:
            records[i] = cached
        else:
            todo.append((i, float(g)))

    t_start = time.time()
    if config.worker_count <= 1 or len(todo) <= 1:
        for i, g in todo:
            rec = compute_point(config, i, g)
            records[i] = rec
            if ckpt is not None:
                _write_point_atomic(ckpt, rec)
    else:
        with ProcessPoolExecutor(max_workers=config.worker_count) as pool:
            futures = {pool.submit(compute_point, config, i, g): i for i, g in todo}
            for fut in as_completed(futures):
                rec = fut.result()
                records[rec.index] = rec
                if ckpt is not None:
                    _write_point_atomic(ckpt, rec)

    points = [records[i] for i in range(len(grid))]
    result = ScanResult(
        config=config,
        points=points,
        meta={"version": _version_string(), "created_unix": t_start},
    )
    if config.out is not None:
        result.write_csv(config.out)
        result.write_manifest(str(config.out) + ".manifest.json")
    return result


# ---------------------------------------------------------------------------
# onset estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalEstimate:
    g_onset: float
    uncertainty: float
    lower_bound_only: bool
    window: float


def critical_estimate(result: ScanResult, window: float | None = None) -> CriticalEstimate:
    """Midpoint between the largest all-real coupling and the smallest
    complex-bearing one.  Uncertainty is half that gap plus one grid step.
    The energy window matters: complex levels enter from high energy, so a
    narrower window can only push the detected onset up.
    """
    w = result.config.window if window is None else window
    ok = [p for p in result.points if p.status == "ok"]
    if not ok:
        raise DomainError("scan contains no usable grid points")
    complex_gs = [p.g for p in ok if p.has_complex(window=w)]
    real_gs = [p.g for p in ok if not p.has_complex(window=w)]
    step = result.config.g_step
    if not complex_gs:
        return CriticalEstimate(
            g_onset=max(real_gs), uncertainty=float("inf"), lower_bound_only=True, window=w
        )
    g_hi = min(complex_gs)
    below = [g for g in real_gs if g < g_hi]
    g_lo = max(below) if below else result.config.g_min
    mid = 0.5 * (g_lo + g_hi)
    unc = 0.5 * (g_hi - g_lo) + step
    return CriticalEstimate(g_onset=mid, uncertainty=unc, lower_bound_only=False, window=w)
