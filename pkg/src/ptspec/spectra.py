"""Truncation-ladder convergence filtering and spectral classification.

Eigenvalues computed at increasing basis cutoffs are chained by greedy
nearest-neighbor matching in the complex plane; chains whose final relative
change drops below one part in 10^6 count as converged.  Converged levels are
then split into real levels and complex-conjugate pairs, and the onset of a
complex pair along a parameter axis is located by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arnoldi import lowest_eigenvalues
from .assemble import Truncation, assemble_any
from .errors import BracketError, DomainError
from .hamiltonian import HamiltonianSpec
from .linalg import sort_complex

CONV_THRESHOLD = 1e-6  # relative change across the final ladder rung
IMAG_THRESHOLD = 1e-6  # |Im| at or below this counts as real
MATCH_CAP = 0.1  # greedy matching distance cap between rungs
CONJ_PAIR_TOL = 1e-8


@dataclass
class Spectrum:
    """Windowed eigenvalue list at one truncation: values with Re <= window,
    each with its solver residual."""

    model: str
    g: float
    truncation: Truncation
    eigenvalues: list[tuple[complex, float]]
    window: float


@dataclass(frozen=True)
class ConvergedLevel:
    value: complex
    rel_change: float
    ladder: tuple[Truncation, ...]
    residual: float

    @property
    def is_complex(self) -> bool:
        return abs(self.value.imag) > IMAG_THRESHOLD


@dataclass
class Classification:
    real: list[ConvergedLevel]
    complex_pairs: list[tuple[ConvergedLevel, ConvergedLevel]]
    unpaired: list[ConvergedLevel] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def all_levels(self) -> list[ConvergedLevel]:
        out = list(self.real)
        for a, b in self.complex_pairs:
            out.extend((a, b))
        out.extend(self.unpaired)
        return out


# ---------------------------------------------------------------------------
# ladder filter
# ---------------------------------------------------------------------------

def _greedy_match(prev: list[complex], cur: list[complex], cap: float):
    """Multiplicity-aware nearest-neighbor assignment; each value matched at
    most once.  Candidate pairs are ranked by distance with a deterministic
    value-based tie-break, so the result is insensitive to input order."""
    cands = []
    for i, a in enumerate(prev):
        for j, b in enumerate(cur):
            d = abs(a - b)
            if d <= cap:
                cands.append((d, a.real, a.imag, b.real, b.imag, i, j))
    cands.sort()
    used_i, used_j = set(), set()
    matches = {}
    for d, _, _, _, _, i, j in cands:
        if i in used_i or j in used_j:
            continue
        used_i.add(i)
        used_j.add(j)
        matches[i] = j
    return matches


def ladder_filter(
    spectra: list[Spectrum],
    threshold: float = CONV_THRESHOLD,
    match_cap: float = MATCH_CAP,
) -> list[ConvergedLevel]:
    """Chain eigenvalues across increasing truncations and keep the settled ones.

    A level survives if it is matched through every rung and its final step
    satisfies |delta| / (1 + |value|) < threshold; drifting or unmatched values
    are dropped, which is what lets noisy not-yet-converged levels settle out
    one by one as the cutoff grows.
    """
    if len(spectra) < 2:
        raise DomainError("ladder filter needs at least two truncations")
    model, g = spectra[0].model, spectra[0].g
    dims = []
    for s in spectra:
        if s.model != model or s.g != g:
            raise DomainError("ladder rungs must share model and coupling")
        dims.append(s.truncation.dim)
    if any(b <= a for a, b in zip(dims, dims[1:])):
        raise DomainError("ladder truncations must strictly increase in dimension")

    # chains[c] = index of chain c's value in the current rung
    values = [[v for v, _ in s.eigenvalues] for s in spectra]
    residuals = [[r for _, r in s.eigenvalues] for s in spectra]
    chain_idx = list(range(len(values[0])))
    chain_prev_val = list(values[0])
    out = []
    for rung in range(1, len(spectra)):
        prev_vals = [chain_prev_val[c] for c in range(len(chain_idx)) if chain_idx[c] >= 0]
        alive = [c for c in range(len(chain_idx)) if chain_idx[c] >= 0]
        matches = _greedy_match(prev_vals, values[rung], match_cap)
        new_idx = [-1] * len(chain_idx)
        for pos, c in enumerate(alive):
            if pos in matches:
                new_idx[c] = matches[pos]
        last = rung == len(spectra) - 1
        for c in alive:
            j = new_idx[c]
            if j < 0:
                continue
            if last:
                val = values[rung][j]
                rel = abs(val - chain_prev_val[c]) / (1.0 + abs(val))
                if rel < threshold:
                    out.append(
                        ConvergedLevel(
                            value=val,
                            rel_change=rel,
                            ladder=tuple(s.truncation for s in spectra),
                            residual=residuals[rung][j],
                        )
                    )
            chain_prev_val[c] = values[rung][j]
        chain_idx = new_idx
    out.sort(key=lambda l: (l.value.real, l.value.imag))
    return out


# ---------------------------------------------------------------------------
# real / complex-pair classification
# ---------------------------------------------------------------------------

def classify(
    levels: list[ConvergedLevel], imag_threshold: float = IMAG_THRESHOLD
) -> Classification:
    """Partition levels into real ones and conjugate pairs.

    Values with |Im| <= imag_threshold are real.  The rest must pair up as
    (value, conjugate) within 1e-8; leftovers are reported as structure
    warnings, never as failures.
    """
    real = [l for l in levels if abs(l.value.imag) <= imag_threshold]
    rest = [l for l in levels if abs(l.value.imag) > imag_threshold]
    rest.sort(key=lambda l: (l.value.real, abs(l.value.imag), l.value.imag))
    pairs = []
    unpaired = []
    warnings = []
    used = [False] * len(rest)
    for i, li in enumerate(rest):
        if used[i]:
            continue
        best_j, best_d = -1, CONJ_PAIR_TOL
        for j in range(i + 1, len(rest)):
            if used[j]:
                continue
            d = abs(rest[j].value - np.conj(li.value))
            if d <= best_d:
                best_j, best_d = j, d
        if best_j >= 0:
            used[i] = used[best_j] = True
            a, b = li, rest[best_j]
            if a.value.imag < b.value.imag:
                a, b = b, a
            pairs.append((a, b))
        else:
            used[i] = True
            unpaired.append(li)
            warnings.append(
                f"complex level {li.value!r} has no conjugate partner within {CONJ_PAIR_TOL}"
            )
    real.sort(key=lambda l: (l.value.real, l.value.imag))
    return Classification(real=real, complex_pairs=pairs, unpaired=unpaired, warnings=warnings)


# ---------------------------------------------------------------------------
# exceptional-point bisection
# ---------------------------------------------------------------------------

def exceptional_point(
    eigenvalues_at,
    pair: tuple[int, int],
    g_lo: float,
    g_hi: float,
    imag_threshold: float = IMAG_THRESHOLD,
    g_tol: float = 1e-3,
) -> float:
    """Bisect for the coupling where a chosen level pair turns complex.

    `eigenvalues_at(g)` must return eigenvalues sorted ascending by real part;
    `pair` indexes the two levels (0-based) that merge.  The pair must be real
    at g_lo and a conjugate pair at g_hi.
    """
    i, j = pair

    def pair_is_complex(g: float) -> bool:
        vals = sort_complex(np.asarray(eigenvalues_at(g)))
        if len(vals) <= max(i, j):
            raise DomainError(f"need at least {max(i, j) + 1} eigenvalues at g={g}")
        return abs(vals[i].imag) > imag_threshold and abs(vals[j].imag) > imag_threshold

    lo_complex = pair_is_complex(g_lo)
    hi_complex = pair_is_complex(g_hi)
    if lo_complex == hi_complex:
        raise BracketError(
            f"bracket endpoints classify identically "
            f"(complex at g_lo: {lo_complex}, at g_hi: {hi_complex})"
        )
    if lo_complex:
        raise BracketError("pair must be real at g_lo and complex at g_hi")
    lo, hi = float(g_lo), float(g_hi)
    while hi - lo >= g_tol:
        mid = 0.5 * (lo + hi)
        if pair_is_complex(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def preset_exceptional_point(
    spec: HamiltonianSpec,
    pair: tuple[int, int],
    g_lo: float,
    g_hi: float,
    trunc: Truncation,
    k: int | None = None,
    sigma: complex = -0.5,
    tol: float = 1e-10,
    g_tol: float = 1e-3,
    imag_threshold: float = IMAG_THRESHOLD,
) -> float:
    """Exceptional point of a Hamiltonian preset: assembles at each probe
    coupling and solves for the lowest levels with the shift-invert engine."""
    want = max(pair) + 1 if k is None else k
    want = max(want, max(pair) + 1)

    def eigenvalues_at(g: float):
        mat = assemble_any(spec, trunc, g)
        n_solve = min(want + 5, mat.dim - 2)
        pairs = lowest_eigenvalues(mat, n_solve, sigma=sigma, tol=tol)
        return [p.value for p in pairs]

    return exceptional_point(
        eigenvalues_at, pair, g_lo, g_hi, imag_threshold=imag_threshold, g_tol=g_tol
    )


# ---------------------------------------------------------------------------
# shared CSV schema for converged levels
# ---------------------------------------------------------------------------

CSV_COLUMNS = ("model", "g", "cutoffs", "level_index", "re", "im", "rel_change", "residual")
CSV_COLUMNS_SCAN = CSV_COLUMNS + ("is_complex",)


def _fmt(x: float) -> str:
    return "%.17g" % x


def levels_to_rows(
    model: str,
    g: float,
    trunc_label: str,
    levels: list[ConvergedLevel],
    with_classification: bool = False,
    imag_threshold: float = IMAG_THRESHOLD,
) -> list[list[str]]:
    rows = []
    ordered = sorted(levels, key=lambda l: (l.value.real, l.value.imag))
    for idx, lvl in enumerate(ordered):
        row = [
            model,
            _fmt(g),
            trunc_label,
            str(idx),
            _fmt(lvl.value.real),
            _fmt(lvl.value.imag),
            _fmt(lvl.rel_change),
            _fmt(lvl.residual),
        ]
        if with_classification:
            row.append("1" if abs(lvl.value.imag) > imag_threshold else "0")
        rows.append(row)
    return rows
