"""Truncated matrix assembly.

Single-mode operators come from ladder algebra in the oscillator basis
(x = (a + a^dag)/sqrt(2 w), p = i sqrt(w/2) (a^dag - a)) as banded matrices;
the full Hamiltonian is a sum of tensor products of those bands, realized by
index arithmetic so dense intermediates never exist.  The two finite-domain
models use trigonometric bases with closed-form matrix elements.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.io

from .errors import DomainError, ResourceLimitError
from .hamiltonian import (
    FOURIER_SINE,
    OSCILLATOR,
    SINE_BOX,
    HamiltonianSpec,
    validate_pt,
)
from .linalg import SparseMatrix

MAX_POSITION_POWER = 8
DEFAULT_DIM_CAP = 2_000_000

SECTOR_FULL = "full"
SECTOR_EVEN = "even"
SECTOR_ODD = "odd"
_SECTORS = (SECTOR_FULL, SECTOR_EVEN, SECTOR_ODD)


# ---------------------------------------------------------------------------
# truncation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Truncation:
    """Per-mode basis cutoffs (states 0..N_i-1) with optional parity sectors."""

    cutoffs: tuple[int, ...]
    sectors: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "cutoffs", tuple(int(n) for n in self.cutoffs))
        if any(n < 1 for n in self.cutoffs):
            raise DomainError("cutoffs must be positive")
        if self.sectors is not None:
            object.__setattr__(self, "sectors", tuple(self.sectors))
            if len(self.sectors) != len(self.cutoffs):
                raise DomainError("one sector entry per mode required")
            if any(s not in _SECTORS for s in self.sectors):
                raise DomainError(f"sectors must be one of {_SECTORS}")

    def sector(self, i: int) -> str:
        return SECTOR_FULL if self.sectors is None else self.sectors[i]

    def mode_size(self, i: int) -> int:
        n = self.cutoffs[i]
        if self.sector(i) == SECTOR_FULL:
            return n
        if self.sector(i) == SECTOR_EVEN:
            return (n + 1) // 2
        return n // 2

    @property
    def dim(self) -> int:
        return math.prod(self.mode_size(i) for i in range(len(self.cutoffs)))

    def label(self) -> str:
        base = "x".join(str(n) for n in self.cutoffs)
        if self.sectors is not None and any(s != SECTOR_FULL for s in self.sectors):
            base += "[" + ",".join(s[0] for s in self.sectors) + "]"
        return base


# ---------------------------------------------------------------------------
# banded single-mode operators
# ---------------------------------------------------------------------------

@dataclass
class BandedOperator:
    """Square matrix stored as bands: bands[d][t] = M[t + max(0,-d), t + max(0,d)]."""

    dim: int
    bands: dict[int, np.ndarray]

    def __post_init__(self):
        for d, band in self.bands.items():
            if len(band) != self.dim - abs(d):
                raise DomainError(f"band {d} has wrong length")

    @classmethod
    def identity(cls, dim: int) -> "BandedOperator":
        return cls(dim, {0: np.ones(dim)})

    @classmethod
    def from_diagonal(cls, values: np.ndarray) -> "BandedOperator":
        return cls(len(values), {0: np.asarray(values)})

    def offsets(self) -> list[int]:
        return sorted(self.bands)

    def _row_aligned(self, d: int) -> np.ndarray:
        """Band at offset d as a length-dim array indexed by row."""
        out = np.zeros(self.dim, dtype=self.bands[d].dtype)
        lo = max(0, -d)
        out[lo : lo + len(self.bands[d])] = self.bands[d]
        return out

    def to_dense(self) -> np.ndarray:
        dtype = complex if any(np.iscomplexobj(b) for b in self.bands.values()) else float
        out = np.zeros((self.dim, self.dim), dtype=dtype)
        for d, band in self.bands.items():
            r = np.arange(len(band)) + max(0, -d)
            out[r, r + d] = band
        return out

    def is_symmetric(self) -> bool:
        for d, band in self.bands.items():
            other = self.bands.get(-d)
            if other is None or not np.array_equal(band, other):
                return False
        return True

    def crop(self, n: int) -> "BandedOperator":
        """Leading n x n block; entries are unchanged bit for bit."""
        if n > self.dim:
            raise DomainError("cannot crop to a larger dimension")
        bands = {}
        for d, band in self.bands.items():
            if abs(d) >= n:
                continue
            cut = band[: n - abs(d)]
            if np.any(cut != 0):
                bands[d] = cut.copy()
        return BandedOperator(n, bands)

    def matmul(self, other: "BandedOperator") -> "BandedOperator":
        """Banded product with a fixed accumulation order (ascending offsets),
        so leading blocks are reproducible independent of dim."""
        if other.dim != self.dim:
            raise DomainError("dimension mismatch")
        n = self.dim
        acc: dict[int, np.ndarray] = {}
        for da in sorted(self.bands):
            a = self._row_aligned(da)
            for db in sorted(other.bands):
                dc = da + db
                if abs(dc) >= n:
                    continue
                b = other._row_aligned(db)
                # C[r, r+dc] += A[r, r+da] * B[r+da, r+dc]; rows where all valid
                r0 = max(0, -da, max(0, -db) - da, -dc)
                r1 = min(n - max(0, da), n - max(0, db) - da, n - max(0, dc))
                if r1 <= r0:
                    continue
                if dc not in acc:
                    acc[dc] = np.zeros(n, dtype=complex)
                acc[dc][r0:r1] += a[r0:r1] * b[r0 + da : r1 + da]
        bands = {}
        for d, full in acc.items():
            lo = max(0, -d)
            band = full[lo : lo + n - abs(d)]
            if np.any(band != 0):
                bands[d] = band
        return BandedOperator(n, bands)

    def scaled(self, c: complex) -> "BandedOperator":
        return BandedOperator(self.dim, {d: c * b for d, b in self.bands.items()})

    def restrict(self, sector: str) -> "BandedOperator":
        """Sub-block on even or odd basis indices.

        Only legal when every nonzero band sits at an even offset, i.e. the
        operator conserves the mode parity.
        """
        if sector == SECTOR_FULL:
            return self
        parity = 0 if sector == SECTOR_EVEN else 1
        if any(d % 2 for d in self.bands):
            raise DomainError("operator couples parity sectors; restriction invalid")
        idx = np.arange(parity, self.dim, 2)
        sub = self.to_dense()[np.ix_(idx, idx)]
        m = len(idx)
        bands = {}
        for d in range(-(m - 1), m):
            r = np.arange(max(0, -d), max(0, -d) + m - abs(d))
            band = sub[r, r + d]
            if np.any(band != 0):
                bands[d] = band
        return BandedOperator(m, bands)


def mode_frequency(quad_coeff: float, kinetic_coeff: float) -> float:
    """Basis frequency that diagonalizes kinetic*p^2 + quad*x^2.

    With w = sqrt(quad/kinetic) the quadratic part is exactly diagonal with
    level spacing sqrt(4*kinetic*quad), i.e. entries sqrt(4*k*q)*(n + 1/2).
    For the common k = 1/2 convention this reduces to w = sqrt(2*quad).
    """
    if quad_coeff <= 0 or kinetic_coeff <= 0:
        raise DomainError("mode frequency needs positive coefficients")
    return math.sqrt(quad_coeff / kinetic_coeff)


def position_power(n: int, omega: float, k: int) -> BandedOperator:
    """x^k in the oscillator basis, exact on the returned n x n block.

    Built by k-fold banded multiplication at size n + k and then cropped, so
    no truncation bias enters the returned entries.
    """
    if n < 1 or omega <= 0:
        raise DomainError("need n >= 1 and omega > 0")
    if k < 0 or k > MAX_POSITION_POWER:
        raise DomainError(f"position power {k} unsupported (cap {MAX_POSITION_POWER})")
    if k == 0:
        return BandedOperator.identity(n)
    big = n + k
    lad = np.sqrt(np.arange(1, big) / (2.0 * omega))
    x = BandedOperator(big, {1: lad.astype(complex), -1: lad.astype(complex)})
    out = x
    for _ in range(k - 1):
        out = out.matmul(x)
    out = out.crop(n)
    # x^k is symmetric; mirror the upper bands so equality holds bit for bit
    bands = {d: band for d, band in out.bands.items() if d >= 0}
    for d in list(bands):
        if d > 0:
            bands[-d] = bands[d].copy()
    return BandedOperator(n, bands)


def momentum_squared(n: int, omega: float) -> BandedOperator:
    """p^2 in the oscillator basis: diagonal w(n + 1/2), bands at +-2."""
    if n < 1 or omega <= 0:
        raise DomainError("need n >= 1 and omega > 0")
    diag = omega * (np.arange(n) + 0.5)
    bands = {0: diag.astype(complex)}
    if n >= 3:
        m = np.arange(n - 2)
        off = -(omega / 2.0) * np.sqrt((m + 1.0) * (m + 2.0))
        bands[2] = off.astype(complex)
        bands[-2] = off.astype(complex)
    return BandedOperator(n, bands)


def single_mode_matrix(kind: str, n: int, omega: float) -> BandedOperator:
    """Dispatcher: kind is 'p^2' or 'x^k' for integer k (e.g. 'x', 'x^3')."""
    if kind in ("p^2", "p2"):
        return momentum_squared(n, omega)
    if kind == "x":
        return position_power(n, omega, 1)
    if kind.startswith("x^"):
        return position_power(n, omega, int(kind[2:]))
    raise DomainError(f"unknown single-mode operator kind {kind!r}")


def quadratic_diagonal(n: int, kinetic: float, quad: float) -> BandedOperator:
    """kinetic*p^2 + quad*x^2 at the matched frequency: exactly diagonal."""
    spacing = math.sqrt(4.0 * kinetic * quad)
    return BandedOperator.from_diagonal((spacing * (np.arange(n) + 0.5)).astype(complex))


# ---------------------------------------------------------------------------
# tensor-product assembly
# ---------------------------------------------------------------------------

def _check_sectors(spec: HamiltonianSpec, trunc: Truncation) -> None:
    if trunc.sectors is None:
        return
    for i, sec in enumerate(trunc.sectors):
        if sec == SECTOR_FULL:
            continue
        for term in spec.terms:
            if term.momentum_mode is None and term.position_exponents[i] % 2:
                raise DomainError(
                    f"mode {i} parity is not conserved; sector restriction invalid"
                )
        if any(nat.mode == i for nat in spec.native_terms):
            raise DomainError(f"mode {i} carries a native term; sector restriction invalid")


def _product_term_coo(factors: list[BandedOperator], sizes: list[int], coeff: complex):
    """COO triplets of coeff * tensor-product of banded factors.

    Tensor index order is row-major over modes in declaration order: state
    (n_0, .., n_{D-1}) maps to sum n_i * prod_{j>i} size_j.
    """
    strides = np.ones(len(sizes), dtype=np.int64)
    for i in range(len(sizes) - 2, -1, -1):
        strides[i] = strides[i + 1] * sizes[i + 1]
    all_rows, all_cols, all_vals = [], [], []
    for combo in itertools.product(*(f.offsets() for f in factors)):
        rows = np.zeros(1, dtype=np.int64)
        cols = np.zeros(1, dtype=np.int64)
        vals = np.ones(1, dtype=np.complex128)
        for i, (f, d) in enumerate(zip(factors, combo)):
            band = f.bands[d]
            pos = np.arange(len(band), dtype=np.int64) + max(0, -d)
            rows = (rows[:, None] + (pos * strides[i])[None, :]).ravel()
            cols = (cols[:, None] + ((pos + d) * strides[i])[None, :]).ravel()
            vals = (vals[:, None] * band[None, :]).ravel()
        all_rows.append(rows)
        all_cols.append(cols)
        all_vals.append(coeff * vals)
    return all_rows, all_cols, all_vals


def assemble_sparse(
    spec: HamiltonianSpec,
    trunc: Truncation,
    g: float,
    dim_cap: int = DEFAULT_DIM_CAP,
) -> SparseMatrix:
    """CSR truncation of an oscillator-basis Hamiltonian at coupling g.

    The flagged coupling term is scaled by g; each mode's quadratic part is
    assembled as its exact matched-frequency diagonal, so the g = 0 matrix of
    the coupled-oscillator presets is diagonal.
    """
    if spec.uses_trig_basis():
        raise DomainError("spec uses a trigonometric basis; use assemble_trig")
    if not validate_pt(spec):
        raise DomainError("spec fails the parity-time symmetry check")
    n_modes = spec.n_modes
    if len(trunc.cutoffs) != n_modes:
        raise DomainError("one cutoff per mode required")
    _check_sectors(spec, trunc)
    dim = trunc.dim
    if dim > dim_cap:
        raise ResourceLimitError(f"truncation dimension {dim} exceeds cap {dim_cap}")

    omegas = [mode_frequency(m.quad_coeff, m.kinetic_coeff) for m in spec.modes]
    sizes = [trunc.mode_size(i) for i in range(n_modes)]

    def restricted(op: BandedOperator, i: int) -> BandedOperator:
        return op.restrict(trunc.sector(i))

    identities = [
        restricted(BandedOperator.identity(trunc.cutoffs[i]), i) for i in range(n_modes)
    ]

    product_terms: list[tuple[complex, list[BandedOperator]]] = []
    for i, mode in enumerate(spec.modes):
        factors = list(identities)
        factors[i] = restricted(
            quadratic_diagonal(trunc.cutoffs[i], mode.kinetic_coeff, mode.quad_coeff), i
        )
        product_terms.append((1.0 + 0.0j, factors))
    for term in spec.terms:
        coeff = term.coefficient * (g if term.scales_with_g else 1.0)
        if coeff == 0:
            continue
        factors = list(identities)
        if term.momentum_mode is not None:
            j = term.momentum_mode
            factors[j] = restricted(momentum_squared(trunc.cutoffs[j], omegas[j]), j)
        else:
            for i, k in enumerate(term.position_exponents):
                if k:
                    factors[i] = restricted(position_power(trunc.cutoffs[i], omegas[i], k), i)
        product_terms.append((coeff, factors))

    rows, cols, vals = [], [], []
    for coeff, factors in product_terms:
        r, c, v = _product_term_coo(factors, sizes, coeff)
        rows.extend(r)
        cols.extend(c)
        vals.extend(v)
    return SparseMatrix.from_coo(
        dim, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    )


# ---------------------------------------------------------------------------
# trigonometric bases (finite-domain models)
# ---------------------------------------------------------------------------

def box_dipole_element(j: int, k: int, half_width: float = 1.0) -> float:
    """<j| x |k> for the orthonormal box modes sin(k pi (x+L)/(2L)) / sqrt(L).

    Closed form: zero unless j - k is odd, in which case
    (4 L / pi^2) * (1/(j+k)^2 - 1/(j-k)^2) with 1-based j, k.
    """
    if j < 1 or k < 1:
        raise DomainError("box mode labels are 1-based")
    if (j - k) % 2 == 0:
        return 0.0
    return (4.0 * half_width / math.pi**2) * (1.0 / (j + k) ** 2 - 1.0 / (j - k) ** 2)


def assemble_trig(spec: HamiltonianSpec, n: int, g: float) -> SparseMatrix:
    """Truncation of a single-mode trigonometric-basis Hamiltonian.

    Periodic-odd basis sin(m theta), m = 1..n: kinetic part diagonal t*m^2 and
    the cos coupling contributes c/2 at offsets +-1 (the m = 0 partner of the
    product-to-sum identity vanishes).  Box basis sin(k pi (x+L)/(2L)): kinetic
    part diagonal t*(k pi / 2L)^2 and x couples only modes with j - k odd via
    the closed-form dipole integrals.
    """
    if spec.n_modes != 1 or not spec.uses_trig_basis():
        raise DomainError("trig assembly requires a single trigonometric mode")
    if not validate_pt(spec):
        raise DomainError("spec fails the parity-time symmetry check")
    if n < 2:
        raise DomainError("need at least two basis states")
    mode = spec.modes[0]
    if mode.quad_coeff != 0.0:
        raise DomainError("trigonometric bases do not support an x^2 term")

    if mode.basis == FOURIER_SINE:
        if spec.terms:
            raise DomainError("periodic basis supports only the native cos coupling")
        m = np.arange(1, n + 1, dtype=float)
        diag = mode.kinetic_coeff * m**2
        rows = [np.arange(n)]
        cols = [np.arange(n)]
        vals = [diag.astype(complex)]
        for nat in spec.native_terms:
            coeff = nat.coefficient * (g if nat.scales_with_g else 1.0)
            if coeff == 0:
                continue
            r = np.arange(n - 1)
            half = np.full(n - 1, coeff / 2.0)
            rows.extend([r, r + 1])
            cols.extend([r + 1, r])
            vals.extend([half, half])
        return SparseMatrix.from_coo(
            n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
        )

    if mode.basis == SINE_BOX:
        if spec.native_terms:
            raise DomainError("box basis does not support native terms")
        L = mode.half_width
        k = np.arange(1, n + 1, dtype=float)
        diag = mode.kinetic_coeff * (k * math.pi / (2.0 * L)) ** 2
        rows = [np.arange(n)]
        cols = [np.arange(n)]
        vals = [diag.astype(complex)]
        for term in spec.terms:
            if term.momentum_mode is not None or term.position_exponents != (1,):
                raise DomainError("box basis supports only the linear x coupling")
            coeff = term.coefficient * (g if term.scales_with_g else 1.0)
            if coeff == 0:
                continue
            jj, kk = np.meshgrid(np.arange(1, n + 1), np.arange(1, n + 1), indexing="ij")
            odd = (jj - kk) % 2 == 1
            x_elems = np.zeros((n, n))
            x_elems[odd] = (4.0 * L / math.pi**2) * (
                1.0 / (jj[odd] + kk[odd]) ** 2 - 1.0 / (jj[odd] - kk[odd]) ** 2
            )
            r, c = np.nonzero(x_elems)
            rows.append(r)
            cols.append(c)
            vals.append(coeff * x_elems[r, c])
        return SparseMatrix.from_coo(
            n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
        )

    raise DomainError(f"unsupported basis {mode.basis!r}")


def assemble_any(spec: HamiltonianSpec, trunc: Truncation, g: float) -> SparseMatrix:
    """Route to the oscillator or trigonometric assembler based on the spec."""
    if spec.uses_trig_basis():
        if len(trunc.cutoffs) != 1 or trunc.sectors is not None:
            raise DomainError("trigonometric models take a single plain cutoff")
        return assemble_trig(spec, trunc.cutoffs[0], g)
    return assemble_sparse(spec, trunc, g)


# ---------------------------------------------------------------------------
# Matrix Market interchange
# ---------------------------------------------------------------------------

def write_matrix_market(mat: SparseMatrix, path) -> None:
    """Coordinate-format dump (complex general) for external cross-checks."""
    scipy.io.mmwrite(str(path), mat.to_scipy(), symmetry="general")


def read_matrix_market(path) -> SparseMatrix:
    return SparseMatrix.from_scipy(scipy.io.mmread(str(path)))
