"""Core numeric kernels: CSR storage, dense eigenvalue oracle, shifted solves.

The dense eigenvalue routine (Hessenberg reduction plus shifted QR) and the
partial-pivot factorizations are delegated to LAPACK through numpy/scipy; the
surfaces here pin down the contracts the rest of the package relies on
(determinism, size caps, error taxonomy).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import DomainError, NumericError, ResourceLimitError

DENSE_EIG_CAP = 4096  # keeps the dense oracle laptop-sized (~256 MB complex)


# ---------------------------------------------------------------------------
# matrix containers
# ---------------------------------------------------------------------------

@dataclass
class SparseMatrix:
    """Compressed sparse row complex matrix.

    Column indices are strictly increasing within each row and explicit zeros
    are never stored; matvec sums in ascending column order, so results are
    reproducible run to run.
    """

    dim: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray
    _csr: scipy.sparse.csr_matrix | None = field(default=None, repr=False, compare=False)

    # -- construction -------------------------------------------------------

    @classmethod
    def from_scipy(cls, mat) -> "SparseMatrix":
        csr = scipy.sparse.csr_matrix(mat, dtype=np.complex128, copy=True)
        csr.sum_duplicates()
        csr.sort_indices()
        csr.eliminate_zeros()
        out = cls(
            dim=csr.shape[0],
            row_ptr=csr.indptr.astype(np.int64),
            col_idx=csr.indices.astype(np.int64),
            values=csr.data,
        )
        out._csr = csr
        return out

    @classmethod
    def from_coo(cls, dim: int, rows, cols, vals) -> "SparseMatrix":
        coo = scipy.sparse.coo_matrix(
            (np.asarray(vals, dtype=np.complex128), (rows, cols)), shape=(dim, dim)
        )
        return cls.from_scipy(coo)

    @classmethod
    def identity(cls, dim: int) -> "SparseMatrix":
        return cls.from_scipy(scipy.sparse.identity(dim, dtype=np.complex128, format="csr"))

    # -- views ---------------------------------------------------------------

    def to_scipy(self) -> scipy.sparse.csr_matrix:
        if self._csr is None:
            self._csr = scipy.sparse.csr_matrix(
                (self.values, self.col_idx, self.row_ptr), shape=(self.dim, self.dim)
            )
        return self._csr

    def to_dense(self, cap: int = DENSE_EIG_CAP) -> "DenseMatrix":
        if self.dim > cap:
            raise ResourceLimitError(
                f"refusing to densify a {self.dim}x{self.dim} matrix (cap {cap})"
            )
        return DenseMatrix(self.dim, np.asarray(self.to_scipy().todense()))

    # -- queries -------------------------------------------------------------

    @property
    def nnz(self) -> int:
        return len(self.values)

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix.from_scipy(self.to_scipy().transpose())

    def is_complex_symmetric(self, tol: float = 0.0) -> bool:
        """Equal to its transpose (not conjugate transpose) within tol."""
        diff = self.to_scipy() - self.to_scipy().transpose()
        if diff.nnz == 0:
            return True
        return float(np.max(np.abs(diff.data))) <= tol

    def validate(self) -> None:
        if len(self.row_ptr) != self.dim + 1:
            raise DomainError("row_ptr length must be dim + 1")
        if np.any(np.diff(self.row_ptr) < 0):
            raise DomainError("row_ptr must be monotone non-decreasing")
        for r in range(self.dim):
            cols = self.col_idx[self.row_ptr[r] : self.row_ptr[r + 1]]
            if np.any(np.diff(cols) <= 0):
                raise DomainError(f"columns not strictly increasing in row {r}")
        if np.any(self.values == 0):
            raise DomainError("explicit zeros stored")

    # -- arithmetic ----------------------------------------------------------

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.shape != (self.dim,):
            raise DomainError(f"vector length {v.shape} does not match dim {self.dim}")
        return self.to_scipy() @ v.astype(np.complex128, copy=False)


@dataclass
class DenseMatrix:
    """Row-major dense complex matrix (oracle backend)."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.complex128)
        if self.entries.shape != (self.dim, self.dim):
            raise DomainError("entries must be a dim x dim array")

    @classmethod
    def from_array(cls, a) -> "DenseMatrix":
        a = np.asarray(a, dtype=np.complex128)
        return cls(a.shape[0], a)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.shape != (self.dim,):
            raise DomainError(f"vector length {v.shape} does not match dim {self.dim}")
        return self.entries @ v


def matvec(a, v: np.ndarray) -> np.ndarray:
    """Matrix-vector product for either matrix container."""
    return a.matvec(v)


# ---------------------------------------------------------------------------
# dense eigenvalue oracle
# ---------------------------------------------------------------------------

def dense_eigenvalues(a, cap: int = DENSE_EIG_CAP) -> np.ndarray:
    """All eigenvalues of a dense matrix, sorted by (real, imag).

    Backed by LAPACK's Hessenberg reduction + shifted QR (zgeev).  Serves as
    the independent oracle for the Arnoldi solver, so it must never share code
    with it.
    """
    if isinstance(a, SparseMatrix):
        a = a.to_dense(cap=cap)
    if isinstance(a, DenseMatrix):
        mat = a.entries
    else:
        mat = np.asarray(a, dtype=np.complex128)
    n = mat.shape[0]
    if mat.shape != (n, n):
        raise DomainError("matrix must be square")
    if n > cap:
        raise ResourceLimitError(f"dense eigensolve capped at dim {cap}, got {n}")
    try:
        vals = np.linalg.eigvals(mat)
    except np.linalg.LinAlgError as exc:  # QR iteration cap exhausted
        raise NumericError(f"dense QR iteration did not converge: {exc}") from exc
    return sort_complex(vals)


def sort_complex(vals: np.ndarray) -> np.ndarray:
    """Deterministic (real, imag) lexicographic ordering."""
    vals = np.asarray(vals, dtype=np.complex128)
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]


# ---------------------------------------------------------------------------
# shifted linear solves (shift-invert backend)
# ---------------------------------------------------------------------------

class ShiftedFactorization:
    """LU factorization of (A - shift*I), reusable across many solves.

    The dense partial-pivot path is the reference backend up to the dense
    cap; sparse inputs use SuperLU, which must agree with it to 1e-10.
    """

    def __init__(self, a, shift: complex, backend: str = "auto", cap: int = DENSE_EIG_CAP):
        self.shift = complex(shift)
        if backend == "auto":
            backend = "sparse" if isinstance(a, SparseMatrix) else "dense"
        self.backend = backend
        if backend == "dense":
            if isinstance(a, SparseMatrix):
                a = a.to_dense(cap=cap)
            mat = a.entries if isinstance(a, DenseMatrix) else np.asarray(a, dtype=np.complex128)
            self.dim = mat.shape[0]
            if self.dim > cap:
                raise ResourceLimitError(f"dense factorization capped at dim {cap}")
            shifted = mat - self.shift * np.eye(self.dim, dtype=np.complex128)
            try:
                with warnings.catch_warnings():
                    # near-singularity is detected below via the pivot check
                    warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                    self._lu, self._piv = scipy.linalg.lu_factor(shifted)
            except scipy.linalg.LinAlgError as exc:
                raise NumericError(
                    f"factorization of (A - {shift}*I) failed; try a different shift"
                ) from exc
            udiag = np.abs(np.diag(self._lu))
            if udiag.min() <= 1e-14 * max(udiag.max(), 1.0):
                raise NumericError(
                    f"(A - {shift}*I) is singular to working precision; try a different shift",
                    index=int(np.argmin(udiag)),
                )
        elif backend == "sparse":
            csr = a.to_scipy() if isinstance(a, SparseMatrix) else scipy.sparse.csr_matrix(
                np.asarray(a, dtype=np.complex128)
            )
            self.dim = csr.shape[0]
            shifted = (csr - self.shift * scipy.sparse.identity(self.dim, dtype=np.complex128)).tocsc()
            try:
                self._splu = scipy.sparse.linalg.splu(shifted)
            except RuntimeError as exc:
                raise NumericError(
                    f"sparse factorization of (A - {shift}*I) failed; try a different shift"
                ) from exc
        else:
            raise DomainError(f"unknown backend {backend!r}")

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=np.complex128)
        if b.shape != (self.dim,):
            raise DomainError("right-hand side length mismatch")
        if self.backend == "dense":
            return scipy.linalg.lu_solve((self._lu, self._piv), b)
        return self._splu.solve(b)


def lu_solve(a, shift: complex, b: np.ndarray, backend: str = "auto") -> np.ndarray:
    """Solve (A - shift*I) x = b with a freshly computed factorization."""
    return ShiftedFactorization(a, shift, backend=backend).solve(b)
