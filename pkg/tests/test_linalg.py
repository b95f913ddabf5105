import math

import numpy as np
import pytest
import scipy.sparse

from ptspec.assemble import Truncation, assemble_trig
from ptspec.errors import DomainError, NumericError, ResourceLimitError
from ptspec.hamiltonian import TwoByTwoSpec, eigs_2x2, preset
from ptspec.linalg import (
    DENSE_EIG_CAP,
    DenseMatrix,
    ShiftedFactorization,
    SparseMatrix,
    dense_eigenvalues,
    lu_solve,
    matvec,
    sort_complex,
)


def random_sparse(rng, dim, density=0.05, symmetric=False):
    n_entries = max(1, int(density * dim * dim))
    rows = rng.integers(0, dim, size=n_entries)
    cols = rng.integers(0, dim, size=n_entries)
    vals = rng.standard_normal(n_entries) + 1j * rng.standard_normal(n_entries)
    if symmetric:
        rows, cols = np.concatenate([rows, cols]), np.concatenate([cols, rows])
        vals = np.concatenate([vals, vals])
    return SparseMatrix.from_coo(dim, rows, cols, vals)


# ---------------------------------------------------------------------------
# CSR container
# ---------------------------------------------------------------------------

def test_csr_invariants_hold_after_construction():
    rng = np.random.default_rng(0)
    mat = random_sparse(rng, 40)
    mat.validate()


def test_identity_matvec():
    eye = SparseMatrix.identity(17)
    rng = np.random.default_rng(1)
    v = rng.standard_normal(17) + 1j * rng.standard_normal(17)
    assert np.array_equal(eye.matvec(v), v)


def test_matvec_e10_first_column():
    mat = assemble_trig(preset("E10"), 2, 2.0)
    out = mat.matvec(np.array([1.0, 0.0]))
    assert out[0] == pytest.approx(1.0)
    assert out[1] == pytest.approx(1j)


def test_matvec_matches_dense_reference():
    rng = np.random.default_rng(2)
    for _ in range(5):
        mat = random_sparse(rng, 60)
        dense = mat.to_dense().entries
        v = rng.standard_normal(60) + 1j * rng.standard_normal(60)
        ref = dense @ v
        got = mat.matvec(v)
        assert np.max(np.abs(got - ref)) <= 1e-14 * max(1.0, np.max(np.abs(ref)))


def test_matvec_linearity():
    rng = np.random.default_rng(3)
    mat = random_sparse(rng, 50)
    u = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    v = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    a, b = 0.7 - 0.2j, -1.3 + 0.4j
    lhs = mat.matvec(a * u + b * v)
    rhs = a * mat.matvec(u) + b * mat.matvec(v)
    assert np.max(np.abs(lhs - rhs)) < 1e-13 * max(1.0, np.max(np.abs(rhs)))


def test_matvec_length_mismatch():
    with pytest.raises(DomainError):
        SparseMatrix.identity(4).matvec(np.ones(5))


def test_matvec_deterministic_repeat():
    rng = np.random.default_rng(4)
    mat = random_sparse(rng, 80)
    v = rng.standard_normal(80) + 1j * rng.standard_normal(80)
    first = mat.matvec(v)
    for _ in range(3):
        assert np.array_equal(mat.matvec(v), first)


def test_transpose_and_symmetry_check():
    rng = np.random.default_rng(5)
    sym = random_sparse(rng, 30, symmetric=True)
    assert sym.is_complex_symmetric(0.0)
    asym = random_sparse(rng, 30)
    assert not asym.is_complex_symmetric(1e-12)
    t = asym.transpose()
    assert np.array_equal(t.to_dense().entries, asym.to_dense().entries.T)


# ---------------------------------------------------------------------------
# dense eigenvalue oracle
# ---------------------------------------------------------------------------

def test_dense_eigenvalues_diagonal():
    vals = dense_eigenvalues(np.diag([1.0, 2.0, 3.0]).astype(complex))
    assert np.allclose(vals, [1, 2, 3])


def test_dense_eigenvalues_2x2_closed_form():
    r, s, theta = 1.0, 1.0, math.pi / 3
    mat = np.array([[r * np.exp(1j * theta), s], [s, r * np.exp(-1j * theta)]])
    vals = dense_eigenvalues(mat)
    closed = sort_complex(np.array(eigs_2x2(TwoByTwoSpec(r, s, theta))))
    assert np.max(np.abs(vals - closed)) < 1e-14
    # E+- = cos(theta) +- sqrt(1 - sin^2 theta) = {1, 0} here
    assert np.allclose(sorted(vals.real), [0.0, 1.0], atol=1e-14)


def test_dense_eigenvalues_trace_det_invariants():
    # independent oracle: sum = trace, product = determinant
    rng = np.random.default_rng(6)
    for _ in range(20):
        a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        vals = dense_eigenvalues(a)
        assert np.sum(vals) == pytest.approx(np.trace(a), abs=1e-10)
        assert np.prod(vals) == pytest.approx(np.linalg.det(a), abs=1e-8)


def test_dense_eigenvalues_conjugation_closure_complex_symmetric():
    # spectra of the transpose-symmetric truncations stay conjugate-closed
    from ptspec.assemble import assemble_sparse

    mat = assemble_sparse(preset("E1"), Truncation((14, 14)), 0.5)
    vals = dense_eigenvalues(mat)
    cplx = vals[np.abs(vals.imag) > 1e-9]
    for v in cplx:
        assert np.min(np.abs(cplx - np.conj(v))) < 1e-9


def test_block_diagonal_spectrum_is_union():
    rng = np.random.default_rng(7)
    a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    b = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
    block = np.zeros((15, 15), dtype=complex)
    block[:6, :6] = a
    block[6:, 6:] = b
    union = sort_complex(np.concatenate([dense_eigenvalues(a), dense_eigenvalues(b)]))
    assert np.max(np.abs(dense_eigenvalues(block) - union)) < 1e-10


def test_dense_eigenvalues_cap():
    with pytest.raises(ResourceLimitError):
        dense_eigenvalues(np.eye(8, dtype=complex), cap=4)
    assert DENSE_EIG_CAP == 4096


# ---------------------------------------------------------------------------
# shifted solves
# ---------------------------------------------------------------------------

def test_lu_solve_identity():
    b = np.arange(6, dtype=complex)
    assert np.allclose(lu_solve(np.eye(6, dtype=complex), 0.0, b), b)


def test_lu_solve_diagonal_shift():
    d = np.array([2.0, 3.0, 5.0], dtype=complex)
    sigma = 1.5 + 0.25j
    b = np.array([1.0, -2.0, 1j])
    x = lu_solve(np.diag(d), sigma, b)
    assert np.allclose(x, b / (d - sigma), atol=1e-14)


def test_lu_solve_residual_random_300():
    rng = np.random.default_rng(8)
    a = rng.standard_normal((300, 300)) + 1j * rng.standard_normal((300, 300))
    a += 30.0 * np.eye(300)  # keep it comfortably nonsingular
    b = rng.standard_normal(300) + 1j * rng.standard_normal(300)
    sigma = 0.7 - 0.1j
    x = lu_solve(a, sigma, b)
    resid = np.linalg.norm((a - sigma * np.eye(300)) @ x - b)
    assert resid <= 1e-10 * np.linalg.norm(b)


def test_dense_and_sparse_backends_agree():
    rng = np.random.default_rng(9)
    mat = random_sparse(rng, 120, density=0.08)
    dense = mat.to_dense()
    sigma = 0.3 + 0.2j
    b = rng.standard_normal(120) + 1j * rng.standard_normal(120)
    x_dense = lu_solve(dense, sigma, b, backend="dense")
    x_sparse = lu_solve(mat, sigma, b, backend="sparse")
    assert np.max(np.abs(x_dense - x_sparse)) < 1e-10 * max(1.0, np.max(np.abs(x_dense)))


def test_singular_shift_raises():
    d = np.diag([1.0, 2.0, 3.0]).astype(complex)
    with pytest.raises(NumericError, match="shift"):
        lu_solve(d, 2.0, np.ones(3, dtype=complex), backend="dense")


def test_factorization_reuse():
    rng = np.random.default_rng(10)
    mat = random_sparse(rng, 50, density=0.1)
    fac = ShiftedFactorization(mat, -0.5)
    for _ in range(3):
        b = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        x = fac.solve(b)
        resid = mat.matvec(x) - (-0.5) * x - b
        assert np.linalg.norm(resid) < 1e-9 * np.linalg.norm(b)
