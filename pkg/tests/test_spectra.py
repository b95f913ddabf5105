import math

import numpy as np
import pytest

from ptspec.assemble import Truncation, assemble_any
from ptspec.errors import BracketError, DomainError
from ptspec.hamiltonian import TwoByTwoSpec, eigs_2x2, preset
from ptspec.linalg import dense_eigenvalues
from ptspec.spectra import (
    Classification,
    ConvergedLevel,
    Spectrum,
    classify,
    exceptional_point,
    ladder_filter,
    levels_to_rows,
    preset_exceptional_point,
)


def spectrum(vals, model="toy", g=0.1, dim=10, window=100.0):
    return Spectrum(
        model=model,
        g=g,
        truncation=Truncation((dim,)),
        eigenvalues=[(complex(v), 1e-12) for v in vals],
        window=window,
    )


# ---------------------------------------------------------------------------
# ladder filter
# ---------------------------------------------------------------------------

def test_identical_rungs_all_converge():
    vals = [1.0, 2.0, 3.5 + 0.1j, 3.5 - 0.1j]
    out = ladder_filter([spectrum(vals, dim=10), spectrum(vals, dim=20)])
    assert len(out) == 4
    assert all(l.rel_change == 0.0 for l in out)


def test_drifting_value_excluded():
    a = [1.0, 2.0, 3.0]
    b = [1.0, 2.0, 3.001]  # moves by 1e-3 per rung: unconverged
    out = ladder_filter([spectrum(a, dim=10), spectrum(b, dim=20)])
    assert [round(l.value.real, 6) for l in out] == [1.0, 2.0]


def test_unmatched_values_dropped():
    a = [1.0, 2.0]
    b = [1.0, 2.0, 7.5]  # new level appears only on the top rung
    out = ladder_filter([spectrum(a, dim=10), spectrum(b, dim=20)])
    assert len(out) == 2


def test_chain_must_span_all_rungs():
    a = [1.0]
    b = [1.0, 5.0]
    c = [1.0, 5.0]
    out = ladder_filter([spectrum(a, dim=10), spectrum(b, dim=20), spectrum(c, dim=30)])
    assert len(out) == 1  # 5.0 missing from the first rung


def test_matching_cap_breaks_far_jumps():
    a = [1.0]
    b = [1.3]  # distance above the 0.1 cap
    out = ladder_filter([spectrum(a, dim=10), spectrum(b, dim=20)])
    assert out == []


def test_order_insensitive():
    rng = np.random.default_rng(20)
    base = [0.5, 1.5, 2.5, 2.5 + 1e-8, 4.0 + 0.3j, 4.0 - 0.3j]
    drift = [v + 1e-9 for v in base]
    ref = ladder_filter([spectrum(base, dim=10), spectrum(drift, dim=20)])
    ref_set = sorted((round(l.value.real, 9), round(l.value.imag, 9)) for l in ref)
    for _ in range(5):
        pa = list(base)
        pb = list(drift)
        rng.shuffle(pa)
        rng.shuffle(pb)
        out = ladder_filter([spectrum(pa, dim=10), spectrum(pb, dim=20)])
        got = sorted((round(l.value.real, 9), round(l.value.imag, 9)) for l in out)
        assert got == ref_set


def test_threshold_monotone():
    a = [1.0, 2.0, 3.0]
    b = [1.0 + 5e-7, 2.0 + 5e-8, 3.0 + 5e-9]
    rungs = [spectrum(a, dim=10), spectrum(b, dim=20)]
    loose = {round(l.value.real, 6) for l in ladder_filter(rungs, threshold=1e-6)}
    for thr in (1e-7, 1e-8, 1e-9):
        tight = {round(l.value.real, 6) for l in ladder_filter(rungs, threshold=thr)}
        assert tight <= loose
        loose = tight


def test_ladder_validates_inputs():
    with pytest.raises(DomainError):
        ladder_filter([spectrum([1.0], dim=10)])
    with pytest.raises(DomainError):
        ladder_filter([spectrum([1.0], dim=10, g=0.1), spectrum([1.0], dim=20, g=0.2)])
    with pytest.raises(DomainError):
        ladder_filter([spectrum([1.0], dim=20), spectrum([1.0], dim=10)])


def test_e12_ladder_converges_lowest_seven():
    spec = preset("E12")
    rungs = []
    for n in (80, 90, 100):
        mat = assemble_any(spec, Truncation((n,)), 1.0)
        vals = dense_eigenvalues(mat)
        keep = [(complex(v), 1e-12) for v in vals if v.real <= 30.0]
        rungs.append(
            Spectrum(model="E12", g=1.0, truncation=Truncation((n,)), eigenvalues=keep, window=30.0)
        )
    out = ladder_filter(rungs)
    assert len(out) >= 7
    assert all(l.rel_change < 1e-6 for l in out[:7])
    assert all(abs(l.value.imag) < 1e-6 for l in out[:7])


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def level(v):
    return ConvergedLevel(value=complex(v), rel_change=0.0, ladder=(), residual=0.0)


def test_classify_small_imag_is_real():
    cls = classify([level(1.0), level(2.0 + 5e-9j)])
    assert len(cls.real) == 2
    assert not cls.complex_pairs


def test_classify_conjugate_pair():
    cls = classify([level(3.0 + 0.2j), level(3.0 - 0.2j)])
    assert not cls.real
    assert len(cls.complex_pairs) == 1
    a, b = cls.complex_pairs[0]
    assert a.value.imag > 0 > b.value.imag


def test_classify_unpaired_warns():
    cls = classify([level(3.0 + 0.2j)])
    assert cls.warnings
    assert len(cls.unpaired) == 1


def test_classify_merge_reproduces_multiset():
    levels = [level(1.0), level(2.0 + 0.5j), level(2.0 - 0.5j), level(9.0 + 1j)]
    cls = classify(levels)
    merged = sorted((l.value.real, l.value.imag) for l in cls.all_levels())
    original = sorted((l.value.real, l.value.imag) for l in levels)
    assert merged == original


# ---------------------------------------------------------------------------
# exceptional-point bisection
# ---------------------------------------------------------------------------

def test_exceptional_point_2x2_boundary():
    # sweep s at r=1, theta=pi/2: the boundary sits exactly at s=1
    def eigenvalues_at(s):
        return list(eigs_2x2(TwoByTwoSpec(r=1.0, s=1.0 + (1.0 - s), theta=math.pi / 2)))

    # map so that larger parameter = broken phase: use s' = 2 - s
    def eigs_broken_up(t):
        return list(eigs_2x2(TwoByTwoSpec(r=1.0, s=2.0 - t, theta=math.pi / 2)))

    found = exceptional_point(eigs_broken_up, (0, 1), 0.9, 1.1)
    assert abs(found - 1.0) <= 1e-3


def test_exceptional_point_bracket_validation():
    def always_real(t):
        return [1.0 + 0j, 2.0 + 0j]

    with pytest.raises(BracketError):
        exceptional_point(always_real, (0, 1), 0.0, 1.0)


def test_e10_threshold():
    found = preset_exceptional_point(preset("E10"), (0, 1), 3.4, 3.5, Truncation((64,)))
    assert abs(found - 3.4645) <= 1e-3 + 5e-3


def test_e11_threshold():
    found = preset_exceptional_point(preset("E11"), (0, 1), 12.0, 12.6, Truncation((64,)))
    assert abs(found - 12.31) <= 0.05


# ---------------------------------------------------------------------------
# CSV rows
# ---------------------------------------------------------------------------

def test_levels_to_rows_full_precision():
    lvl = ConvergedLevel(
        value=complex(1 / 3, -2 / 3), rel_change=1.23e-9, ladder=(), residual=4.5e-13
    )
    (row,) = levels_to_rows("E1", 0.1, "50x50", [lvl], with_classification=True)
    assert row[0] == "E1"
    assert float(row[4]) == 1 / 3  # round-trips exactly at 17 significant digits
    assert float(row[5]) == -2 / 3
    assert row[8] == "1"
