import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nsgcq.errors import NotAFrame, ShapeMismatch
from nsgcq.frames import (Filter, NsgSystem, canonical_dual, frame_diagonal,
                          is_painless_frame)
from nsgcq.transform import analyze

from oracles import TOY_L, frame_operator, toy_system

DFT = np.fft.fft(np.eye(TOY_L), norm="ortho")


def test_toy_is_painless():
    check = is_painless_frame(toy_system())
    assert check
    assert check.bounds[0] > 0


def test_brute_force_frame_operator_is_diagonal():
    s = toy_system()
    S_hat = DFT @ frame_operator(s) @ DFT.conj().T
    np.testing.assert_allclose(S_hat, np.diag(frame_diagonal(s).values), atol=1e-10)


def test_dual_reconstructs_identity():
    s = toy_system()
    np.testing.assert_allclose(frame_operator(s, canonical_dual(s)), np.eye(TOY_L), atol=1e-12)


def test_dual_of_dual_is_original():
    s = toy_system()
    dd = canonical_dual(canonical_dual(s))
    for g, h in zip(s.filters, dd.filters):
        np.testing.assert_allclose(h.values, g.values, rtol=1e-12)


def test_dual_frame_diagonal_is_reciprocal():
    s = toy_system()
    d = frame_diagonal(s).values
    dd = frame_diagonal(canonical_dual(s)).values
    np.testing.assert_allclose(d * dd, 1.0, rtol=1e-12)


@given(st.integers(0, 2 ** 32 - 1))
def test_coefficient_energy_equals_weighted_spectrum(seed):
    # painless systems: ||c||^2 = sum_j d[j] |f_hat[j]|^2
    s = toy_system()
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(TOY_L) + 1j * rng.standard_normal(TOY_L)
    fhat = np.fft.fft(f, norm="ortho")
    expect = np.sum(frame_diagonal(s).values * np.abs(fhat) ** 2)
    assert analyze(f, s).norm() ** 2 == pytest.approx(expect, rel=1e-12)
    lo, hi = is_painless_frame(s).bounds
    assert lo * np.sum(np.abs(f) ** 2) <= expect * (1 + 1e-12)
    assert expect <= hi * np.sum(np.abs(f) ** 2) * (1 + 1e-12)


def test_painless_violation_is_reported():
    s = toy_system()
    bad = s.with_counts([64, 32, 64, 128, 54, 64])
    check = is_painless_frame(bad)
    assert not check
    assert check.painless_violation == 1
    with pytest.raises(NotAFrame):
        canonical_dual(bad)


def test_uncovered_bin_is_reported():
    L = 16
    filters = [Filter(np.ones(4), 0, 1), Filter(np.ones(4), 8, 9)]
    check = is_painless_frame(NsgSystem(L, filters, [4, 4]))
    assert not check
    assert check.uncovered_bin == 4
    with pytest.raises(NotAFrame):
        canonical_dual(NsgSystem(L, filters, [4, 4]))


def test_wrapped_support_dense():
    g = Filter([1.0, 2.0, 3.0], 7, 0)
    np.testing.assert_array_equal(g.dense(8), [2, 3, 0, 0, 0, 0, 0, 1])


@pytest.mark.parametrize("kwargs", [
    dict(values=[], support_start=0, center_bin=0),
    dict(values=[[1.0]], support_start=0, center_bin=0),
])
def test_filter_rejects_bad_values(kwargs):
    with pytest.raises(ShapeMismatch):
        Filter(**kwargs)


def test_system_rejects_bad_counts():
    g = Filter(np.ones(3), 0, 1)
    with pytest.raises(ShapeMismatch):
        NsgSystem(8, [g], [4, 4])
    with pytest.raises(ValueError):
        NsgSystem(8, [g], [9])
    with pytest.raises(ValueError):
        NsgSystem(8, [Filter(np.ones(3), 8, 0)], [4])


def test_groups_cover_all_channels():
    s = toy_system()
    seen = np.concatenate([grp.channels for grp in s.groups])
    assert sorted(seen) == list(range(len(s)))
    assert {grp.M for grp in s.groups} == {54, 64, 128}
