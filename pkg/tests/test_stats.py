"""Raw-moment column regressions and their degrees-of-freedom bookkeeping."""

import numpy as np
import pytest

from bandchol.errors import DegenerateResidual, SingularDesign
from bandchol.mcd import CholeskyFactor, compose
from bandchol.stats import (
    as_data_matrix,
    banded_regression,
    gram_matrix,
    predecessor_range,
    sample_moments,
)


def test_as_data_matrix_validation():
    with pytest.raises(ValueError):
        as_data_matrix(np.ones(3))
    with pytest.raises(ValueError):
        as_data_matrix(np.empty((0, 2)))
    with pytest.raises(ValueError):
        as_data_matrix([[1.0, np.nan]])


def test_gram_matrix_symbolic():
    x = np.array([[1.0, 2.0], [-1.0, 0.0]])
    np.testing.assert_allclose(gram_matrix(x), [[1.0, 1.0], [1.0, 2.0]])


def test_predecessor_range():
    assert predecessor_range(1, 3) == (0, 0)
    assert predecessor_range(2, 1) == (0, 1)
    assert predecessor_range(5, 2) == (2, 4)
    assert predecessor_range(5, 10) == (0, 4)


def test_sample_moments_symbolic():
    x = np.array([[1.0, 2.0], [-1.0, 0.0]])
    shat, chat, varhat = sample_moments(x, 2, 1)
    np.testing.assert_allclose(shat, [[1.0]])
    np.testing.assert_allclose(chat, [1.0])
    assert varhat == pytest.approx(2.0)
    shat1, chat1, varhat1 = sample_moments(x, 1, 1)
    assert shat1.shape == (0, 0) and chat1.shape == (0,)
    assert varhat1 == pytest.approx(1.0)
    with pytest.raises(ValueError):
        sample_moments(x, 3, 1)
    with pytest.raises(ValueError):
        sample_moments(x, 1, -1)


def test_banded_regression_symbolic():
    x = np.array([[1.0, 2.0], [-1.0, 0.0]])
    stats = banded_regression(x, 1, enforce_dof=False)
    # regression of column 2 on column 1 under raw moments: slope 1, d = 1
    np.testing.assert_allclose(stats.ahat[1], [1.0])
    np.testing.assert_allclose(stats.dhat, [1.0, 1.0])
    np.testing.assert_allclose(stats.varhat, [1.0, 2.0])
    np.testing.assert_array_equal(stats.kj, [0, 1])
    a = stats.coefficient_matrix()
    np.testing.assert_allclose(a, [[0.0, 0.0], [1.0, 0.0]])


def test_banded_regression_dof_precondition():
    x = np.array([[1.0, 2.0], [-1.0, 0.0]])
    with pytest.raises(ValueError):
        banded_regression(x, 1)  # n + nu0 - k - 4 = -1
    stats = banded_regression(np.random.default_rng(0).standard_normal((8, 4)), 2)
    np.testing.assert_array_equal(stats.nj, [6.0, 5.0, 4.0, 4.0])
    np.testing.assert_array_equal(stats.kj, [0, 1, 2, 2])


def test_banded_regression_head_tail_consistency():
    # every column must match its own direct least-squares fit
    rng = np.random.default_rng(1)
    x = rng.standard_normal((40, 9))
    k = 3
    stats = banded_regression(x, k)
    n = 40
    for j in range(1, 10):
        lo, hi = predecessor_range(j, k)
        z = x[:, lo:hi]
        coef = np.linalg.lstsq(z, x[:, j - 1], rcond=None)[0]
        resid = x[:, j - 1] - z @ coef
        np.testing.assert_allclose(stats.ahat[j - 1], coef, atol=1e-10)
        assert stats.dhat[j - 1] == pytest.approx(resid @ resid / n, abs=1e-12)


def test_full_band_recovers_gram_inverse():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((60, 8))
    stats = banded_regression(x, 7)
    omega = compose(CholeskyFactor(a=stats.coefficient_matrix(), d=stats.dhat))
    np.testing.assert_allclose(omega, np.linalg.inv(gram_matrix(x)), atol=1e-8)


def test_dhat_monotone_in_bandwidth():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((50, 12))
    g = gram_matrix(x)
    prev = None
    for k in range(1, 8):
        dhat = banded_regression(x, k, gram=g).dhat
        assert np.all(dhat > 0.0)
        if prev is not None:
            assert np.all(dhat <= prev + 1e-12)
        prev = dhat


def test_gram_shortcut_matches_direct():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((30, 6))
    direct = banded_regression(x, 2)
    viagram = banded_regression(x, 2, gram=gram_matrix(x))
    np.testing.assert_array_equal(direct.dhat, viagram.dhat)
    np.testing.assert_array_equal(direct.coefficient_matrix(),
                                  viagram.coefficient_matrix())


def test_singular_design_reports_column():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((10, 4))
    x[:, 1] = x[:, 0]  # duplicate predecessors break column 3's Gram block
    with pytest.raises(SingularDesign) as info:
        banded_regression(x, 2)
    assert info.value.column == 3


def test_degenerate_residual_reports_column():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((12, 3))
    x[:, 2] = x[:, 0] + x[:, 1]  # exact fit leaves zero residual
    with pytest.raises(DegenerateResidual) as info:
        banded_regression(x, 2)
    assert info.value.column == 3


def test_bandwidth_zero_gives_diagonal_moments():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((20, 5))
    stats = banded_regression(x, 0)
    np.testing.assert_allclose(stats.dhat, np.mean(x * x, axis=0))
    assert all(a.size == 0 for a in stats.ahat)
