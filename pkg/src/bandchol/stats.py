"""Column-wise banded regression statistics of a data matrix.

All moments are raw (uncentered) with divisor n: var(X_j) is the mean of
squares of column j, and the Gram blocks feeding each regression are taken
from X'X / n. Column indices in the public API are 1-based, matching the
math convention for ordered coordinates; error messages use the same
numbering.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateResidual, SingularDesign

RESIDUAL_FLOOR = 1e-14


def as_data_matrix(x):
    """Validate an n x p data matrix of finite floats."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"data must be a 2-D matrix, got ndim={x.ndim}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise ValueError(f"data must be nonempty, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("data contains non-finite entries")
    return x


def gram_matrix(x):
    """Raw second-moment matrix X'X / n."""
    x = as_data_matrix(x)
    g = x.T @ x / x.shape[0]
    return (g + g.T) / 2.0


def predecessor_range(j, k):
    """Half-open 0-based index range of the k closest predecessors of column j (1-based)."""
    return max(0, j - 1 - k), j - 1


def sample_moments(data, j, k):
    """Raw moments of column j against its k closest predecessors.

    Returns (shat, chat, varhat): the Gram block of the predecessor
    columns, their cross moments with column j, and the mean square of
    column j itself.
    """
    x = as_data_matrix(data)
    n, p = x.shape
    if not 1 <= j <= p:
        raise ValueError(f"column j={j} out of range 1..{p}")
    if k < 0:
        raise ValueError("bandwidth k must be nonnegative")
    lo, hi = predecessor_range(j, k)
    z = x[:, lo:hi]
    y = x[:, j - 1]
    shat = z.T @ z / n
    chat = z.T @ y / n
    varhat = float(y @ y / n)
    return (shat + shat.T) / 2.0, chat, varhat


@dataclass
class BandedRegressionStats:
    """Per-column least-squares statistics at a common bandwidth k.

    Column j (1-based) regresses on its kj[j-1] = min(j-1, k) closest
    predecessors. Lists are indexed 0-based by column; entries for j = 1
    are empty arrays. shat_chol holds the lower Cholesky factors of the
    Gram blocks shat. nj = n + nu0 - kj - 4 is the posterior degrees-of-
    freedom vector used downstream.
    """

    n: int
    p: int
    k: int
    nu0: float
    kj: np.ndarray
    dhat: np.ndarray
    nj: np.ndarray
    varhat: np.ndarray
    shat: list = field(repr=False)
    chat: list = field(repr=False)
    ahat: list = field(repr=False)
    shat_chol: list = field(repr=False)

    def coefficient_matrix(self):
        """Strictly lower triangular matrix with row j holding ahat_j."""
        a = np.zeros((self.p, self.p))
        for j in range(1, self.p):
            lo = j - self.kj[j]
            a[j, lo:j] = self.ahat[j]
        return a


def banded_regression(data, k, nu0=2.0, gram=None, enforce_dof=True):
    """Least-squares fit of every column on its k closest predecessors.

    Requires n + nu0 - min(k, p-1) - 4 > 0 so that every nj is positive;
    enforce_dof=False skips that requirement for estimators that use only
    the least-squares statistics. A precomputed gram_matrix(data) can be
    passed to share work across bandwidths. Raises SingularDesign(j) when
    a Gram block cannot be factored and DegenerateResidual(j) when a
    residual variance falls to zero.
    """
    x = as_data_matrix(data)
    n, p = x.shape
    if k < 0:
        raise ValueError("bandwidth k must be nonnegative")
    keff = min(k, p - 1)
    if enforce_dof and n + nu0 - keff - 4 <= 0:
        raise ValueError(
            f"need n + nu0 - min(k, p-1) - 4 > 0, got n={n}, nu0={nu0}, k={k}"
        )
    g = gram_matrix(x) if gram is None else gram
    var = np.diag(g).copy()

    kj = np.minimum(np.arange(p), keff)
    shat = [np.zeros((0, 0))] * p
    chat = [np.zeros(0)] * p
    ahat = [np.zeros(0)] * p
    chol = [np.zeros((0, 0))] * p
    # columns with no predecessors keep their raw mean square
    dhat = var.copy()

    # columns with fewer than k predecessors, solved one by one
    for j in range(1, min(keff, p)):
        lo = j - kj[j]
        block = (g[lo:j, lo:j] + g[lo:j, lo:j].T) / 2.0
        cvec = g[lo:j, j]
        try:
            low = np.linalg.cholesky(block)
            coef = np.linalg.solve(block, cvec)
        except np.linalg.LinAlgError:
            raise SingularDesign(j + 1) from None
        shat[j], chat[j], ahat[j], chol[j] = block, cvec, coef, low
        dhat[j] = var[j] - cvec @ coef

    # columns with exactly keff predecessors, solved as one batch
    if keff >= 1 and p > keff:
        m = p - keff
        windows = np.lib.stride_tricks.sliding_window_view(g, (keff, keff))
        blocks = windows[np.arange(m), np.arange(m)]
        blocks = (blocks + blocks.transpose(0, 2, 1)) / 2.0
        cvecs = np.empty((m, keff))
        for i in range(m):
            cvecs[i] = g[i : i + keff, i + keff]
        try:
            lows = np.linalg.cholesky(blocks)
            coefs = np.linalg.solve(blocks, cvecs[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            # identify the offending column; batched routines report none
            for i in range(m):
                try:
                    np.linalg.cholesky(blocks[i])
                    np.linalg.solve(blocks[i], cvecs[i])
                except np.linalg.LinAlgError:
                    raise SingularDesign(keff + i + 1) from None
            raise
        dhat[keff:] = var[keff:] - np.sum(cvecs * coefs, axis=1)
        for i in range(m):
            j = keff + i
            shat[j], chat[j], ahat[j], chol[j] = blocks[i], cvecs[i], coefs[i], lows[i]

    # residual variances are least-squares residuals, so nonnegative up to rounding
    np.maximum(dhat, 0.0, out=dhat)
    bad = np.nonzero(dhat <= RESIDUAL_FLOOR)[0]
    if bad.size:
        raise DegenerateResidual(bad[0] + 1, float(dhat[bad[0]]))

    nj = n + nu0 - kj - 4
    return BandedRegressionStats(
        n=n, p=p, k=int(k), nu0=float(nu0), kj=kj, dhat=dhat, nj=nj,
        varhat=var, shat=shat, chat=chat, ahat=ahat, shat_chol=chol,
    )
