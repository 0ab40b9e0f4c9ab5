"""Exact B-spline evaluation and tensor-product quasi-interpolation.

This module is ground truth: B-splines are evaluated by the Cox-de Boor
recursion (plus an independent de Boor algorithm used to cross-check it),
and smooth functions are approximated by tensor-product spline expansions
whose coefficients come from a dense-grid least-squares fit.

Degree-0 splines use the right-open convention: B_{j,0} = 1 on
[t_j, t_{j+1}).  At the very last knot of the sequence the final interval
is treated as closed so that the partition of unity extends to the closed
right endpoint.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class KnotSequence:
    """
    Strictly increasing knot vector for splines of a given degree.

    Parameters
    ----------
    values : ndarray
        Knots, strictly increasing.
    degree : int
        Intended spline degree M >= 0 (evaluation may use any degree that
        the sequence supports).
    min_gap : float
        Smallest consecutive gap; computed at construction.
    """

    values: np.ndarray
    degree: int = 1
    min_gap: float = field(default=0.0)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("need at least two knots")
        gaps = np.diff(values)
        if np.min(gaps) <= 0:
            raise ValueError("knots must be strictly increasing")
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        if values.size < self.degree + 2:
            raise ValueError(
                "degree %d needs at least %d knots" % (self.degree, self.degree + 2)
            )
        object.__setattr__(self, "min_gap", float(np.min(gaps)))

    @classmethod
    def uniform(cls, lo, hi, num, degree=1):
        """Equally spaced knots lo..hi inclusive (num knots)."""
        return cls(values=np.linspace(lo, hi, num), degree=degree)

    def num_splines(self, M):
        """Number of degree-M splines this sequence supports."""
        return self.values.size - M - 1


def _degree0(t, i, x):
    """Indicator of [t_i, t_{i+1}), closed on the right at the final knot."""
    inside = (t[i] <= x) & (x < t[i + 1])
    if i + 2 == t.size:
        inside = inside | (x == t[-1])
    return inside.astype(float)


def bspline_eval(ks, j, M, x):
    """
    Evaluate the degree-M B-spline B_{j,M} by the Cox-de Boor recursion.

    Parameters
    ----------
    ks : KnotSequence
    j : int
        Index of the leftmost knot of the spline's support; its support is
        [knots[j], knots[j+M+1]).
    M : int
        Degree >= 0.
    x : float or ndarray

    Returns
    -------
    float or ndarray
    """
    t = ks.values
    if M < 0:
        raise ValueError("degree must be >= 0")
    if j < 0 or j + M + 1 >= t.size:
        raise ValueError(
            "spline index %d out of range for degree %d with %d knots"
            % (j, M, t.size)
        )
    x_arr = np.asarray(x, dtype=float)
    out = _cox_de_boor(t, j, M, np.atleast_1d(x_arr))
    if x_arr.ndim == 0:
        return float(out[0])
    return out


def _cox_de_boor(t, j, M, x):
    if M == 0:
        return _degree0(t, j, x)
    left = (x - t[j]) / (t[j + M] - t[j]) * _cox_de_boor(t, j, M - 1, x)
    right = (t[j + M + 1] - x) / (t[j + M + 1] - t[j + 1]) * _cox_de_boor(
        t, j + 1, M - 1, x
    )
    return left + right


def deboor_eval(ks, coeffs, M, x):
    """
    Evaluate sum_j coeffs[j] * B_{j,M}(x) by de Boor's algorithm.

    Independent of bspline_eval (triangular convex-combination scheme
    instead of the two-term recursion); used to cross-check it.  Outside
    [knots[0], knots[-1]] the value is 0 by local support.

    Parameters
    ----------
    ks : KnotSequence
    coeffs : array_like of length ks.num_splines(M)
    M : int
    x : float or ndarray

    Returns
    -------
    float or ndarray
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size != ks.num_splines(M):
        raise ValueError(
            "expected %d coefficients, got %d" % (ks.num_splines(M), coeffs.size)
        )
    # Pad M phantom knots per side (a B-spline depends only on its own M+2
    # knots, so any strictly increasing extension is exact) and give the
    # phantom splines zero coefficients; every x in the original knot range
    # then lies in the padded sequence's complete-basis domain and the
    # triangle below never needs out-of-range knots.
    t0 = ks.values
    gap_lo = t0[1] - t0[0]
    gap_hi = t0[-1] - t0[-2]
    t = np.concatenate(
        [
            t0[0] - gap_lo * np.arange(M, 0, -1),
            t0,
            t0[-1] + gap_hi * np.arange(1, M + 1),
        ]
    )
    c = np.concatenate([np.zeros(M), coeffs, np.zeros(M)])
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros_like(x_arr)
    inside = (x_arr >= t0[0]) & (x_arr <= t0[-1])
    for idx in np.nonzero(inside)[0]:
        xv = x_arr[idx]
        # interval i of the padded knots with t_i <= xv < t_{i+1}; the last
        # original interval is closed on the right
        i = int(np.searchsorted(t, xv, side="right") - 1)
        if xv == t0[-1]:
            i = M + t0.size - 2
        # de Boor triangle over the M+1 active coefficients
        dcol = [c[p] for p in range(i - M, i + 1)]
        for r in range(1, M + 1):
            new = list(dcol)
            for p in range(M, r - 1, -1):
                jj = i - M + p
                denom = t[jj + M - r + 1] - t[jj]
                w = 0.0 if denom == 0.0 else (xv - t[jj]) / denom
                new[p] = (1.0 - w) * dcol[p - 1] + w * dcol[p]
            dcol = new
        out[idx] = dcol[M]
    if np.asarray(x).ndim == 0:
        return float(out[0])
    return out


@dataclass
class TensorSplineFit:
    """
    Tensor-product spline expansion with one shared knot sequence per axis.

    eval(x) returns the sum over multi-indices j of
    coeffs[j] * prod_v B_{j_v,M}(x_v).
    """

    ks: KnotSequence
    degree: int
    coeffs: np.ndarray

    def eval_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        dstar = self.coeffs.ndim
        if X.shape[1] != dstar:
            raise ValueError("expected %d-column inputs" % dstar)
        nb = self.ks.num_splines(self.degree)
        per_dim = [
            np.column_stack(
                [bspline_eval(self.ks, j, self.degree, X[:, v]) for j in range(nb)]
            )
            for v in range(dstar)
        ]
        out = np.zeros(X.shape[0])
        for multi in itertools.product(range(nb), repeat=dstar):
            c = self.coeffs[multi]
            if c == 0.0:
                continue
            term = np.full(X.shape[0], c)
            for v, j in enumerate(multi):
                term = term * per_dim[v][:, j]
            out += term
        return out

    def eval(self, x):
        return float(self.eval_batch(np.asarray(x, dtype=float)[None, :])[0])

    def coefficient_map(self):
        """Multi-index -> coefficient dictionary."""
        nb = self.ks.num_splines(self.degree)
        dstar = self.coeffs.ndim
        return {
            multi: float(self.coeffs[multi])
            for multi in itertools.product(range(nb), repeat=dstar)
        }


def tensor_bspline_approx(f, M, K, A=1.0, dstar=1):
    """
    Fit a tensor-product degree-M spline expansion to f on [-A, A]^dstar.

    Uniform knots with spacing A/K extended to cover [-A, A] plus M exterior
    knots per side; coefficients are chosen by least squares on a dense
    uniform grid (the error-decay behavior, not a specific quasi-interpolant
    rule, is what matters here).

    Parameters
    ----------
    f : callable
        Maps an ndarray of shape (n, dstar) to values of shape (n,).
    M, K : int
        Degree >= 1 and inverse knot spacing >= 1.
    A : float
    dstar : int

    Returns
    -------
    TensorSplineFit
    """
    if M < 1 or K < 1:
        raise ValueError("M and K must be >= 1")
    h = A / K
    ks = KnotSequence(
        values=-A + h * np.arange(-M, 2 * K + M + 1), degree=M
    )
    nb = ks.num_splines(M)
    grid_1d = np.linspace(-A, A, max(4 * nb, 41))
    grids = np.meshgrid(*([grid_1d] * dstar), indexing="ij")
    X = np.column_stack([g.ravel() for g in grids])
    y = np.asarray(f(X), dtype=float)
    per_dim = [
        np.column_stack([bspline_eval(ks, j, M, X[:, v]) for j in range(nb)])
        for v in range(dstar)
    ]
    index_list = list(itertools.product(range(nb), repeat=dstar))
    design = np.ones((X.shape[0], len(index_list)))
    for c, multi in enumerate(index_list):
        for v, j in enumerate(multi):
            design[:, c] *= per_dim[v][:, j]
    sol, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    coeffs = np.zeros((nb,) * dstar)
    for c, multi in enumerate(index_list):
        coeffs[multi] = sol[c]
    return TensorSplineFit(ks=ks, degree=M, coeffs=coeffs)
