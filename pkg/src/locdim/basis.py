"""Generalized spline/hinge basis functions and polytope squeezes.

A GeneralizedBasisFunction is a product of univariate B-spline factors and
multivariate truncated-linear ("hinge") factors

    B(x) = prod_v B_{j_v,M,t_v}(x^(i_v)) * prod_k ( sum_j alpha_kj (x^(j) - gamma_kj) )_+ .

A Polytope is an intersection of halfspaces a_i^T x <= b_i, each carrying a
squeeze width delta_i; the hinge-squeeze ramp of a halfspace is 1 on it,
0 outside its delta-enlargement, and the product of ramps over a polytope's
halfspaces expands exactly into a signed combination of 2^k basis functions.

Everything here is exact (non-neural) ground truth.
"""

from dataclasses import dataclass, field

import numpy as np

from .splines import KnotSequence, bspline_eval


@dataclass(frozen=True)
class SplineFactor:
    """One univariate B-spline factor B_{j,degree} applied to a coordinate."""

    coordinate: int
    j: int
    knots: KnotSequence
    degree: int


@dataclass(frozen=True)
class HingeFactor:
    """One truncated-linear factor ( sum_j alpha[j]*(x[j]-gamma[j]) )_+ ."""

    alpha: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        gamma = np.asarray(self.gamma, dtype=float)
        if alpha.shape != gamma.shape or alpha.ndim != 1:
            raise ValueError("alpha and gamma must be vectors of equal length")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "gamma", gamma)


@dataclass(frozen=True)
class GeneralizedBasisFunction:
    """Product of spline factors and hinge factors (empty product = 1)."""

    spline_factors: tuple = ()
    hinge_factors: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "spline_factors", tuple(self.spline_factors))
        object.__setattr__(self, "hinge_factors", tuple(self.hinge_factors))


def basis_eval(b, x):
    """Evaluate a GeneralizedBasisFunction at one point."""
    x = np.asarray(x, dtype=float)
    return float(basis_eval_batch(b, x[None, :])[0])


def basis_eval_batch(b, X):
    """Evaluate a GeneralizedBasisFunction on rows of X (shape (n, d))."""
    X = np.asarray(X, dtype=float)
    out = np.ones(X.shape[0])
    for sf in b.spline_factors:
        out = out * bspline_eval(sf.knots, sf.j, sf.degree, X[:, sf.coordinate])
    for hf in b.hinge_factors:
        z = (X[:, : hf.alpha.size] - hf.gamma) @ hf.alpha
        out = out * np.maximum(z, 0.0)
    return out


@dataclass(frozen=True)
class Halfspace:
    """Halfspace a^T x <= b with squeeze width delta > 0 and ||a||_2 <= 1."""

    a: np.ndarray
    b: float
    delta: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        object.__setattr__(self, "a", a)
        norm = float(np.linalg.norm(a))
        if norm > 1.0 + 1e-12:
            raise ValueError("||a||_2 must be <= 1, got %g" % norm)
        if norm == 0.0:
            raise ValueError("a must be nonzero")
        if self.delta <= 0:
            raise ValueError("delta must be positive")


@dataclass(frozen=True)
class Polytope:
    """Intersection of halfspaces, each with its own squeeze width."""

    halfspaces: tuple

    def __post_init__(self):
        object.__setattr__(self, "halfspaces", tuple(self.halfspaces))
        if len(self.halfspaces) == 0:
            raise ValueError("polytope needs at least one halfspace")

    def contains(self, X):
        """Boolean membership a_i^T x <= b_i for all i, per row of X."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ok = np.ones(X.shape[0], dtype=bool)
        for h in self.halfspaces:
            ok &= X @ h.a <= h.b
        return ok

    def contains_shrunk(self, X):
        """Membership of the delta-shrunk polytope (a_i^T x <= b_i - delta_i)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ok = np.ones(X.shape[0], dtype=bool)
        for h in self.halfspaces:
            ok &= X @ h.a <= h.b - h.delta
        return ok

    def contains_enlarged(self, X):
        """Membership of the delta-enlarged polytope (a_i^T x <= b_i + delta_i)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ok = np.ones(X.shape[0], dtype=bool)
        for h in self.halfspaces:
            ok &= X @ h.a <= h.b + h.delta
        return ok

    def squeeze_weight(self, X):
        """Product of the hinge-squeeze ramps of all halfspaces."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        w = np.ones(X.shape[0])
        for h in self.halfspaces:
            w = w * hinge_squeeze(h, X)
        return w


def hinge_squeeze(h, x):
    """
    Ramp of a halfspace: 1 on {a^T x <= b}, 0 on {a^T x >= b+delta}, linear
    in between.  Equal to the two-hinge difference
    ((z+delta)/delta)_+ - (z/delta)_+ with z = -a^T x + b (the form the
    basis expansion uses), but evaluated as a clipped ramp so the value is
    exactly 1 inside and exactly within [0, 1] in floating point.

    Parameters
    ----------
    h : Halfspace
    x : ndarray of shape (d,) or (n, d)

    Returns
    -------
    float or ndarray
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    z = -(X @ h.a) + h.b
    out = np.clip((z + h.delta) / h.delta, 0.0, 1.0)
    if single:
        return float(out[0])
    return out


def _hinge_from_halfspace(h, with_delta):
    """Truncated-linear factor equal to ((-a^T x + b [+ delta]) / delta)_+ ."""
    d = h.a.size
    alpha = -h.a / h.delta
    gamma = np.zeros(d)
    nz = np.nonzero(h.a)[0]
    j0 = int(nz[0])
    offset = h.b + h.delta if with_delta else h.b
    gamma[j0] = offset / h.a[j0]
    return HingeFactor(alpha=alpha, gamma=gamma)


def polytope_squeeze_expand(P):
    """
    Expand the product of a polytope's hinge-squeeze ramps into basis terms.

    Each ramp is a difference u_i - v_i of two truncated-linear factors, so
    the product over K1 halfspaces expands into 2^K1 signed products:
    sum over subsets S of (-1)^|S| * prod_{i in S} v_i * prod_{i not in S} u_i.

    Returns
    -------
    (bases, coeffs) : list of GeneralizedBasisFunction, list of int (+1/-1)
        Sum of coeffs[t] * basis_eval(bases[t], x) equals the ramp product
        pointwise.
    """
    K1 = len(P.halfspaces)
    if K1 < 1:
        raise ValueError("polytope needs at least one halfspace")
    if K1 > 20:
        raise ValueError("refusing expansion of size 2^%d (K1 > 20)" % K1)
    plus = [_hinge_from_halfspace(h, True) for h in P.halfspaces]
    minus = [_hinge_from_halfspace(h, False) for h in P.halfspaces]
    bases, coeffs = [], []
    for mask in range(2 ** K1):
        factors = []
        sign = 1
        for i in range(K1):
            if mask >> i & 1:
                factors.append(minus[i])
                sign = -sign
            else:
                factors.append(plus[i])
        bases.append(GeneralizedBasisFunction(hinge_factors=tuple(factors)))
        coeffs.append(sign)
    return bases, coeffs


def basis_to_doc(b):
    """JSON-ready document for a GeneralizedBasisFunction."""
    return {
        "spline_factors": [
            {
                "coordinate": sf.coordinate,
                "j": sf.j,
                "degree": sf.degree,
                "knots": sf.knots.values,
            }
            for sf in b.spline_factors
        ],
        "hinge_factors": [
            {"alpha": hf.alpha, "gamma": hf.gamma} for hf in b.hinge_factors
        ],
    }


def basis_from_doc(doc):
    """Inverse of basis_to_doc."""
    spline_factors = tuple(
        SplineFactor(
            coordinate=int(sf["coordinate"]),
            j=int(sf["j"]),
            knots=KnotSequence(values=np.asarray(sf["knots"], dtype=float),
                               degree=int(sf["degree"])),
            degree=int(sf["degree"]),
        )
        for sf in doc.get("spline_factors", [])
    )
    hinge_factors = tuple(
        HingeFactor(alpha=np.asarray(hf["alpha"], dtype=float),
                    gamma=np.asarray(hf["gamma"], dtype=float))
        for hf in doc.get("hinge_factors", [])
    )
    return GeneralizedBasisFunction(spline_factors=spline_factors,
                                    hinge_factors=hinge_factors)


def polytope_to_doc(P):
    """JSON-ready document for a Polytope."""
    return {
        "halfspaces": [
            {"a": h.a, "b": float(h.b), "delta": float(h.delta)}
            for h in P.halfspaces
        ]
    }


def polytope_from_doc(doc):
    """Inverse of polytope_to_doc."""
    return Polytope(
        halfspaces=tuple(
            Halfspace(a=np.asarray(h["a"], dtype=float), b=float(h["b"]),
                      delta=float(h["delta"]))
            for h in doc["halfspaces"]
        )
    )
