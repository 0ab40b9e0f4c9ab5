"""Competitor estimators: k-nearest neighbors, Wendland RBF interpolation,
forward/backward MARS, and a fully connected network.

Every fitted estimator exposes predict(x) for a single point and
predict_batch(X) for row-wise batches, plus to_doc() for JSON export; the
experiment harness consumes only that surface.
"""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .basis import GeneralizedBasisFunction, HingeFactor
from .fitting import Dataset, train, truncate_predict
from .networks import DenseNetwork, network_to_doc


def _split(data, split_fraction=0.8):
    n_learn = int(math.ceil(split_fraction * data.n))
    if n_learn >= data.n:
        raise ValueError("split leaves an empty test set")
    return (
        Dataset(X=data.X[:n_learn], Y=data.Y[:n_learn]),
        Dataset(X=data.X[n_learn:], Y=data.Y[n_learn:]),
    )


def default_k_candidates(n_train):
    """{1, 2, 3} plus multiples of 4 up to the training size."""
    ks = [k for k in (1, 2, 3) if k <= n_train]
    ks.extend(range(4, n_train + 1, 4))
    return sorted(set(ks))


DEFAULT_RBF_RADII = (0.1, 0.5, 1.0, 5.0, 30.0, 60.0, 100.0)


# ---------------------------------------------------------------------------
# k-nearest neighbors
# ---------------------------------------------------------------------------


@dataclass
class KnnPredictor:
    """Mean of Y over the k nearest training points (ties by smaller index)."""

    X: np.ndarray
    Y: np.ndarray
    k: int

    def predict_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d2 = ((X[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2)
        idx = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        return self.Y[idx].mean(axis=1)

    def predict(self, x):
        return float(self.predict_batch(np.atleast_2d(x))[0])

    def to_doc(self):
        return {"kind": "knn", "k": int(self.k), "n_train": int(self.X.shape[0])}


def knn_predict(train_data, k, x):
    """One-shot k-NN prediction (stable tie-breaking by index)."""
    return KnnPredictor(X=train_data.X, Y=train_data.Y, k=k).predict(x)


def fit_knn(data, k_candidates=None, split_fraction=0.8):
    """
    Choose k by holdout risk on the test split; the returned predictor
    averages over the learning split's k nearest neighbors.
    """
    learn, test = _split(data, split_fraction)
    if k_candidates is None:
        k_candidates = default_k_candidates(learn.n)
    k_candidates = [k for k in k_candidates if 1 <= k <= learn.n]
    if not k_candidates:
        raise ValueError("no usable k candidates (need 1 <= k <= n_train)")
    best = None
    for k in sorted(k_candidates):
        pred = KnnPredictor(X=learn.X, Y=learn.Y, k=k)
        risk = float(np.mean((test.Y - pred.predict_batch(test.X)) ** 2))
        if best is None or risk < best[0]:
            best = (risk, pred)
    return best[1]


# ---------------------------------------------------------------------------
# Wendland RBF interpolation
# ---------------------------------------------------------------------------


def wendland(r):
    """Compactly supported kernel (1-r)^6_+ * (35 r^2 + 18 r + 3)."""
    r = np.asarray(r, dtype=float)
    base = np.maximum(1.0 - r, 0.0) ** 6 * (35.0 * r * r + 18.0 * r + 3.0)
    return base if base.ndim else float(base)


@dataclass
class RbfPredictor:
    """Interpolant sum_i w_i phi(||x - X_i|| / radius)."""

    X: np.ndarray
    weights: np.ndarray
    radius: float
    ridge: float = 1e-10

    def predict_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d = np.sqrt(((X[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2))
        return wendland(d / self.radius) @ self.weights

    def predict(self, x):
        return float(self.predict_batch(np.atleast_2d(x))[0])

    def to_doc(self):
        return {
            "kind": "rbf",
            "radius": float(self.radius),
            "ridge": float(self.ridge),
            "n_centers": int(self.X.shape[0]),
        }


def _rbf_solve(X, Y, radius, ridge):
    d = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
    phi = wendland(d / radius)
    try:
        w = np.linalg.solve(phi + ridge * np.eye(X.shape[0]), Y)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(w)):
        return None
    return w


def fit_rbf(data, radius_candidates=DEFAULT_RBF_RADII, split_fraction=0.8,
            ridge=1e-10):
    """
    Interpolation weights solve (Phi + ridge I) w = Y on the learning split;
    the radius is chosen by holdout risk.  Radii whose system stays singular
    after regularization are skipped with a warning.
    """
    if data.n >= 2:
        learn, test = _split(data, split_fraction)
    else:
        learn = test = data
    if np.unique(learn.X, axis=0).shape[0] != learn.n:
        raise ValueError("training points must be distinct")
    best = None
    for radius in radius_candidates:
        w = _rbf_solve(learn.X, learn.Y, radius, ridge)
        if w is None:
            warnings.warn("RBF system singular at radius %g; skipped" % radius)
            continue
        pred = RbfPredictor(X=learn.X, weights=w, radius=radius, ridge=ridge)
        risk = float(np.mean((test.Y - pred.predict_batch(test.X)) ** 2))
        if best is None or risk < best[0]:
            best = (risk, pred)
    if best is None:
        raise RuntimeError("every candidate radius produced a singular system")
    return best[1]


# ---------------------------------------------------------------------------
# MARS
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _MarsTerm:
    """Product of axis-aligned hinges s_j * (x^(j) - a_j)_+ (empty = intercept)."""

    coords: tuple = ()
    signs: tuple = ()
    knots: tuple = ()

    def evaluate(self, X):
        out = np.ones(X.shape[0])
        for j, s, a in zip(self.coords, self.signs, self.knots):
            out = out * np.maximum(s * (X[:, j] - a), 0.0)
        return out

    def to_basis(self, d):
        hinges = []
        for j, s, a in zip(self.coords, self.signs, self.knots):
            alpha = np.zeros(j + 1)
            alpha[j] = float(s)
            gamma = np.zeros(j + 1)
            gamma[j] = float(a)
            hinges.append(HingeFactor(alpha=alpha, gamma=gamma))
        return GeneralizedBasisFunction(hinge_factors=tuple(hinges))


@dataclass
class MarsModel:
    """Hinge-product expansion with least-squares coefficients and its GCV."""

    terms: list
    coefficients: np.ndarray
    gcv: float
    gcv_penalty: float = 3.0
    d: int = 1

    def design(self, X):
        return np.column_stack([t.evaluate(X) for t in self.terms])

    def predict_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.design(X) @ self.coefficients

    def predict(self, x):
        return float(self.predict_batch(np.atleast_2d(x))[0])

    def basis_functions(self):
        """Non-intercept terms as hinge-only GeneralizedBasisFunctions."""
        return [t.to_basis(self.d) for t in self.terms if t.coords]

    def to_doc(self):
        return {
            "kind": "mars",
            "n_terms": len(self.terms),
            "gcv": float(self.gcv),
            "terms": [
                {"coords": list(t.coords), "signs": list(t.signs),
                 "knots": list(t.knots)}
                for t in self.terms
            ],
            "coefficients": self.coefficients,
        }


def _lstsq_rss(B, Y):
    coef, _, rank, _ = np.linalg.lstsq(B, Y, rcond=None)
    resid = Y - B @ coef
    return coef, float(resid @ resid), rank


def _gcv(rss, n, m, penalty):
    c_m = m + penalty * (m - 1)
    denom = (1.0 - c_m / n) ** 2
    if denom <= 0:
        return np.inf
    return (rss / n) / denom


def fit_mars(data, max_basis=21, gcv_penalty=3.0, max_interaction=None):
    """
    Forward pass: repeatedly add the hinge pair (parent x (x^(j)-a)_+,
    parent x (a-x^(j))_+) that most reduces the residual sum of squares,
    with knots restricted to training values of that coordinate and no
    coordinate repeated within one product, until max_basis terms.
    Backward pass: greedily remove terms while the GCV
    (RSS/n) / (1 - C(m)/n)^2, C(m) = m + penalty*(m-1), improves.
    Finishes with a least-squares refit.
    """
    if max_basis < 1:
        raise ValueError("max_basis must be >= 1")
    X, Y, n, d = data.X, data.Y, data.n, data.d
    if max_interaction is None:
        max_interaction = d
    terms = [_MarsTerm()]
    B = np.ones((n, 1))
    coef, rss, _ = _lstsq_rss(B, Y)
    while len(terms) + 2 <= max_basis:
        best = None
        for parent_idx, parent in enumerate(terms):
            if len(parent.coords) >= max_interaction:
                continue
            parent_col = B[:, parent_idx]
            for j in range(d):
                if j in parent.coords:
                    continue
                for a in np.unique(X[:, j]):
                    pos = parent_col * np.maximum(X[:, j] - a, 0.0)
                    neg = parent_col * np.maximum(a - X[:, j], 0.0)
                    if not pos.any() and not neg.any():
                        continue
                    cand = np.column_stack([B, pos, neg])
                    _, cand_rss, rank = _lstsq_rss(cand, Y)
                    if rank < cand.shape[1]:
                        continue  # collinear pair dropped
                    if best is None or cand_rss < best[0] - 1e-14:
                        best = (cand_rss, parent, j, a, pos, neg)
        if best is None or best[0] >= rss - 1e-12:
            break
        cand_rss, parent, j, a, pos, neg = best
        for sign, col in ((1.0, pos), (-1.0, neg)):
            terms.append(
                _MarsTerm(
                    coords=parent.coords + (j,),
                    signs=parent.signs + (sign,),
                    knots=parent.knots + (float(a),),
                )
            )
        B = np.column_stack([B, pos, neg])
        coef, rss, _ = _lstsq_rss(B, Y)
    # backward pass: greedy removals while GCV improves
    current_gcv = _gcv(rss, n, len(terms), gcv_penalty)
    while len(terms) > 1:
        best = None
        for drop in range(1, len(terms)):
            keep = [i for i in range(len(terms)) if i != drop]
            _, cand_rss, _ = _lstsq_rss(B[:, keep], Y)
            cand_gcv = _gcv(cand_rss, n, len(keep), gcv_penalty)
            if cand_gcv <= current_gcv + 1e-14:
                if best is None or cand_gcv < best[0]:
                    best = (cand_gcv, drop)
        if best is None:
            break
        current_gcv, drop = best[0], best[1]
        terms = [t for i, t in enumerate(terms) if i != drop]
        B = np.delete(B, drop, axis=1)
    coef, rss, _ = _lstsq_rss(B, Y)
    return MarsModel(
        terms=terms,
        coefficients=coef,
        gcv=_gcv(rss, n, len(terms), gcv_penalty),
        gcv_penalty=gcv_penalty,
        d=d,
    )


# ---------------------------------------------------------------------------
# Fully connected network
# ---------------------------------------------------------------------------


@dataclass
class NetworkPredictor:
    """Trained network with truncation, exposing the common surface."""

    net: object
    beta: float
    L: int = 0
    r: int = 0

    def predict_batch(self, X):
        return truncate_predict(self.net, self.beta, np.atleast_2d(X))

    def predict(self, x):
        return float(self.predict_batch(np.atleast_2d(x))[0])

    def to_doc(self):
        return {
            "kind": "network",
            "beta": float(self.beta),
            "L": int(self.L),
            "r": int(self.r),
            "network": network_to_doc(self.net),
        }


DEFAULT_FCNN_L = (1, 2, 4, 6, 8, 10, 12)
DEFAULT_FCNN_R = (5, 10, 25, 50)


def fit_fcnn(data, L_candidates, r_candidates, cfg, split_fraction=0.8):
    """
    Train one dense network per (L, r) pair on the learning split and pick
    the pair with the smallest truncated holdout risk.
    """
    if not L_candidates or not r_candidates:
        raise ValueError("candidate grids must be nonempty")
    learn, test = _split(data, split_fraction)
    best = None
    idx = 0
    for L in sorted(L_candidates):
        for r in sorted(r_candidates):
            idx += 1
            net = DenseNetwork.zeros(data.d, int(L), int(r), cfg.alpha)
            sub_cfg = replace(cfg, L=int(L), r=int(r),
                              seed=cfg.seed + 104729 * idx)
            train(net, learn, sub_cfg)
            pred = NetworkPredictor(net=net, beta=cfg.beta, L=int(L), r=int(r))
            risk = float(np.mean((test.Y - pred.predict_batch(test.X)) ** 2))
            if best is None or risk < best[0]:
                best = (risk, pred)
    return best[1]
