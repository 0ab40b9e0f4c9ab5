"""Least-squares network training and split-sample model selection.

Empirical L2 risk, exact backward-accumulation gradients matching the
canonical weight walk, projected BFGS with Armijo backtracking from random
restarts, prediction truncation, and choice of the number of additive
subnets by sample splitting.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .activation import logistic
from .networks import (
    DenseNetwork,
    SparseAdditiveNetwork,
    dense_forward_batch,
    flatten_weights,
    project_weights,
    set_weights,
    sparse_forward_batch,
)


@dataclass
class Dataset:
    """A regression sample: row-wise inputs X (n x d) and responses Y (n)."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.Y = np.atleast_1d(np.asarray(self.Y, dtype=float))
        if self.X.shape[0] != self.Y.shape[0]:
            raise ValueError("X and Y must have the same number of rows")
        if self.X.shape[0] < 1:
            raise ValueError("dataset must contain at least one sample")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.Y))):
            raise ValueError("dataset entries must be finite")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]


@dataclass
class FitConfig:
    """
    Training configuration.

    L, r : architecture of each (sub)network
    alpha : uniform weight bound enforced by projection
    beta : prediction truncation level
    restarts : number of random initializations
    max_iters : BFGS iteration budget per restart
    tol : gradient-norm stopping tolerance
    seed : RNG seed for initializations
    """

    L: int = 1
    r: int = 3
    alpha: float = 1e6
    beta: float = 50.0
    restarts: int = 5
    max_iters: int = 500
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


@dataclass
class FitReport:
    """Outcome of train: best risk, iterations used, projection clamps."""

    final_risk: float
    iterations: int
    clamp_events: int
    abandoned_restarts: int = 0


def alpha_n(n, c1=1e3, c2=2.0):
    """Weight-bound schedule c1 * n^c2 (non-binding at desk scale)."""
    return c1 * float(n) ** c2


def beta_n(n, c3=10.0):
    """Truncation schedule c3 * log(n)."""
    return c3 * math.log(n)


def candidate_mstars(n):
    """Subnet-count candidates {2^l : l = 1..ceil(log2 n)}."""
    return [2 ** l for l in range(1, int(math.ceil(math.log2(n))) + 1)]


def _net_forward(net, X):
    if isinstance(net, DenseNetwork):
        return dense_forward_batch(net, X)
    return sparse_forward_batch(net, X)


def empirical_risk(net, data):
    """Mean squared residual (1/n) sum (Y_i - net(X_i))^2."""
    if data.n < 1:
        raise ValueError("dataset must contain at least one sample")
    pred = _net_forward(net, data.X)
    return float(np.mean((data.Y - pred) ** 2))


def _dense_forward_cached(net, X):
    hs = [X]
    for W, b in net.layers[:-1]:
        hs.append(logistic(hs[-1] @ W.T + b))
    W_out, b_out = net.layers[-1]
    out = hs[-1] @ W_out.T + b_out
    return hs, out[:, 0]


def _dense_backward(net, hs, dout):
    """Gradients of sum(dout * out) through a dense net, in walk order."""
    W_out, _ = net.layers[-1]
    grads_out_W = dout[None, :] @ hs[-1]
    grads_out_b = np.array([np.sum(dout)])
    delta = dout[:, None] @ W_out  # n x r
    block_grads = [None] * (net.L + 1)
    block_grads[net.L] = (grads_out_W, grads_out_b)
    for t in range(net.L - 1, -1, -1):
        h_t = hs[t + 1]
        delta = delta * h_t * (1.0 - h_t)
        gW = delta.T @ hs[t]
        gb = delta.sum(axis=0)
        block_grads[t] = (gW, gb)
        if t > 0:
            W_t, _ = net.layers[t]
            delta = delta @ W_t
    flat = []
    for gW, gb in block_grads:
        flat.append(gW.ravel())
        flat.append(gb.ravel())
    return np.concatenate(flat)


def gradient(net, data):
    """
    Exact gradient of empirical_risk with respect to every free scalar,
    ordered like the canonical weight walk.
    """
    X, Y = data.X, data.Y
    n = data.n
    if isinstance(net, DenseNetwork):
        hs, out = _dense_forward_cached(net, X)
        dout = 2.0 * (out - Y) / n
        return _dense_backward(net, hs, dout)
    caches = []
    total = np.zeros(n)
    for mu_i, sub in zip(net.mu, net.subnets):
        hs, out = _dense_forward_cached(sub, X)
        caches.append((hs, out))
        total += mu_i * out
    dout = 2.0 * (total - Y) / n
    pieces = []
    for mu_i, sub, (hs, out) in zip(net.mu, net.subnets, caches):
        pieces.append(_dense_backward(sub, hs, dout * mu_i))
        pieces.append(np.array([float(np.sum(dout * out))]))
    return np.concatenate(pieces)


def truncate_predict(net, beta, x):
    """Network prediction clamped into [-beta, beta]."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return float(np.clip(_net_forward(net, x[None, :])[0], -beta, beta))
    return np.clip(_net_forward(net, x), -beta, beta)


def _risk_and_grad(net, theta, data):
    set_weights(net, theta)
    risk = empirical_risk(net, data)
    grad = gradient(net, data)
    return risk, grad


def train(net, data, cfg):
    """
    Minimize the empirical L2 risk by projected BFGS with Armijo
    backtracking from cfg.restarts random initializations (weights uniform
    in [-0.5, 0.5]); keeps the best run's weights in `net`.

    The accepted-step risk sequence within each restart is non-increasing:
    the Armijo test is evaluated at the projected candidate, so projection
    can only be accepted when it still decreases the risk.
    """
    if data.d != net.d:
        raise ValueError("dataset dimension %d != network dimension %d" % (data.d, net.d))
    if cfg.max_iters == 0:
        return FitReport(final_risk=empirical_risk(net, data), iterations=0,
                         clamp_events=0)
    rng = np.random.default_rng(cfg.seed)
    n_params = flatten_weights(net).size
    best_theta = None
    best_risk = np.inf
    total_iters = 0
    total_clamps = 0
    abandoned = 0
    armijo_c = 1e-4
    for _ in range(cfg.restarts):
        theta = rng.uniform(-0.5, 0.5, size=n_params)
        set_weights(net, theta)
        total_clamps += project_weights(net, cfg.alpha)
        theta = flatten_weights(net)
        try:
            risk, grad = _risk_and_grad(net, theta, data)
        except FloatingPointError:
            abandoned += 1
            continue
        if not np.isfinite(risk):
            abandoned += 1
            continue
        H = np.eye(n_params)
        iters = 0
        while iters < cfg.max_iters and np.linalg.norm(grad) > cfg.tol:
            direction = -H @ grad
            slope = float(grad @ direction)
            if slope >= 0:
                H = np.eye(n_params)
                direction = -grad
                slope = float(grad @ direction)
                if slope >= 0:
                    break
            step = 1.0
            accepted = False
            while step > 1e-14:
                cand = theta + step * direction
                np.clip(cand, -cfg.alpha, cfg.alpha, out=cand)
                set_weights(net, cand)
                cand_risk = empirical_risk(net, data)
                if np.isfinite(cand_risk) and cand_risk <= risk + armijo_c * step * slope:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            clamps = int(np.count_nonzero(np.abs(theta + step * direction) > cfg.alpha))
            total_clamps += clamps
            new_grad = gradient(net, data)
            if not np.all(np.isfinite(new_grad)):
                abandoned += 1
                break
            s_vec = cand - theta
            y_vec = new_grad - grad
            sy = float(s_vec @ y_vec)
            if sy > 1e-12:
                rho = 1.0 / sy
                Hy = H @ y_vec
                sHy = np.outer(s_vec, Hy)
                H = (
                    H
                    - rho * (sHy + sHy.T)
                    + rho * rho * float(y_vec @ Hy) * np.outer(s_vec, s_vec)
                    + rho * np.outer(s_vec, s_vec)
                )
            theta, risk, grad = cand, cand_risk, new_grad
            iters += 1
        total_iters += iters
        if np.isfinite(risk) and risk < best_risk:
            best_risk = risk
            best_theta = theta.copy()
    if best_theta is None:
        raise RuntimeError("all restarts abandoned with non-finite risk")
    set_weights(net, best_theta)
    return FitReport(final_risk=float(best_risk), iterations=total_iters,
                     clamp_events=total_clamps, abandoned_restarts=abandoned)


def select_model(data, candidate_Mstars, cfg, split_fraction=0.8):
    """
    Split-sample choice of the number of additive subnets.

    Trains one sparse network per candidate M* on the first
    ceil(split_fraction * n) samples, scores truncated predictions on the
    held-out remainder, and returns (chosen M*, its fitted network); ties go
    to the smallest M*.
    """
    if len(candidate_Mstars) < 1:
        raise ValueError("candidate list must be nonempty")
    if not 0.0 < split_fraction < 1.0:
        raise ValueError("split_fraction must lie in (0, 1)")
    n_learn = int(math.ceil(split_fraction * data.n))
    if n_learn >= data.n:
        raise ValueError("split leaves an empty test set")
    learn = Dataset(X=data.X[:n_learn], Y=data.Y[:n_learn])
    test = Dataset(X=data.X[n_learn:], Y=data.Y[n_learn:])
    best = None
    for idx, m_star in enumerate(sorted(candidate_Mstars)):
        subnets = [
            DenseNetwork.zeros(data.d, cfg.L, cfg.r, cfg.alpha)
            for _ in range(m_star)
        ]
        net = SparseAdditiveNetwork(subnets=subnets, mu=np.zeros(m_star))
        sub_cfg = replace(cfg, seed=cfg.seed + 7919 * (idx + 1))
        train(net, learn, sub_cfg)
        preds = truncate_predict(net, cfg.beta, test.X)
        test_risk = float(np.mean((test.Y - preds) ** 2))
        if best is None or test_risk < best[0]:
            best = (test_risk, m_star, net)
    return best[1], best[2]
