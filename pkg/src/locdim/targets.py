"""Exact target regression functions for the simulation study.

Three functions m1, m2, m3 on [0,1]^10, each piecewise over halfspaces
H1/H2/H3 (evaluated exactly as printed, including overlapping pieces for
m3), plus a two-dimensional function "fig2" with low local dimensionality:
four quadrant polytopes on [-2,2]^2, each carrying a univariate piece, with
hinge-squeeze blended transitions.

m2 contains cot(pi / (1 + exp(...))): on the [0,1]^10 support the inner
value stays inside [0.845, 3.086] and the cotangent is finite, but the
evaluation still clamps the inner value to [1e-8, pi - 1e-8] and counts
clamp events (off-support robustness).  m2 also contains
sqrt(x3 + 0.9*x4 + 0.1), which is real on the support; negative arguments
raise instead of going complex.
"""

from dataclasses import dataclass

import numpy as np

from .basis import Halfspace, Polytope

H1_WEIGHTS = np.array([0.1, 0.4, 0.3, 0.1, 0.2, 0.3, 0.6, 0.02, 0.7, 0.6])
H1_BOUND = 1.63
H2_BOUND = 1.6
H3_WEIGHTS = np.array([4.0, 2.0, 1.0, 4.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0])
H3_BOUND = 7.5

COT_CLAMP_LO = 1e-8
COT_CLAMP_HI = np.pi - 1e-8

# Count of cot-argument clamp events in m2 (reported by the harness).
CLAMP_COUNTER = {"m2_cot": 0}


def reset_clamp_counter():
    CLAMP_COUNTER["m2_cot"] = 0


def in_h1(X):
    return X @ H1_WEIGHTS <= H1_BOUND


def in_h2(X):
    return X @ H1_WEIGHTS <= H2_BOUND


def in_h3(X):
    return X @ H3_WEIGHTS <= H3_BOUND


def _as_batch(x, d):
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != d:
        raise ValueError("expected %d-dimensional inputs, got shape %s" % (d, X.shape))
    return X, single


def m1(x):
    """First target on [0,1]^10: two branches split by the halfspace H1."""
    X, single = _as_batch(x, 10)
    h1 = in_h1(X)
    out = np.empty(X.shape[0])
    A = X[h1]
    out[h1] = 10.0 / (1.0 + A[:, 0] ** 2) + 5.0 * np.sin(A[:, 2] * A[:, 3]) + 2.0 * A[:, 4]
    B = X[~h1]
    out[~h1] = np.exp(B[:, 0]) + B[:, 1] ** 2 + np.sin(B[:, 2] * B[:, 3]) - 3.0
    return out[0] if single else out


def _cot_term(X):
    g = X[:, 0] ** 2 + 2.0 * X[:, 1] + np.sin(6.0 * X[:, 3] ** 3) - 3.0
    inner = np.pi / (1.0 + np.exp(g))
    clamped = np.clip(inner, COT_CLAMP_LO, COT_CLAMP_HI)
    CLAMP_COUNTER["m2_cot"] += int(np.count_nonzero(clamped != inner))
    return np.cos(clamped) / np.sin(clamped)


def m2(x):
    """Second target on [0,1]^10; cot branch everywhere, extra exp off H1."""
    X, single = _as_batch(x, 10)
    root_arg = X[:, 2] + 0.9 * X[:, 3] + 0.1
    if np.any(root_arg < 0):
        raise ValueError("x3 + 0.9*x4 + 0.1 must be nonnegative")
    out = _cot_term(X)
    off = ~in_h1(X)
    B = X[off]
    out[off] += np.exp(
        3.0 * B[:, 2] + 2.0 * B[:, 3] - 5.0 * B[:, 0] + np.sqrt(root_arg[off])
    )
    return out[0] if single else out


def m3(x):
    """Third target on [0,1]^10; three overlapping pieces, summed as printed."""
    X, single = _as_batch(x, 10)
    h2, h3 = in_h2(X), in_h3(X)
    masks = (h2 | h3, (~h2) | h3, ~h3)
    out = np.zeros(X.shape[0])
    A = X[masks[0]]
    out[masks[0]] += 2.0 * np.log(
        A[:, 0] * A[:, 1] + 4.0 * A[:, 2] + np.abs(np.tan(A[:, 3]))
    )
    B = X[masks[1]]
    out[masks[1]] += B[:, 2] ** 4 * B[:, 4] ** 2 * B[:, 5] - B[:, 3] * B[:, 6]
    C = X[masks[2]]
    out[masks[2]] += (3.0 * C[:, 7] ** 2 + C[:, 8] + 2.0) ** (
        0.1 + 4.0 * C[:, 9] ** 2
    )
    return out[0] if single else out


@dataclass
class LocalDimTarget:
    """
    Piecewise target squeezed between polytope indicator envelopes.

    pieces : list of (Polytope, callable)
        Each callable maps a batch (n, d) to piece values (n,).

    Evaluation blends the pieces with the product of hinge-squeeze ramps and
    clamps the result into the interval spanned by the lower envelope
    (sum over delta-shrunk polytopes containing x) and the upper envelope
    (sum over delta-enlarged ones).  Where lower <= upper — which can fail
    on thin transition strips when pieces have opposite signs — the clamp
    enforces the squeeze inequality exactly.
    """

    pieces: list

    def lower_envelope(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(X.shape[0])
        for poly, f in self.pieces:
            mask = poly.contains_shrunk(X)
            if np.any(mask):
                out[mask] += f(X[mask])
        return out

    def upper_envelope(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(X.shape[0])
        for poly, f in self.pieces:
            mask = poly.contains_enlarged(X)
            if np.any(mask):
                out[mask] += f(X[mask])
        return out

    def eval_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        raw = np.zeros(X.shape[0])
        for poly, f in self.pieces:
            w = poly.squeeze_weight(X)
            active = w > 0
            if np.any(active):
                raw[active] += f(X[active]) * w[active]
        lower = self.lower_envelope(X)
        upper = self.upper_envelope(X)
        lo = np.minimum(lower, upper)
        hi = np.maximum(lower, upper)
        return np.clip(raw, lo, hi)


def _box_polytope(x1_lo, x1_hi, x2_lo, x2_hi, delta=0.1):
    return Polytope(
        halfspaces=(
            Halfspace(a=np.array([1.0, 0.0]), b=x1_hi, delta=delta),
            Halfspace(a=np.array([-1.0, 0.0]), b=-x1_lo, delta=delta),
            Halfspace(a=np.array([0.0, 1.0]), b=x2_hi, delta=delta),
            Halfspace(a=np.array([0.0, -1.0]), b=-x2_lo, delta=delta),
        )
    )


FIG2_POLYTOPES = (
    _box_polytope(-2.0, 0.0, -2.0, 0.0),
    _box_polytope(-2.0, 0.0, 0.0, 2.0),
    _box_polytope(0.0, 2.0, 0.0, 2.0),
    _box_polytope(0.0, 2.0, -2.0, 0.0),
)

FIG2_PIECES = (
    lambda X: np.sin(4.0 * X[:, 0]),
    lambda X: np.exp(X[:, 1]),
    lambda X: np.cos(4.0 * X[:, 1]),
    lambda X: np.exp(X[:, 0]),
)

FIG2_TARGET = LocalDimTarget(pieces=list(zip(FIG2_POLYTOPES, FIG2_PIECES)))


def fig2(x):
    """Two-dimensional blended target on [-2,2]^2 (one variable per quadrant)."""
    X, single = _as_batch(x, 2)
    out = FIG2_TARGET.eval_batch(X)
    return out[0] if single else out


TARGET_DIMS = {"m1": 10, "m2": 10, "m3": 10, "fig2": 2}
SUPPORT_BOX = {"m1": (0.0, 1.0), "m2": (0.0, 1.0), "m3": (0.0, 1.0), "fig2": (-2.0, 2.0)}
_TARGET_FUNCS = {"m1": m1, "m2": m2, "m3": m3, "fig2": fig2}


def target_eval(name, x):
    """Evaluate a named target at one point (or a batch of rows)."""
    if name not in _TARGET_FUNCS:
        raise ValueError("unknown target %r; choose from %s" % (name, sorted(_TARGET_FUNCS)))
    return _TARGET_FUNCS[name](x)


def piece_masks(name, X):
    """
    Boolean piece-membership masks used for per-piece spread calibration.

    m1/m2 split on H1; m3 uses the three printed (overlapping) index sets;
    fig2 uses its four quadrant polytopes (closed delta-enlargements, so a
    transition-zone point belongs to every shell it touches).  Masks may
    overlap; consumers assign each point to the first true mask.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if name in ("m1", "m2"):
        h1 = in_h1(X)
        return [h1, ~h1]
    if name == "m3":
        h2, h3 = in_h2(X), in_h3(X)
        return [h2 | h3, (~h2) | h3, ~h3]
    if name == "fig2":
        return [poly.contains_enlarged(X) for poly in FIG2_POLYTOPES]
    raise ValueError("unknown target %r" % (name,))
