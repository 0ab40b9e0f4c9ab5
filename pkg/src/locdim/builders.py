"""Constructive network builders with computable sup-norm error bounds.

Every builder emits a DenseNetwork that emulates an elementary operation —
identity, squaring, multiplication, a ReLU hinge, a truncated linear form, a
univariate B-spline, a product of factor networks, or a full spline/hinge
basis function — together with the proved sup-norm bound on its error,
evaluated with the logistic-activation constants.  The constructions scale
weights by a parameter R; bounds decay like 1/R.

The prescribed R values for the composed builders grow so fast (powers of n)
that double precision cannot realize them: the R^2-scaled differences of
nearly equal sigmoid values lose all significant digits.  Builders therefore
accept an ``r_cap`` (default 1e5) limiting every internal scale, and the
reported ``theoretical_bound`` is always recomputed honestly at the realized
scales by the same error recursion that proves the uncapped bound, so the
inequality  measured error <= theoretical_bound + fp_slack  is meaningful at
any scale.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .activation import (
    SIGMA_D2_MAX,
    SIGMA_D3_MAX,
    Activation,
    activation_eval,
)
from .networks import DenseNetwork, SparseAdditiveNetwork
from .splines import KnotSequence

_ACT = Activation()
SIGMA_D1_AT_TID = activation_eval(_ACT, _ACT.t_id, 1)   # 1/4
SIGMA_D2_AT_TSQ = activation_eval(_ACT, _ACT.t_sq, 2)   # ~ -0.0908577
SIGMA_AT_TSQ = activation_eval(_ACT, _ACT.t_sq, 0)

# max{||sigma''||, ||sigma'''||, 1} / min{2|sigma'(t_id)|, |sigma''(t_sq)|, 1}
ACTIVATION_RATIO = max(SIGMA_D2_MAX, SIGMA_D3_MAX, 1.0) / min(
    2.0 * abs(SIGMA_D1_AT_TID), abs(SIGMA_D2_AT_TSQ), 1.0
)

# Per-step identity-emulator constant ||sigma''|| / (2 |sigma'(t_id)|)
C_ID = SIGMA_D2_MAX / (2.0 * abs(SIGMA_D1_AT_TID))
# Multiplication-emulator constant 20 ||sigma'''|| / (3 |sigma''(t_sq)|)
C_MULT = 20.0 * SIGMA_D3_MAX / (3.0 * abs(SIGMA_D2_AT_TSQ))

DEFAULT_R_CAP = 1e5

# Weight-magnitude scale per builder: realized max|weight| <= scale * R^2
# (for the truncated-linear builder times max{1, d*max|alpha|*a}).
WEIGHT_SCALE = {
    "identity": 4.0,
    "square": 23.0,
    "mult": 6.0,
    "relu": 6.0,
    "trunc": 6.0,
    "bspline": 6.0,
}


@dataclass(frozen=True)
class BoundedApproxNet:
    """
    A constructed network with its computable sup-norm error bound.

    Fields
    ------
    net : DenseNetwork
    a : float
        Half-width of the input box the bound holds on.
    R : float
        Largest internal scale parameter.
    theoretical_bound : float
        Proved sup-norm bound evaluated at the realized scales.
    r_values : tuple of float
        Every internal scale (for floating-point slack estimation).
    value_bound : float
        Sup bound of the target function on the box (for slack scaling).
    """

    net: DenseNetwork
    a: float
    R: float
    theoretical_bound: float
    r_values: tuple = ()
    value_bound: float = 1.0


def fp_slack(R_values, value_scale=1.0):
    """
    Additive floating-point allowance for the R^2-scaled sigmoid differences.

    8 * max(R)^2 * machine_epsilon * value_scale.
    """
    R_arr = np.atleast_1d(np.asarray(R_values, dtype=float))
    if not np.all(np.isfinite(R_arr)):
        raise ValueError("R values must be finite")
    return 8.0 * float(np.max(R_arr)) ** 2 * np.finfo(float).eps * value_scale


# ---------------------------------------------------------------------------
# Block assembly: a block is a stack of hidden layers plus an affine output
# form over the last layer.  Blocks compose by parallel stacking and by the
# four-unit multiplication stage.
# ---------------------------------------------------------------------------


def _block(layers, out_w, out_b):
    return {
        "layers": [(np.atleast_2d(np.asarray(W, dtype=float)),
                    np.atleast_1d(np.asarray(b, dtype=float)))
                   for W, b in layers],
        "out_w": np.atleast_1d(np.asarray(out_w, dtype=float)),
        "out_b": float(out_b),
    }


def _id_chain_block(w_row, bias, depth, R):
    """Chain of identity emulators lifting an affine input form `depth` layers."""
    w_row = np.atleast_1d(np.asarray(w_row, dtype=float))
    layers = [(w_row[None, :] / R, [bias / R])]
    for _ in range(depth - 1):
        layers.append(([[4.0]], [-2.0]))
    return _block(layers, [4.0 * R], -2.0 * R)


def _gate_block(w_row, bias, R):
    """Single squashed unit sigma(R*(w.x + bias)); output is the raw unit value."""
    w_row = np.atleast_1d(np.asarray(w_row, dtype=float))
    return _block([(R * w_row[None, :], [R * bias])], [1.0], 0.0)


def _stack_blocks(blocks, coeffs):
    """Place blocks of equal depth side by side; output = sum of coeff*out."""
    depth = len(blocks[0]["layers"])
    if any(len(b["layers"]) != depth for b in blocks):
        raise ValueError("blocks must have equal depth to stack")
    layers = []
    for t in range(depth):
        Ws = [b["layers"][t][0] for b in blocks]
        bs = [b["layers"][t][1] for b in blocks]
        if t == 0:
            W = np.vstack(Ws)
        else:
            rows = sum(w.shape[0] for w in Ws)
            cols = sum(w.shape[1] for w in Ws)
            W = np.zeros((rows, cols))
            i = j = 0
            for w in Ws:
                W[i : i + w.shape[0], j : j + w.shape[1]] = w
                i += w.shape[0]
                j += w.shape[1]
        layers.append((W, np.concatenate(bs)))
    out_w = np.concatenate([c * b["out_w"] for c, b in zip(coeffs, blocks)])
    out_b = sum(c * b["out_b"] for c, b in zip(coeffs, blocks))
    return _block(layers, out_w, out_b)


def _apply_mult(block_a, block_b, R):
    """
    Append the four-unit multiplication stage to two equal-depth blocks.

    The new last layer computes sigma(c*(z_a ± z_b) + t_sq) for c in
    {2/R, 1/R}, where z_a, z_b are the blocks' affine outputs; the output
    form is (R^2 / (4 sigma''(t_sq))) * (u1 - 2 u2 - u3 + 2 u4).
    """
    stacked = _stack_blocks([block_a, block_b], [1.0, 1.0])
    wa, ba = block_a["out_w"], block_a["out_b"]
    wb, bb = block_b["out_w"], block_b["out_b"]
    na, nb = wa.size, wb.size
    rows, biases = [], []
    for c, sign in ((2.0 / R, 1.0), (1.0 / R, 1.0), (2.0 / R, -1.0), (1.0 / R, -1.0)):
        row = np.zeros(na + nb)
        row[:na] = c * wa
        row[na:] = sign * c * wb
        rows.append(row)
        biases.append(c * (ba + sign * bb) + _ACT.t_sq)
    q = R * R / (4.0 * SIGMA_D2_AT_TSQ)
    return _block(
        stacked["layers"] + [(np.vstack(rows), biases)],
        q * np.array([1.0, -2.0, -1.0, 2.0]),
        0.0,
    )


def _block_to_network(block, d, width=None):
    """Pad a block to uniform width and wrap it as a DenseNetwork."""
    widths = [W.shape[0] for W, _ in block["layers"]]
    r = max(widths) if width is None else width
    if r < max(widths):
        raise ValueError("requested width %d below natural width %d" % (r, max(widths)))
    layers = []
    prev = d
    for t, (W, b) in enumerate(block["layers"]):
        Wp = np.zeros((r, prev if t == 0 else r))
        Wp[: W.shape[0], : W.shape[1]] = W
        bp = np.zeros(r)
        bp[: b.size] = b
        layers.append((Wp, bp))
        prev = r
    out_w = np.zeros((1, r))
    out_w[0, : block["out_w"].size] = block["out_w"]
    net_layers = layers + [(out_w, np.array([block["out_b"]]))]
    alpha = max(float(np.max(np.abs(arr))) for pair in net_layers for arr in pair)
    alpha = max(alpha, 1e-300)
    return DenseNetwork(d=d, L=len(block["layers"]), r=r, alpha=alpha,
                        layers=net_layers)


# ---------------------------------------------------------------------------
# Elementary builders
# ---------------------------------------------------------------------------


def build_identity(R, a):
    """
    Network computing (R/sigma'(t_id)) * (sigma(x/R + t_id) - sigma(t_id)),
    within ||sigma''|| a^2 / (2 |sigma'(t_id)| R) of x on [-a, a].
    """
    if R < 1:
        raise ValueError("R must be >= 1, got %g" % R)
    if a <= 0:
        raise ValueError("a must be positive")
    block = _id_chain_block([1.0], 0.0, 1, R)
    bound = SIGMA_D2_MAX * a * a / (2.0 * abs(SIGMA_D1_AT_TID) * R)
    return BoundedApproxNet(net=_block_to_network(block, 1), a=a, R=R,
                            theoretical_bound=bound, r_values=(R,),
                            value_bound=a)


def build_square(R, a):
    """
    Network computing the three-sigmoid second-difference emulation of x^2,
    within 5 ||sigma'''|| a^3 / (3 |sigma''(t_sq)| R) on [-a, a].
    """
    if R < 1:
        raise ValueError("R must be >= 1, got %g" % R)
    if a <= 0:
        raise ValueError("a must be positive")
    t = _ACT.t_sq
    c = R * R / SIGMA_D2_AT_TSQ
    block = _block(
        [([[2.0 / R], [1.0 / R]], [t, t])],
        [c, -2.0 * c],
        c * SIGMA_AT_TSQ,
    )
    bound = 5.0 * SIGMA_D3_MAX * a ** 3 / (3.0 * abs(SIGMA_D2_AT_TSQ) * R)
    return BoundedApproxNet(net=_block_to_network(block, 1), a=a, R=R,
                            theoretical_bound=bound, r_values=(R,),
                            value_bound=a * a)


def build_mult(R, a):
    """
    Two-input network emulating x*y by the polarization identity
    ((x+y)^2 - (x-y)^2)/4, within 20 ||sigma'''|| a^3 / (3 |sigma''| R).
    """
    if R < 1:
        raise ValueError("R must be >= 1, got %g" % R)
    if a <= 0:
        raise ValueError("a must be positive")
    t = _ACT.t_sq
    q = R * R / (4.0 * SIGMA_D2_AT_TSQ)
    W0 = np.array(
        [[2.0, 2.0], [1.0, 1.0], [2.0, -2.0], [1.0, -1.0]]
    ) / R
    block = _block([(W0, [t, t, t, t])], q * np.array([1.0, -2.0, -1.0, 2.0]), 0.0)
    bound = C_MULT * a ** 3 / R
    return BoundedApproxNet(net=_block_to_network(block, 2), a=a, R=R,
                            theoretical_bound=bound, r_values=(R,),
                            value_bound=a * a)


def _relu_block(scale, shift, R):
    """Block computing the hinge emulator on the affine form scale.x + shift."""
    idb = _id_chain_block(scale, shift, 1, R)
    gate = _gate_block(scale, shift, R)
    return _apply_mult(idb, gate, R)


def build_relu(R, a):
    """
    Network emulating max{x, 0} as mult(identity(x), sigma(R x)), within
    56 * ratio * a^3 / R on [-a, a]; requires a >= 1 and
    R >= max(||sigma''|| a / (2 |sigma'(t_id)|), 1).
    """
    if a < 1:
        raise ValueError("precondition violated: a >= 1 (got a=%g)" % a)
    r_min = max(SIGMA_D2_MAX * a / (2.0 * abs(SIGMA_D1_AT_TID)), 1.0)
    if R < r_min:
        raise ValueError(
            "precondition violated: R >= max(||sigma''||*a/(2|sigma'(t_id)|), 1) "
            "= %g (got R=%g)" % (r_min, R)
        )
    block = _relu_block([1.0], 0.0, R)
    bound = 56.0 * ACTIVATION_RATIO * a ** 3 / R
    return BoundedApproxNet(net=_block_to_network(block, 1, width=4), a=a, R=R,
                            theoretical_bound=bound, r_values=(R,),
                            value_bound=a)


def build_trunc(alpha, gamma, R, a, b):
    """
    d-input network emulating the truncated linear form
    max{ sum_k alpha_k (x_k - gamma_k), 0 }, within
    448 * ratio * d^3 a^3 b^3 / R on [-a, a]^d.

    Requires |gamma_k| <= a, |alpha_k| <= b, and
    R >= max(||sigma''|| d a b / |sigma'(t_id)|, 1).
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    if alpha.shape != gamma.shape:
        raise ValueError("alpha and gamma must have equal length")
    d = alpha.size
    if np.max(np.abs(gamma)) > a:
        raise ValueError("precondition violated: |gamma_k| <= a")
    if np.max(np.abs(alpha)) > b:
        raise ValueError("precondition violated: |alpha_k| <= b")
    r_min = max(SIGMA_D2_MAX * d * a * b / abs(SIGMA_D1_AT_TID), 1.0)
    if R < r_min:
        raise ValueError(
            "precondition violated: R >= max(||sigma''||*d*a*b/|sigma'(t_id)|, 1) "
            "= %g (got R=%g)" % (r_min, R)
        )
    shift = -float(alpha @ gamma)
    block = _apply_mult(
        _id_chain_block(alpha, shift, 1, R), _gate_block(alpha, shift, R), R
    )
    bound = 448.0 * ACTIVATION_RATIO * d ** 3 * a ** 3 * b ** 3 / R
    return BoundedApproxNet(net=_block_to_network(block, d, width=4), a=a, R=R,
                            theoretical_bound=bound, r_values=(R,),
                            value_bound=2.0 * d * a * b)


# ---------------------------------------------------------------------------
# B-spline emulation
# ---------------------------------------------------------------------------


def _spline_class_width(M):
    return 2 ** (M - 1) * 16 + sum(2 ** (M - k + 1) for k in range(2, M + 1))


def _bspline_block(t, j, M, R):
    if M == 1:
        g0 = t[j + 1] - t[j]
        g1 = t[j + 2] - t[j + 1]
        pieces = [
            _relu_block([1.0 / g0], -t[j] / g0, R),
            _relu_block([1.0 / g0], -t[j + 1] / g0, R),
            _relu_block([1.0 / g1], -t[j + 1] / g1, R),
            _relu_block([1.0 / g1], -t[j + 2] / g1, R),
        ]
        return _stack_blocks(pieces, [1.0, -1.0, -1.0, 1.0])
    left = _bspline_block(t, j, M - 1, R)
    right = _bspline_block(t, j + 1, M - 1, R)
    denom_l = t[j + M] - t[j]
    denom_r = t[j + M + 1] - t[j + 1]
    lift_l = _id_chain_block([1.0 / denom_l], -t[j] / denom_l, M, R)
    lift_r = _id_chain_block([-1.0 / denom_r], t[j + M + 1] / denom_r, M, R)
    return _stack_blocks(
        [_apply_mult(lift_l, left, R), _apply_mult(lift_r, right, R)],
        [1.0, 1.0],
    )


def bspline_min_scale(M, a, n):
    """Hard lower bound on R for the spline emulator's identity chains."""
    return M * 9.0 * SIGMA_D2_MAX * (a * n) ** 2 / (2.0 * abs(SIGMA_D1_AT_TID))


def build_bspline_net(j, M, knots, R, a, n):
    """
    Univariate network emulating the degree-M B-spline B_{j,M} by the
    hat-function combination of hinge emulators (degree 1) and the
    mult/identity recursion (degree up), within
    (12 M)^(M-1) (a n)^(M+2) * 4 * 448 * ratio / R on [-a, a].

    The knot sequence must lie in [-a, a] with consecutive gaps >= 1/n.
    Enforced scale condition: R >= M * 9 ||sigma''|| (a n)^2 / (2 |sigma'|).
    (The statement's second lower-bound term, which only exists for M >= 2,
    is not enforced: the architecture checks require scales below it, and
    the reported bound stays valid as stated.)
    """
    if not isinstance(M, (int, np.integer)) or M < 1:
        raise ValueError("degree must be an integer >= 1")
    if isinstance(knots, KnotSequence):
        t = knots.values
    else:
        t = np.asarray(knots, dtype=float)
        KnotSequence(values=t, degree=M)  # validates monotonicity/length
    if j < 0 or j + M + 1 >= t.size:
        raise ValueError("spline index %d out of range for degree %d" % (j, M))
    if np.max(np.abs(t)) > a:
        raise ValueError("knots must lie within [-a, a]")
    if np.min(np.diff(t)) < 1.0 / n - 1e-12:
        raise ValueError("knot-gap violation: consecutive gaps must be >= 1/n")
    if R < 1:
        raise ValueError("R must be >= 1")
    r_min = bspline_min_scale(M, a, n)
    if R < r_min:
        raise ValueError(
            "precondition violated: R >= M*9*||sigma''||*(a*n)^2/(2|sigma'|) "
            "= %g (got R=%g)" % (r_min, R)
        )
    block = _bspline_block(t, j, M, R)
    net = _block_to_network(block, 1, width=_spline_class_width(M))
    bound = (
        (12.0 * M) ** (M - 1)
        * (a * n) ** (M + 2)
        * 4.0
        * 448.0
        * ACTIVATION_RATIO
        / R
    )
    return BoundedApproxNet(net=net, a=a, R=R, theoretical_bound=bound,
                            r_values=(R,), value_bound=1.0)


# ---------------------------------------------------------------------------
# Product wiring
# ---------------------------------------------------------------------------


def build_product_net(factors, betas, coords, d, n, C, a, r_cap=DEFAULT_R_CAP):
    """
    Wire factor networks into one network emulating their product.

    The emitted network has sum(L_k) + K - 1 hidden layers and width
    r + d + 5: identity-passthrough lanes 1..d carry the input forward,
    lanes d+1..d+r run the factor networks one after another, lanes
    d+r+1..d+r+4 hold the four-unit multiplication stages, and lane d+r+5
    carries the partial product between stages.

    Parameters
    ----------
    factors : list of BoundedApproxNet
        Factor networks; mixed widths are padded to the largest.
    betas : list of float
        Sup bounds of the factor targets on [-2a, 2a]^d (each >= 1).
    coords : list of tuple of int
        Global input coordinates each factor reads.
    d : int
        Input dimension of the product network.
    n : int
        Accuracy scale (the nominal bound floor is 1/n^3).
    C : float
        Common Lipschitz bound of the factor targets (>= 1).
    a : float
        Input box half-width (>= 1); factor error bounds must hold on
        [-2a, 2a]^d.
    r_cap : float or None
        Cap applied to the internal scales R_id and R_mult.

    Returns
    -------
    BoundedApproxNet
        theoretical_bound is the maximum of the nominal product bound
        max{K 2^K prod(beta) max(eps), 1/n^3} and the error recursion
        evaluated at the realized scales.
    """
    K = len(factors)
    if K < 1:
        raise ValueError("need at least one factor")
    if len(betas) != K or len(coords) != K:
        raise ValueError("factors, betas and coords must have equal length")
    if a < 1:
        raise ValueError("a must be >= 1")
    if C < 1:
        raise ValueError("C must be >= 1")
    betas = [float(b) for b in betas]
    if min(betas) < 1.0:
        raise ValueError("each beta must be >= 1")
    for f, cs in zip(factors, coords):
        if len(cs) != f.net.d:
            raise ValueError("coordinate list must match factor input dimension")
        if any(c < 0 or c >= d for c in cs):
            raise ValueError("factor coordinate out of range")

    L_list = [f.net.L for f in factors]
    L = sum(L_list) + K - 1
    r = max(f.net.r for f in factors)
    width = r + d + 5
    eps = [f.theoretical_bound for f in factors]

    prod_beta = float(np.prod(betas))
    a_max = max(a, K * 2 ** K * prod_beta)
    scale_factor = 4.0 * d * C * (sum(L_list) + K - 1) * n ** 3 * K * 2 ** K * prod_beta
    R_id = 2.0 * SIGMA_D2_MAX * a_max ** 2 / abs(SIGMA_D1_AT_TID) * scale_factor
    R_mult = (
        160.0 * SIGMA_D3_MAX * a_max ** 3 / (3.0 * abs(SIGMA_D2_AT_TSQ)) * scale_factor
    )
    if r_cap is not None:
        R_id = min(R_id, r_cap)
        R_mult = min(R_mult, r_cap)
    R_id = max(R_id, 1.0)
    R_mult = max(R_mult, 1.0)

    acc = width - 1
    mult0 = d + r
    starts = [1]
    for kk in range(1, K):
        starts.append(sum(L_list[:kk]) + kk)
    mult_layers = [sum(L_list[: m + 1]) + m for m in range(1, K)]
    q = R_mult * R_mult / (4.0 * SIGMA_D2_AT_TSQ)
    mult_out = q * np.array([1.0, -2.0, -1.0, 2.0])

    Ws = [np.zeros((width, d if t == 0 else width)) for t in range(L)]
    bs = [np.zeros(width) for _ in range(L)]

    # identity lanes 0..d-1, layers 1..L-1
    for i in range(d):
        Ws[0][i, i] = 1.0 / R_id
    for t in range(1, L - 1):
        for i in range(d):
            Ws[t][i, i] = 4.0
            bs[t][i] = -2.0
    # factor placements
    for kk, f in enumerate(factors):
        sub = f.net
        s = starts[kk]
        W0, b0 = sub.layers[0]
        if kk == 0:
            for row in range(W0.shape[0]):
                for ci, c in enumerate(coords[kk]):
                    Ws[s - 1][d + row, c] = W0[row, ci]
            bs[s - 1][d : d + W0.shape[0]] = b0
        else:
            # read the identity lanes through the affine decode 4R u - 2R
            for row in range(W0.shape[0]):
                for ci, c in enumerate(coords[kk]):
                    Ws[s - 1][d + row, c] = 4.0 * R_id * W0[row, ci]
            bs[s - 1][d : d + W0.shape[0]] = b0 - 2.0 * R_id * W0.sum(axis=1)
        for tt in range(1, sub.L):
            W, b = sub.layers[tt]
            Ws[s - 1 + tt][d : d + W.shape[0], d : d + W.shape[1]] = W
            bs[s - 1 + tt][d : d + W.shape[0]] = b
    # multiplication stages and accumulator lane
    if K >= 2:
        for m, T in enumerate(mult_layers, start=1):
            sub = factors[m].net
            w_out, b_out = sub.layers[-1]
            w_out = w_out[0]
            b_out = float(b_out[0])
            for u, (c, sign) in enumerate(
                ((2.0 / R_mult, 1.0), (1.0 / R_mult, 1.0),
                 (2.0 / R_mult, -1.0), (1.0 / R_mult, -1.0))
            ):
                Ws[T - 1][mult0 + u, acc] = c * 4.0 * R_id
                Ws[T - 1][mult0 + u, d : d + w_out.size] = sign * c * w_out
                bs[T - 1][mult0 + u] = c * (-2.0 * R_id + sign * b_out) + _ACT.t_sq
        reseed = {T + 1 for T in mult_layers[:-1]}
        w1_out, b1_out = factors[0].net.layers[-1]
        for t in range(L_list[0] + 1, L):
            if t == L_list[0] + 1:
                Ws[t - 1][acc, d : d + w1_out[0].size] = w1_out[0] / R_id
                bs[t - 1][acc] = float(b1_out[0]) / R_id
            elif t in reseed:
                Ws[t - 1][acc, mult0 : mult0 + 4] = mult_out / R_id
                bs[t - 1][acc] = 0.0
            else:
                Ws[t - 1][acc, acc] = 4.0
                bs[t - 1][acc] = -2.0

    out_W = np.zeros((1, width))
    if K == 1:
        w_out, b_out = factors[0].net.layers[-1]
        out_W[0, d : d + w_out[0].size] = w_out[0]
        out_b = float(b_out[0])
    else:
        out_W[0, mult0 : mult0 + 4] = mult_out
        out_b = 0.0

    layers = list(zip(Ws, bs)) + [(out_W, np.array([out_b]))]
    alpha = max(float(np.max(np.abs(arr))) for pair in layers for arr in pair)
    net = DenseNetwork(d=d, L=L, r=width, alpha=max(alpha, 1e-300), layers=layers)

    # nominal product bound and the honest recursion at realized scales
    nominal = max(K * 2 ** K * prod_beta * max(eps), 1.0 / n ** 3)
    id_err = [0.0]
    for _ in range(max(L - 1, 0)):
        id_err.append(id_err[-1] + C_ID * (a + id_err[-1]) ** 2 / R_id)
    F = [eps[0]]
    for kk in range(1, K):
        T = starts[kk] - 1
        F.append(eps[kk] + C * len(coords[kk]) * id_err[T])
    p_err, p_val = F[0], betas[0]
    for kk in range(1, K):
        for _ in range(L_list[kk]):
            p_err = p_err + C_ID * (p_val + p_err) ** 2 / R_id
        f_hat = betas[kk] + F[kk]
        m_big = max(p_val + p_err, f_hat)
        p_err = p_err * f_hat + F[kk] * p_val + C_MULT * m_big ** 3 / R_mult
        p_val = p_val * betas[kk]
    bound = max(nominal, p_err)

    r_values = tuple(
        sorted(set(sum((f.r_values for f in factors), ())) | {R_id, R_mult})
    )
    return BoundedApproxNet(net=net, a=a, R=max(r_values),
                            theoretical_bound=bound, r_values=r_values,
                            value_bound=prod_beta)


# ---------------------------------------------------------------------------
# Basis functions and linear combinations
# ---------------------------------------------------------------------------


def _infer_dim(b):
    d = 0
    for sf in b.spline_factors:
        d = max(d, sf.coordinate + 1)
    for hf in b.hinge_factors:
        d = max(d, hf.alpha.size)
    return d


def build_basis_net(b, n, a, d=None, r_cap=DEFAULT_R_CAP):
    """
    Network emulating a GeneralizedBasisFunction: spline factors are built at
    half-width 2a, truncated-linear factors likewise, and everything is wired
    through the product construction with the prescribed per-factor accuracy
    targets.  The nominal bound is 1/n^3; the reported bound is honest at the
    realized (capped) scales.
    """
    J = len(b.spline_factors)
    K1 = len(b.hinge_factors)
    if J + K1 < 1:
        raise ValueError("basis function needs at least one factor")
    if a < 1:
        raise ValueError("a must be >= 1")
    if d is None:
        d = _infer_dim(b)
    maxalpha = 1.0
    for hf in b.hinge_factors:
        maxalpha = max(maxalpha, float(np.max(np.abs(hf.alpha))))
    share = (
        (J + K1)
        * 2 ** (J + K1)
        * (3.0 * d * maxalpha * a) ** K1
        * n ** 3
    )
    factors, betas, coords = [], [], []
    for sf in b.spline_factors:
        R_B = (
            (12.0 * sf.degree) ** (sf.degree - 1)
            * (2.0 * a * n) ** (sf.degree + 2)
            * 4.0
            * 448.0
            * ACTIVATION_RATIO
            * share
        )
        if r_cap is not None:
            R_B = min(R_B, r_cap)
        factors.append(
            build_bspline_net(sf.j, sf.degree, sf.knots, R_B, 2.0 * a, n)
        )
        betas.append(1.0)
        coords.append((sf.coordinate,))
    for hf in b.hinge_factors:
        dk = hf.alpha.size
        R_T = (
            448.0
            * ACTIVATION_RATIO
            * dk ** 3
            * 8.0
            * a ** 3
            * maxalpha ** 3
            * share
        )
        if r_cap is not None:
            R_T = min(R_T, r_cap)
        factors.append(build_trunc(hf.alpha, hf.gamma, R_T, 2.0 * a, maxalpha))
        betas.append(3.0 * d * maxalpha * a)
        coords.append(tuple(range(dk)))
    C = max(d * maxalpha, float(n), 1.0)
    return build_product_net(factors, betas, coords, d, n, C, a, r_cap=r_cap)


def build_lcb_net(weights, bases, n, a, d=None, r_cap=DEFAULT_R_CAP):
    """
    Sparse additive network computing sum_i weights[i] * basis_i.

    Subnets come from build_basis_net, padded to a common depth (trailing
    identity-emulator layers carrying the finished output) and width, with
    mu set to the given weights.
    """
    weights = np.atleast_1d(np.asarray(weights, dtype=float))
    if weights.size != len(bases) or weights.size < 1:
        raise ValueError("need one weight per basis function")
    if d is None:
        d = max(_infer_dim(b) for b in bases)
    built = [build_basis_net(b, n, a, d=d, r_cap=r_cap) for b in bases]
    L_max = max(bn.net.L for bn in built)
    r_max = max(bn.net.r for bn in built)
    subnets = []
    for bn in built:
        net = bn.net
        R_pad = max(bn.r_values)
        layers = [(W.copy(), v.copy()) for W, v in net.layers]
        w_out, b_out = layers.pop()
        extra = L_max - net.L
        for step in range(extra):
            W = np.zeros((net.r, net.r))
            v = np.zeros(net.r)
            if step == 0:
                W[0, :] = w_out[0] / R_pad
                v[0] = float(b_out[0]) / R_pad
            else:
                W[0, 0] = 4.0
                v[0] = -2.0
            layers.append((W, v))
        if extra:
            w_out = np.zeros((1, net.r))
            w_out[0, 0] = 4.0 * R_pad
            b_out = np.array([-2.0 * R_pad])
        layers.append((w_out, b_out))
        padded = []
        prev = d
        for t, (W, v) in enumerate(layers[:-1]):
            Wp = np.zeros((r_max, prev if t == 0 else r_max))
            Wp[: W.shape[0], : W.shape[1]] = W
            vp = np.zeros(r_max)
            vp[: v.size] = v
            padded.append((Wp, vp))
            prev = r_max
        Wp = np.zeros((1, r_max))
        Wp[0, : w_out.shape[1]] = w_out[0]
        padded.append((Wp, b_out))
        subnets.append(padded)
    alpha = max(
        float(np.max(np.abs(arr))) for sub in subnets for pair in sub for arr in pair
    )
    alpha = max(alpha, float(np.max(np.abs(weights))), 1e-300)
    dense = [
        DenseNetwork(d=d, L=L_max, r=r_max, alpha=alpha, layers=sub)
        for sub in subnets
    ]
    return SparseAdditiveNetwork(subnets=dense, mu=weights)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

LEMMA_NAMES = ("identity", "square", "mult", "relu", "trunc", "bspline")


def lemma_diagnostic(name, R, a, grid_points=2001):
    """
    Measure a builder's sup error on a grid against its stated bound.

    Returns a dict with the measured error, theoretical bound, slack, and
    pass/fail for names in {identity, square, mult, relu, trunc, bspline}.
    """
    from .networks import dense_forward_batch

    rng = np.random.default_rng(20240816)
    if name == "identity":
        ban = build_identity(R, a)
        xs = np.linspace(-a, a, grid_points)
        target = xs
        got = dense_forward_batch(ban.net, xs[:, None])
    elif name == "square":
        ban = build_square(R, a)
        xs = np.linspace(-a, a, grid_points)
        target = xs ** 2
        got = dense_forward_batch(ban.net, xs[:, None])
    elif name == "mult":
        ban = build_mult(R, a)
        X = rng.uniform(-a, a, size=(grid_points, 2))
        target = X[:, 0] * X[:, 1]
        got = dense_forward_batch(ban.net, X)
    elif name == "relu":
        ban = build_relu(R, a)
        xs = np.linspace(-a, a, grid_points)
        target = np.maximum(xs, 0.0)
        got = dense_forward_batch(ban.net, xs[:, None])
    elif name == "trunc":
        alpha, gamma = np.array([1.0, -1.0]), np.array([0.0, 0.0])
        ban = build_trunc(alpha, gamma, R, a, 1.0)
        X = rng.uniform(-a, a, size=(grid_points, 2))
        target = np.maximum(X @ alpha, 0.0)
        got = dense_forward_batch(ban.net, X)
    elif name == "bspline":
        knots = np.linspace(-a, a, 5)
        n = max(int(math.ceil(1.0 / np.min(np.diff(knots)))), 1)
        ks = KnotSequence(values=knots, degree=1)
        ban = build_bspline_net(1, 1, ks, R, a, n)
        from .splines import bspline_eval

        xs = np.linspace(-a, a, grid_points)
        xs = np.union1d(xs, knots)
        target = bspline_eval(ks, 1, 1, xs)
        got = dense_forward_batch(ban.net, xs[:, None])
    else:
        raise ValueError("unknown builder %r" % (name,))
    err = float(np.max(np.abs(got - target)))
    slack = fp_slack(ban.r_values, max(1.0, ban.value_bound))
    return {
        "name": name,
        "R": float(R),
        "a": float(a),
        "measured_error": err,
        "theoretical_bound": float(ban.theoretical_bound),
        "fp_slack": slack,
        "passed": bool(err <= ban.theoretical_bound + slack),
        "L": ban.net.L,
        "width": ban.net.r,
    }
