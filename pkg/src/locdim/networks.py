"""Dense and sparse additive feedforward networks.

A DenseNetwork is a fully connected multilayer perceptron with ``L`` hidden
layers of uniform width ``r``, logistic activations inside, and an affine
output neuron.  A SparseAdditiveNetwork is a weighted sum of ``M`` dense
subnetworks sharing the same architecture: f(x) = sum_i mu_i * f_i(x).  All
weights (and the outer coefficients mu) are bounded in absolute value by
``alpha``.

Layer weight shapes for width r on input dimension d:

* layer 0: W (r, d), b (r,)
* hidden layers 1..L-1: W (r, r), b (r,)
* output: W (1, r), b (1,)

Networks are plain mutable containers; evaluation never mutates them, but
projection and optimizer updates do (single-writer contract).
"""

from dataclasses import dataclass, field

import numpy as np

from .activation import Activation, logistic
from .serialize import canonical_dumps


@dataclass
class DenseNetwork:
    """
    Fully connected network with L hidden layers of width r.

    Parameters
    ----------
    d : int
        Input dimension.
    L : int
        Number of hidden layers (>= 1).
    r : int
        Uniform hidden-layer width (>= 1).
    alpha : float
        Weight bound; every stored weight satisfies |w| <= alpha.
    layers : list of (W, b) pairs
        L+1 entries: L hidden layers followed by the affine output layer.
    activation : Activation
    """

    d: int
    L: int
    r: int
    alpha: float
    layers: list
    activation: Activation = field(default_factory=Activation)

    def __post_init__(self):
        if self.d < 1 or self.L < 1 or self.r < 1:
            raise ValueError("d, L, r must be positive")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if len(self.layers) != self.L + 1:
            raise ValueError(
                "expected %d layer blocks, got %d" % (self.L + 1, len(self.layers))
            )
        shapes = layer_shapes(self.d, self.L, self.r)
        fixed = []
        for k, (W, b) in enumerate(self.layers):
            W = np.asarray(W, dtype=float)
            b = np.asarray(b, dtype=float)
            if W.shape != shapes[k][0] or b.shape != shapes[k][1]:
                raise ValueError(
                    "layer %d: expected W%s b%s, got W%s b%s"
                    % (k, shapes[k][0], shapes[k][1], W.shape, b.shape)
                )
            fixed.append((W, b))
        self.layers = fixed
        bound = weight_magnitude(self)
        if bound > self.alpha * (1.0 + 1e-12):
            raise ValueError(
                "weight magnitude %g exceeds alpha=%g" % (bound, self.alpha)
            )

    @classmethod
    def zeros(cls, d, L, r, alpha, activation=None):
        """All-zero network of the given architecture."""
        layers = [
            (np.zeros(sw), np.zeros(sb)) for (sw, sb) in layer_shapes(d, L, r)
        ]
        if activation is None:
            activation = Activation()
        return cls(d=d, L=L, r=r, alpha=alpha, layers=layers, activation=activation)


@dataclass
class SparseAdditiveNetwork:
    """
    Weighted sum of dense subnetworks sharing one architecture.

    f(x) = sum_i mu[i] * subnets[i](x); there is no extra outer intercept
    (intercepts live in each subnet's output layer).  |mu[i]| <= alpha.
    """

    subnets: list
    mu: np.ndarray

    def __post_init__(self):
        if len(self.subnets) == 0:
            raise ValueError("subnet list must be nonempty")
        self.mu = np.asarray(self.mu, dtype=float)
        if self.mu.shape != (len(self.subnets),):
            raise ValueError("mu must have one coefficient per subnet")
        head = self.subnets[0]
        for net in self.subnets[1:]:
            if (net.d, net.L, net.r, net.alpha) != (
                head.d,
                head.L,
                head.r,
                head.alpha,
            ):
                raise ValueError("subnets must share (d, L, r, alpha)")
        if np.max(np.abs(self.mu)) > head.alpha * (1.0 + 1e-12):
            raise ValueError("|mu| must be bounded by alpha")

    @property
    def d(self):
        return self.subnets[0].d

    @property
    def L(self):
        return self.subnets[0].L

    @property
    def r(self):
        return self.subnets[0].r

    @property
    def alpha(self):
        return self.subnets[0].alpha


def layer_shapes(d, L, r):
    """Expected (W, b) shapes per layer block for the architecture."""
    shapes = [((r, d), (r,))]
    for _ in range(L - 1):
        shapes.append(((r, r), (r,)))
    shapes.append(((1, r), (1,)))
    return shapes


def weight_magnitude(net):
    """Largest absolute weight stored in the network (mu included)."""
    worst = 0.0
    for arr in weight_walk(net):
        if arr.size:
            worst = max(worst, float(np.max(np.abs(arr))))
    return worst


def dense_forward(net, x):
    """
    Evaluate a DenseNetwork at a single point.

    Parameters
    ----------
    net : DenseNetwork
    x : array_like of length d

    Returns
    -------
    float
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (net.d,):
        raise ValueError("expected input of length %d, got shape %s" % (net.d, x.shape))
    return float(dense_forward_batch(net, x[None, :])[0])


def dense_forward_batch(net, X):
    """
    Evaluate a DenseNetwork on a batch of points.

    Parameters
    ----------
    net : DenseNetwork
    X : ndarray of shape (n, d)

    Returns
    -------
    ndarray of shape (n,)
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != net.d:
        raise ValueError("expected (n, %d) inputs, got shape %s" % (net.d, X.shape))
    h = X
    for W, b in net.layers[:-1]:
        h = logistic(h @ W.T + b)
    W, b = net.layers[-1]
    return (h @ W.T + b)[:, 0]


def sparse_forward(net, x):
    """Evaluate a SparseAdditiveNetwork at a single point: sum_i mu_i f_i(x)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.d,):
        raise ValueError("expected input of length %d, got shape %s" % (net.d, x.shape))
    return float(sparse_forward_batch(net, x[None, :])[0])


def sparse_forward_batch(net, X):
    """Evaluate a SparseAdditiveNetwork on a batch of shape (n, d)."""
    X = np.asarray(X, dtype=float)
    out = np.zeros(X.shape[0])
    for mu_i, sub in zip(net.mu, net.subnets):
        if mu_i != 0.0:
            out += mu_i * dense_forward_batch(sub, X)
    return out


def parameter_count(d, L, r, M):
    """
    Number of free coefficients of a sparse additive network.

    Counts, per subnet, the first-layer weights and biases (d+1 per neuron),
    the L-1 inner layer blocks ((r+1) per neuron), the affine output neuron
    (r+1), and the outer coefficient mu (+1); multiplied by M.
    """
    if min(d, L, r, M) < 1:
        raise ValueError("d, L, r, M must all be >= 1")
    return M * ((d + 1) * r + (L - 1) * (r + 1) * r + (r + 1) + 1)


def weight_walk(net):
    """
    Canonical iterator over the mutable weight arrays of a network.

    For a DenseNetwork yields W0, b0, ..., W_out, b_out.  For a
    SparseAdditiveNetwork yields each subnet's blocks followed by that
    subnet's outer coefficient (a length-1 view into mu), subnet by subnet.
    Arrays are yielded by reference, so in-place edits mutate the network.
    """
    if isinstance(net, DenseNetwork):
        for W, b in net.layers:
            yield W
            yield b
        return
    if isinstance(net, SparseAdditiveNetwork):
        for i, sub in enumerate(net.subnets):
            for W, b in sub.layers:
                yield W
                yield b
            yield net.mu[i : i + 1]
        return
    raise TypeError("expected DenseNetwork or SparseAdditiveNetwork")


def flatten_weights(net):
    """Concatenate the weight walk into one flat vector (a copy)."""
    return np.concatenate([arr.ravel() for arr in weight_walk(net)])


def set_weights(net, theta):
    """Write a flat vector back into the network along the weight walk."""
    theta = np.asarray(theta, dtype=float)
    pos = 0
    for arr in weight_walk(net):
        arr.flat[:] = theta[pos : pos + arr.size]
        pos += arr.size
    if pos != theta.size:
        raise ValueError("flat vector has %d entries, network needs %d" % (theta.size, pos))
    return net


def project_weights(net, alpha):
    """
    Clamp every weight (and every mu) into [-alpha, alpha] in place.

    Returns
    -------
    int
        Number of scalars that changed.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    clamped = 0
    for arr in weight_walk(net):
        over = np.abs(arr) > alpha
        clamped += int(np.count_nonzero(over))
        np.clip(arr, -alpha, alpha, out=arr)
    return clamped


def network_to_doc(net):
    """JSON-ready document for a dense or sparse network (version 1)."""
    if isinstance(net, DenseNetwork):
        blocks = [{"W": W, "b": b} for W, b in net.layers]
        return {
            "version": 1,
            "d": net.d,
            "L": net.L,
            "r": net.r,
            "alpha": float(net.alpha),
            "layers": blocks,
        }
    if isinstance(net, SparseAdditiveNetwork):
        blocks = []
        for sub in net.subnets:
            blocks.extend({"W": W, "b": b} for W, b in sub.layers)
        return {
            "version": 1,
            "d": net.d,
            "L": net.L,
            "r": net.r,
            "alpha": float(net.alpha),
            "layers": blocks,
            "mu": net.mu,
        }
    raise TypeError("expected DenseNetwork or SparseAdditiveNetwork")


def network_to_json(net):
    """Canonical JSON text (sorted keys, 17-significant-digit floats)."""
    return canonical_dumps(network_to_doc(net))


def network_from_doc(doc):
    """Rebuild a network from its JSON document; dispatches on 'mu'."""
    d, L, r = int(doc["d"]), int(doc["L"]), int(doc["r"])
    alpha = float(doc["alpha"])
    blocks = [
        (np.asarray(blk["W"], dtype=float), np.asarray(blk["b"], dtype=float))
        for blk in doc["layers"]
    ]
    if "mu" not in doc:
        return DenseNetwork(d=d, L=L, r=r, alpha=alpha, layers=blocks)
    mu = np.asarray(doc["mu"], dtype=float)
    per = L + 1
    if len(blocks) != per * len(mu):
        raise ValueError(
            "expected %d layer blocks for %d subnets, got %d"
            % (per * len(mu), len(mu), len(blocks))
        )
    subnets = [
        DenseNetwork(d=d, L=L, r=r, alpha=alpha, layers=blocks[i * per : (i + 1) * per])
        for i in range(len(mu))
    ]
    return SparseAdditiveNetwork(subnets=subnets, mu=mu)


def network_from_json(text):
    """Inverse of network_to_json."""
    import json

    return network_from_doc(json.loads(text))
