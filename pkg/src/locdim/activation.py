"""Logistic squasher: evaluation, derivatives, and admissibility checks.

The whole toolkit is built on a single activation, the logistic squasher
sigma(x) = 1/(1+exp(-x)).  Its first three derivatives have closed forms in
sigma itself, and the constructive emulators need the global maxima of those
derivatives together with two expansion points: ``t_id`` where sigma' is
maximal (used by the identity emulator) and ``t_sq`` where both sigma'' and
sigma''' are nonzero (used by the squaring/product emulators).
"""

from dataclasses import dataclass

import numpy as np

# Global sup-norms of the logistic derivatives.  Hard-coded; a one-time grid
# verification lives in the test suite.
SIGMA_D1_MAX = 0.25                      # attained at 0
SIGMA_D2_MAX = 1.0 / (6.0 * np.sqrt(3.0))  # attained at ±ln(2+sqrt(3))
SIGMA_D3_MAX = 0.125                     # attained at 0

# Expansion points: t_id = 0 maximizes |sigma'|; t_sq = 1 has nonzero
# second and third derivatives.  Chosen to keep the emulators' constants
# small; any point with the required nonzero derivatives would do.
T_ID_DEFAULT = 0.0
T_SQ_DEFAULT = 1.0


def logistic(x):
    """Logistic squasher 1/(1+exp(-x)), overflow-safe, vectorized."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Activation:
    """
    The network activation together with its two expansion points.

    Parameters
    ----------
    kind : str
        Only "logistic" is supported.
    t_id : float
        Expansion point for the identity emulator; sigma'(t_id) must be
        nonzero.
    t_sq : float
        Expansion point for the squaring/product emulators; sigma''(t_sq)
        must be nonzero.
    """

    kind: str = "logistic"
    t_id: float = T_ID_DEFAULT
    t_sq: float = T_SQ_DEFAULT

    def __post_init__(self):
        if self.kind != "logistic":
            raise ValueError("unsupported activation kind: %r" % self.kind)
        if abs(activation_eval(self, self.t_id, 1)) < 1e-12:
            raise ValueError("sigma'(t_id) vanishes at t_id=%g" % self.t_id)
        if abs(activation_eval(self, self.t_sq, 2)) < 1e-12:
            raise ValueError("sigma''(t_sq) vanishes at t_sq=%g" % self.t_sq)


def activation_eval(a, x, order=0):
    """
    Evaluate the activation or one of its first three derivatives.

    Parameters
    ----------
    a : Activation
    x : float or ndarray
    order : int
        0 for sigma, 1..3 for the derivatives; closed forms in sigma(x):
        sigma' = s(1-s), sigma'' = sigma'(1-2s),
        sigma''' = sigma'(1-6s+6s^2).

    Returns
    -------
    float or ndarray
    """
    if order not in (0, 1, 2, 3):
        raise ValueError("order must be in 0..3, got %r" % (order,))
    s = logistic(x)
    if order == 0:
        return s
    d1 = s * (1.0 - s)
    if order == 1:
        return d1
    if order == 2:
        return d1 * (1.0 - 2.0 * s)
    return d1 * (1.0 - 6.0 * s + 6.0 * s * s)


def check_admissible(a, N, probe_point):
    """
    Check N-admissibility of the activation at a probe point.

    True iff the derivatives of orders 1..N at `probe_point` are nonzero
    (absolute value > 1e-12) and the tail condition holds on the log-spaced
    grid y in ±{1, 10, ..., 1e6}: for y > 0, |sigma(y) - 1| <= 1/y, and for
    y < 0, |sigma(y)| <= 1/|y|.  (Monotonicity and the Lipschitz property
    hold for the logistic by construction and are not re-tested here.)

    Parameters
    ----------
    a : Activation
    N : int
        0, 1 or 2.
    probe_point : float

    Returns
    -------
    bool
    """
    if N not in (0, 1, 2):
        raise ValueError("N must be in {0,1,2}, got %r" % (N,))
    for order in range(1, N + 1):
        if abs(activation_eval(a, probe_point, order)) <= 1e-12:
            return False
    for y in 10.0 ** np.arange(7):
        if abs(activation_eval(a, y, 0) - 1.0) > 1.0 / y:
            return False
        if abs(activation_eval(a, -y, 0)) > 1.0 / y:
            return False
    return True
