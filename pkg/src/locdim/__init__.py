"""Nonparametric regression with sparse additive sigmoidal networks.

The package provides, in one place:

- exact constructive networks that emulate identities, squares, products,
  ramps, truncated powers, B-splines, and products of such factors, each
  with a computable sup-norm error bound (`builders`);
- the generalized basis functions those networks realize: tensor-product
  B-splines times truncated hinge powers, plus polytope indicators with
  squeeze envelopes (`basis`, `splines`);
- least-squares training of the dense and sparse-additive network classes
  with projection onto a weight box and split-sample model selection
  (`networks`, `fitting`);
- competitor estimators: nearest neighbors, Wendland-kernel RBF
  interpolation, MARS, and fully connected networks (`baselines`);
- the simulation protocol around the m1/m2/m3/fig2 targets — noise
  calibration, normalized errors, repetition tables — and CSV ingestion
  for real data (`targets`, `experiments`);
- an HTTP service and a CLI over all of it (`api`, `cli`).
"""

__version__ = "1.0.0"

from .activation import logistic
from .basis import (
    GeneralizedBasisFunction,
    Halfspace,
    HingeFactor,
    Polytope,
    SplineFactor,
    basis_eval,
    basis_eval_batch,
)
from .builders import (
    BoundedApproxNet,
    build_basis_net,
    build_bspline_net,
    build_identity,
    build_lcb_net,
    build_mult,
    build_product_net,
    build_relu,
    build_square,
    build_trunc,
    fp_slack,
    lemma_diagnostic,
)
from .experiments import (
    ExperimentConfig,
    ResultTable,
    calibrate_lambda,
    generate,
    ingest_csv,
    normalized_error,
    run_experiment,
)
from .fitting import (
    Dataset,
    FitConfig,
    FitReport,
    empirical_risk,
    gradient,
    select_model,
    train,
    truncate_predict,
)
from .networks import DenseNetwork, SparseAdditiveNetwork
from .splines import KnotSequence, bspline_eval
from .targets import fig2, m1, m2, m3

__all__ = [
    "__version__",
    "logistic",
    "GeneralizedBasisFunction",
    "Halfspace",
    "HingeFactor",
    "Polytope",
    "SplineFactor",
    "basis_eval",
    "basis_eval_batch",
    "BoundedApproxNet",
    "build_basis_net",
    "build_bspline_net",
    "build_identity",
    "build_lcb_net",
    "build_mult",
    "build_product_net",
    "build_relu",
    "build_square",
    "build_trunc",
    "fp_slack",
    "lemma_diagnostic",
    "ExperimentConfig",
    "ResultTable",
    "calibrate_lambda",
    "generate",
    "ingest_csv",
    "normalized_error",
    "run_experiment",
    "Dataset",
    "FitConfig",
    "FitReport",
    "empirical_risk",
    "gradient",
    "select_model",
    "train",
    "truncate_predict",
    "DenseNetwork",
    "SparseAdditiveNetwork",
    "KnotSequence",
    "bspline_eval",
    "fig2",
    "m1",
    "m2",
    "m3",
]
