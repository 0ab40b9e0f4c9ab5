"""Experiment orchestration: data generation for the benchmark targets,
noise calibration, normalized-error computation, repetition with
median/IQR aggregation, and CSV ingestion for real data.

Desk-scale defaults keep everything runnable in minutes; full-scale flags
reproduce the reference protocol sizes (10^5-sample calibration with 100
repeats, 10^5-point error grids, 50 repetitions).
"""

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .baselines import fit_fcnn, fit_knn, fit_mars, fit_rbf, NetworkPredictor
from .fitting import (
    Dataset,
    FitConfig,
    alpha_n,
    beta_n,
    candidate_mstars,
    train,
    truncate_predict,
)
from .networks import DenseNetwork, SparseAdditiveNetwork
from .serialize import canonical_dumps
from .targets import SUPPORT_BOX, TARGET_DIMS, piece_masks, target_eval

RESULTS_SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# Order statistics (hand-rolled so the aggregation contract is explicit)
# ---------------------------------------------------------------------------


def sorted_percentile(values, q):
    """Linear-interpolation percentile of a 1-d sample (q in [0, 100])."""
    s = np.sort(np.asarray(values, dtype=float))
    if s.size == 0:
        raise ValueError("empty sample")
    pos = (s.size - 1) * q / 100.0
    lo = int(math.floor(pos))
    hi = int(math.ceil(pos))
    frac = pos - lo
    return float(s[lo] * (1.0 - frac) + s[hi] * frac)


def sample_median(values):
    """Sort-based median (average of the two middle values for even n)."""
    return sorted_percentile(values, 50.0)


def sample_iqr(values):
    """Interquartile range Q3 - Q1 with linear interpolation."""
    return sorted_percentile(values, 75.0) - sorted_percentile(values, 25.0)


# ---------------------------------------------------------------------------
# Noise calibration and data generation
# ---------------------------------------------------------------------------


def calibrate_lambda(target, mc_samples=10_000, mc_repeats=10, seed=0):
    """
    Spread scale of a target: per piece, the interquartile range of m(X)
    over uniform draws restricted to that piece; stabilized by the median
    over mc_repeats; averaged over pieces.

    A point in a transition zone belongs to the first declared piece whose
    (closed, enlarged) region contains it.  Pieces receiving fewer than 30
    samples in a repeat are excluded from that repeat with a warning.
    """
    if mc_samples < 1000:
        raise ValueError("mc_samples must be >= 1000")
    rng = np.random.default_rng(seed)
    d = TARGET_DIMS[target]
    lo, hi = SUPPORT_BOX[target]
    n_pieces = len(piece_masks(target, np.zeros((1, d))))
    per_repeat = np.full((mc_repeats, n_pieces), np.nan)
    for rep in range(mc_repeats):
        X = rng.uniform(lo, hi, size=(mc_samples, d))
        vals = target_eval(target, X)
        masks = piece_masks(target, X)
        assigned = np.full(mc_samples, -1, dtype=int)
        for i, mask in enumerate(masks):
            take = mask & (assigned < 0)
            assigned[take] = i
        for i in range(n_pieces):
            piece_vals = vals[assigned == i]
            if piece_vals.size < 30:
                warnings.warn(
                    "piece %d of %s received %d samples (<30); excluded"
                    % (i, target, piece_vals.size)
                )
                continue
            per_repeat[rep, i] = sample_iqr(piece_vals)
    piece_medians = []
    for i in range(n_pieces):
        col = per_repeat[:, i]
        col = col[np.isfinite(col)]
        if col.size:
            piece_medians.append(sample_median(col))
    if not piece_medians:
        raise RuntimeError("no piece collected enough samples")
    return float(np.mean(piece_medians))


def generate(target, n, sigma, lam, seed):
    """X uniform on the target's support box; Y = m(X) + sigma*lam*normal."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    rng = np.random.default_rng(seed)
    d = TARGET_DIMS[target]
    lo, hi = SUPPORT_BOX[target]
    X = rng.uniform(lo, hi, size=(n, d))
    Y = target_eval(target, X) + sigma * lam * rng.standard_normal(n)
    return Dataset(X=X, Y=Y)


def normalizer(target, n, sigma, lam, N_eval, seed, realizations=50):
    """
    Baseline scale: the median over `realizations` of the mean squared
    error of the constant predictor equal to the mean of n fresh noisy
    observations, each scored on N_eval fresh inputs.
    """
    rng = np.random.default_rng(seed)
    d = TARGET_DIMS[target]
    lo, hi = SUPPORT_BOX[target]
    errs = np.empty(realizations)
    for i in range(realizations):
        Xt = rng.uniform(lo, hi, size=(n, d))
        Yt = target_eval(target, Xt) + sigma * lam * rng.standard_normal(n)
        c = float(np.mean(Yt))
        Xe = rng.uniform(lo, hi, size=(N_eval, d))
        errs[i] = np.mean((c - target_eval(target, Xe)) ** 2)
    return sample_median(errs)


def prediction_error(predictor, target, N_eval, seed):
    """Mean squared prediction error on N_eval fresh uniform inputs."""
    rng = np.random.default_rng(seed)
    d = TARGET_DIMS[target]
    lo, hi = SUPPORT_BOX[target]
    Xe = rng.uniform(lo, hi, size=(N_eval, d))
    pred = predictor.predict_batch(Xe)
    return float(np.mean((pred - target_eval(target, Xe)) ** 2))


def normalized_error(predictor, target, n_train_used, N_eval, seed,
                     sigma=0.0, lam=1.0, normalizer_value=None):
    """
    Mean squared prediction error on N_eval fresh draws, divided by the
    constant-mean baseline for samples of size n_train_used (the baseline
    needs the noise scale sigma*lam to draw its fresh observations).
    """
    if N_eval < 1000:
        raise ValueError("N_eval must be >= 1000")
    num = prediction_error(predictor, target, N_eval, seed)
    if normalizer_value is None:
        normalizer_value = normalizer(
            target, n_train_used, sigma, lam, N_eval, seed + 1
        )
    return num / normalizer_value


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------


@dataclass
class MeanPredictor:
    """Constant predictor: the training-response mean."""

    value: float

    def predict_batch(self, X):
        return np.full(np.atleast_2d(X).shape[0], self.value)

    def predict(self, x):
        return self.value

    def to_doc(self):
        return {"kind": "mean", "value": float(self.value)}


def fit_neural_sc(data, mstars, L_grid, r_grid, cfg, split_fraction=0.8):
    """
    Sparse additive estimator: every (L, r, M*) triple is trained on the
    learning split and the triple with the smallest truncated holdout risk
    wins.
    """
    n_learn = int(math.ceil(split_fraction * data.n))
    if n_learn >= data.n:
        raise ValueError("split leaves an empty test set")
    learn = Dataset(X=data.X[:n_learn], Y=data.Y[:n_learn])
    test = Dataset(X=data.X[n_learn:], Y=data.Y[n_learn:])
    best = None
    idx = 0
    for L in L_grid:
        for r in r_grid:
            for m_star in mstars:
                idx += 1
                subnets = [
                    DenseNetwork.zeros(data.d, int(L), int(r), cfg.alpha)
                    for _ in range(int(m_star))
                ]
                net = SparseAdditiveNetwork(
                    subnets=subnets, mu=np.zeros(int(m_star))
                )
                sub_cfg = FitConfig(
                    L=int(L), r=int(r), alpha=cfg.alpha, beta=cfg.beta,
                    restarts=cfg.restarts, max_iters=cfg.max_iters,
                    tol=cfg.tol, seed=cfg.seed + 7919 * idx,
                )
                train(net, learn, sub_cfg)
                preds = truncate_predict(net, cfg.beta, test.X)
                risk = float(np.mean((test.Y - preds) ** 2))
                if best is None or risk < best[0]:
                    best = (risk, net, int(L), int(r), int(m_star))
    _, net, L, r, m_star = best
    return NetworkPredictor(net=net, beta=cfg.beta, L=L, r=r)


DESK_GRIDS = {
    "neural-sc": {"mstars": (2, 4), "L_grid": (1,), "r_grid": (4,),
                  "restarts": 2, "max_iters": 200},
    "neural-fc": {"L_grid": (1, 2), "r_grid": (4, 8),
                  "restarts": 2, "max_iters": 200},
    "mars": {"max_basis": 15},
}

FULL_GRIDS = {
    "neural-sc": {"mstars": None, "L_grid": (1, 3, 6), "r_grid": (3, 6, 10),
                  "restarts": 5, "max_iters": 500},
    "neural-fc": {"L_grid": (1, 2, 4, 6, 8, 10, 12),
                  "r_grid": (5, 10, 25, 50), "restarts": 5, "max_iters": 500},
    "mars": {"max_basis": 21},
}

ESTIMATOR_NAMES = ("mean", "knn", "rbf", "mars", "neural-fc", "neural-sc")


def _fit_estimator(name, data, seed, full_scale):
    grids = FULL_GRIDS if full_scale else DESK_GRIDS
    if name == "mean":
        return MeanPredictor(value=float(np.mean(data.Y)))
    if name == "knn":
        return fit_knn(data)
    if name == "rbf":
        return fit_rbf(data)
    if name == "mars":
        return fit_mars(data, max_basis=grids["mars"]["max_basis"])
    cfg = FitConfig(
        alpha=alpha_n(data.n),
        beta=beta_n(data.n),
        restarts=grids[name]["restarts"],
        max_iters=grids[name]["max_iters"],
        seed=seed,
    )
    if name == "neural-fc":
        return fit_fcnn(data, grids[name]["L_grid"], grids[name]["r_grid"], cfg)
    if name == "neural-sc":
        mstars = grids[name]["mstars"]
        if mstars is None:
            mstars = candidate_mstars(data.n)
        return fit_neural_sc(
            data, mstars, grids[name]["L_grid"], grids[name]["r_grid"], cfg
        )
    raise ValueError("unknown estimator %r" % (name,))


# ---------------------------------------------------------------------------
# Experiment protocol
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """One simulation cell: target, sample size, noise level, estimators."""

    target: str = "m1"
    n: int = 100
    noise_sigma: float = 0.05
    repetitions: int = 5
    N_eval: int = 10_000
    estimators: tuple = ("mean",)
    seed: int = 0
    lambda_mc_samples: int = 10_000
    lambda_mc_repeats: int = 10
    full_scale: bool = False

    def __post_init__(self):
        if self.n < 10:
            raise ValueError("n must be >= 10")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.target not in TARGET_DIMS:
            raise ValueError("unknown target %r" % (self.target,))
        for est in self.estimators:
            if est not in ESTIMATOR_NAMES:
                raise ValueError("unknown estimator %r" % (est,))

    def to_doc(self):
        return {
            "target": self.target,
            "n": self.n,
            "noise_sigma": self.noise_sigma,
            "repetitions": self.repetitions,
            "N_eval": self.N_eval,
            "estimators": list(self.estimators),
            "seed": self.seed,
            "lambda_mc_samples": self.lambda_mc_samples,
            "lambda_mc_repeats": self.lambda_mc_repeats,
            "full_scale": self.full_scale,
        }


@dataclass
class ResultTable:
    """Aggregated normalized errors per estimator plus the scales used."""

    config: ExperimentConfig
    lam: float
    normalizer_value: float
    errors: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def median(self, estimator):
        return sample_median(self.errors[estimator])

    def iqr(self, estimator):
        return sample_iqr(self.errors[estimator])

    def to_doc(self):
        per_estimator = {}
        for name in self.config.estimators:
            errs = self.errors.get(name, [])
            entry = {
                "errors": list(errs),
                "failures": int(self.failures.get(name, 0)),
            }
            if errs:
                entry["median"] = sample_median(errs)
                entry["iqr"] = sample_iqr(errs)
            per_estimator[name] = entry
        return {
            "version": RESULTS_SCHEMA_VERSION,
            "config": self.config.to_doc(),
            "lambda": self.lam,
            "normalizer": self.normalizer_value,
            "estimators": per_estimator,
        }

    def to_json(self):
        return canonical_dumps(self.to_doc())


def _child_seed(seed_seq):
    return int(seed_seq.generate_state(1, dtype=np.uint32)[0])


def run_experiment(cfg):
    """
    Full protocol for one table cell: calibrate the noise scale, compute the
    shared normalizer, then per repetition generate data, fit every
    estimator, and score its normalized error; aggregate per-estimator
    medians and IQRs.  Deterministic under cfg.seed (per-repetition derived
    seeds; order-independent aggregation); an estimator failure in one
    repetition is recorded and excluded from the aggregate.
    """
    root = np.random.SeedSequence(cfg.seed)
    lam_ss, norm_ss, reps_ss = root.spawn(3)
    lam = calibrate_lambda(
        cfg.target, cfg.lambda_mc_samples, cfg.lambda_mc_repeats,
        seed=_child_seed(lam_ss),
    )
    norm = normalizer(
        cfg.target, cfg.n, cfg.noise_sigma, lam, cfg.N_eval,
        seed=_child_seed(norm_ss),
    )
    errors = {name: [] for name in cfg.estimators}
    failures = {name: 0 for name in cfg.estimators}
    rep_seqs = reps_ss.spawn(cfg.repetitions)
    for rep, rep_ss in enumerate(rep_seqs):
        gen_ss, eval_ss, fit_ss = rep_ss.spawn(3)
        data = generate(cfg.target, cfg.n, cfg.noise_sigma, lam,
                        seed=_child_seed(gen_ss))
        eval_seed = _child_seed(eval_ss)
        fit_seeds = fit_ss.spawn(len(cfg.estimators))
        for name, est_ss in zip(cfg.estimators, fit_seeds):
            try:
                predictor = _fit_estimator(
                    name, data, _child_seed(est_ss), cfg.full_scale
                )
                num = prediction_error(predictor, cfg.target, cfg.N_eval,
                                       eval_seed)
                errors[name].append(num / norm)
            except Exception as exc:  # recorded, not fatal
                warnings.warn(
                    "estimator %s failed in repetition %d: %s"
                    % (name, rep, exc)
                )
                failures[name] += 1
    return ResultTable(config=cfg, lam=lam, normalizer_value=norm,
                       errors=errors, failures=failures)


def render_table(doc):
    """Plain-text rendering of a results document (median and IQR columns)."""
    cfg = doc["config"]
    lines = [
        "target=%s  n=%d  sigma=%g  reps=%d  N_eval=%d"
        % (cfg["target"], cfg["n"], cfg["noise_sigma"],
           cfg["repetitions"], cfg["N_eval"]),
        "lambda=%.6g  normalizer=%.6g" % (doc["lambda"], doc["normalizer"]),
        "",
        "%-12s %12s %12s %9s" % ("estimator", "median", "IQR", "failures"),
        "-" * 48,
    ]
    for name, entry in sorted(doc["estimators"].items()):
        if "median" in entry:
            lines.append(
                "%-12s %12.4f %12.4f %9d"
                % (name, entry["median"], entry["iqr"], entry["failures"])
            )
        else:
            lines.append(
                "%-12s %12s %12s %9d" % (name, "-", "-", entry["failures"])
            )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------


def ingest_csv(path, target_column, feature_columns, normalization="none"):
    """
    Read a comma-separated UTF-8 file with a header row into a Dataset.

    Rows with unparseable numeric cells in the selected columns are dropped
    and counted.  normalization="minmax" maps each feature column to [0, 1]
    (a constant column maps to 0 with a warning).

    Returns (dataset, report) where report carries row counts.
    """
    if normalization not in ("none", "minmax"):
        raise ValueError("normalization must be 'none' or 'minmax'")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError("empty CSV file")
        header = [h.strip() for h in header]
        for col in [target_column] + list(feature_columns):
            if col not in header:
                raise ValueError("column %r not found in CSV header" % (col,))
        target_idx = header.index(target_column)
        feat_idx = [header.index(c) for c in feature_columns]
        rows, ys, dropped = [], [], 0
        for raw in reader:
            if not raw:
                continue
            try:
                y = float(raw[target_idx])
                x = [float(raw[i]) for i in feat_idx]
            except (ValueError, IndexError):
                dropped += 1
                continue
            rows.append(x)
            ys.append(y)
    if not rows:
        raise ValueError("no parseable rows in %s" % (path,))
    X = np.asarray(rows, dtype=float)
    Y = np.asarray(ys, dtype=float)
    if normalization == "minmax":
        for jcol in range(X.shape[1]):
            lo, hi = X[:, jcol].min(), X[:, jcol].max()
            if hi > lo:
                X[:, jcol] = (X[:, jcol] - lo) / (hi - lo)
            else:
                warnings.warn(
                    "constant column %r maps to 0 under minmax"
                    % (feature_columns[jcol],)
                )
                X[:, jcol] = 0.0
    report = {"rows_used": int(X.shape[0]), "rows_dropped": int(dropped)}
    return Dataset(X=X, Y=Y), report
