"""HTTP service exposing the toolkit: activation-bound diagnostics, basis
and target evaluation, network training on CSV data, and the full
experiment protocol.  The CLI is a thin client of these endpoints.
"""

import warnings

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import __version__
from .basis import basis_eval_batch, basis_from_doc, polytope_from_doc
from .builders import LEMMA_NAMES, lemma_diagnostic
from .experiments import (
    ExperimentConfig,
    ingest_csv,
    render_table,
    run_experiment,
)
from .fitting import Dataset, FitConfig, empirical_risk, train
from .networks import DenseNetwork, SparseAdditiveNetwork, network_to_doc
from .serialize import canonical_dumps
from .targets import TARGET_DIMS, target_eval

app = FastAPI(title="locdim", version=__version__)


class LemmaRequest(BaseModel):
    name: str
    R: float = 100.0
    a: float = 1.0
    grid_points: int = 2001


class OracleRequest(BaseModel):
    kind: str  # "basis" | "polytope" | "target"
    points: list
    doc: dict | None = None
    target: str | None = None


class ExperimentRequest(BaseModel):
    target: str = "m1"
    n: int = 100
    noise_sigma: float = 0.05
    repetitions: int = 5
    N_eval: int = 10_000
    estimators: list = ["mean"]
    seed: int = 0
    lambda_mc_samples: int = 10_000
    lambda_mc_repeats: int = 10
    full_scale: bool = False


class FitRequest(BaseModel):
    csv_text: str
    target_column: str
    feature_columns: list
    normalization: str = "none"
    L: int = 1
    r: int = 3
    alpha: float = 1e6
    beta: float = 50.0
    restarts: int = 5
    max_iters: int = 500
    tol: float = 1e-8
    seed: int = 0
    m_star: int | None = None


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/lemma/verify")
def verify_lemma(req: LemmaRequest):
    if req.name not in LEMMA_NAMES:
        raise HTTPException(
            status_code=422,
            detail="unknown lemma name %r; choose from %s"
            % (req.name, sorted(LEMMA_NAMES)),
        )
    return lemma_diagnostic(req.name, R=req.R, a=req.a,
                            grid_points=req.grid_points)


@app.post("/oracle/eval")
def oracle_eval(req: OracleRequest):
    X = np.asarray(req.points, dtype=float)
    try:
        if req.kind == "basis":
            if req.doc is None:
                raise ValueError("kind 'basis' needs a doc")
            gbf = basis_from_doc(req.doc)
            values = basis_eval_batch(gbf, np.atleast_2d(X))
        elif req.kind == "polytope":
            if req.doc is None:
                raise ValueError("kind 'polytope' needs a doc")
            poly = polytope_from_doc(req.doc)
            values = poly.contains(np.atleast_2d(X)).astype(float)
        elif req.kind == "target":
            if req.target not in TARGET_DIMS:
                raise ValueError("unknown target %r" % (req.target,))
            values = np.atleast_1d(target_eval(req.target, X))
        else:
            raise ValueError("kind must be basis, polytope, or target")
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return {"values": [float(v) for v in values]}


@app.post("/experiment/run")
def experiment_run(req: ExperimentRequest):
    try:
        cfg = ExperimentConfig(
            target=req.target, n=req.n, noise_sigma=req.noise_sigma,
            repetitions=req.repetitions, N_eval=req.N_eval,
            estimators=tuple(req.estimators), seed=req.seed,
            lambda_mc_samples=req.lambda_mc_samples,
            lambda_mc_repeats=req.lambda_mc_repeats,
            full_scale=req.full_scale,
        )
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        table = run_experiment(cfg)
    return {"results_json": table.to_json()}


@app.post("/experiment/render")
def experiment_render(doc: dict):
    try:
        return {"text": render_table(doc)}
    except KeyError as exc:
        raise HTTPException(status_code=422,
                            detail="malformed results document: %s" % (exc,))


@app.post("/fit")
def fit(req: FitRequest):
    import os
    import tempfile

    with tempfile.NamedTemporaryFile(
        "w", suffix=".csv", delete=False, encoding="utf-8"
    ) as fh:
        fh.write(req.csv_text)
        path = fh.name
    try:
        data, report = ingest_csv(
            path, req.target_column, req.feature_columns, req.normalization
        )
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    finally:
        os.unlink(path)
    cfg = FitConfig(L=req.L, r=req.r, alpha=req.alpha, beta=req.beta,
                    restarts=req.restarts, max_iters=req.max_iters,
                    tol=req.tol, seed=req.seed)
    if req.m_star is None:
        net = DenseNetwork.zeros(data.d, cfg.L, cfg.r, cfg.alpha)
    else:
        subnets = [DenseNetwork.zeros(data.d, cfg.L, cfg.r, cfg.alpha)
                   for _ in range(req.m_star)]
        net = SparseAdditiveNetwork(subnets=subnets,
                                    mu=np.zeros(req.m_star))
    fit_report = train(net, data, cfg)
    return {
        "report": {
            "final_risk": fit_report.final_risk,
            "iterations": fit_report.iterations,
            "clamp_events": fit_report.clamp_events,
            "abandoned_restarts": fit_report.abandoned_restarts,
        },
        "ingest": report,
        "network_json": canonical_dumps(network_to_doc(net)),
        "empirical_risk": empirical_risk(net, data),
    }
