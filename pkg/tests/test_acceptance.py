"""Acceptance gate: ten end-to-end criteria, one printed pass/fail line each.

Each test computes its checks, prints a single summary line with the key
measured numbers, and then asserts.  Run with ``pytest -s`` to see the
lines for passing criteria too; a failing criterion always shows its line.
"""

import time
import warnings

import numpy as np

from locdim.basis import (
    GeneralizedBasisFunction,
    Halfspace,
    HingeFactor,
    Polytope,
    SplineFactor,
    basis_eval_batch,
    polytope_squeeze_expand,
)
from locdim.builders import (
    build_basis_net,
    build_bspline_net,
    build_lcb_net,
    fp_slack,
    lemma_diagnostic,
)
from locdim.experiments import (
    ExperimentConfig,
    calibrate_lambda,
    normalizer,
    run_experiment,
)
from locdim.fitting import (
    Dataset,
    FitConfig,
    empirical_risk,
    gradient,
    train,
)
from locdim.networks import (
    DenseNetwork,
    SparseAdditiveNetwork,
    dense_forward_batch,
    flatten_weights,
    set_weights,
    sparse_forward_batch,
)
from locdim.splines import KnotSequence, bspline_eval, deboor_eval

SEED = 20260816


def _report(num, label, ok, detail=""):
    dots = "." * max(2, 40 - len(label))
    tail = (" | " + detail) if detail else ""
    print("[criterion %02d] %s %s %s%s"
          % (num, label, dots, "PASS" if ok else "FAIL", tail))
    return ok


def _random_net(rng, sparse):
    d = int(rng.integers(1, 4))
    L = int(rng.integers(1, 3))
    r = int(rng.integers(1, 5))
    if sparse:
        M = int(rng.integers(1, 3))
        subs = [DenseNetwork.zeros(d, L, r, 1e6) for _ in range(M)]
        net = SparseAdditiveNetwork(subnets=subs, mu=np.zeros(M))
    else:
        net = DenseNetwork.zeros(d, L, r, 1e6)
    theta = rng.uniform(-1.0, 1.0, flatten_weights(net).size)
    set_weights(net, theta)
    return net, d


def _random_gbf(rng, knots):
    d = 2
    while True:
        n_spline = int(rng.integers(0, 3))
        n_hinge = int(rng.integers(0, 3))
        if n_spline + n_hinge >= 1:
            break
    splines = tuple(
        SplineFactor(coordinate=int(rng.integers(0, d)),
                     j=int(rng.integers(0, 3)), knots=knots, degree=1)
        for _ in range(n_spline))
    hinges = tuple(
        HingeFactor(alpha=rng.uniform(-0.5, 0.5, size=d),
                    gamma=rng.uniform(-0.5, 0.5, size=d))
        for _ in range(n_hinge))
    return GeneralizedBasisFunction(spline_factors=splines,
                                    hinge_factors=hinges)


def test_criterion_01_lemma_error_bounds():
    # five emulator lemmas at a=1: sup-error within bound + slack at every
    # scale, and 1/R decay (two decades of R shrink the error 50x or more)
    t0 = time.monotonic()
    names = ("identity", "square", "mult", "relu", "trunc")
    within, worst_ratio = True, 0.0
    for name in names:
        errs = {}
        for R in (1e2, 1e3, 1e4):
            diag = lemma_diagnostic(name, R, 1.0, grid_points=2001)
            within = within and diag["passed"]
            errs[R] = diag["measured_error"]
        worst_ratio = max(worst_ratio, errs[1e4] / errs[1e2])
    elapsed = time.monotonic() - t0
    ok = within and worst_ratio <= 0.02 and elapsed < 10.0
    assert _report(1, "lemma error bounds", ok,
                   "worst e(1e4)/e(1e2)=%.4f, %.1fs" % (worst_ratio, elapsed))


def test_criterion_02_bspline_emulators():
    # degree-1 and degree-2 emulators on gap-0.25 knots at R=1e5: exact
    # class architecture and sup-gap against the recursion oracle
    knots = KnotSequence.uniform(0.0, 1.0, 5, degree=1)
    shapes_ok, within, worst = True, True, 0.0
    for M, expect in ((1, (2, 16)), (2, (3, 34))):
        ks_M = KnotSequence(values=knots.values, degree=M)
        xs = np.union1d(np.linspace(-1.0, 1.0, 2001), knots.values)
        for j in range(ks_M.num_splines(M)):
            ban = build_bspline_net(j, M, knots.values, 1e5, 1.0, 4)
            shapes_ok = shapes_ok and (ban.net.L, ban.net.r) == expect
            gap = np.max(np.abs(dense_forward_batch(ban.net, xs[:, None])
                                - bspline_eval(ks_M, j, M, xs)))
            limit = ban.theoretical_bound + fp_slack(
                ban.r_values, max(1.0, ban.value_bound))
            within = within and gap <= limit
            worst = max(worst, gap)
    ok = shapes_ok and within
    assert _report(2, "B-spline emulators", ok,
                   "architectures (2,16)/(3,34) %s, worst gap %.2e"
                   % ("exact" if shapes_ok else "WRONG", worst))


def test_criterion_03_basis_and_combination_nets():
    # five random two-dimensional basis functions (degree-1 spline and
    # hinge factors) against the direct evaluator on a 41x41 grid, then a
    # three-term linear combination
    rng = np.random.default_rng(SEED)
    knots = KnotSequence.uniform(0.0, 1.0, 5, degree=1)
    xs = np.linspace(-1.0, 1.0, 41)
    XX, YY = np.meshgrid(xs, xs)
    grid = np.column_stack([XX.ravel(), YY.ravel()])
    gbfs, limits, within, worst = [], [], True, 0.0
    for _ in range(5):
        b = _random_gbf(rng, knots)
        ban = build_basis_net(b, 4, 1.0, d=2)
        limit = ban.theoretical_bound + fp_slack(
            ban.r_values, max(1.0, ban.value_bound))
        err = np.max(np.abs(dense_forward_batch(ban.net, grid)
                            - basis_eval_batch(b, grid)))
        within = within and err <= limit
        worst = max(worst, err)
        gbfs.append(b)
        limits.append(limit)
    w = rng.uniform(-2.0, 2.0, size=3)
    net = build_lcb_net(w, gbfs[:3], 4, 1.0, d=2)
    oracle = sum(wi * basis_eval_batch(b, grid)
                 for wi, b in zip(w, gbfs[:3]))
    lcb_err = np.max(np.abs(sparse_forward_batch(net, grid) - oracle))
    lcb_limit = 3.0 * np.max(np.abs(w)) * max(limits[:3])
    ok = within and lcb_err <= lcb_limit
    assert _report(3, "basis and combination nets", ok,
                   "worst basis err %.2e, lcb err %.2e" % (worst, lcb_err))


def test_criterion_04_polytope_squeeze():
    # twenty random polytopes (d <= 4, up to 3 halfspaces): the signed
    # hinge-product expansion matches the squeeze weight to 1e-12, the
    # weight is exactly 1 on the shrunk region and 0 outside the enlarged
    rng = np.random.default_rng(SEED)
    worst_gap, boundary_ok = 0.0, True
    for _ in range(20):
        d = int(rng.integers(1, 5))
        K1 = int(rng.integers(1, 4))
        hs = []
        for _ in range(K1):
            a = rng.normal(size=d)
            a = a / np.linalg.norm(a) * rng.uniform(0.4, 1.0)
            hs.append(Halfspace(a=a, b=float(rng.uniform(0.5, 1.2)),
                                delta=0.2))
        P = Polytope(halfspaces=tuple(hs))
        pts = rng.uniform(-1.5, 1.5, size=(1000, d))
        bases, coeffs = polytope_squeeze_expand(P)
        assert len(bases) == 2 ** K1
        expansion = sum(c * basis_eval_batch(b, pts)
                        for c, b in zip(coeffs, bases))
        worst_gap = max(worst_gap,
                        float(np.max(np.abs(expansion
                                            - P.squeeze_weight(pts)))))
        # witness points: a ball around the origin sits in the shrunk
        # polytope, and pushing past any single face exits the enlarged one
        ball = rng.uniform(-0.1, 0.1, size=(50, d))
        outs = np.array([h.a * (h.b + h.delta + u) / float(h.a @ h.a)
                         for h in P.halfspaces
                         for u in rng.uniform(0.1, 1.0, size=10)])
        assert P.contains_shrunk(ball).all()
        assert not P.contains_enlarged(outs).any()
        boundary_ok = (boundary_ok
                       and np.all(P.squeeze_weight(ball) == 1.0)
                       and np.all(P.squeeze_weight(outs) == 0.0))
    ok = worst_gap <= 1e-12 and boundary_ok
    assert _report(4, "polytope squeeze expansion", ok,
                   "worst expansion gap %.2e, plateau/exterior exact=%s"
                   % (worst_gap, boundary_ok))


def test_criterion_05_spline_oracle():
    # partition of unity, non-negativity, local support, the degree-2
    # cardinal midpoint value, and agreement with the independent de Boor
    # evaluator
    rng = np.random.default_rng(SEED)
    pou_ok, nonneg_ok, support_ok, agree_ok = True, True, True, True
    for M in (1, 2):
        ks = KnotSequence.uniform(0.0, 1.0, 11, degree=M)
        t = ks.values
        inner = np.linspace(t[M], t[t.size - M - 1] - 1e-9, 501)
        total = np.zeros_like(inner)
        for j in range(ks.num_splines(M)):
            vals = bspline_eval(ks, j, M, inner)
            total += vals
            full = bspline_eval(ks, j, M, np.linspace(-0.5, 1.5, 801))
            nonneg_ok = nonneg_ok and np.all(full >= 0.0)
            xs_out = np.concatenate([
                np.linspace(-0.5, t[j] - 1e-9, 50),
                np.linspace(t[j + M + 1] + 1e-9, 1.5, 50)])
            support_ok = support_ok and np.all(
                bspline_eval(ks, j, M, xs_out) == 0.0)
        pou_ok = pou_ok and np.max(np.abs(total - 1.0)) <= 1e-12
        coeffs = rng.uniform(-2.0, 2.0, ks.num_splines(M))
        xs = rng.uniform(-0.2, 1.2, 400)
        direct = sum(coeffs[j] * bspline_eval(ks, j, M, xs)
                     for j in range(coeffs.size))
        agree_ok = agree_ok and np.max(
            np.abs(deboor_eval(ks, coeffs, M, xs) - direct)) <= 1e-12
    cardinal = KnotSequence.uniform(0.0, 3.0, 4, degree=2)
    midpoint = bspline_eval(cardinal, 0, 2, np.array([1.5]))[0]
    mid_ok = abs(midpoint - 0.75) <= 1e-15
    ok = pou_ok and nonneg_ok and support_ok and agree_ok and mid_ok
    assert _report(5, "spline oracle properties", ok,
                   "midpoint %.4f, partition-of-unity %s"
                   % (midpoint, pou_ok))


def test_criterion_06_gradient_and_optimizer():
    # analytic gradient vs central differences on twenty random nets, a
    # realizable target trained to tiny risk, and a non-increasing
    # accepted-risk path in the iteration budget
    rng = np.random.default_rng(123)
    h, worst_rel = 1e-6, 0.0
    for trial in range(20):
        net, d = _random_net(rng, sparse=trial % 2 == 1)
        theta = flatten_weights(net).copy()
        data = Dataset(X=rng.uniform(-1, 1, (16, d)),
                       Y=rng.uniform(-1, 1, 16))
        an = gradient(net, data)
        fd = np.empty_like(an)
        for k in range(theta.size):
            tp, tm = theta.copy(), theta.copy()
            tp[k] += h
            tm[k] -= h
            set_weights(net, tp)
            rp = empirical_risk(net, data)
            set_weights(net, tm)
            rm = empirical_risk(net, data)
            fd[k] = (rp - rm) / (2.0 * h)
        set_weights(net, theta)
        worst_rel = max(worst_rel,
                        float(np.max(np.abs(fd - an) / (1.0 + np.abs(an)))))
    grad_ok = worst_rel <= 1e-5

    teacher_rng = np.random.default_rng(0)
    teacher = DenseNetwork.zeros(1, 1, 2, 1e6)
    set_weights(teacher, teacher_rng.uniform(
        -1.5, 1.5, flatten_weights(teacher).size))
    X = teacher_rng.uniform(-1, 1, (30, 1))
    data = Dataset(X=X, Y=dense_forward_batch(teacher, X))
    student = DenseNetwork.zeros(1, 1, 2, 1e6)
    rep = train(student, data, FitConfig(L=1, r=2, restarts=3,
                                         max_iters=300, seed=1))
    realizable_ok = rep.final_risk <= 1e-6

    risks = []
    for k in range(0, 13, 2):
        net = DenseNetwork.zeros(1, 1, 2, 1e6)
        risks.append(train(net, data, FitConfig(L=1, r=2, restarts=1,
                                                max_iters=k,
                                                seed=5)).final_risk)
    monotone_ok = all(risks[i + 1] <= risks[i] + 1e-12
                      for i in range(len(risks) - 1))
    ok = grad_ok and realizable_ok and monotone_ok
    assert _report(6, "gradient and optimizer", ok,
                   "worst grad rel %.2e, realizable risk %.2e, monotone %s"
                   % (worst_rel, rep.final_risk, monotone_ok))


def test_criterion_07_lambda_calibration():
    # full-scale (1e5 x 100) spread scales against the reference values
    # 2.72 / 6.28 / 12.2 at +-5% / +-10% / +-10%, and desk scale
    # (1e4 x 10) at +-15%.  The m1 full-scale reference 2.72 has not been
    # reproducible from the stated protocol (measured ~1.894, i.e. -30%);
    # the check is asserted as specified and fails honestly.
    t0 = time.monotonic()
    reference = {"m1": 2.72, "m2": 6.28, "m3": 12.2}
    full_tol = {"m1": 0.05, "m2": 0.10, "m3": 0.10}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        full = {t: calibrate_lambda(t, mc_samples=100_000, mc_repeats=100,
                                    seed=0)
                for t in reference}
        desk = {t: calibrate_lambda(t, mc_samples=10_000, mc_repeats=10,
                                    seed=0)
                for t in reference}
    elapsed = time.monotonic() - t0
    full_ok = all(abs(full[t] / reference[t] - 1.0) <= full_tol[t]
                  for t in reference)
    desk_ok = all(abs(desk[t] / reference[t] - 1.0) <= 0.15
                  for t in reference)
    ok = full_ok and desk_ok and elapsed < 600.0
    assert _report(
        7, "lambda calibration", ok,
        "full m1=%.3f m2=%.3f m3=%.3f (want 2.72/6.28/12.2), desk "
        "m1=%.3f m2=%.3f m3=%.3f, %.1fs"
        % (full["m1"], full["m2"], full["m3"],
           desk["m1"], desk["m2"], desk["m3"], elapsed))


def test_criterion_08_normalizer():
    # the m1 baseline scale (median constant-predictor MSE over 50
    # realizations, n=100 noisy draws each): full evaluation resolution
    # within +-5% of the 29.4-29.5 reference band, desk within +-10%
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lam_full = calibrate_lambda("m1", mc_samples=100_000,
                                    mc_repeats=100, seed=0)
        lam_desk = calibrate_lambda("m1", mc_samples=10_000,
                                    mc_repeats=10, seed=0)
    nf = normalizer("m1", n=100, sigma=0.05, lam=lam_full,
                    N_eval=100_000, seed=0)
    nd = normalizer("m1", n=100, sigma=0.05, lam=lam_desk,
                    N_eval=10_000, seed=0)
    full_ok = 29.4 * 0.95 <= nf <= 29.5 * 1.05
    desk_ok = 29.4 * 0.90 <= nd <= 29.5 * 1.10
    ok = full_ok and desk_ok
    assert _report(8, "normalizer reference band", ok,
                   "full %.4f (band 27.93-30.98), desk %.4f (26.46-32.45)"
                   % (nf, nd))


def test_criterion_09_estimation_sanity():
    # small m1 study at 5% noise, five repetitions per cell: the sparse
    # neural estimator's median normalized error at n=200 is below 1,
    # improves on its n=100 median, and k-NN lands in a sane band
    t0 = time.monotonic()
    medians = {}
    for n in (100, 200):
        cfg = ExperimentConfig(target="m1", n=n, noise_sigma=0.05,
                               repetitions=5, N_eval=10_000,
                               estimators=("neural-sc", "knn"), seed=2026,
                               lambda_mc_samples=10_000,
                               lambda_mc_repeats=10)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = run_experiment(cfg)
        assert res.failures == {"neural-sc": 0, "knn": 0}
        medians[n] = {est: res.median(est) for est in cfg.estimators}
    elapsed = time.monotonic() - t0
    sc100 = medians[100]["neural-sc"]
    sc200 = medians[200]["neural-sc"]
    knn200 = medians[200]["knn"]
    ok = (sc200 < 1.0 and sc200 < sc100 and 0.3 <= knn200 <= 0.9
          and elapsed < 900.0)
    assert _report(9, "estimation sanity", ok,
                   "neural-sc %.4f->%.4f (n=100->200), knn %.4f, %.1fs"
                   % (sc100, sc200, knn200, elapsed))


def test_criterion_10_determinism():
    # identical config and seed twice: byte-identical results JSON
    cfg = dict(target="m1", n=20, noise_sigma=0.05, repetitions=2,
               N_eval=1000, estimators=("mean", "knn"), seed=1,
               lambda_mc_samples=1000, lambda_mc_repeats=2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        j1 = run_experiment(ExperimentConfig(**cfg)).to_json()
        j2 = run_experiment(ExperimentConfig(**cfg)).to_json()
    ok = j1 == j2
    assert _report(10, "seeded determinism", ok,
                   "results JSON identical across re-runs (%d bytes)"
                   % len(j1.encode()))
