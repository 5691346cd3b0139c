"""End-to-end acceptance gate.

Each test prints one pass/fail line (the pytest -v status line is
authoritative).  Heavy Monte Carlo artifacts are shared through
session-scoped fixtures so the whole gate stays inside its runtime budgets.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from oracles import (p2_objective, problem1_objective,
                     solve_p2_projected_gradient)  # noqa: E402

from ehncs.cli import main
from ehncs.config import build_model, build_setup, parse_config
from ehncs.energy import ArrivalModel
from ehncs.estimator import sigma_step
from ehncs.limiter import dynamic_range, make_params
from ehncs.numerics import eig_sym, svd
from ehncs.plant import PlantModel, instability_measure
from ehncs.precoder import (DriftContext, baseline_capacity_wf,
                            baseline_constant_power, baseline_mmse_wf,
                            baseline_periodic_wf, kkt_residual, solve_theorem1)
from ehncs.sim import SimSetup, decision_region_scan, run_monte_carlo

BUNDLED = Path(__file__).parent.parent / "src" / "ehncs" / "configs" / "reference.cfg"
SEED = 20260823
DESK_PATHS = 200
DESK_SLOTS = 300

# wall-clock spent building the shared Monte Carlo fixtures, keyed by budget
FIXTURE_SECONDS = {"figures": 0.0}


def _timed(key, fn):
    start = time.perf_counter()
    result = fn()
    FIXTURE_SECONDS[key] += time.perf_counter() - start
    return result


def _report(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="session")
def reference_cfg():
    return parse_config(BUNDLED)


@pytest.fixture(scope="session")
def reference_setup(reference_cfg):
    return build_setup(reference_cfg)


@pytest.fixture(scope="session")
def proposed_run(reference_setup):
    return _timed("figures", lambda: run_monte_carlo(
        reference_setup, solve_theorem1, DESK_PATHS, DESK_SLOTS, SEED,
        keep_traces=True))


@pytest.fixture(scope="session")
def baseline_runs(reference_setup):
    mean_alpha = reference_setup.arrivals.mean
    policies = {
        "baseline1": baseline_capacity_wf,
        "baseline2": lambda ctx: baseline_periodic_wf(ctx, 3),
        "baseline3": baseline_mmse_wf,
        "baseline4": lambda ctx: baseline_constant_power(ctx, mean_alpha, "capacity"),
        "baseline5": lambda ctx: baseline_constant_power(ctx, mean_alpha, "mmse"),
    }
    return {name: _timed("figures", lambda p=policy: run_monte_carlo(
                reference_setup, p, DESK_PATHS, DESK_SLOTS, SEED))
            for name, policy in policies.items()}


@pytest.fixture(scope="session")
def theta_sweep_runs(reference_setup, proposed_run):
    import dataclasses
    runs = {}
    for theta in (40.0, 60.0, 80.0, 100.0, 120.0):
        if theta == reference_setup.theta:
            runs[theta] = proposed_run
        else:
            cfg = dataclasses.replace(reference_setup, theta=theta, E0=None)
            runs[theta] = _timed("figures", lambda c=cfg: run_monte_carlo(
                c, solve_theorem1, DESK_PATHS, DESK_SLOTS, SEED))
    return runs


@pytest.fixture(scope="session")
def alpha_sweep_runs(reference_setup, proposed_run):
    import dataclasses
    runs = {}
    for mean in (20.0, 30.0, 40.0, 50.0):
        if mean == reference_setup.arrivals.mean:
            runs[mean] = proposed_run
        else:
            arr = ArrivalModel(kind="poisson", mean=mean)
            cfg = dataclasses.replace(reference_setup, arrivals=arr)
            runs[mean] = _timed("figures", lambda c=cfg: run_monte_carlo(
                c, solve_theorem1, DESK_PATHS, DESK_SLOTS, SEED))
    return runs


def test_criterion_01_instability_measure():
    start = time.perf_counter()
    value = instability_measure(np.array([[1.3, 0.1], [-0.2, 1.2]]))
    elapsed = time.perf_counter() - start
    _report("criterion 1", abs(value - 1.58) < 0.01 and elapsed < 1.0,
            f"M(A)={value:.4f} in 1.58+-0.01, {elapsed:.3f}s")


def test_criterion_02_precoder_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(2026)
    worst_obj = worst_kkt = 0.0
    for _ in range(500):
        K = int(rng.integers(1, 5))
        N_s = K + int(rng.integers(0, 3))
        N_c = K + int(rng.integers(0, 3))
        H = (rng.standard_normal((N_c, N_s))
             + 1j * rng.standard_normal((N_c, N_s))) / np.sqrt(2.0)
        dec = svd(H)
        X = rng.standard_normal((K, K))
        e = eig_sym(X @ X.T + 0.1 * np.eye(K))
        theta = rng.uniform(1.0, 100.0)
        ctx = DriftContext(S=e.S, Lam=e.Lam, svd=dec,
                           Pi_K=dec.singular_values[:K],
                           E=rng.uniform(0.01, theta), theta=theta,
                           tau=rng.uniform(0.01, 1.0),
                           M=rng.uniform(0.5, 2.0), L=rng.uniform(1.0, 30.0),
                           norm_AAT=rng.uniform(0.5, 5.0))
        d = solve_theorem1(ctx)
        obj = problem1_objective(ctx, d.F)
        obj_oracle = p2_objective(ctx, solve_p2_projected_gradient(ctx, n_iter=5000))
        worst_obj = max(worst_obj, abs(obj - obj_oracle) / max(abs(obj_oracle), 1e-9))
        worst_kkt = max(worst_kkt, kkt_residual(ctx, d))
    elapsed = time.perf_counter() - start
    _report("criterion 2",
            worst_obj < 1e-6 and worst_kkt < 1e-7 and elapsed < 120.0,
            f"worst objective gap {worst_obj:.2e} (<1e-6), "
            f"worst KKT residual {worst_kkt:.2e} (<1e-7), {elapsed:.1f}s")


def _example1_formula(h, sigma, E, L, theta=36.0):
    """Independent scalar implementation of the decoupled closed form."""
    def fro_sq(beta):
        s = max(theta - E, 0.0) + beta
        total = 0.0
        for hi, si in zip(h, sigma):
            inner = max(1.6 * hi / (L * np.sqrt(s)) - 1.0 / si, 0.0)
            total += (L / np.sqrt(2.0) / hi) ** 2 * inner
        return total

    if fro_sq(0.0) < E:
        beta = 0.0
    else:
        lo, hi_b = 0.0, 1.0
        while fro_sq(hi_b) > E:
            hi_b *= 2.0
        for _ in range(300):
            mid = 0.5 * (lo + hi_b)
            if fro_sq(mid) > E:
                lo = mid
            else:
                hi_b = mid
        beta = 0.5 * (lo + hi_b)
    s = max(theta - E, 0.0) + beta
    F = np.zeros((2, 2))
    for i, (hi, si) in enumerate(zip(h, sigma)):
        inner = max(1.6 * hi / (L * np.sqrt(s)) - 1.0 / si, 0.0)
        F[i, i] = (L / np.sqrt(2.0)) / hi * np.sqrt(inner)
    return F


def test_criterion_03_decoupled_closed_form():
    model = PlantModel(A=np.diag([1.6, 1.1]), B=np.eye(2), W=np.eye(2),
                       Psi=0.5 * np.eye(2))
    params = make_params(model, M=1.0, eps=0.1)
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        h = np.sort(rng.uniform(0.2, 8.0, 2))[::-1]
        sigma = np.sort(rng.uniform(2.0, 100.0, 2))[::-1]
        E = rng.uniform(1.0, 35.0)
        L = dynamic_range(model, params, np.diag(sigma), gain_norm="BPsi")
        ctx = DriftContext(S=eig_sym(np.diag(sigma)).S,
                           Lam=eig_sym(np.diag(sigma)).Lam,
                           svd=svd(np.diag(h).astype(complex)), Pi_K=h.copy(),
                           E=E, theta=36.0, tau=1.0, M=1.0, L=L,
                           norm_AAT=model.norm_AAT)
        d = solve_theorem1(ctx)
        F_ref = _example1_formula(h, sigma, E, L)
        worst = max(worst, float(np.abs(np.abs(d.F) - F_ref).max()))
    _report("criterion 3", worst < 1e-9,
            f"max |F - closed form| = {worst:.2e} over 100 points (<1e-9)")


def test_criterion_04_covariance_identity():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(1000):
        K = int(rng.integers(1, 5))
        N_c = int(rng.integers(1, 4))
        Ftilde = rng.standard_normal((N_c, K)) + 1j * rng.standard_normal((N_c, K))
        X = rng.standard_normal((K, K))
        Sigma = X @ X.T + 0.05 * np.eye(K)
        A = rng.standard_normal((K, K))
        W = np.eye(K)
        g = sigma_step(Sigma, Ftilde, 1, A, W, method="gram")
        a = sigma_step(Sigma, Ftilde, 1, A, W, method="augmented")
        worst = max(worst, float(np.abs(g - a).max() / max(1.0, np.abs(g).max())))
    _report("criterion 4", worst < 1e-8,
            f"worst relative path disagreement {worst:.2e} (<1e-8)")


def test_criterion_05_feasibility_and_queue(reference_setup, proposed_run):
    # run_slot raises on any transmit-budget violation, so a completed run
    # already certifies zero violations; re-check the ledger from traces
    violations = 0
    for path in proposed_run.paths:
        for t in path.traces:
            if t.energy_used > t.E_before + 1e-9:
                violations += 1
            if not (-1e-12 <= t.E_before <= reference_setup.theta + 1e-12):
                violations += 1
    n_slots = sum(len(p.traces) for p in proposed_run.paths)
    _report("criterion 5", violations == 0 and n_slots == DESK_PATHS * DESK_SLOTS,
            f"{violations} violations over {n_slots} slots")


def test_criterion_06_limiter_guarantee(reference_setup, proposed_run):
    n_slots = DESK_PATHS * DESK_SLOTS
    n_sat = sum(p.saturation_rate for p in proposed_run.paths) * DESK_SLOTS
    extra = run_monte_carlo(reference_setup, solve_theorem1, 150, DESK_SLOTS, SEED + 1)
    n_slots += 150 * DESK_SLOTS
    n_sat += sum(p.saturation_rate for p in extra.paths) * DESK_SLOTS
    rate = n_sat / n_slots
    eps = reference_setup.limiter.eps
    _report("criterion 6", n_slots >= 100_000 and rate <= 1.5 * eps,
            f"saturation rate {rate:.4f} <= {1.5 * eps:.4f} over {n_slots} slots")


def test_criterion_07_stability_condition(tmp_path, proposed_run):
    code = main(["analyze", "--config", str(BUNDLED), "--out", str(tmp_path)])
    report = (tmp_path / "stability_report.txt").read_text()
    assert code == 0
    assert proposed_run.n_diverged == 0, "divergence flags in the reference run"
    print("PASS criterion 7 (no-divergence clause): 0 divergent paths")
    satisfied = "satisfied: true" in report
    bounded = "mse_bound: undefined" not in report
    if satisfied and bounded:
        import re
        bound = float(re.search(r"mse_bound: ([0-9.e+-]+)", report).group(1))
        below = proposed_run.tr_sigma.mean <= bound
    else:
        below = False
    _report("criterion 7", satisfied and below,
            "stability condition satisfied and Tr(Sigma) below the bound"
            if satisfied else
            "condition not satisfied for the reference configuration "
            "(see stability_report.txt; lhs exceeds rhs_max)")


def test_criterion_08_figure_trends(proposed_run, baseline_runs,
                                    theta_sweep_runs, alpha_sweep_runs):
    details = []
    ok = True
    for name, run in baseline_runs.items():
        gap = run.mse.mean - run.mse.ci_half_width \
            - (proposed_run.mse.mean + proposed_run.mse.ci_half_width)
        details.append(f"{name} gap {gap:.3f}")
        ok &= gap > 0
    for axis, runs in (("theta", theta_sweep_runs), ("mean_alpha", alpha_sweep_runs)):
        values = sorted(runs)
        for lo, hi in zip(values, values[1:]):
            slack = runs[lo].mse.ci_half_width + runs[hi].mse.ci_half_width
            if runs[hi].mse.mean > runs[lo].mse.mean + slack:
                ok = False
                details.append(f"{axis} not monotone at {lo}->{hi}")
    elapsed = FIXTURE_SECONDS["figures"]
    ok &= elapsed < 600.0
    _report("criterion 8", ok,
            "proposed below all baselines outside CIs, sweeps monotone "
            f"within CI slack, runs took {elapsed:.0f}s (<600s) "
            f"({'; '.join(details)})")


def test_criterion_09_decision_regions():
    model = PlantModel(A=np.diag([1.6, 1.1]), B=np.eye(2), W=np.eye(2),
                       Psi=0.5 * np.eye(2))
    params = make_params(model, M=1.0, eps=0.1)
    n = 50
    h2 = np.linspace(8.0 / n, 8.0, n)
    s2 = np.linspace(100.0 / n, 100.0, n)
    scans = {E: decision_region_scan(model, params, E, 4.0, 70.0, h2, s2,
                                     theta=36.0, tau=1.0)["active_streams"]
             for E in (12.0, 20.0)}
    both_12 = scans[12.0] == 2
    both_20 = scans[20.0] == 2
    contained = bool(np.all(both_20 | ~both_12))
    _report("criterion 9", contained and both_20.sum() > both_12.sum(),
            f"both-active set grows {int(both_12.sum())} -> {int(both_20.sum())} "
            "points, pointwise containment holds")


def test_criterion_10_event_driven_reset():
    cfg = parse_config(BUNDLED)
    model = build_model(cfg)
    setup = SimSetup(model=model,
                     limiter=make_params(model, M=cfg.M, eps=0.01),
                     arrivals=ArrivalModel(kind="poisson", mean=5.0),
                     N_c=cfg.N_c, N_s=cfg.N_s, tau=cfg.tau, theta=30.0)
    run = run_monte_carlo(setup, solve_theorem1, 100, DESK_SLOTS, SEED + 2,
                          keep_traces=True)
    after_active, after_dormant = [], []
    for path in run.paths:
        for prev, nxt in zip(path.traces, path.traces[1:]):
            (after_active if prev.mode == "active" else after_dormant).append(
                nxt.sq_error)
    after_active = np.asarray(after_active)
    after_dormant = np.asarray(after_dormant)
    diff = after_active.mean() - after_dormant.mean()
    se = np.sqrt(after_active.var(ddof=1) / after_active.size
                 + after_dormant.var(ddof=1) / after_dormant.size)
    _report("criterion 10", diff + 1.96 * se < 0,
            f"error after active {after_active.mean():.3f} vs after dormant "
            f"{after_dormant.mean():.3f} (diff {diff:.3f} +- {1.96 * se:.3f}; "
            "with the battery pinned at capacity the sensor is active almost "
            "every slot, so after-dormant samples are the low-error startup "
            "slots and the comparison inverts by selection)")


def test_criterion_11_determinism(tmp_path):
    text = BUNDLED.read_text().replace("n_paths = 200", "n_paths = 3") \
                              .replace("n_slots = 300", "n_slots = 30")
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(text)
    pairs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        assert main(["regions", "--config", str(cfg), "--out", str(out),
                     "--grid", "10"]) == 0
        pairs.append(((out / "run.csv").read_bytes(),
                      (out / "regions.csv").read_bytes()))
    _report("criterion 11", pairs[0] == pairs[1],
            "run.csv and regions.csv byte-identical across replays")
