"""Per-slot closed-loop state machine and the Monte Carlo experiment harness.

A slot runs: channel draw, dynamic range, precoding decision, limiter,
transmission, estimator and covariance updates, control, plant step, energy
spend and harvest.  Paths are independent (per-path RNG streams derived from
(seed, path index)) so aggregates do not depend on execution order.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import receive, sample_channel
from .energy import ArrivalModel, EnergyQueue, check_feasible, sample_arrival, spend_and_harvest
from .estimator import estimate_step, mse_sample, sigma_step
from .limiter import LimiterParams, clip, dynamic_range
from .numerics import InputDomainError, SvdResult, eig_sym
from .plant import PlantModel, control, step
from .precoder import DriftContext, PrecoderDecision, solve_theorem1


class FeasibilityError(RuntimeError):
    """A policy requested more transmit energy than the battery holds."""


@dataclass(frozen=True)
class SimSetup:
    """Immutable bundle of everything a run needs besides randomness."""

    model: PlantModel
    limiter: LimiterParams
    arrivals: ArrivalModel
    N_c: int
    N_s: int
    tau: float
    theta: float
    E0: float | None = None  # initial battery level, default theta/2
    gain_norm: str = "BPsiA"
    divergence_guard: float = 1e12

    def __post_init__(self):
        if self.tau <= 0 or self.theta <= 0:
            raise InputDomainError("SimSetup: tau and theta must be > 0")
        K = self.model.K
        if K > min(self.N_s, self.N_c):
            raise InputDomainError("SimSetup: need K <= min(N_s, N_c)")
        if self.E0 is None:
            object.__setattr__(self, "E0", self.theta / 2.0)
        if not 0 <= self.E0 <= self.theta:
            raise InputDomainError("SimSetup: E0 must lie in [0, theta]")

    @property
    def K(self) -> int:
        return self.model.K


@dataclass
class SimState:
    n: int
    x: np.ndarray
    x_hat: np.ndarray
    Sigma: np.ndarray
    queue: EnergyQueue
    diverged: bool = False


@dataclass(frozen=True)
class SlotTrace:
    n: int
    E_before: float
    L: float
    mode: str
    gamma: int
    energy_used: float  # realized spend ||F q||^2 tau
    Tr_Sigma: float
    sq_error: float
    sq_state: float
    alpha: float


def initial_state(setup: SimSetup) -> SimState:
    K = setup.K
    return SimState(
        n=0, x=np.zeros(K), x_hat=np.zeros(K), Sigma=np.zeros((K, K)),
        queue=EnergyQueue(E=setup.E0, theta=setup.theta, tau=setup.tau),
    )


def _noise_sqrt(W: np.ndarray) -> np.ndarray:
    dec = eig_sym(W)
    return dec.S * np.sqrt(dec.Lam)


def make_context(setup: SimSetup, state: SimState, draw, L: float) -> DriftContext:
    dec = eig_sym(state.Sigma)
    return DriftContext(
        S=dec.S, Lam=dec.Lam, svd=draw.svd, Pi_K=draw.Pi_K, E=state.queue.E,
        theta=setup.theta, tau=setup.tau, M=setup.limiter.M, L=L,
        norm_AAT=setup.model.norm_AAT, eps=setup.limiter.eps, slot=state.n,
    )


def run_slot(setup: SimSetup, state: SimState, policy, rng: np.random.Generator,
             noise_sqrt: np.ndarray | None = None) -> tuple[SimState, SlotTrace]:
    """Advance the closed loop by one slot.

    The control u(n) = -Psi A x_hat(n) uses the estimate formed from
    measurements through slot n-1; the same u(n) drives both the estimator
    prediction and the plant.  Energy spent on air is the realized
    ||F q||^2 tau while feasibility is checked on the budget
    M^2 Tr(F^H F) tau (the limiter makes the former <= the latter).
    """
    model = setup.model
    if noise_sqrt is None:
        noise_sqrt = _noise_sqrt(model.W)

    draw = sample_channel(rng, setup.N_c, setup.N_s, setup.K)
    L = dynamic_range(model, setup.limiter, state.Sigma, gain_norm=setup.gain_norm)
    ctx = make_context(setup, state, draw, L)
    decision: PrecoderDecision = policy(ctx)
    if not check_feasible(state.queue, decision.F, setup.limiter.M):
        raise FeasibilityError(
            f"slot {state.n}: policy budget {decision.energy_used:.6g} J "
            f"exceeds stored energy {state.queue.E:.6g} J")

    lim = clip(state.x, L, setup.limiter.M)
    gamma = 0 if lim.saturated else 1
    transmitting = decision.mode != "dormant" and np.any(decision.F)
    if transmitting:
        y = receive(draw, decision.F, lim.q, rng)
        Ftilde = draw.H @ decision.F * lim.g
        spend = float(np.linalg.norm(decision.F @ lim.q) ** 2) * setup.tau
    else:
        y, Ftilde, spend = None, None, 0.0

    sq_error = mse_sample(state.x, state.x_hat)
    sq_state = float(state.x @ state.x)
    u = control(model, state.x_hat)
    x_hat_next = estimate_step(state.x_hat, state.Sigma, y, Ftilde, gamma,
                               model.A, model.B, u)
    Sigma_next = sigma_step(state.Sigma, Ftilde, gamma, model.A, model.W)
    w = noise_sqrt @ rng.standard_normal(setup.K)
    x_next = step(model, state.x, u, w)

    alpha = sample_arrival(setup.arrivals, rng)
    queue_next = spend_and_harvest(state.queue, spend, alpha)

    trace = SlotTrace(
        n=state.n, E_before=state.queue.E, L=L, mode=decision.mode, gamma=gamma,
        energy_used=spend, Tr_Sigma=float(np.trace(state.Sigma)),
        sq_error=sq_error, sq_state=sq_state, alpha=alpha,
    )
    diverged = state.diverged or sq_state > setup.divergence_guard
    next_state = SimState(n=state.n + 1, x=x_next, x_hat=x_hat_next,
                          Sigma=Sigma_next, queue=queue_next, diverged=diverged)
    return next_state, trace


@dataclass(frozen=True)
class PathResult:
    mse: float  # time-averaged ||x - x_hat||^2 / K
    mean_tr_sigma: float
    saturation_rate: float
    duty_cycle: float  # fraction of active-mode slots
    energy_used: float
    energy_harvested: float
    diverged: bool
    traces: list[SlotTrace] | None = None


@dataclass(frozen=True)
class Metric:
    mean: float
    ci_half_width: float  # 95% normal CI


@dataclass(frozen=True)
class RunResult:
    n_paths: int
    n_slots: int
    seed: int
    mse: Metric
    tr_sigma: Metric
    saturation_rate: Metric
    duty_cycle: Metric
    n_diverged: int
    paths: list[PathResult] = field(repr=False, default_factory=list)

    @property
    def diverged(self) -> bool:
        return self.n_diverged > 0


def run_path(setup: SimSetup, policy, n_slots: int,
             rng: np.random.Generator, keep_traces: bool = False) -> PathResult:
    noise_sqrt = _noise_sqrt(setup.model.W)
    state = initial_state(setup)
    traces = []
    sq_err_sum = tr_sigma_sum = spend_sum = harvest_sum = 0.0
    n_sat = n_active = 0
    for _ in range(n_slots):
        state, trace = run_slot(setup, state, policy, rng, noise_sqrt=noise_sqrt)
        if keep_traces:
            traces.append(trace)
        sq_err_sum += trace.sq_error
        tr_sigma_sum += trace.Tr_Sigma
        spend_sum += trace.energy_used
        harvest_sum += trace.alpha
        n_sat += 1 - trace.gamma
        n_active += trace.mode == "active"
        if state.diverged:
            # freeze the path at the guard: remaining slots inherit the flag
            break
    n_done = state.n
    return PathResult(
        mse=sq_err_sum / (n_done * setup.K), mean_tr_sigma=tr_sigma_sum / n_done,
        saturation_rate=n_sat / n_done, duty_cycle=n_active / n_done,
        energy_used=spend_sum, energy_harvested=harvest_sum,
        diverged=state.diverged, traces=traces if keep_traces else None,
    )


def _metric(values: np.ndarray) -> Metric:
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    if values.size < 2:
        return Metric(mean=mean, ci_half_width=float("inf"))
    half = 1.96 * float(values.std(ddof=1)) / math.sqrt(values.size)
    return Metric(mean=mean, ci_half_width=half)


def run_monte_carlo(setup: SimSetup, policy, n_paths: int, n_slots: int,
                    seed: int, keep_traces: bool = False) -> RunResult:
    """Independent paths with per-path RNG streams default_rng([seed, path])."""
    if n_paths < 1 or n_slots < 1:
        raise InputDomainError("run_monte_carlo: n_paths and n_slots must be >= 1")
    paths = []
    for p in range(n_paths):
        rng = np.random.default_rng([seed, p])
        paths.append(run_path(setup, policy, n_slots, rng, keep_traces=keep_traces))
    return RunResult(
        n_paths=n_paths, n_slots=n_slots, seed=seed,
        mse=_metric([p.mse for p in paths]),
        tr_sigma=_metric([p.mean_tr_sigma for p in paths]),
        saturation_rate=_metric([p.saturation_rate for p in paths]),
        duty_cycle=_metric([p.duty_cycle for p in paths]),
        n_diverged=sum(p.diverged for p in paths), paths=paths,
    )


def sweep(setup: SimSetup, policy_factories: dict, axis: str, values,
          n_paths: int, n_slots: int, seed: int) -> list[dict]:
    """Run every policy at every value of the swept parameter.

    axis is "theta" (battery capacity; the default half-full start tracks it)
    or "mean_alpha" (average energy arrival).  policy_factories maps a policy
    name to a callable(setup) -> per-slot policy, so budget-aware baselines
    can read the swept setup.  Returns one row dict per (policy, value).
    """
    values = list(values)
    if any(b < a for a, b in zip(values, values[1:])):
        raise InputDomainError("sweep: values must be ascending")
    rows = []
    for value in values:
        if axis == "theta":
            cfg = replace(setup, theta=float(value), E0=None)
        elif axis == "mean_alpha":
            arr = replace(setup.arrivals, mean=float(value))
            cfg = replace(setup, arrivals=arr)
        else:
            raise InputDomainError(f"sweep: unknown axis {axis!r}")
        for name, factory in policy_factories.items():
            result = run_monte_carlo(cfg, factory(cfg), n_paths, n_slots, seed)
            rows.append({
                "policy": name, "axis": axis, "value": float(value),
                "mse": result.mse.mean, "mse_ci": result.mse.ci_half_width,
                "tr_sigma": result.tr_sigma.mean,
                "saturation_rate": result.saturation_rate.mean,
                "duty_cycle": result.duty_cycle.mean,
                "n_diverged": result.n_diverged,
            })
    return rows


def _diagonal_context(E: float, theta: float, tau: float, M: float, L: float,
                      norm_AAT: float, h: np.ndarray, sigma: np.ndarray) -> DriftContext:
    """Decoupled per-stream context: H = diag(h), Sigma = diag(sigma), no
    reordering so stream i keeps the pair (h_i, sigma_i)."""
    K = len(h)
    dec = SvdResult(U=np.eye(K), Pi=np.diag(np.asarray(h, dtype=float)), V=np.eye(K))
    return DriftContext(S=np.eye(K), Lam=np.asarray(sigma, dtype=float), svd=dec,
                        Pi_K=np.asarray(h, dtype=float), E=E, theta=theta, tau=tau,
                        M=M, L=L, norm_AAT=norm_AAT)


def decision_region_scan(model: PlantModel, limiter: LimiterParams, E: float,
                         h1: float, sigma1: float, h2_values, sigma2_values,
                         theta: float, tau: float,
                         gain_norm: str = "BPsi") -> dict:
    """Count of activated spatial channels over a (h2, sigma2) grid.

    Stream 1 is held at (h1, sigma1); the scan reports, for each grid point,
    how many streams the drift-minimizing precoder switches on (0, 1 or 2)
    for a decoupled diagonal plant/channel.  The dynamic range is recomputed
    per point from Sigma = diag(sigma1, sigma2); gain_norm defaults to the
    ||B Psi|| variant used by the published decision-region plots.
    Rows index sigma2_values, columns index h2_values.
    """
    h2_values = np.asarray(h2_values, dtype=float)
    sigma2_values = np.asarray(sigma2_values, dtype=float)
    norm_AAT = model.norm_AAT
    counts = np.zeros((len(sigma2_values), len(h2_values)), dtype=int)
    for i, s2 in enumerate(sigma2_values):
        L = dynamic_range(model, limiter, np.diag([sigma1, s2]), gain_norm=gain_norm)
        for j, h2 in enumerate(h2_values):
            ctx = _diagonal_context(E, theta, tau, limiter.M, L, norm_AAT,
                                    h=np.array([h1, h2]), sigma=np.array([sigma1, s2]))
            decision = solve_theorem1(ctx)
            counts[i, j] = int(np.count_nonzero(decision.allocations > 0))
    return {"h2": h2_values, "sigma2": sigma2_values, "active_streams": counts,
            "E": E, "theta": theta}
