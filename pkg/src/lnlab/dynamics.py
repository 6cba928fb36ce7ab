"""Discrete chains, fine-step flows, couplings, and seeded ensembles.

Two noise mechanisms share one interval kernel:

* label-noise gradient descent: per step draw xi ~ N(0, delta I_k) and move
      theta' = theta - eta * grad L_S(theta, B)
                     + (eta / k) * grad_f(theta, X_B)^T xi,
* isotropic Langevin noise (SGLD, descent sign):
      theta' = theta - eta * grad L_S(theta, B) + sqrt(2 * beta_inv * eta) * xi,
      xi ~ N(0, I_d).

The continuous-time counterparts refine each step interval of length eta
into ``substeps`` Euler-Maruyama substeps with the minibatch frozen per
interval; the diffusion is (sqrt(delta * eta) / k) grad_f^T dW with a
k-dimensional Wiener process in label-noise mode and sqrt(2 * beta_inv) dW
with a d-dimensional one in Langevin mode.  A flow interval with
substeps=1 is the same arithmetic as one discrete step, so the two match
bitwise when they share draws.

Randomness plan: each trajectory owns a stream seeded per replica via
``derive_seed``; per step it draws the batch first, then the standard
normals for every substep.  Trajectories record both, and replaying a
recorded plan reproduces the states bitwise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .problems import DataPoint, InputError, ProblemSpec, minibatch_grad, model_values_and_grads, neighbor_dataset
from .rng import GaussianStream, derive_seed
from .transport import EmpiricalMeasure

LABEL_NOISE_SGD = "label_noise_sgd"
SGLD = "sgld"
LABEL_NOISE_FLOW = "label_noise_flow"
SGLD_FLOW = "sgld_flow"
_ALGORITHMS = (LABEL_NOISE_SGD, SGLD, LABEL_NOISE_FLOW, SGLD_FLOW)
_FLOW_OF = {LABEL_NOISE_SGD: LABEL_NOISE_FLOW, SGLD: SGLD_FLOW,
            LABEL_NOISE_FLOW: LABEL_NOISE_FLOW, SGLD_FLOW: SGLD_FLOW}


@dataclass(frozen=True)
class ChainConfig:
    algorithm: str = LABEL_NOISE_SGD
    eta: float = 0.05
    delta: float = 0.0
    beta_inv: float = 0.0
    k: int = 1
    horizon: int = 100
    substeps: int = 64
    seed: int = 0

    def __post_init__(self):
        algo = {"flow": LABEL_NOISE_FLOW}.get(self.algorithm, self.algorithm)
        object.__setattr__(self, "algorithm", algo)
        if algo not in _ALGORITHMS:
            raise InputError(f"unknown algorithm {self.algorithm!r}")
        if self.eta <= 0:
            raise InputError("eta must be positive")
        if self.delta < 0 or self.beta_inv < 0:
            raise InputError("noise levels must be nonnegative")
        if self.substeps < 1:
            raise InputError("substeps must be >= 1")
        if self.horizon < 0:
            raise InputError("horizon must be >= 0")

    @property
    def is_flow(self) -> bool:
        return self.algorithm in (LABEL_NOISE_FLOW, SGLD_FLOW)

    @property
    def label_noise(self) -> bool:
        return self.algorithm in (LABEL_NOISE_SGD, LABEL_NOISE_FLOW)

    def validate_for(self, n: int, eta_max: float | None = None) -> None:
        if not 1 <= self.k <= n:
            raise InputError(f"need 1 <= k <= n, got k={self.k}, n={n}")
        if eta_max is not None and self.eta > eta_max:
            warnings.warn(f"eta={self.eta} exceeds eta_max={eta_max}", stacklevel=2)

    def as_flow(self) -> "ChainConfig":
        return replace(self, algorithm=_FLOW_OF[self.algorithm])


@dataclass(frozen=True)
class InitSpec:
    """Initial law: point mass at center or isotropic Gaussian around it."""
    kind: str = "point"
    center: np.ndarray = field(default_factory=lambda: np.zeros(2))
    scale: float = 0.0

    def sample(self, stream: GaussianStream, count: int) -> np.ndarray:
        center = np.asarray(self.center, dtype=float)
        if self.kind == "point":
            return np.tile(center, (count, 1))
        if self.kind == "gaussian":
            return center[None, :] + self.scale * stream.normal_matrix(count, center.size)
        raise InputError(f"unknown init kind {self.kind!r}")


@dataclass
class Trajectory:
    """Recorded run: states at interval ends plus the full noise plan."""

    states: np.ndarray      # (T+1, d)
    batches: np.ndarray     # (T, k)
    noise_log: np.ndarray   # (T, substeps, m) standard normals
    eta: float
    algorithm: str

    @property
    def horizon(self) -> int:
        return len(self.states) - 1

    @property
    def times(self) -> np.ndarray:
        return self.eta * np.arange(len(self.states))

    def to_csv(self, path) -> None:
        d = self.states.shape[1]
        with open(path, "w", newline="") as fh:
            fh.write(",".join(["t"] + [f"theta_{j}" for j in range(d)]) + "\n")
            for t, row in enumerate(self.states):
                fh.write(",".join([str(t)] + [repr(float(v)) for v in row]) + "\n")


@dataclass
class CouplingRun:
    mode: str               # "synchronous_discretization" | "neighbor_stability"
    first: Trajectory
    second: Trajectory
    shared: str


# ---------------------------------------------------------------------------
# elementary operations
# ---------------------------------------------------------------------------

def sample_minibatch(n: int, k: int, stream: GaussianStream) -> np.ndarray:
    """Uniform size-k index subset of {0..n-1}, without replacement, sorted."""
    if not 1 <= k <= n:
        raise InputError(f"need 1 <= k <= n, got k={k}, n={n}")
    return stream.subset(n, k)


def step_label_noise_sgd(spec: ProblemSpec, theta, batch, xi_batch, eta: float,
                         delta: float | None = None, stream: GaussianStream | None = None):
    """One label-noise step; xi_batch ~ N(0, delta I_k) supplied or drawn."""
    theta = np.asarray(theta, dtype=float)
    batch = np.asarray(batch, dtype=int)
    if xi_batch is None:
        if stream is None or delta is None:
            raise InputError("xi_batch missing: need delta and a stream to draw it")
        xi_batch = np.sqrt(delta) * stream.normals(len(batch))
    xi_batch = np.asarray(xi_batch, dtype=float)
    if xi_batch.shape != (len(batch),):
        raise InputError("xi_batch length must equal batch size")
    grad = minibatch_grad(spec, theta, batch)
    _, grads = model_values_and_grads(spec.model, theta, spec.dataset.xs[batch])
    return theta - eta * grad + (eta / len(batch)) * (grads.T @ xi_batch)


def step_sgld(spec: ProblemSpec, theta, batch, xi, eta: float, beta_inv: float,
              stream: GaussianStream | None = None):
    """One Langevin step (descent sign); xi ~ N(0, I_d) supplied or drawn."""
    theta = np.asarray(theta, dtype=float)
    if xi is None:
        if stream is None:
            raise InputError("xi missing: need a stream to draw it")
        xi = stream.normals(theta.size)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != theta.shape:
        raise InputError("xi must match the parameter dimension")
    grad = minibatch_grad(spec, theta, batch)
    return theta - eta * grad + np.sqrt(2.0 * beta_inv * eta) * xi


# ---------------------------------------------------------------------------
# interval kernel (shared by chains and flows, vectorized over replicas)
# ---------------------------------------------------------------------------

def _interval_update(spec: ProblemSpec, config: ChainConfig, thetas: np.ndarray,
                     batches: np.ndarray, normals: np.ndarray) -> np.ndarray:
    """Advance replicas over one eta-interval with the batch frozen.

    thetas (N, d); batches (N, k); normals (N, S, m).  One substep covers
    dt = eta / S; with S = 1 this is exactly one discrete step.
    """
    eta, S = config.eta, normals.shape[1]
    dt = eta / S
    xs_b = spec.dataset.xs[batches]            # (N, k, p)
    ys_b = spec.dataset.ys[batches]            # (N, k)
    label_coef = (eta / config.k) * np.sqrt(config.delta / S)
    iso_coef = np.sqrt(2.0 * config.beta_inv * dt)
    out = thetas
    for s in range(S):
        u = (xs_b * out[:, None, :]).sum(axis=2)          # (N, k)
        if spec.model.family == "linear":
            f, grads = u, xs_b
        else:
            t = np.tanh(u)
            f = spec.model.amplitude * t
            grads = (spec.model.amplitude * (1.0 - t * t))[:, :, None] * xs_b
        resid = f - ys_b
        drift = (resid[:, :, None] * grads).mean(axis=1) + spec.ridge * out
        out = out - dt * drift
        g = normals[:, s, :]
        if config.label_noise:
            if label_coef != 0.0:
                out = out + label_coef * (grads * g[:, :, None]).sum(axis=1)
        else:
            if iso_coef != 0.0:
                out = out + iso_coef * g
    return out


def _draw_plan(stream: GaussianStream, n: int, config: ChainConfig, horizon: int,
               d: int, forced_batches: np.ndarray | None = None):
    """Per-step draws in documented order: batch indices, then normals."""
    S = config.substeps if config.is_flow else 1
    m = config.k if config.label_noise else d
    batches = np.empty((horizon, config.k), dtype=int)
    normals = np.empty((horizon, S, m))
    for t in range(horizon):
        if forced_batches is not None:
            batches[t] = forced_batches[t]
        else:
            batches[t] = stream.subset(n, config.k)
        normals[t] = stream.normal_matrix(S, m)
    return batches, normals


def _run_one(spec: ProblemSpec, config: ChainConfig, theta0: np.ndarray,
             batches: np.ndarray, normals: np.ndarray) -> Trajectory:
    d = theta0.size
    T = len(batches)
    states = np.empty((T + 1, d))
    states[0] = theta0
    cur = theta0[None, :].copy()
    for t in range(T):
        cur = _interval_update(spec, config, cur, batches[t][None, :], normals[t][None, :, :])
        states[t + 1] = cur[0]
    return Trajectory(states=states, batches=batches, noise_log=normals,
                      eta=config.eta, algorithm=config.algorithm)


def _resolve_theta0(spec, init, stream) -> np.ndarray:
    if isinstance(init, InitSpec):
        return init.sample(stream, 1)[0]
    arr = np.asarray(init, dtype=float)
    if arr.shape != (spec.dim,):
        raise InputError(f"theta0 must have shape ({spec.dim},)")
    return arr


# ---------------------------------------------------------------------------
# public runners
# ---------------------------------------------------------------------------

def run_discrete_chain(spec: ProblemSpec, config: ChainConfig, init,
                       plan=None) -> Trajectory:
    """Run T steps of the configured discrete chain from a seeded stream.

    ``init`` is a parameter vector or an InitSpec sampled before any step
    draws.  Passing ``plan=(batches, normals)`` replays that randomness
    instead (bitwise identical states for identical plans).
    """
    if config.is_flow:
        raise InputError("run_discrete_chain needs a discrete algorithm")
    config.validate_for(spec.dataset.n)
    stream = GaussianStream(config.seed)
    theta0 = _resolve_theta0(spec, init, stream)
    if plan is None:
        batches, normals = _draw_plan(stream, spec.dataset.n, config, config.horizon, spec.dim)
    else:
        batches, normals = plan
    return _run_one(spec, config, theta0, batches, normals)


def integrate_flow(spec: ProblemSpec, config: ChainConfig, init,
                   batch_schedule: np.ndarray | None = None, plan=None) -> Trajectory:
    """Integrate the continuous-time counterpart on the step grid.

    Each eta-interval is refined into config.substeps Euler-Maruyama
    substeps with the minibatch frozen for the interval (the schedule can
    be forced to couple against a discrete run).
    """
    flow_config = config.as_flow()
    flow_config.validate_for(spec.dataset.n)
    stream = GaussianStream(config.seed)
    theta0 = _resolve_theta0(spec, init, stream)
    if plan is None:
        batches, normals = _draw_plan(stream, spec.dataset.n, flow_config,
                                      config.horizon, spec.dim,
                                      forced_batches=batch_schedule)
    else:
        batches, normals = plan
    return _run_one(spec, flow_config, theta0, batches, normals)


def replay(spec: ProblemSpec, trajectory: Trajectory, config: ChainConfig) -> Trajectory:
    """Re-run a recorded trajectory from its noise log (bitwise identical)."""
    cfg = replace(config, algorithm=trajectory.algorithm)
    return _run_one(spec, cfg, trajectory.states[0].copy(),
                    trajectory.batches, trajectory.noise_log)


def run_coupled(spec: ProblemSpec, config: ChainConfig, mode: str, *,
                i: int | None = None, z_new: DataPoint | None = None,
                init=None, batch_schedule: np.ndarray | None = None) -> CouplingRun:
    """Run a coupled pair of trajectories sharing all randomness.

    * ``neighbor_stability``: the same chain on the dataset and on its
      neighbor (index i replaced by z_new); batch schedule and every
      Gaussian draw (including the full label-noise vector) are shared.
    * ``synchronous_discretization``: one discrete trajectory and one flow
      trajectory driven by the same Wiener increments per interval; the
      discrete step consumes the aggregated increment
      Z_t = sum_s G_{t,s} / sqrt(S).
    """
    stream = GaussianStream(config.seed)
    theta0 = _resolve_theta0(spec, init if init is not None else np.zeros(spec.dim), stream)
    if mode == "neighbor_stability":
        if i is None or z_new is None:
            raise InputError("neighbor mode needs the differing index and replacement point")
        cfg = config if not config.is_flow else config.as_flow()
        batches, normals = _draw_plan(stream, spec.dataset.n, cfg, config.horizon,
                                      spec.dim, forced_batches=batch_schedule)
        spec_hat = spec.with_dataset(neighbor_dataset(spec.dataset, i, z_new))
        first = _run_one(spec, cfg, theta0, batches, normals)
        second = _run_one(spec_hat, cfg, theta0, batches, normals)
        return CouplingRun(mode=mode, first=first, second=second,
                           shared="batch schedule + all Gaussian draws")
    if mode == "synchronous_discretization":
        flow_cfg = config.as_flow()
        batches, normals = _draw_plan(stream, spec.dataset.n, flow_cfg, config.horizon,
                                      spec.dim, forced_batches=batch_schedule)
        flow = _run_one(spec, flow_cfg, theta0, batches, normals)
        S = normals.shape[1]
        agg = normals.sum(axis=1, keepdims=True) / np.sqrt(S)
        discrete_cfg = replace(config, algorithm=LABEL_NOISE_SGD if config.label_noise else SGLD)
        disc = _run_one(spec, discrete_cfg, theta0, batches, agg)
        return CouplingRun(mode=mode, first=disc, second=flow,
                           shared="batch schedule + Wiener increments per interval")
    raise InputError(f"unknown coupling mode {mode!r}")


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------

def _ensemble_plans(spec: ProblemSpec, config: ChainConfig, replicas: int, init,
                    forced_batches: np.ndarray | None = None):
    """Per-replica seeded draws, stacked for vectorized stepping."""
    theta0 = np.empty((replicas, spec.dim))
    all_batches = all_normals = None
    for r in range(replicas):
        stream = GaussianStream(derive_seed(config.seed, r))
        theta0[r] = _resolve_theta0(spec, init, stream)
        batches, normals = _draw_plan(stream, spec.dataset.n, config, config.horizon,
                                      spec.dim, forced_batches=forced_batches)
        if all_batches is None:
            all_batches = np.empty((replicas,) + batches.shape, dtype=int)
            all_normals = np.empty((replicas,) + normals.shape)
        all_batches[r] = batches
        all_normals[r] = normals
    return theta0, all_batches, all_normals


def ensemble_states(spec: ProblemSpec, config: ChainConfig, replicas: int,
                    checkpoints, init, plans=None) -> dict[int, np.ndarray]:
    """States (replicas, d) at each checkpoint step, vectorized over replicas."""
    if replicas < 1:
        raise InputError("need at least one replica")
    config.validate_for(spec.dataset.n)
    checkpoints = sorted(set(int(c) for c in checkpoints))
    if any(c < 0 or c > config.horizon for c in checkpoints):
        raise InputError("checkpoints must lie in [0, horizon]")
    if plans is None:
        theta0, batches, normals = _ensemble_plans(spec, config, replicas, init)
    else:
        theta0, batches, normals = plans
    out = {}
    cur = theta0.copy()
    if 0 in checkpoints:
        out[0] = cur.copy()
    for t in range(config.horizon):
        cur = _interval_update(spec, config, cur, batches[:, t, :], normals[:, t, :, :])
        if (t + 1) in checkpoints:
            out[t + 1] = cur.copy()
    return out


def simulate_ensemble(spec: ProblemSpec, config: ChainConfig, replicas: int,
                      checkpoints, init) -> dict[int, EmpiricalMeasure]:
    """Empirical measures of the parameter law at the checkpoint steps.

    Replica r draws from a stream seeded with derive_seed(config.seed, r),
    so the result is independent of evaluation order.
    """
    if replicas < 2:
        raise InputError("need at least 2 replicas")
    states = ensemble_states(spec, config, replicas, checkpoints, init)
    return {c: EmpiricalMeasure(s) for c, s in states.items()}


def coupled_neighbor_ensembles(spec: ProblemSpec, config: ChainConfig, replicas: int,
                               checkpoints, init, i: int, z_new: DataPoint,
                               batch_schedule: np.ndarray | None = None):
    """Neighbor coupling, one coupled pair per replica; shared plans.

    Returns (states_on_S, states_on_S_hat) as checkpoint dictionaries.
    With a forced schedule that never contains i the two are bitwise equal.
    """
    plans = _ensemble_plans(spec, config, replicas, init, forced_batches=batch_schedule)
    spec_hat = spec.with_dataset(neighbor_dataset(spec.dataset, i, z_new))
    first = ensemble_states(spec, config, replicas, checkpoints, init, plans=plans)
    second = ensemble_states(spec_hat, config, replicas, checkpoints, init, plans=plans)
    return first, second


def synchronous_coupling_cloud(spec: ProblemSpec, config: ChainConfig, pairs: int,
                               init) -> tuple[np.ndarray, np.ndarray]:
    """One-interval synchronous coupling for a cloud of initial points.

    Returns (discrete_endpoints, flow_endpoints), both (pairs, d): the flow
    uses config.substeps Euler-Maruyama substeps, the discrete step consumes
    the aggregated Wiener increment of its interval, and both see the same
    frozen minibatch.
    """
    flow_cfg = replace(config.as_flow(), horizon=1)
    theta0, batches, normals = _ensemble_plans(spec, flow_cfg, pairs, init)
    flow_end = _interval_update(spec, flow_cfg, theta0.copy(),
                                batches[:, 0, :], normals[:, 0, :, :])
    S = normals.shape[2]
    agg = normals[:, 0, :, :].sum(axis=1, keepdims=True) / np.sqrt(S)
    disc_cfg = replace(config, algorithm=LABEL_NOISE_SGD if config.label_noise else SGLD)
    disc_end = _interval_update(spec, disc_cfg, theta0.copy(), batches[:, 0, :], agg)
    return disc_end, flow_end
