"""Experiment orchestration: seeded studies with verdict rows and figures.

Each study returns an :class:`ExperimentResult` holding tabular rows
(metric, value, standard error, seed), named inequality verdicts with both
sides' numeric values, optional extra CSV tables, and matplotlib figures
rendered to files by :mod:`lnlab.reporting`.

Verdict policy: an inequality between a Monte-Carlo estimate and a bound
"holds" only when the empirical side stays below the bound at >= 99% of
checkpoints with at least 1000 replicas behind it; fewer replicas make the
verdict "inconclusive", as do infeasible constants.  Violations are never
silently converted to NaN.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from . import bounds as bnd
from . import dynamics as dyn
from . import problems as prb
from . import transport as tpt
from .config import ExperimentConfig
from .rng import GaussianStream, derive_seed

MIN_REPLICAS_FOR_VERDICT = 1000
HOLD_FRACTION = 0.99


@dataclass
class ResultRow:
    experiment: str
    param_id: str
    metric: str
    value: float
    stderr: float
    seed: int


@dataclass
class Verdict:
    name: str
    lhs_label: str
    lhs: float
    rhs_label: str
    rhs: float
    outcome: str            # "holds" | "violated" | "inconclusive"
    detail: str = ""


@dataclass
class ExperimentResult:
    experiment: str
    rows: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)    # name -> (header, rows)
    figures: dict = field(default_factory=dict)   # name -> Figure
    config: ExperimentConfig | None = None
    dataset: object = None                        # exported with its metadata
    dataset_meta: dict = field(default_factory=dict)
    text_report: str = ""                         # aligned text, echoed by the CLI

    def add_row(self, param_id, metric, value, stderr=0.0, seed=0):
        self.rows.append(ResultRow(self.experiment, str(param_id), metric,
                                   float(value), float(stderr), int(seed)))


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------

def fit_loglog_slope(xs, ys):
    """Least-squares line through (log x, log y): returns (slope, intercept, r2)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size != ys.size or xs.size < 2:
        raise prb.InputError("need matching xs, ys with at least 2 points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise prb.InputError("log-log fit needs positive data")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res <= 1e-24 else (1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0)
    return float(slope), float(intercept), float(r2)


def generator_metadata(config: ExperimentConfig) -> dict:
    return {"n": config.n, "p": config.p, "model_family": config.model_family,
            "amplitude": config.amplitude,
            "teacher": [float(v) for v in config.resolved_teacher()],
            "label_sigma": config.label_sigma, "x_max": config.x_max,
            "y_max": config.y_max, "seed": derive_seed(config.seed, 101)}


def build_problem(config: ExperimentConfig):
    model = prb.ModelSpec(family=config.model_family, amplitude=config.amplitude)
    dataset = prb.make_synthetic_dataset(
        model, config.n, config.p, config.resolved_teacher(), config.label_sigma,
        config.x_max, config.y_max, seed=derive_seed(config.seed, 101))
    spec = prb.ProblemSpec(model=model, ridge=config.ridge, dataset=dataset)
    chain = dyn.ChainConfig(algorithm=config.algorithm, eta=config.eta,
                            delta=config.delta, beta_inv=config.beta_inv,
                            k=config.k, horizon=config.horizon,
                            substeps=config.substeps, seed=derive_seed(config.seed, 202))
    init = dyn.InitSpec(kind=config.init_kind, center=config.resolved_init_center(),
                        scale=config.init_scale)
    return spec, chain, init


def init_moments(init: dyn.InitSpec):
    """(second, fourth) moment of the initial law, exact for both kinds."""
    c2 = float(np.asarray(init.center, dtype=float) @ np.asarray(init.center, dtype=float))
    d = np.asarray(init.center).size
    if init.kind == "point" or init.scale == 0.0:
        return c2, c2 ** 2
    s2 = init.scale ** 2
    mu2 = c2 + d * s2
    mu4 = mu2 ** 2 + 4.0 * s2 * c2 + 2.0 * d * s2 ** 2
    return mu2, mu4


def _figure(title, xlabel, ylabel, logx=False, logy=False):
    fig = Figure(figsize=(6.0, 4.0))
    FigureCanvasAgg(fig)
    ax = fig.add_subplot()
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    return fig, ax


def _bound_inputs_from_problem(spec, chain, init, config):
    """BoundInputs for the built-in problem, overriding (m, b) from closed form."""
    noise = config.delta if chain.label_noise else 0.0
    closed = prb.closed_form_constants(spec, chain.eta, noise, chain.k)
    _, mu4 = init_moments(init)
    inputs = bnd.BoundInputs(
        alpha=closed.alpha, M=closed.M, ell_f=closed.ell_f, delta=chain.delta,
        eta=chain.eta, k=chain.k, n=spec.dataset.n, d=spec.dim, sigma4=mu4,
        beta_inv=chain.beta_inv, m_override=closed.m,
        b_override=None if np.isinf(closed.b) else closed.b)
    return inputs, closed


def _abstract_inputs(config: ExperimentConfig, eta=None, n=None):
    return bnd.BoundInputs(
        alpha=config.bound_alpha, M=config.bound_M, ell_f=config.bound_ell_f,
        delta=config.bound_delta, eta=config.eta if eta is None else eta,
        k=config.k, n=config.n if n is None else int(n), d=config.bound_d,
        sigma4=config.bound_sigma4, beta_inv=config.beta_inv,
        t=config.bound_t)


def _selection_for(inputs: bnd.BoundInputs, mode="search"):
    m, b, eta_max, ok, _ = inputs.derive()
    if not ok:
        return None, None, {"feasible": False, "note": "no dissipativity pair"}
    ct2 = bnd.moment_estimate_ctilde(2.0, eta_max, b, m, inputs.delta, inputs.ell_f)
    return bnd.select_contraction_params(
        inputs.alpha, inputs.eta, eta_max, inputs.sigma4, ct2, b, m,
        inputs.delta, inputs.k, inputs.d, inputs.ell_f, mode=mode)


def _mc_verdict(name, exceed_count, total, lhs, rhs, replicas, detail=""):
    if total == 0:
        return Verdict(name, "empirical", lhs, "bound", rhs, "inconclusive",
                       "no applicable checkpoints; " + detail)
    frac_ok = 1.0 - exceed_count / total
    if replicas < MIN_REPLICAS_FOR_VERDICT:
        outcome = "inconclusive"
        detail = f"only {replicas} replicas (<{MIN_REPLICAS_FOR_VERDICT}); " + detail
    elif frac_ok >= HOLD_FRACTION:
        outcome = "holds"
    else:
        outcome = "violated"
    detail = f"{total - exceed_count}/{total} checkpoints below bound; " + detail
    return Verdict(name, "empirical max", lhs, "bound min", rhs, outcome, detail)


# ---------------------------------------------------------------------------
# studies
# ---------------------------------------------------------------------------

def run_audit(config: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult("audit", config=config)
    spec, chain, init = build_problem(config)
    noise = config.delta if chain.label_noise else 0.0
    closed = prb.closed_form_constants(spec, chain.eta, noise, chain.k)
    audit = prb.estimate_constants(spec, config.audit_count, config.audit_radius,
                                   derive_seed(config.seed, 303), chain.eta,
                                   noise, chain.k)
    hat = audit.constants
    for label, val in [("alpha_closed", closed.alpha), ("M_closed", closed.M),
                       ("ell_f_closed", closed.ell_f), ("m_closed", closed.m),
                       ("b_closed", closed.b), ("grad_lipschitz", closed.grad_lipschitz),
                       ("alpha_hat", hat.alpha), ("M_hat", hat.M),
                       ("ell_f_hat", hat.ell_f), ("m_hat", hat.m), ("b_hat", hat.b)]:
        if np.isfinite(val):
            result.add_row("audit", label, val, seed=config.seed)
    result.verdicts.append(Verdict(
        "audit-consistency alpha_hat <= 2 M_hat", "alpha_hat", hat.alpha,
        "2*M_hat", 2.0 * hat.M,
        "holds" if hat.alpha <= 2.0 * hat.M + 1e-9 else "violated"))
    if closed.alpha_feasible:
        result.verdicts.append(Verdict(
            "audit alpha_hat >= alpha_closed", "alpha_hat", hat.alpha,
            "alpha_closed", closed.alpha,
            "holds" if hat.alpha >= closed.alpha - 1e-9 else "violated",
            "closed form is a worst-case lower estimate"))
    result.verdicts.append(Verdict(
        "dissipativity-certificate fresh-sample check", "violations",
        audit.fresh_violations, "allowed", 0.0,
        "holds" if audit.fresh_violations == 0 else "violated",
        f"max excess {audit.fresh_max_excess:.3g}"))
    result.verdicts.append(Verdict(
        "contraction-smoothness window M < alpha/2", "M", hat.M,
        "alpha/2", hat.alpha / 2.0,
        "holds" if hat.M < hat.alpha / 2.0 else "violated",
        "expected to fail: the noisy drift forces alpha/2 <= M"))
    fig, ax = _figure("inward-pull audit", "||theta||^2", "<theta, grad L_S(theta)>")
    u, v = audit.pull_samples
    ax.scatter(u, v, s=8, alpha=0.5, label="samples")
    uu = np.linspace(0.0, float(np.max(u)), 50)
    ax.plot(uu, hat.m * uu - hat.b, "r-", label="fitted envelope")
    ax.legend()
    result.figures["audit_pull"] = fig
    result.dataset = spec.dataset
    result.dataset_meta = generator_metadata(config)
    return result


def run_bounds(config: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult("bounds", config=config)
    inputs = _abstract_inputs(config)
    selection, c1, sel_report = _selection_for(inputs, mode=config.selection_mode)
    _, _, lit_report = _selection_for(inputs, mode="literal")
    if selection is None or not sel_report.get("feasible", False):
        result.verdicts.append(Verdict("selection feasibility", "C1", np.nan,
                                       "exp(alpha eta)", np.nan, "inconclusive",
                                       str(sel_report)))
        selection = bnd.SelectionParams(eps=config.eps)
    text_lines = []
    for mode in ("continuous", "discrete"):
        report = bnd.gen_bound(mode, inputs, selection, config.radius_R,
                               t=config.bound_t)
        pid = f"mode={mode}"
        text_lines.append(f"--- {mode} bound at t={config.bound_t:g} ---")
        if report.value is not None:
            result.add_row(pid, "gen_bound", report.value, seed=config.seed)
            text_lines.append(f"{'gen_bound':>18s}  {report.value:.10g}")
            for name, val in report.constants.items():
                result.add_row(pid, name, val, seed=config.seed)
                text_lines.append(f"{name:>18s}  {val:.10g}")
        for flag, val in report.flags.items():
            text_lines.append(f"{flag:>18s}  {val}")
        for note in report.notes:
            text_lines.append(f"{'note':>18s}  {note}")
        result.tables[f"bound_report_{mode}"] = (
            ["name", "value"],
            [[k, repr(float(v))] for k, v in report.constants.items()],
        )
    result.text_report = "\n".join(text_lines)
    if c1 is not None:
        target = float(np.exp(inputs.alpha * inputs.eta))
        result.verdicts.append(Verdict(
            "search-mode contraction constant below exp(alpha eta)", "C1", c1,
            "exp(alpha eta)", target, "holds" if c1 < target else "violated"))
    result.verdicts.append(Verdict(
        "literal selection window empty (documented tension)", "s_low",
        lit_report["s_window"][0], "s_high", lit_report["s_window"][1],
        "holds" if lit_report["s_window_empty"] and not lit_report["feasible"]
        else "violated",
        "literal mode is expected to be infeasible for alpha*eta > 0"))
    return result


def run_simulate(config: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult("simulate", config=config)
    spec, chain, init = build_problem(config)
    checkpoints = sorted(set(config.resolved_checkpoints()) | {0})
    states = dyn.ensemble_states(spec, chain, config.replicas, checkpoints, init)
    mu2_init, mu4_init = init_moments(init)

    noise = config.delta if chain.label_noise else 0.0
    closed = prb.closed_form_constants(spec, chain.eta, noise, chain.k)
    audit = prb.estimate_constants(spec, config.audit_count, config.audit_radius,
                                   derive_seed(config.seed, 303), chain.eta,
                                   noise, chain.k)
    hat = audit.constants

    moment_rhs = bnd.moment_bound_rhs(mu2_init, 2.0, hat.b, hat.m, chain.delta,
                                      chain.eta, chain.k, spec.dim, closed.ell_f)
    theta0 = states[0]
    times, m2_vals, m2_errs, div_vals, div_bounds = [], [], [], [], []
    moment_exceed = 0
    div_exceed = div_total = 0
    for c in checkpoints:
        cloud = states[c]
        sq = np.sum(cloud ** 2, axis=1)
        m2 = float(sq.mean())
        m2_err = float(sq.std(ddof=1) / np.sqrt(len(sq))) if len(sq) > 1 else 0.0
        drift = np.sum((cloud - theta0) ** 2, axis=1)
        dv = float(drift.mean())
        dv_err = float(drift.std(ddof=1) / np.sqrt(len(drift))) if len(drift) > 1 else 0.0
        t_cont = c * chain.eta
        div_rhs = bnd.divergence_bound_rhs(mu2_init, t_cont, closed.M, closed.b,
                                           closed.m, chain.delta, chain.eta,
                                           chain.k, spec.dim, closed.ell_f) \
            if closed.mb_feasible else np.nan
        pid = f"step={c}"
        result.add_row(pid, "moment2", m2, m2_err, config.seed)
        result.add_row(pid, "moment2_bound", moment_rhs, 0.0, config.seed)
        result.add_row(pid, "divergence", dv, dv_err, config.seed)
        if np.isfinite(div_rhs):
            result.add_row(pid, "divergence_bound", div_rhs, 0.0, config.seed)
        times.append(t_cont)
        m2_vals.append(m2)
        m2_errs.append(m2_err)
        div_vals.append(dv)
        div_bounds.append(div_rhs)
        if c > 0 and m2 > moment_rhs:
            moment_exceed += 1
        if 0 < t_cont <= 2.5 and np.isfinite(div_rhs):
            div_total += 1
            if dv > div_rhs:
                div_exceed += 1
    positive = [c for c in checkpoints if c > 0]
    result.verdicts.append(_mc_verdict(
        "moment-bound (flow moment envelope, audited m, b)", moment_exceed,
        len(positive), max(m2_vals), moment_rhs, config.replicas,
        f"m_hat={hat.m:.4g}, b_hat={hat.b:.4g}"))
    result.verdicts.append(_mc_verdict(
        "divergence-bound (mean-square drift envelope, closed-form constants)",
        div_exceed, div_total, max(div_vals), min([b for b in div_bounds if np.isfinite(b)], default=np.nan),
        config.replicas, "checkpoints with t*eta <= 2.5"))

    fig, ax = _figure("second moment along the chain", "time (steps * eta)", "E||theta_t||^2")
    ax.errorbar(times, m2_vals, yerr=m2_errs, fmt="o-", label="empirical")
    ax.axhline(moment_rhs, color="r", linestyle="--", label="moment bound (audited)")
    ax.legend()
    result.figures["simulate_moment"] = fig

    final = max(checkpoints)
    header = ["checkpoint", "replica"] + [f"theta_{j}" for j in range(spec.dim)]
    rows = []
    for c in checkpoints:
        for r, vec in enumerate(states[c]):
            rows.append([c, r] + [repr(float(x)) for x in vec])
    result.tables["ensemble"] = (header, rows)
    result.add_row(f"step={final}", "final_moment4",
                   float(np.mean(np.sum(states[final] ** 2, axis=1) ** 2)),
                   0.0, config.seed)
    return result


def run_contraction(config: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult("contraction", config=config)
    spec, chain, init = build_problem(config)
    flow = chain.as_flow()
    noise = config.delta if flow.label_noise else 0.0
    closed = prb.closed_form_constants(spec, flow.eta, noise, flow.k)
    alpha = closed.alpha
    center = config.resolved_init_center()
    checkpoints = sorted(set(config.resolved_checkpoints()) | {0})

    cfg_a = dyn.ChainConfig(**{**_chain_kwargs(flow), "seed": derive_seed(config.seed, 11)})
    cfg_b = dyn.ChainConfig(**{**_chain_kwargs(flow), "seed": derive_seed(config.seed, 22)})
    states_a = dyn.ensemble_states(spec, cfg_a, config.replicas, checkpoints,
                                   dyn.InitSpec("point", center))
    states_b = dyn.ensemble_states(spec, cfg_b, config.replicas, checkpoints,
                                   dyn.InitSpec("point", -center))

    half = config.replicas // 2
    times, w2_vals, floors = [], [], []
    dist_rows = []
    for c in checkpoints:
        mu = tpt.EmpiricalMeasure(states_a[c])
        nu = tpt.EmpiricalMeasure(states_b[c])
        w2 = tpt.w2_exact(mu, nu)
        floor = tpt.w2_exact(tpt.EmpiricalMeasure(states_a[c][:half]),
                             tpt.EmpiricalMeasure(states_a[c][half:2 * half]))
        t_cont = c * chain.eta
        times.append(t_cont)
        w2_vals.append(w2)
        floors.append(floor)
        pid = f"step={c}"
        result.add_row(pid, "w2", w2, 0.0, config.seed)
        result.add_row(pid, "w2_noise_floor", floor, 0.0, config.seed)
        dist_rows.append(["w2", repr(w2), config.replicas, spec.dim, f"t={t_cont}"])
    result.tables["distances"] = (["metric", "value", "N", "d", "params"], dist_rows)

    times = np.array(times)
    w2_vals = np.array(w2_vals)
    floors = np.array(floors)
    window = w2_vals > 3.0 * floors
    increases = 0
    for j in range(1, len(w2_vals)):
        if window[j] and w2_vals[j] > w2_vals[j - 1] + 2.0 * max(floors[j], floors[j - 1]):
            increases += 1
    result.verdicts.append(Verdict(
        "w2-contraction monotone beyond noise", "increases", increases,
        "allowed", 0, "holds" if increases == 0 else "violated",
        f"{int(window.sum())} checkpoints above 3x noise floor"))

    rate = np.nan
    if alpha > 0 and window.sum() >= 3:
        # exponential-rate fit: slope of log W2 against continuous time
        coef = np.polyfit(times[window], np.log(w2_vals[window]), 1)
        rate = -float(coef[0])
        target = alpha / 2.0 - 0.2 * alpha
        result.add_row("fit", "contraction_rate", rate, 0.0, config.seed)
        result.add_row("fit", "alpha_closed", alpha, 0.0, config.seed)
        result.verdicts.append(Verdict(
            "contraction-rate >= alpha/2 - 0.2 alpha", "fitted rate", rate,
            "target", target, "holds" if rate >= target else "violated",
            f"alpha_closed={alpha:.4g}"))
    else:
        result.verdicts.append(Verdict(
            "contraction-rate >= alpha/2 - 0.2 alpha", "fitted rate", np.nan,
            "target", np.nan, "inconclusive",
            "alpha_closed <= 0 or too few checkpoints above the noise floor"))

    fig, ax = _figure("coupled-law contraction", "time", "W2 between ensembles", logy=True)
    ax.plot(times, w2_vals, "o-", label="empirical W2")
    ax.plot(times, floors, "k:", label="split-half noise floor")
    if alpha > 0:
        ax.plot(times, w2_vals[0] * np.exp(-alpha * times / 2.0), "r--",
                label="exp(-alpha t / 2) reference")
    ax.legend()
    result.figures["contraction_w2"] = fig
    return result


def _chain_kwargs(chain: dyn.ChainConfig) -> dict:
    return {"algorithm": chain.algorithm, "eta": chain.eta, "delta": chain.delta,
            "beta_inv": chain.beta_inv, "k": chain.k, "horizon": chain.horizon,
            "substeps": chain.substeps, "seed": chain.seed}


def run_discretize(config: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult("discretize", config=config)
    spec, chain, init = build_problem(config)
    noise = config.delta if chain.label_noise else 0.0
    mu2, _ = init_moments(init)
    etas, gaps, limits = [], [], []
    for eta in config.eta_grid:
        cfg = dyn.ChainConfig(**{**_chain_kwargs(chain), "eta": float(eta),
                                 "horizon": 1, "seed": derive_seed(config.seed, 404)})
        closed = prb.closed_form_constants(spec, float(eta), noise, cfg.k)
        disc, flowed = dyn.synchronous_coupling_cloud(spec, cfg, config.pairs, init)
        rms = float(np.sqrt(np.mean(np.sum((disc - flowed) ** 2, axis=1))))
        limit = np.nan
        if closed.mb_feasible:
            limit = float(np.sqrt(bnd.discretization_bound_rhs(
                mu2, float(eta), closed.M, closed.b, closed.m, cfg.delta,
                cfg.k, closed.ell_f)))
        pid = f"eta={eta}"
        result.add_row(pid, "coupled_w2", rms, 0.0, config.seed)
        if np.isfinite(limit):
            result.add_row(pid, "coupled_w2_bound", limit, 0.0, config.seed)
            result.verdicts.append(Verdict(
                f"discretization-bound at eta={eta}", "coupled W2", rms,
                "sqrt(bound)", limit, "holds" if rms <= limit else "violated"))
        etas.append(float(eta))
        gaps.append(rms)
        limits.append(limit)
    slope, _, r2 = fit_loglog_slope(etas, gaps)
    result.add_row("fit", "discretization_slope", slope, 0.0, config.seed)
    result.verdicts.append(Verdict(
        "discretization-slope in [1.6, 2.4]", "fitted slope", slope,
        "window center", 2.0, "holds" if 1.6 <= slope <= 2.4 else "violated",
        f"r2={r2:.4f}"))
    fig, ax = _figure("one-step coupling gap", "eta", "coupled W2",
                      logx=True, logy=True)
    ax.plot(etas, gaps, "o-", label="empirical")
    if np.all(np.isfinite(limits)):
        ax.plot(etas, limits, "r--", label="bound")
    ax.legend()
    result.figures["discretize_gap"] = fig
    return result


def run_stability(config: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult("stability", config=config)
    spec, chain, init = build_problem(config)
    i = config.stability_index
    repl_stream = GaussianStream(derive_seed(config.seed, 505))
    x_new = repl_stream.ball_point(config.p, config.x_max)
    fs, _ = prb.model_values_and_grads(spec.model, config.resolved_teacher(), x_new[None, :])
    y_new = float(np.clip(fs[0] + config.label_sigma * repl_stream.normals(1)[0],
                          -config.y_max, config.y_max))
    z_new = prb.DataPoint(x_new, y_new)

    schedule = None
    if config.exclude_index:
        allowed = np.array([j for j in range(config.n) if j != i])
        sched_stream = GaussianStream(derive_seed(config.seed, 606))
        schedule = np.stack([allowed[sched_stream.subset(len(allowed), config.k)]
                             for _ in range(config.horizon)])

    checkpoints = sorted(set(config.resolved_checkpoints()) | {0})
    first, second = dyn.coupled_neighbor_ensembles(
        spec, chain, config.replicas, checkpoints, init, i, z_new,
        batch_schedule=schedule)

    inputs, closed = _bound_inputs_from_problem(spec, chain, init, config)
    selection, c1, sel_report = _selection_for(inputs, mode=config.selection_mode)
    usable = selection is not None and sel_report.get("feasible", False) \
        and closed.alpha_feasible and closed.mb_feasible
    if not usable:
        selection = bnd.SelectionParams(eps=config.eps)
    # the empirical semimetric must use the same eps the bound constants use
    params = tpt.SemimetricParams(eps=selection.eps, R=config.radius_R, phi=config.phi)

    times, dists, limits, dist_rows = [], [], [], []
    exceed = total = 0
    for c in checkpoints:
        w = tpt.w_rho_g_exact(tpt.EmpiricalMeasure(first[c]),
                              tpt.EmpiricalMeasure(second[c]), params)
        limit = bnd.stability_induction_bound(inputs, selection, config.radius_R, c) \
            if usable else None
        pid = f"step={c}"
        result.add_row(pid, "w_rho_g", w, 0.0, config.seed)
        dist_rows.append(["w_rho_g", repr(w), config.replicas, spec.dim,
                          f"t={c * chain.eta};eps={params.eps};R={params.R}"])
        if limit is not None:
            result.add_row(pid, "w_rho_g_bound", limit, 0.0, config.seed)
            if c > 0:
                total += 1
                if w > limit:
                    exceed += 1
        times.append(c * chain.eta)
        dists.append(w)
        limits.append(limit if limit is not None else np.nan)
    result.tables["distances"] = (["metric", "value", "N", "d", "params"], dist_rows)

    if config.exclude_index:
        max_w = max(dists)
        exact_equal = all(np.array_equal(first[c], second[c]) for c in checkpoints)
        result.verdicts.append(Verdict(
            "stability-null (differing index never sampled)", "max W_rho_g",
            max_w, "zero", 0.0,
            "holds" if exact_equal and max_w == 0.0 else "violated",
            "trajectories must agree bitwise"))
    if usable and total:
        result.verdicts.append(_mc_verdict(
            "stability-induction bound on coupled laws", exceed, total,
            max(dists), float(np.nanmin(limits[1:])), config.replicas,
            f"C1={c1:.4g}"))
    elif not config.exclude_index:
        result.verdicts.append(Verdict(
            "stability-induction bound on coupled laws", "max W_rho_g",
            max(dists), "bound", np.nan, "inconclusive",
            "constants infeasible (alpha <= 0 or selection failed)"))

    # sup-over-test-point loss gap at the final checkpoint: a lower estimate
    # of the worst-case replacement sensitivity (the true sup runs over all
    # datasets, which is not enumerable)
    final = max(checkpoints)
    test_stream = GaussianStream(derive_seed(config.seed, 707))
    gaps = []
    for _ in range(min(config.test_count, 256)):
        x_t = test_stream.ball_point(config.p, config.x_max)
        f_t, _ = prb.model_values_and_grads(spec.model, config.resolved_teacher(), x_t[None, :])
        y_t = float(np.clip(f_t[0], -config.y_max, config.y_max))
        l1 = _cloud_loss(spec, first[final], x_t, y_t)
        l2 = _cloud_loss(spec, second[final], x_t, y_t)
        gaps.append(abs(l1 - l2))
    result.add_row(f"step={final}", "sup_loss_gap_lower_estimate",
                   float(np.max(gaps)), 0.0, config.seed)

    fig, ax = _figure("neighbor-coupling sensitivity", "time",
                      "W_rho_g between coupled laws")
    ax.plot(times, dists, "o-", label="empirical")
    if usable:
        ax.plot(times, limits, "r--", label="induction bound")
    ax.legend()
    result.figures["stability_w_rho"] = fig
    return result


def _cloud_loss(spec, cloud, x, y) -> float:
    fs = []
    for theta in cloud:
        f, _ = prb.eval_model(spec.model, theta, x)
        fs.append(0.5 * (f - y) ** 2 + 0.5 * spec.ridge * float(theta @ theta))
    return float(np.mean(fs))


def run_scaling(config: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult("scaling", config=config)
    n_grid = np.asarray(config.n_grid, dtype=float)
    q = config.q
    selection = _scaling_selection(config, n_grid, q)
    values = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for n in n_grid:
            inputs = _abstract_inputs(config, eta=float(n) ** q, n=n)
            report = bnd.gen_bound("discrete", inputs, selection, config.radius_R,
                                   t=np.inf)
            values.append(report.value if report.value is not None else np.nan)
            result.add_row(f"n={int(n)}", "gen_bound_discrete", values[-1],
                           0.0, config.seed)
    slope, _, r2 = fit_loglog_slope(n_grid, values)
    result.add_row("fit", "scaling_slope", slope, 0.0, config.seed)
    result.add_row("fit", "q", q, 0.0, config.seed)
    if abs(q + 2.0 / 3.0) < 1e-12:
        result.verdicts.append(Verdict(
            "scaling-slope at the optimal exponent", "fitted slope", slope,
            "-2/3", -2.0 / 3.0,
            "holds" if abs(slope + 2.0 / 3.0) <= 0.02 else "violated",
            f"r2={r2:.5f}"))
    fig, ax = _figure("bound decay with sample size", "n", "discrete bound",
                      logx=True, logy=True)
    ax.plot(n_grid, values, "o-")
    result.figures["scaling_curve"] = fig
    return result


def _scaling_selection(config, n_grid, q):
    inputs = _abstract_inputs(config, eta=float(np.min(n_grid)) ** q, n=np.min(n_grid))
    selection, _, report = _selection_for(inputs, mode=config.selection_mode)
    if selection is None or not report.get("feasible", False):
        selection = bnd.SelectionParams(eps=config.eps)
    return selection


def run_rate(config: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult("rate", config=config)
    n_grid = np.asarray(config.n_grid, dtype=float)
    selection = _scaling_selection(config, n_grid, -2.0 / 3.0)
    fixed_ln = {"alpha": config.bound_alpha, "M": config.bound_M,
                "ell_f": config.bound_ell_f, "delta": config.bound_delta,
                "k": config.k, "d": config.bound_d, "sigma4": config.bound_sigma4,
                "selection": selection, "R": config.radius_R}
    fixed_sgld = {"k": config.k, "C4": 1.0, "C6": 1.0}
    curves = {}
    for family, fixed in (("label_noise_discrete", fixed_ln),
                          ("sgld_discrete", fixed_sgld)):
        res = bnd.optimize_decay_exponent(family, fixed, n_grid, config.q_grid)
        curves[family] = res
        result.add_row(family, "q_star", res.q_star, 0.0, config.seed)
        result.add_row(family, "slope_at_q_star", res.slope_star, 0.0, config.seed)
        result.tables[f"rate_curve_{family}"] = (
            ["q", "slope"],
            [[repr(q), repr(s)] for q, s in res.curve],
        )
    result.verdicts.append(Verdict(
        "decay-rate separation (label noise vs isotropic)", "label-noise rate",
        curves["label_noise_discrete"].slope_star, "isotropic rate",
        curves["sgld_discrete"].slope_star,
        "holds" if curves["label_noise_discrete"].slope_star
        < curves["sgld_discrete"].slope_star - 0.05 else "violated",
        "more negative is faster decay"))
    fig, ax = _figure("decay-rate landscape", "q (eta = n^q)", "fitted slope of bound vs n")
    for family, res in curves.items():
        qs, slopes = zip(*res.curve)
        ax.plot(qs, slopes, "o-", label=family)
    ax.legend()
    result.figures["rate_curves"] = fig
    return result


def run_sgld_compare(config: ExperimentConfig) -> ExperimentResult:
    result = ExperimentResult("sgld-compare", config=config)
    inputs = _abstract_inputs(config)
    m, b, eta_max, ok, _ = inputs.derive()
    if not ok:
        result.verdicts.append(Verdict("constants", "alpha", inputs.alpha,
                                       "2M", 2 * inputs.M, "inconclusive",
                                       "needs alpha > 2M"))
        return result
    etas = np.geomspace(1e-3, 1e-2, 9)
    mu2 = 1.0
    ln_vals = [bnd.discretization_bound_rhs(mu2, e, inputs.M, b, m,
                                            inputs.delta, inputs.k, inputs.ell_f)
               for e in etas]
    beta_inv = config.beta_inv if config.beta_inv > 0 else 0.5
    sg_vals = [bnd.sgld_bound_rhs("discretization",
                                  {"m": m, "b": b, "d": inputs.d, "M": inputs.M,
                                   "eta": e, "beta_inv": beta_inv, "mu2": mu2})
               for e in etas]
    ln_slope, _, _ = fit_loglog_slope(etas, ln_vals)
    sg_slope, _, _ = fit_loglog_slope(etas, sg_vals)
    result.add_row("discretization", "label_noise_eta_slope", ln_slope, 0.0, config.seed)
    result.add_row("discretization", "sgld_eta_slope", sg_slope, 0.0, config.seed)
    result.verdicts.append(Verdict(
        "discretization-slope separation (4 vs 3)", "label-noise slope",
        ln_slope, "isotropic slope", sg_slope,
        "holds" if abs(ln_slope - 4.0) <= 1e-3 and abs(sg_slope - 3.0) <= 1e-3
        else "violated"))

    rate_result = run_rate(config)
    for row in rate_result.rows:
        result.rows.append(ResultRow("sgld-compare", row.param_id, row.metric,
                                     row.value, row.stderr, row.seed))
    result.verdicts.extend(rate_result.verdicts)
    result.tables.update(rate_result.tables)
    result.figures.update(rate_result.figures)

    fig, ax = _figure("one-step gap bounds", "eta", "bound", logx=True, logy=True)
    ax.plot(etas, ln_vals, "o-", label="label noise (slope 4)")
    ax.plot(etas, sg_vals, "s-", label="isotropic (slope 3)")
    ax.legend()
    result.figures["sgld_compare_discretization"] = fig
    return result


_RUNNERS = {
    "audit": run_audit,
    "bounds": run_bounds,
    "simulate": run_simulate,
    "contraction": run_contraction,
    "discretize": run_discretize,
    "stability": run_stability,
    "scaling": run_scaling,
    "sgld-compare": run_sgld_compare,
    "rate": run_rate,
}


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute the study named by config.experiment."""
    config.validate()
    runner = _RUNNERS.get(config.experiment)
    if runner is None:
        raise prb.InputError(f"unknown experiment {config.experiment!r}")
    return runner(config)
