"""Closed-form bound constants, feasibility diagnostics, and decay rates.

Everything here is a deterministic formula evaluator.  The central chain
for the label-noise generalization bounds:

    m = alpha / 4
    eta_max = min(1/m, m / (2 M^2))
    b = (1 + 4 / (alpha^2 - 4 M^2)) * eta_max * delta * ell_f^2 / (2 k)
    ctilde2 = moment_estimate_ctilde(p=2, ...)
    K = 2 + 2 sqrt(sigma4) + 2 sqrt(ctilde2) + 4 b / m
        + 2 delta eta_max (d + 2) ell_f^2 / (k m)
    eps_tilde = (exp(alpha eta_max / 4) - 1) / K
    c1..c8, C1, C2, C3 as assembled in :func:`gen_bound`

Feasibility is always reported, never silently coerced: the literal
parameter selection for the contraction constant has an empty admissible
window for any alpha * eta > 0 (the requirements s > e^{u} - 1 and
s < 1 - e^{-u} with u = alpha * eta / 4 exclude each other), so a search
mode provides usable constants and the literal mode documents the gap.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .problems import InputError


# ---------------------------------------------------------------------------
# inputs and reports
# ---------------------------------------------------------------------------

@dataclass
class BoundInputs:
    """Raw constants feeding the bound formulas (all nonnegative, k <= n)."""

    alpha: float
    M: float
    ell_f: float
    delta: float
    eta: float
    k: int
    n: int
    d: int
    sigma4: float
    beta_inv: float = 0.0
    t: float = np.inf
    m_override: float | None = None
    b_override: float | None = None

    def derive(self):
        """(m, b, eta_max, feasible, notes); m = alpha/4 needs alpha > 2M.

        Explicit overrides let callers substitute an audited or problem
        closed-form dissipativity pair when the alpha-route is infeasible.
        """
        notes = []
        if self.alpha > 2.0 * self.M and self.alpha > 0:
            m = self.alpha / 4.0
            eta_max = eta_max_of(m, self.M)
            b = (1.0 + 4.0 / (self.alpha ** 2 - 4.0 * self.M ** 2)) \
                * eta_max * self.delta * self.ell_f ** 2 / (2.0 * self.k)
            feasible = True
        elif self.m_override is not None and self.m_override > 0:
            m = self.m_override
            b = self.b_override if self.b_override is not None else 0.0
            eta_max = eta_max_of(m, self.M) if self.M > 0 else 1.0 / m
            feasible = True
            notes.append("alpha <= 2M: dissipativity pair taken from override")
        else:
            notes.append("alpha <= 2M and no override: m, b infeasible")
            return None, None, None, False, notes
        return m, b, eta_max, feasible, notes


@dataclass
class SelectionParams:
    """Contraction-constant selection: slope budget s, phi = 1 - s, a > 1,
    weight eps in (0, 1), and the moment-ratio surrogate zeta."""

    s: float = 0.0
    phi: float = 1.0
    a: float = 2.0
    eps: float = 0.01
    zeta: float | None = None
    mode: str = "search"

    def __post_init__(self):
        if self.zeta is None:
            # universal lower bound (a-1)/a^2 of the moment-ratio factor,
            # conservative (largest) for the contraction constant
            self.zeta = (self.a - 1.0) / self.a ** 2

    def contraction_constant(self, K: float) -> float:
        return (1.0 + self.eps * K) / (self.phi * self.a * self.zeta)


@dataclass
class BoundReport:
    mode: str
    value: float | None
    constants: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.value is not None and all(self.flags.values())


# ---------------------------------------------------------------------------
# elementary constants
# ---------------------------------------------------------------------------

def eta_max_of(m: float, M: float) -> float:
    """Largest admissible step size min{1/m, m/(2 M^2)}."""
    if m <= 0 or M <= 0:
        raise InputError("need m > 0 and M > 0")
    return min(1.0 / m, m / (2.0 * M ** 2))


def diss_from_uniform(alpha: float, M: float, eta_max: float, delta: float,
                      ell_f: float, k: int):
    """Dissipativity pair implied by the uniform rate: m = alpha/4 and
    b = (4/(alpha^2 - 4M^2) + 1) * (eta_max / 2k) * delta * ell_f^2.

    Returns (m, b, feasible); infeasible (with Nones) when alpha <= 2M.
    """
    if alpha <= 2.0 * M:
        return None, None, False
    m = alpha / 4.0
    b = (4.0 / (alpha ** 2 - 4.0 * M ** 2) + 1.0) * (eta_max / (2.0 * k)) * delta * ell_f ** 2
    return m, b, True


def uniform_from_diss_feasible(m: float, b: float, M: float, eta: float,
                               delta: float, ell_f: float, k: int) -> dict:
    """Converse-direction feasibility report with the parameter-radius interval.

    Applicable only when m^3 < M^2 b; then the radius bound B must fall in
    (1/2M) * (m - M sqrt(b/m) -+ sqrt((M sqrt(b/m) - m)^2
                                      - 4 M (b + eta delta ell_f^2 / k))).
    All outcomes are reports, never errors.
    """
    report = {"applicable": False, "interval": None, "discriminant": None}
    if m <= 0 or M <= 0:
        report["note"] = "needs m > 0 and M > 0"
        return report
    if m ** 3 >= M ** 2 * b:
        report["note"] = "m^3 >= M^2 b: converse inapplicable"
        return report
    report["applicable"] = True
    root = M * np.sqrt(b / m)
    disc = (root - m) ** 2 - 4.0 * M * (b + eta * delta * ell_f ** 2 / k)
    report["discriminant"] = float(disc)
    if disc < 0:
        report["note"] = "negative discriminant: empty interval"
        return report
    half = np.sqrt(disc)
    lo = (m - root - half) / (2.0 * M)
    hi = (m - root + half) / (2.0 * M)
    report["interval"] = (float(lo), float(hi))
    return report


def moment_bound_rhs(mu_p: float, p: float, b: float, m: float, delta: float,
                     eta: float, k: int, d: int, ell_f: float,
                     batch_power: int = 1) -> float:
    """Envelope for the p-th norm moment along the flow:
    mu_p + [2b/m + (delta * eta / (k^batch_power * m)) * (p + d - 2) * ell_f^2]^{p/2}.

    batch_power=1 is the authoritative statement; batch_power=2 exposes the
    k^2 variant for sensitivity analysis.
    """
    if m <= 0:
        raise InputError("need m > 0")
    if batch_power not in (1, 2):
        raise InputError("batch_power must be 1 or 2")
    noise = (delta * eta / (k ** batch_power * m)) * (p + d - 2.0) * ell_f ** 2
    return mu_p + (2.0 * b / m + noise) ** (p / 2.0)


def moment_estimate_ctilde(p: float, eta_max: float, b: float, m: float,
                           delta: float, ell_f: float) -> float:
    """Uniform-in-time even-moment increment c(p) for the discrete chain.

    eta_max * { (3b)^p (eta_max + 2/m)^{p-1}
              + p (2p-1) delta ell_f^2 (eta_max + 2/m)^{p-2} (3b)^{p-1} eta_max^2
              + (p (2p-1))^{p+1} delta^p ell_f^{2p} eta_max^{2p-1} }
    """
    if p < 1:
        raise InputError("need p >= 1")
    if m <= 0:
        raise InputError("need m > 0")
    span = eta_max + 2.0 / m
    t1 = (3.0 * b) ** p * span ** (p - 1.0)
    t2 = p * (2.0 * p - 1.0) * delta * ell_f ** 2 * span ** (p - 2.0) \
        * (3.0 * b) ** (p - 1.0) * eta_max ** 2
    t3 = (p * (2.0 * p - 1.0)) ** (p + 1.0) * delta ** p * ell_f ** (2.0 * p) \
        * eta_max ** (2.0 * p - 1.0)
    return eta_max * (t1 + t2 + t3)


def divergence_bound_rhs(mu2: float, t: float, M: float, b: float, m: float,
                         delta: float, eta: float, k: int, d: int,
                         ell_f: float) -> float:
    """Mean-square drift from the start of the flow up to time t:
    4 M^2 (mu2 + 3b/m + delta eta d ell_f^2 / (k m)) t + 2 delta eta ell_f^2 t / k.
    """
    if t < 0:
        raise InputError("need t >= 0")
    if m <= 0:
        raise InputError("need m > 0")
    core = mu2 + 3.0 * b / m + delta * eta * d * ell_f ** 2 / (k * m)
    return 4.0 * M ** 2 * core * t + 2.0 * delta * eta * ell_f ** 2 * t / k


def discretization_bound_rhs(mu2: float, eta: float, M: float, b: float,
                             m: float, delta: float, k: int, ell_f: float) -> float:
    """One-step squared 2-Wasserstein gap between chain and flow:
    8 eta^4 exp(4 eta^2 M^2) [ (2/3) M^4 (mu2 + b/m) + (M^2 + 2) delta ell_f^2 / (2k) ].
    """
    if m <= 0:
        raise InputError("need m > 0")
    inner = (2.0 / 3.0) * M ** 4 * (mu2 + b / m) \
        + (M ** 2 + 2.0) * delta * ell_f ** 2 / (2.0 * k)
    return 8.0 * eta ** 4 * np.exp(4.0 * eta ** 2 * M ** 2) * inner


def contraction_weight_budget(sigma4: float, ctilde2: float, b: float, m: float,
                              delta: float, eta_max: float, k: int, d: int,
                              ell_f: float) -> float:
    """Moment budget K multiplying eps inside the contraction constant."""
    return (2.0 + 2.0 * np.sqrt(sigma4) + 2.0 * np.sqrt(ctilde2) + 4.0 * b / m
            + 2.0 * delta * eta_max * (d + 2.0) * ell_f ** 2 / (k * m))


# ---------------------------------------------------------------------------
# contraction-parameter selection
# ---------------------------------------------------------------------------

def select_contraction_params(alpha: float, eta: float, eta_max: float,
                              sigma4: float, ctilde2: float, b: float, m: float,
                              delta: float, k: int, d: int, ell_f: float,
                              mode: str = "search"):
    """Choose (s, a, eps) for the contraction constant C1.

    literal mode evaluates the stated closed forms
        phi = 1 - s,  a = (1 - e^{-alpha eta / 2} / (phi (1 - s)))^{-1},
        eps = ((1 + s) e^{-alpha eta / 4} - 1) / K
    at the nominal s = e^{alpha eta_max / 2} - 1 and reports joint
    feasibility of a > 1 and eps in (0, 1).  The two requirements bound s
    into (e^{alpha eta / 4} - 1, 1 - e^{-alpha eta / 4}), which is empty
    for every alpha * eta > 0, so this mode reports infeasible; it exists
    to surface that tension, not to hide it.

    search mode minimizes C1 = (1 + eps K) / (phi a zeta) with
    zeta = (a - 1)/a^2 over a deterministic grid subject to C1 < e^{alpha eta}.

    Returns (SelectionParams, C1, report dict with feasibility).
    """
    if alpha <= 0 or eta <= 0:
        raise InputError("need alpha > 0 and eta > 0")
    K = contraction_weight_budget(sigma4, ctilde2, b, m, delta, eta_max, k, d, ell_f)
    target = np.exp(alpha * eta)
    if mode == "literal":
        s_lo = np.exp(alpha * eta / 4.0) - 1.0          # needed for eps > 0
        s_hi = 1.0 - np.exp(-alpha * eta / 4.0)         # needed for a > 1
        s_nominal = min(np.exp(alpha * eta_max / 2.0) - 1.0, 0.999999)
        phi = 1.0 - s_nominal
        denom = 1.0 - np.exp(-alpha * eta / 2.0) / (phi * (1.0 - s_nominal))
        a = 1.0 / denom if denom > 0 else np.inf
        eps = ((1.0 + s_nominal) * np.exp(-alpha * eta / 4.0) - 1.0) / K
        window_empty = s_lo >= s_hi
        feasible = (not window_empty) and (1.0 < a < np.inf) and (0.0 < eps < 1.0)
        params = SelectionParams(s=float(s_nominal), phi=float(phi),
                                 a=float(a) if np.isfinite(a) else 2.0,
                                 eps=float(eps), mode="literal")
        c1 = params.contraction_constant(K) if feasible else None
        report = {
            "feasible": feasible,
            "s_window": (float(s_lo), float(s_hi)),
            "s_window_empty": bool(window_empty),
            "a": float(a) if np.isfinite(a) else None,
            "eps": float(eps),
            "K": float(K),
            "note": ("admissible s-window is empty for alpha*eta > 0"
                     if window_empty else "window nonempty"),
        }
        return params, c1, report
    if mode == "search":
        s_grid = np.linspace(0.0, 0.9, 10)
        a_grid = 1.0 + np.geomspace(1e-4, 1e4, 33)
        eps_grid = np.geomspace(1e-8, 0.99, 33)
        best = None
        for s in s_grid:
            phi = 1.0 - s
            for a in a_grid:
                zeta = (a - 1.0) / a ** 2
                base = 1.0 / (phi * a * zeta)
                if base >= target:
                    continue
                for eps in eps_grid:
                    c1 = base * (1.0 + eps * K)
                    if c1 < target and (best is None or c1 < best[0]):
                        best = (c1, s, a, eps)
        if best is None:
            params = SelectionParams(mode="search")
            return params, None, {"feasible": False, "K": float(K),
                                  "note": "no grid point achieves C1 < exp(alpha eta)"}
        c1, s, a, eps = best
        params = SelectionParams(s=float(s), phi=float(1.0 - s), a=float(a),
                                 eps=float(eps), mode="search")
        return params, float(c1), {"feasible": True, "K": float(K),
                                   "target": float(target)}
    raise InputError(f"unknown selection mode {mode!r}")


# ---------------------------------------------------------------------------
# generalization bounds
# ---------------------------------------------------------------------------

def gen_bound(mode: str, inputs: BoundInputs, selection: SelectionParams,
              R: float, t: float | None = None) -> BoundReport:
    """Full generalization-bound evaluation with its constant ledger.

    mode "continuous":
        C2 * min{eta t, n (eta + 2/alpha) / (n - k)}
           * (1/n) (eta/sqrt(k) + sqrt(eta) + sqrt(k) + k/sqrt(eta))
    mode "discrete" multiplies C3 and adds eta + eta/sqrt(k) to the
    bracket.  t = None or inf saturates the min factor.  Every intermediate
    constant lands in the report; any nonpositive denominator flips a
    feasibility flag instead of raising.
    """
    if mode not in ("continuous", "discrete"):
        raise InputError(f"unknown bound mode {mode!r}")
    if inputs.n <= inputs.k:
        raise InputError("need n > k")
    t = inputs.t if t is None else t
    report = BoundReport(mode=mode, value=None)
    m, b, eta_max, feasible, notes = inputs.derive()
    report.notes.extend(notes)
    report.flags["dissipativity_pair"] = feasible
    if not feasible:
        report.notes.append("cannot assemble constants without (m, b)")
        return report
    eta, delta, k, n, d = inputs.eta, inputs.delta, inputs.k, inputs.n, inputs.d
    if eta > eta_max:
        warnings.warn(f"eta={eta} exceeds eta_max={eta_max}", stacklevel=2)
        report.notes.append("eta exceeds eta_max")
    ell_f, sigma4, alpha, M = inputs.ell_f, inputs.sigma4, inputs.alpha, inputs.M

    ctilde2 = moment_estimate_ctilde(2.0, eta_max, b, m, delta, ell_f)
    K = contraction_weight_budget(sigma4, ctilde2, b, m, delta, eta_max, k, d, ell_f)
    eps_tilde = (np.exp(alpha * eta_max / 4.0) - 1.0) / K
    report.flags["eps_tilde_positive"] = eps_tilde > 0

    eps, phi = selection.eps, selection.phi
    s4, c2r = np.sqrt(sigma4), np.sqrt(ctilde2)
    noise_core = ((2.0 * d / m) * M ** 2 + 1.0) * ell_f ** 2 * delta
    drift_core = 4.0 * M ** 2 * (s4 + c2r + 3.0 * b / m)
    weight = 1.0 + 2.0 * eps + 6.0 * eps * (s4 + c2r + 2.0 * b / m)
    c1_ = 6.0 * eps * (delta * (d + 2.0) * ell_f ** 2 / m) * np.sqrt(noise_core)
    c2_ = 6.0 * eps * (delta * (d + 2.0) * ell_f ** 2 / m) * np.sqrt(drift_core)
    c3_ = np.sqrt(noise_core) * weight
    c4_ = np.sqrt(drift_core) * weight
    big_c1 = selection.contraction_constant(K)
    # per-interval contraction factor entering the induction (time eta)
    c5_ = k / n + (1.0 - k / n) * big_c1 * np.exp(-alpha * eta)
    g_R = min(R, R)  # plateau choice g(r) = min(r, R) evaluates to R at r = R
    c6_ = 1.0 + (2.0 * g_R / phi) * max(eps * R, 1.0)
    disc_weight = 1.0 + 2.0 * eps * (1.0 + s4 + c2r)
    c7_ = 2.0 * np.sqrt(2.0) * M * np.sqrt(
        (2.0 / 3.0) * M ** 2 * s4 + (2.0 / 3.0) * M ** 2 * c2r
        + 2.0 * b * M ** 2 / (3.0 * m)) * disc_weight
    c8_ = 2.0 * np.sqrt(delta) * (M + np.sqrt(2.0)) * ell_f * disc_weight

    prefactor = M * (b / m + 1.0) / (phi * eps_tilde * max(R, 1.0))
    big_c2 = prefactor * max(c1_, c2_, c3_, c4_)
    big_c3 = prefactor * max(c1_, c2_, c3_, c4_, 2.0 * c6_ * c7_, 2.0 * c6_ * c8_) \
        * max(1.0, 2.0 * c6_ * np.exp(2.0 * eta_max ** 2 * M ** 2))

    saturated = n * (eta + 2.0 / alpha) / (n - k)
    min_factor = saturated if (t is None or np.isinf(t)) else min(eta * t, saturated)
    per_step = (eta / np.sqrt(k) + np.sqrt(eta) + np.sqrt(k) + k / np.sqrt(eta)) / n
    if mode == "continuous":
        value = big_c2 * min_factor * per_step
    else:
        value = big_c3 * min_factor * (per_step + eta + eta / np.sqrt(k))

    report.value = float(value)
    report.flags["contraction_below_target"] = bool(big_c1 * np.exp(-alpha * eta) < 1.0)
    report.constants.update({
        "m": m, "b": b, "eta_max": eta_max, "ctilde2": ctilde2, "K": K,
        "eps_tilde": eps_tilde, "ctilde1": c1_, "ctilde3": c3_, "ctilde4": c4_,
        "ctilde2_coeff": c2_, "ctilde5": c5_, "ctilde6": c6_, "ctilde7": c7_,
        "ctilde8": c8_, "C1": big_c1, "C2": big_c2, "C3": big_c3,
        "min_factor": min_factor, "per_step_factor": per_step,
        "eps": eps, "phi": phi, "R": R,
    })
    return report


def stability_induction_bound(inputs: BoundInputs, selection: SelectionParams,
                              R: float, t: int) -> float | None:
    """Coupled-law semimetric envelope after t steps:
    (1 - c5^t) / (1 - c5) * (1/n) [c1 eta^2/sqrt(k) + c2 eta^{3/2}
                                   + c3 eta sqrt(k) + c4 sqrt(eta) k].
    Returns None when the per-interval factor c5 is not below one.
    """
    report = gen_bound("continuous", inputs, selection, R, t=max(t, 1))
    if report.value is None:
        return None
    c = report.constants
    c5 = c["ctilde5"]
    if c5 >= 1.0:
        return None
    eta, k, n = inputs.eta, inputs.k, inputs.n
    bracket = (c["ctilde1"] * eta ** 2 / np.sqrt(k)
               + c["ctilde2_coeff"] * eta ** 1.5
               + c["ctilde3"] * eta * np.sqrt(k)
               + c["ctilde4"] * np.sqrt(eta) * k)
    geom = (1.0 - c5 ** t) / (1.0 - c5)
    return float(geom * bracket / n)


# ---------------------------------------------------------------------------
# Langevin-noise counterparts
# ---------------------------------------------------------------------------

def sgld_bound_rhs(which: str, params: dict) -> float:
    """Isotropic-noise counterparts of the bound formulas.

    Selectors: moment, moment_estimate, divergence, discretization,
    gen_shape (with caller-supplied C4/C5/C6 prefactors, kept symbolic
    upstream).  Raises on an unknown selector.
    """
    p = dict(params)
    beta_inv = p.get("beta_inv", 0.0)
    if beta_inv < 0:
        raise InputError("beta_inv must be nonnegative")
    if which == "moment":
        m, b, d = p["m"], p["b"], p["d"]
        order = p.get("p", 2.0)
        mu_p = p.get("mu_p", 0.0)
        return mu_p + (2.0 * b / m + 2.0 * (order + d - 2.0) * beta_inv / m) ** (order / 2.0)
    if which == "moment_estimate":
        m, b, d, M = p["m"], p["b"], p["d"], p["M"]
        order = p.get("p", 2.0)
        lead = (1.0 / m) * (6.0 / m) ** (order - 1.0)
        mid = 1.0 + 2.0 ** (2.0 * order) * order * (2.0 * order - 1.0) * d * beta_inv / m
        tail = ((2.0 * b + 8.0 * M ** 2 * b / m ** 2) ** order + 1.0
                + 2.0 * (d * beta_inv) ** (order - 1.0) * (2.0 * order - 1.0) ** order)
        return lead * mid * tail
    if which == "divergence":
        m, b, d, M, t = p["m"], p["b"], p["d"], p["M"], p["t"]
        mu2 = p.get("mu2", 0.0)
        return 4.0 * M ** 2 * (mu2 + (3.0 * b + 2.0 * d * beta_inv) / m) * t ** 2 \
            + 4.0 * d * beta_inv * t
    if which == "discretization":
        m, b, d, M, eta = p["m"], p["b"], p["d"], p["M"], p["eta"]
        mu2 = p.get("mu2", 0.0)
        return 8.0 * eta ** 3 * np.exp(2.0 * eta ** 2 * M ** 2) * M ** 2 \
            * (M ** 2 * mu2 + M ** 2 * b / m + beta_inv * d)
    if which == "gen_shape":
        eta, t, n, k = p["eta"], p["t"], p["n"], p["k"]
        if n <= k:
            raise InputError("need n > k")
        c4 = p.get("C4", 1.0)
        saturated = (c4 + 1.0) * n / (n - k)
        min_factor = saturated if np.isinf(t) else min(eta * t, saturated)
        if p.get("variant", "discrete") == "continuous":
            return p.get("C5", 1.0) * min_factor * k / (n * np.sqrt(eta))
        return p.get("C6", 1.0) * min_factor * (k / (n * np.sqrt(eta)) + np.sqrt(eta))
    raise InputError(f"unknown bound selector {which!r}")


# ---------------------------------------------------------------------------
# decay-rate optimization
# ---------------------------------------------------------------------------

@dataclass
class DecayResult:
    q_star: float
    slope_star: float
    curve: list  # (q, fitted slope) pairs


def _loglog_slope(xs: np.ndarray, ys: np.ndarray) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def optimize_decay_exponent(bound_family: str, fixed: dict, n_grid,
                            q_grid) -> DecayResult:
    """Best learning-rate exponent for sample-size decay of a bound family.

    For each q the bound is evaluated over n_grid at eta = n^q with the
    time factor saturated (t -> inf), its log-log slope against n is
    fitted, and the q with the most negative slope wins.
    """
    n_grid = np.asarray(list(n_grid), dtype=float)
    q_grid = np.asarray(list(q_grid), dtype=float)
    if n_grid.size < 2 or q_grid.size < 1:
        raise InputError("need at least 2 sample sizes and 1 exponent")

    def label_noise_discrete(n: float, eta: float) -> float:
        inputs = BoundInputs(alpha=fixed["alpha"], M=fixed["M"], ell_f=fixed["ell_f"],
                             delta=fixed["delta"], eta=eta, k=fixed["k"], n=int(n),
                             d=fixed["d"], sigma4=fixed["sigma4"], t=np.inf)
        rep = gen_bound("discrete", inputs, fixed["selection"], fixed.get("R", 1.0),
                        t=np.inf)
        if rep.value is None:
            raise InputError("bound infeasible on the sweep; check alpha > 2M")
        return rep.value

    def sgld_discrete(n: float, eta: float) -> float:
        return sgld_bound_rhs("gen_shape", {
            "eta": eta, "t": np.inf, "n": n, "k": fixed["k"],
            "C4": fixed.get("C4", 1.0), "C6": fixed.get("C6", 1.0),
            "variant": "discrete",
        })

    if bound_family == "label_noise_discrete":
        evaluate = label_noise_discrete
    elif bound_family == "sgld_discrete":
        evaluate = sgld_discrete
    elif bound_family == "synthetic":
        evaluate = fixed["callable"]
    else:
        raise InputError(f"unknown bound family {bound_family!r}")

    curve = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for q in q_grid:
            ys = np.array([evaluate(n, n ** q) for n in n_grid])
            curve.append((float(q), _loglog_slope(n_grid, ys)))
    q_star, slope_star = min(curve, key=lambda pair: pair[1])
    return DecayResult(q_star=q_star, slope_star=slope_star, curve=curve)
