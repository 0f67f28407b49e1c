"""Beta-density block model over a pairwise similarity matrix.

Entries W_ij in (0, 1) are modeled as beta-distributed, with one beta per
within-cluster block and a single shared cross-cluster beta whose mean is
constrained below every within-cluster mean.  Inference is mean-field
coordinate ascent: categorical responsibilities per node (updated
sequentially so each step is an exact coordinate maximizer), a Dirichlet
factor for the cluster weights, and MAP beta parameters found by bounded
2-D quasi-Newton steps under mean/concentration hyperpriors.

The fitted within-minority and cross-cluster densities are what the
penalty derivation consumes downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import betaln, digamma, expit, gammaln, logit

__all__ = [
    "BetaParams",
    "BlockModelHyper",
    "BlockModelPosterior",
    "beta_pdf",
    "dump_posterior_csv",
    "fit_beta_moments",
    "fit_blockmodel",
    "identify_minority_cluster",
    "pair_density",
]

# Mean ordering gap between the cross-cluster beta and any within-cluster
# beta, and hard limits keeping the optimizer away from the support edges.
_MEAN_GAP = 1e-3
_MEAN_LIMIT = 1e-6
_CONC_LIMITS = (1e-3, 1e8)
_PARAM_FLOOR = 1e-3


@dataclass(frozen=True)
class BetaParams:
    """Shape parameters of a beta density; degenerate marks a
    zero-variance moment fit that fell back to the uniform."""

    alpha: float
    beta: float
    degenerate: bool = False

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("beta shape parameters must be positive")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def concentration(self) -> float:
        return self.alpha + self.beta


@dataclass(frozen=True)
class BlockModelHyper:
    """Hyperpriors: Beta(mean) x Lognormal(concentration) for the
    within-cluster and cross-cluster block densities, a symmetric
    Dirichlet over cluster weights, and the cluster count."""

    within_mean_alpha: float = 2.0
    within_mean_beta: float = 2.0
    within_logconc_mu: float = math.log(10.0)
    within_logconc_sigma2: float = 1.0
    cross_mean_alpha: float = 2.0
    cross_mean_beta: float = 2.0
    cross_logconc_mu: float = math.log(10.0)
    cross_logconc_sigma2: float = 1.0
    dirichlet_lambda: float = 1.0
    n_clusters: int = 2

    def __post_init__(self):
        positives = ("within_mean_alpha", "within_mean_beta", "within_logconc_sigma2",
                     "cross_mean_alpha", "cross_mean_beta", "cross_logconc_sigma2",
                     "dirichlet_lambda")
        for name in positives:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")


@dataclass(frozen=True)
class BlockModelPosterior:
    responsibilities: np.ndarray
    pi_weights: np.ndarray
    theta: tuple[BetaParams, ...]
    theta0: BetaParams
    objective_trace: tuple[float, ...]
    converged: bool
    n_iters: int
    minority_cluster: int | None = None

    @property
    def n_clusters(self) -> int:
        return len(self.theta)

    def hard_assignment(self) -> np.ndarray:
        return np.argmax(self.responsibilities, axis=1)


def beta_pdf(x: float, p: BetaParams) -> float:
    """Beta density at x, evaluated in log space."""
    if not 0.0 < x < 1.0:
        raise ValueError(f"beta density defined on (0, 1), got {x}")
    log_pdf = ((p.alpha - 1.0) * math.log(x) + (p.beta - 1.0) * math.log1p(-x)
               - betaln(p.alpha, p.beta))
    return float(math.exp(log_pdf))


def fit_beta_moments(samples) -> BetaParams:
    """Method-of-moments beta fit; zero variance degrades to Beta(1, 1)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need at least two samples")
    if np.any(x <= 0.0) or np.any(x >= 1.0):
        raise ValueError("samples must lie strictly inside (0, 1)")
    m = float(np.mean(x))
    v = float(np.var(x, ddof=1))
    if v <= 0.0:
        return BetaParams(1.0, 1.0, degenerate=True)
    scale = m * (1.0 - m) / v - 1.0
    return BetaParams(max(m * scale, _PARAM_FLOOR),
                      max((1.0 - m) * scale, _PARAM_FLOOR))


def _weighted_moments(values: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    total = float(np.sum(weights))
    if total <= 0.0:
        return 0.5, 0.0
    m = float(np.sum(weights * values) / total)
    v = float(np.sum(weights * (values - m) ** 2) / total)
    return m, v


def _moment_params(m: float, v: float) -> tuple[float, float]:
    """(mean, concentration) from moments, clipped into the open box."""
    m = float(np.clip(m, 10.0 * _MEAN_LIMIT, 1.0 - 10.0 * _MEAN_LIMIT))
    if v <= 0.0 or v >= m * (1.0 - m):
        conc = 10.0
    else:
        conc = m * (1.0 - m) / v - 1.0
    conc = float(np.clip(conc, 10.0 * _CONC_LIMITS[0], 0.1 * _CONC_LIMITS[1]))
    return m, conc


def _log_prior(m: float, conc: float, mean_a: float, mean_b: float,
               mu: float, sigma2: float) -> float:
    log_c = math.log(conc)
    lp = ((mean_a - 1.0) * math.log(m) + (mean_b - 1.0) * math.log1p(-m)
          - betaln(mean_a, mean_b))
    lp += (-log_c - 0.5 * math.log(2.0 * math.pi * sigma2)
           - (log_c - mu) ** 2 / (2.0 * sigma2))
    return lp


def _block_objective(m: float, conc: float, s: float, t: float, n_w: float,
                     prior: tuple) -> float:
    a = m * conc
    b = (1.0 - m) * conc
    return ((a - 1.0) * s + (b - 1.0) * t - n_w * betaln(a, b)
            + _log_prior(m, conc, *prior))


def _fit_block(s: float, t: float, n_w: float, prior: tuple,
               m_lo: float, m_hi: float, start: tuple[float, float]) -> tuple[float, float]:
    """MAP (mean, concentration) for one block via bounded L-BFGS-B in
    (logit mean, log concentration).  The incumbent start is feasible and
    the step is only accepted if it does not lower the objective."""
    m0 = float(np.clip(start[0], m_lo, m_hi))
    c0 = float(np.clip(start[1], *_CONC_LIMITS))
    incumbent_val = _block_objective(m0, c0, s, t, n_w, prior)

    def negative(x):
        m = float(expit(x[0]))
        conc = float(math.exp(x[1]))
        a = m * conc
        b = (1.0 - m) * conc
        dig_ab = digamma(a + b)
        d_a = s - n_w * (digamma(a) - dig_ab)
        d_b = t - n_w * (digamma(b) - dig_ab)
        mean_a, mean_b, mu, sigma2 = prior
        d_m = (d_a - d_b) * conc + (mean_a - 1.0) / m - (mean_b - 1.0) / (1.0 - m)
        log_c = x[1]
        d_c = (d_a * m + d_b * (1.0 - m)) - 1.0 / conc - (log_c - mu) / (sigma2 * conc)
        val = _block_objective(m, conc, s, t, n_w, prior)
        grad = np.array([d_m * m * (1.0 - m), d_c * conc])
        return -val, -grad

    bounds = [(float(logit(m_lo)), float(logit(m_hi))),
              (math.log(_CONC_LIMITS[0]), math.log(_CONC_LIMITS[1]))]
    x0 = np.array([float(np.clip(logit(m0), *bounds[0])),
                   float(np.clip(math.log(c0), *bounds[1]))])
    res = minimize(negative, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"maxiter": 200})
    m_new = float(expit(np.clip(res.x[0], *bounds[0])))
    c_new = float(np.exp(np.clip(res.x[1], *bounds[1])))
    if _block_objective(m_new, c_new, s, t, n_w, prior) >= incumbent_val:
        return m_new, c_new
    return m0, c0


def _as_params(m: float, conc: float) -> BetaParams:
    return BetaParams(max(m * conc, _PARAM_FLOOR), max((1.0 - m) * conc, _PARAM_FLOOR))


def _spectral_sides(w: np.ndarray):
    """Two-way split from the sign of the top eigenvector of the centered
    similarity matrix; None when the split is degenerate."""
    n = w.shape[0]
    off = ~np.eye(n, dtype=bool)
    centered = np.where(off, w - np.mean(w[off]), 0.0)
    vals, vecs = np.linalg.eigh(centered)
    side = vecs[:, np.argmax(vals)] >= 0.0
    if side.all() or not side.any():
        return None
    return side


def _init_responsibilities(w: np.ndarray, k: int, init_labels, seed: int,
                           init: str = "auto") -> np.ndarray:
    n = w.shape[0]
    if init_labels is None:
        # unguided coordinate ascent stalls at the mixed symmetric fixed
        # point, so the two-cluster default starts from a spectral split;
        # init="random" keeps the plain seeded start reachable
        if init == "auto" and k == 2:
            side = _spectral_sides(w)
            if side is not None:
                r = np.where(side[:, None], [0.95, 0.05], [0.05, 0.95])
                return r / r.sum(axis=1, keepdims=True)
        rng = np.random.default_rng(seed)
        return rng.dirichlet(np.ones(k), size=n)
    labels = np.asarray(init_labels)
    if labels.shape != (n,):
        raise ValueError("init_labels length must match the matrix size")
    values = np.unique(labels)
    if values.size > k:
        raise ValueError(f"init_labels has {values.size} distinct values "
                         f"but only {k} clusters")
    r = np.full((n, k), 0.05 / max(k - 1, 1))
    cluster_of = {v: idx for idx, v in enumerate(values)}
    for i, lab in enumerate(labels):
        r[i, cluster_of[lab]] = 0.95 if k > 1 else 1.0
    return r / r.sum(axis=1, keepdims=True)


def _edge_stats(log_w, log_1mw, r):
    """Per-block sums of log W, log(1-W), and pair weight over i<j."""
    k = r.shape[1]
    s = np.empty(k)
    t = np.empty(k)
    n_w = np.empty(k)
    for j in range(k):
        col = r[:, j]
        s[j] = 0.5 * col @ (log_w @ col)
        t[j] = 0.5 * col @ (log_1mw @ col)
        n_w[j] = 0.5 * (np.sum(col) ** 2 - np.sum(col ** 2))
    np.maximum(n_w, 0.0, out=n_w)
    return s, t, n_w


def fit_blockmodel(w: np.ndarray, hyper: BlockModelHyper | None = None, *,
                   init_labels=None, max_iters: int = 60, tol: float = 1e-4,
                   seed: int = 0, init: str = "auto") -> BlockModelPosterior:
    """Coordinate-ascent fit; the tracked objective never decreases by
    more than float slack, and the cross-cluster mean stays below every
    within-cluster mean by construction of the bounded parameter steps.

    init picks the no-label starting point: "auto" (spectral split for
    two clusters, else seeded random) or "random" (always seeded random).
    init_labels overrides both.
    """
    hyper = hyper if hyper is not None else BlockModelHyper()
    w = np.asarray(w, dtype=np.float64)
    n = w.shape[0]
    if w.ndim != 2 or w.shape[1] != n:
        raise ValueError("similarity matrix must be square")
    if n < 2:
        raise ValueError("need at least two nodes")
    off = ~np.eye(n, dtype=bool)
    if np.any(w[off] <= 0.0) or np.any(w[off] >= 1.0):
        raise ValueError("off-diagonal similarities must lie strictly in (0, 1)")
    if np.max(np.abs(w - w.T)) > 1e-8:
        raise ValueError("similarity matrix must be symmetric")
    k = hyper.n_clusters
    if k > n:
        raise ValueError(f"more clusters ({k}) than nodes ({n})")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if init not in ("auto", "random"):
        raise ValueError(f"unknown init {init!r}; use 'auto' or 'random'")

    log_w = np.where(off, np.log(w), 0.0)
    log_1mw = np.where(off, np.log1p(-w), 0.0)
    lw_rows = log_w @ np.ones(n)
    l1w_rows = log_1mw @ np.ones(n)
    total_pairs = n * (n - 1) / 2.0
    s_total = 0.5 * float(np.sum(log_w))
    t_total = 0.5 * float(np.sum(log_1mw))

    prior_within = (hyper.within_mean_alpha, hyper.within_mean_beta,
                    hyper.within_logconc_mu, hyper.within_logconc_sigma2)
    prior_cross = (hyper.cross_mean_alpha, hyper.cross_mean_beta,
                   hyper.cross_logconc_mu, hyper.cross_logconc_sigma2)
    lam = hyper.dirichlet_lambda

    r = _init_responsibilities(w, k, init_labels, seed, init)

    # moment-based starting parameters, then force the mean ordering
    means = np.empty(k)
    concs = np.empty(k)
    s_b, t_b, n_b = _edge_stats(log_w, log_1mw, r)
    vals = w[np.triu_indices(n, 1)]
    for j in range(k):
        col = r[:, j]
        weights = np.outer(col, col)[np.triu_indices(n, 1)]
        means[j], concs[j] = _moment_params(*_weighted_moments(vals, weights))
    cross_w = 1.0 - np.einsum("ik,jk->ij", r, r)[np.triu_indices(n, 1)]
    m0, c0 = _moment_params(*_weighted_moments(vals, np.maximum(cross_w, 0.0)))
    cap = float(np.min(means)) - _MEAN_GAP
    if m0 > cap:
        m0 = max(cap, _MEAN_LIMIT)
    if np.min(means) - _MEAN_GAP <= m0:
        means = np.maximum(means, m0 + _MEAN_GAP + _MEAN_LIMIT)

    trace: list[float] = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        gamma = lam + r.sum(axis=0)
        psi_tilde = digamma(gamma) - digamma(np.sum(gamma))

        alphas = means * concs
        betas = (1.0 - means) * concs
        log_b = betaln(alphas, betas)
        a0 = m0 * c0
        b0 = (1.0 - m0) * c0
        log_b0 = float(betaln(a0, b0))

        # sequential responsibility sweep with running matvec caches
        p = log_w @ r
        q = log_1mw @ r
        col_sums = r.sum(axis=0)
        for i in range(n):
            others = col_sums - r[i]
            score = (psi_tilde
                     + (alphas - 1.0) * p[i] + (betas - 1.0) * q[i] - log_b * others
                     + (a0 - 1.0) * (lw_rows[i] - p[i])
                     + (b0 - 1.0) * (l1w_rows[i] - q[i])
                     - log_b0 * ((n - 1) - others))
            score -= np.max(score)
            new_r = np.exp(score)
            new_r /= np.sum(new_r)
            delta = new_r - r[i]
            p += np.outer(log_w[:, i], delta)
            q += np.outer(log_1mw[:, i], delta)
            col_sums += delta
            r[i] = new_r

        gamma = lam + r.sum(axis=0)
        psi_tilde = digamma(gamma) - digamma(np.sum(gamma))

        s_b, t_b, n_b = _edge_stats(log_w, log_1mw, r)
        s0 = s_total - float(np.sum(s_b))
        t0 = t_total - float(np.sum(t_b))
        n0 = max(total_pairs - float(np.sum(n_b)), 0.0)
        for j in range(k):
            means[j], concs[j] = _fit_block(
                s_b[j], t_b[j], n_b[j], prior_within,
                m_lo=min(m0 + _MEAN_GAP, 1.0 - 2.0 * _MEAN_LIMIT),
                m_hi=1.0 - _MEAN_LIMIT, start=(means[j], concs[j]))
        m0, c0 = _fit_block(
            s0, t0, n0, prior_cross, m_lo=_MEAN_LIMIT,
            m_hi=max(float(np.min(means)) - _MEAN_GAP, 2.0 * _MEAN_LIMIT),
            start=(m0, c0))

        objective = _full_objective(r, gamma, psi_tilde, lam, means, concs, m0, c0,
                                    s_b, t_b, n_b, s0, t0, n0,
                                    prior_within, prior_cross)
        if not np.isfinite(objective):
            raise RuntimeError(_describe_nonfinite(means, concs, m0, c0, s_b, t_b, s0, t0))
        trace.append(objective)
        if len(trace) >= 2 and trace[-1] - trace[-2] < tol:
            converged = True
            break

    theta = tuple(_as_params(means[j], concs[j]) for j in range(k))
    theta0 = _as_params(m0, c0)
    minority = None
    if init_labels is not None and np.any(np.asarray(init_labels) == 1):
        minority = identify_minority_cluster_from(r, np.asarray(init_labels))
    return BlockModelPosterior(
        responsibilities=r, pi_weights=gamma, theta=theta, theta0=theta0,
        objective_trace=tuple(trace), converged=converged, n_iters=it,
        minority_cluster=minority)


def _full_objective(r, gamma, psi_tilde, lam, means, concs, m0, c0,
                    s_b, t_b, n_b, s0, t0, n0, prior_within, prior_cross) -> float:
    k = r.shape[1]
    alphas = means * concs
    betas = (1.0 - means) * concs
    a0 = m0 * c0
    b0 = (1.0 - m0) * c0
    likelihood = float(np.sum((alphas - 1.0) * s_b + (betas - 1.0) * t_b
                              - n_b * betaln(alphas, betas)))
    likelihood += (a0 - 1.0) * s0 + (b0 - 1.0) * t0 - n0 * float(betaln(a0, b0))
    col_sums = r.sum(axis=0)
    assign = float(np.sum(col_sums * psi_tilde))
    prior_pi = float(gammaln(k * lam) - k * gammaln(lam) + (lam - 1.0) * np.sum(psi_tilde))
    entropy_z = -float(np.sum(np.where(r > 0.0, r * np.log(np.where(r > 0.0, r, 1.0)), 0.0)))
    entropy_pi = -float(gammaln(np.sum(gamma)) - np.sum(gammaln(gamma))
                        + np.sum((gamma - 1.0) * psi_tilde))
    prior_theta = sum(_log_prior(means[j], concs[j], *prior_within) for j in range(k))
    prior_theta += _log_prior(m0, c0, *prior_cross)
    return likelihood + assign + prior_pi + entropy_z + entropy_pi + prior_theta


def _describe_nonfinite(means, concs, m0, c0, s_b, t_b, s0, t0) -> str:
    for j in range(len(means)):
        block_vals = (means[j], concs[j], s_b[j], t_b[j])
        if not np.all(np.isfinite(block_vals)):
            return f"non-finite objective from within-block {j}"
    if not np.all(np.isfinite((m0, c0, s0, t0))):
        return "non-finite objective from the cross-cluster block"
    return "non-finite variational objective"


def identify_minority_cluster_from(responsibilities: np.ndarray, labels) -> int:
    """Cluster with the largest responsibility mass on label +1 rows."""
    labels = np.asarray(labels)
    pos = labels == 1
    if not np.any(pos):
        raise ValueError("no +1 labels to identify the minority cluster")
    return int(np.argmax(responsibilities[pos].sum(axis=0)))


def identify_minority_cluster(post: BlockModelPosterior, labels) -> int:
    return identify_minority_cluster_from(post.responsibilities, labels)


def pair_density(post: BlockModelPosterior, w_ij: float, mode: str) -> float:
    """Fitted density of a similarity value under the within-minority
    block ("within_minority") or the cross-cluster block ("cross")."""
    if mode == "cross":
        return beta_pdf(w_ij, post.theta0)
    if mode == "within_minority":
        if post.minority_cluster is None:
            raise ValueError("posterior has no identified minority cluster; "
                             "fit with init_labels containing +1")
        return beta_pdf(w_ij, post.theta[post.minority_cluster])
    raise ValueError(f"unknown mode {mode!r}")


def dump_posterior_csv(post: BlockModelPosterior, path) -> None:
    """Responsibilities plus fitted block parameters, one file."""
    with open(path, "w", encoding="utf-8") as fh:
        header = ",".join(f"cluster_{j}" for j in range(post.n_clusters))
        fh.write("# block,alpha,beta\n")
        for j, p in enumerate(post.theta):
            fh.write(f"# within_{j},{p.alpha!r},{p.beta!r}\n")
        fh.write(f"# cross,{post.theta0.alpha!r},{post.theta0.beta!r}\n")
        fh.write(header + "\n")
        for row in post.responsibilities:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
