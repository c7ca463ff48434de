"""Fitting and agreement statistics: the logistic scaling-law fit by damped
nonlinear least squares, log-linear OLS, incremental F, rank correlation,
bootstrap confidence intervals, kappa statistics, the inverse-variance
weighted log-log fit, and the relevance-weight robustness sweep.

Every randomized procedure is a pure function of (seed, input).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import stats as sps

from .verification import RelevanceLabel, relevance_value

__all__ = [
    "SigmoidFit",
    "OlsFit",
    "BootstrapCI",
    "ConfusionMatrix2x2",
    "sigmoid",
    "logit",
    "fit_sigmoid",
    "fit_ols",
    "incremental_f",
    "spearman",
    "cohen_kappa",
    "confusion_stats",
    "weighted_kappa_3level",
    "bootstrap_median_ci",
    "weighted_loglog_fit",
    "CellRefs",
    "partial_weight_sweep",
]


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.asarray(z, dtype=float)))


def logit(q: float) -> float:
    return math.log(q / (1.0 - q))


@dataclass
class SigmoidFit:
    """quality = sigma(alpha*log10(P) + beta*log10(S) + gamma)."""

    alpha: float
    beta: float
    gamma: float
    se_alpha: float
    se_beta: float
    se_gamma: float
    r2: float
    n: int
    converged: bool
    iterations: int
    rss: float

    @property
    def params(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma])

    @property
    def ses(self) -> np.ndarray:
        return np.array([self.se_alpha, self.se_beta, self.se_gamma])

    def predict(self, log10_p, log10_s):
        return sigmoid(self.alpha * np.asarray(log10_p)
                       + self.beta * np.asarray(log10_s) + self.gamma)


@dataclass
class OlsFit:
    coefficients: np.ndarray  # intercept first
    standard_errors: np.ndarray
    r2: float
    rss: float
    n: int

    @property
    def intercept(self) -> float:
        return float(self.coefficients[0])

    @property
    def slopes(self) -> np.ndarray:
        return self.coefficients[1:]


@dataclass
class BootstrapCI:
    point: float
    lower: float
    upper: float
    resamples: int
    seed: int


@dataclass
class ConfusionMatrix2x2:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


# -- sigmoid fit --------------------------------------------------------------

_LM_LAMBDA0 = 1e-3
_LM_MAX_ITER = 200
_LM_RTOL = 1e-12


def fit_sigmoid(cells: Sequence[Tuple[float, float, float]]) -> SigmoidFit:
    """Levenberg-Marquardt fit of the three-parameter logistic surface.

    ``cells`` holds (log10_P, log10_S, quality) triples. The Jacobian is
    analytic; damping is a multiplicative lambda schedule (x10 on a rejected
    step, /10 on an accepted one). Standard errors use the Gauss-Newton
    covariance (J'J)^-1 times the residual variance.
    """
    data = np.asarray(cells, dtype=float)
    if data.ndim != 2 or data.shape[1] != 3:
        raise ValueError("cells must be (log10_P, log10_S, quality) triples")
    if data.shape[0] < 4:
        raise ValueError("need at least 4 cells")
    x, s, q = data[:, 0], data[:, 1], data[:, 2]
    if np.any((q < 0) | (q > 1)):
        raise ValueError("qualities must lie in [0, 1]")
    if np.ptp(x) == 0 or np.ptp(s) == 0:
        raise ValueError("both predictors must be non-constant")

    X = np.column_stack([x, s, np.ones_like(x)])
    n = len(q)

    # Start on the ramp: mean linear predictor equals logit(mean quality).
    alpha0, beta0 = 1.0, 0.5
    mq = float(np.clip(q.mean(), 0.01, 0.99))
    gamma0 = logit(mq) - (alpha0 * x.mean() + beta0 * s.mean())
    theta = np.array([alpha0, beta0, gamma0])

    def rss_of(th: np.ndarray) -> float:
        return float(np.sum((q - sigmoid(X @ th)) ** 2))

    rss = rss_of(theta)
    lam = _LM_LAMBDA0
    converged = False
    iterations = 0
    for iterations in range(1, _LM_MAX_ITER + 1):
        f = sigmoid(X @ theta)
        J = (f * (1.0 - f))[:, None] * X
        JTJ = J.T @ J
        JTr = J.T @ (q - f)
        accepted = False
        for _ in range(60):
            try:
                step = np.linalg.solve(JTJ + lam * np.diag(np.diag(JTJ)), JTr)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            new_rss = rss_of(theta + step)
            if new_rss < rss:
                theta = theta + step
                if rss - new_rss < _LM_RTOL * max(rss, 1e-300):
                    converged = True
                rss = new_rss
                lam = max(lam / 10.0, 1e-15)
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            converged = True  # no downhill step exists at machine precision
        if converged:
            break

    f = sigmoid(X @ theta)
    J = (f * (1.0 - f))[:, None] * X
    dof = n - 3
    sigma2 = rss / dof if dof > 0 else float("nan")
    try:
        cov = sigma2 * np.linalg.inv(J.T @ J)
        ses = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        ses = np.full(3, float("nan"))
    tss = float(np.sum((q - q.mean()) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else 0.0
    return SigmoidFit(
        alpha=float(theta[0]),
        beta=float(theta[1]),
        gamma=float(theta[2]),
        se_alpha=float(ses[0]),
        se_beta=float(ses[1]),
        se_gamma=float(ses[2]),
        r2=r2,
        n=n,
        converged=converged,
        iterations=iterations,
        rss=rss,
    )


# -- OLS ----------------------------------------------------------------------

def fit_ols(xs, y) -> OlsFit:
    """Closed-form least squares with intercept.

    ``xs`` is one predictor column or a (n, k) matrix of one or two columns.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(xs, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if n <= k + 1:
        raise ValueError("need n > number of coefficients")
    design = np.column_stack([np.ones(n), X])
    if np.linalg.matrix_rank(design) < k + 1:
        raise ValueError("singular design matrix")
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    rss = float(resid @ resid)
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else 0.0
    sigma2 = rss / (n - k - 1)
    cov = sigma2 * np.linalg.inv(design.T @ design)
    return OlsFit(
        coefficients=coef,
        standard_errors=np.sqrt(np.diag(cov)),
        r2=r2,
        rss=rss,
        n=n,
    )


def incremental_f(full: OlsFit, reduced: OlsFit) -> Tuple[float, Tuple[int, int]]:
    """F test of the predictors the full model adds over the reduced one."""
    if full.n != reduced.n:
        raise ValueError("models must share the response")
    p_full = len(full.coefficients)
    p_red = len(reduced.coefficients)
    if p_full <= p_red:
        raise ValueError("full model must add at least one predictor")
    if full.rss <= 0:
        raise ValueError("F undefined: full model has zero residual sum of squares")
    d1 = p_full - p_red
    d2 = full.n - p_full
    f_stat = ((reduced.rss - full.rss) / d1) / (full.rss / d2)
    return float(f_stat), (d1, d2)


# -- rank correlation ---------------------------------------------------------

_EXACT_PERM_MAX_N = 9


def _ranks(values: np.ndarray) -> np.ndarray:
    return sps.rankdata(values, method="average")


def spearman(x, y) -> Tuple[float, float]:
    """Spearman rho with average-rank ties and a two-sided p-value.

    p uses the t-approximation for n >= 10 and the exact permutation
    distribution below that.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < 3 or len(y) != n:
        raise ValueError("need two equal-length samples with n >= 3")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ValueError("correlation undefined for a constant sample")
    rx, ry = _ranks(x), _ranks(y)
    rho = float(np.corrcoef(rx, ry)[0, 1])
    if n <= _EXACT_PERM_MAX_N:
        p = _exact_perm_p(rx, ry, rho)
    else:
        if abs(rho) >= 1.0:
            p = 0.0
        else:
            t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
            p = float(2.0 * sps.t.sf(abs(t), n - 2))
    return rho, p


def _exact_perm_p(rx: np.ndarray, ry: np.ndarray, rho_obs: float) -> float:
    rxc = rx - rx.mean()
    denom = math.sqrt(float(rxc @ rxc))
    count = 0
    total = 0
    ryc = ry - ry.mean()
    sy = math.sqrt(float(ryc @ ryc))
    thresh = abs(rho_obs) - 1e-12
    for perm in permutations(ryc):
        r = float(rxc @ np.asarray(perm)) / (denom * sy)
        if abs(r) >= thresh:
            count += 1
        total += 1
    return count / total


# -- agreement ----------------------------------------------------------------

def confusion_stats(cm: ConfusionMatrix2x2) -> Tuple[float, float, float, float]:
    """(accuracy, precision, recall, specificity)."""
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else float("nan")
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else float("nan")
    specificity = cm.tn / (cm.tn + cm.fp) if cm.tn + cm.fp else float("nan")
    return accuracy, precision, recall, specificity


def cohen_kappa(cm: ConfusionMatrix2x2) -> float:
    """Binary Cohen's kappa with marginal-product expected agreement."""
    n = cm.total
    if n == 0:
        raise ValueError("empty confusion matrix")
    po = (cm.tp + cm.tn) / n
    pe = ((cm.tp + cm.fn) * (cm.tp + cm.fp) + (cm.tn + cm.fp) * (cm.tn + cm.fn)) / n**2
    if pe >= 1.0:
        raise ValueError("degenerate marginals: expected agreement is 1")
    return (po - pe) / (1.0 - pe)


def weighted_kappa_3level(table) -> float:
    """Linearly weighted kappa over the ordered scale NO < PARTIAL < YES."""
    obs = np.asarray(table, dtype=float)
    if obs.shape != (3, 3):
        raise ValueError("expected a 3x3 table")
    n = obs.sum()
    if n <= 0:
        raise ValueError("empty table")
    idx = np.arange(3)
    w = np.abs(idx[:, None] - idx[None, :]) / 2.0  # linear disagreement weights
    row = obs.sum(axis=1) / n
    col = obs.sum(axis=0) / n
    expected = np.outer(row, col)
    exp_dis = float((w * expected).sum())
    if exp_dis == 0.0:
        raise ValueError("degenerate marginals: no expected disagreement")
    obs_dis = float((w * obs / n).sum())
    return 1.0 - obs_dis / exp_dis


# -- bootstrap ----------------------------------------------------------------

def bootstrap_median_ci(
    values, resamples: int = 10000, seed: int = 0
) -> BootstrapCI:
    """Percentile-method 95% CI of the median, fully determined by the seed."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n < 2:
        raise ValueError("need at least 2 values")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(resamples, n))
    medians = np.median(values[idx], axis=1)
    lower, upper = np.percentile(medians, [2.5, 97.5])
    return BootstrapCI(
        point=float(np.median(values)),
        lower=float(lower),
        upper=float(upper),
        resamples=resamples,
        seed=seed,
    )


def weighted_loglog_fit(points, se) -> OlsFit:
    """Inverse-variance weighted least squares of y on x.

    ``points`` holds (x, y) pairs (already in log10 space); ``se`` the
    per-point standard errors. Equal errors reduce to plain OLS.
    """
    pts = np.asarray(points, dtype=float)
    se = np.asarray(se, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (x, y) pairs")
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    if np.any(se <= 0):
        raise ValueError("all standard errors must be positive")
    x, y = pts[:, 0], pts[:, 1]
    w = 1.0 / se**2
    design = np.column_stack([np.ones_like(x), x])
    sw = np.sqrt(w)
    coef, _, _, _ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    resid = y - design @ coef
    rss = float(w @ resid**2)
    ybar = float(w @ y / w.sum())
    tss = float(w @ (y - ybar) ** 2)
    r2 = 1.0 - rss / tss if tss > 0 else 0.0
    cov = rss / (len(x) - 2) * np.linalg.inv((design * w[:, None]).T @ design)
    return OlsFit(
        coefficients=coef,
        standard_errors=np.sqrt(np.diag(cov)),
        r2=r2,
        rss=rss,
        n=len(x),
    )


# -- relevance-weight robustness sweep ----------------------------------------

@dataclass
class CellRefs:
    """Per-reference inputs for one cell, for quality recomputation."""

    model: str
    log10_p: float
    log10_s: float
    refs: List[Tuple[float, RelevanceLabel]]  # (authenticity, label)


DEFAULT_SWEEP_WEIGHTS = (0.0, 0.25, 0.5, 0.75, 1.0)


def partial_weight_sweep(
    cell_refs: Sequence[CellRefs],
    weights: Sequence[float] = DEFAULT_SWEEP_WEIGHTS,
    baseline: float = 0.50,
) -> List[dict]:
    """Recompute cell qualities at each PARTIAL weight and report fit quality
    plus model-rank stability against the baseline weight.

    Each row holds the sigmoid fit r2, the two-predictor log-linear r2, and
    the Spearman rho of the model-level quality ranking against the baseline
    ranking.
    """

    def model_means(weight: float) -> Dict[str, float]:
        sums: Dict[str, List[float]] = {}
        for cell in cell_refs:
            q = _cell_quality(cell, weight)
            sums.setdefault(cell.model, []).append(q)
        return {m: float(np.mean(v)) for m, v in sorted(sums.items())}

    base_means = model_means(baseline)
    model_order = list(base_means)
    base_vec = [base_means[m] for m in model_order]

    rows: List[dict] = []
    for weight in weights:
        triples = [
            (c.log10_p, c.log10_s, _cell_quality(c, weight)) for c in cell_refs
        ]
        sig = fit_sigmoid(triples)
        arr = np.asarray(triples)
        lin = fit_ols(arr[:, :2], arr[:, 2])
        means = model_means(weight)
        vec = [means[m] for m in model_order]
        if np.ptp(vec) == 0 or np.ptp(base_vec) == 0:
            rho = 1.0 if vec == base_vec else float("nan")
        else:
            rho, _ = spearman(vec, base_vec)
        rows.append(
            {
                "partial_weight": weight,
                "sigmoid_r2": sig.r2,
                "loglinear_r2": lin.r2,
                "rank_rho_vs_baseline": rho,
            }
        )
    return rows


def _cell_quality(cell: CellRefs, weight: float) -> float:
    if not cell.refs:
        raise ValueError(f"cell for model {cell.model!r} has no references")
    return float(
        np.mean([a * relevance_value(lbl, weight) for a, lbl in cell.refs])
    )
