"""Citation-count gradient analysis: restrict to verified references, match
them to external works, compute per-model median citation counts with
bootstrap confidence intervals, and fit the inverse-variance weighted
log-log gradient against model size."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from .citations import ParsedReference
from .openalex import OpenAlexClient, match_work
from .stats import BootstrapCI, OlsFit, bootstrap_median_ci, spearman, weighted_loglog_fit
from .verification import Status, VerificationResult

__all__ = ["CitationSample", "GradientReport", "build_citation_samples", "citation_gradient"]

_INCLUDED_STATUSES = (Status.VERIFIED, Status.VERIFIED_WITH_ERROR)


@dataclass
class CitationSample:
    """Matched citation counts for one model, with exclusion accounting."""

    model: str
    matched: List[Tuple[Tuple[str, str, int], int]] = field(default_factory=list)
    n_unmatched: int = 0
    n_excluded_status: int = 0
    n_errors: int = 0

    @property
    def counts(self) -> List[int]:
        return [c for _, c in self.matched]

    @property
    def n_total(self) -> int:
        return len(self.matched) + self.n_unmatched + self.n_excluded_status + self.n_errors


@dataclass
class GradientReport:
    medians: Dict[str, BootstrapCI]
    fit: OlsFit
    spearman_rho: float
    spearman_p: float
    included_models: List[str]
    excluded_models: List[str]


def build_citation_samples(
    refs: Mapping[Tuple[str, str, int], ParsedReference],
    results: Mapping[Tuple[str, str, int], VerificationResult],
    client: OpenAlexClient,
    stopwords: Set[str],
    overlap_threshold: float = 0.5,
) -> List[CitationSample]:
    """One sample per model over its analysed references.

    References outside the verified buckets are counted but excluded;
    verified references are re-matched by title and accepted only when the
    top-ranked candidate clears the overlap threshold. Client errors skip
    the reference and are counted separately.
    """
    samples: Dict[str, CitationSample] = {}
    for key in sorted(results):
        model = key[0]
        sample = samples.setdefault(model, CitationSample(model=model))
        result = results[key]
        if result.status not in _INCLUDED_STATUSES:
            sample.n_excluded_status += 1
            continue
        ref = refs[key]
        try:
            candidates = client.search_candidates(ref.title)
        except Exception:
            sample.n_errors += 1
            continue
        work = match_work(ref.title, candidates, stopwords, overlap_threshold)
        if work is None:
            sample.n_unmatched += 1
            continue
        sample.matched.append((key, client.citation_count(work)))
    return list(samples.values())


def citation_gradient(
    samples: Sequence[CitationSample],
    params_billions: Mapping[str, Optional[float]],
    min_n: int = 50,
    resamples: int = 10000,
    seed: int = 0,
) -> GradientReport:
    """Per-model medians with bootstrap CIs and the weighted log-log fit.

    Models below ``min_n`` matched references or with unknown parameter
    count are excluded. The point standard error for weighting is the
    percentile CI width divided by 2 * 1.96.
    """
    qualifying: List[CitationSample] = []
    excluded: List[str] = []
    for sample in samples:
        p = params_billions.get(sample.model)
        if p is None or len(sample.matched) < min_n:
            excluded.append(sample.model)
        else:
            qualifying.append(sample)
    if len(qualifying) < 3:
        raise ValueError(
            f"need at least 3 qualifying models, have {len(qualifying)}"
        )

    medians: Dict[str, BootstrapCI] = {}
    points: List[Tuple[float, float]] = []
    ses: List[float] = []
    p_vals: List[float] = []
    med_vals: List[float] = []
    for i, sample in enumerate(sorted(qualifying, key=lambda s: s.model)):
        ci = bootstrap_median_ci(sample.counts, resamples=resamples, seed=seed + i)
        medians[sample.model] = ci
        p = float(params_billions[sample.model])
        se_log = _log10_se(ci)
        points.append((math.log10(p), math.log10(ci.point)))
        ses.append(se_log)
        p_vals.append(p)
        med_vals.append(ci.point)

    fit = weighted_loglog_fit(points, ses)
    rho, pval = spearman(p_vals, med_vals)
    return GradientReport(
        medians=medians,
        fit=fit,
        spearman_rho=rho,
        spearman_p=pval,
        included_models=sorted(s.model for s in qualifying),
        excluded_models=sorted(excluded),
    )


_MIN_LOG_SE = 1e-6  # zero-width bootstrap CIs would give infinite weight


def _log10_se(ci: BootstrapCI) -> float:
    if ci.point <= 0 or ci.lower <= 0 or ci.upper <= 0:
        raise ValueError("citation medians must be positive for the log fit")
    width = math.log10(ci.upper) - math.log10(ci.lower)
    return max(width / (2.0 * 1.959963984540054), _MIN_LOG_SE)
