import numpy as np
import pytest

from refscale.citations import ParsedReference
from refscale.citetail import CitationSample, build_citation_samples, citation_gradient
from refscale.openalex import OpenAlexClient
from refscale.verification import FieldVerdict, Status, VerificationResult

from conftest import make_fixture


def _ref(title):
    return ParsedReference(authors=["A, B."], year=2000, title=title,
                           venue=None, identifier=None, raw=title)


def _result(status):
    return VerificationResult(verdicts={"title": FieldVerdict.MATCH},
                              authenticity=1.0, status=status,
                              matched_candidate="W1")


def _search_body(title, cited):
    work = {"id": "W1", "title": title, "authors": ["A, B."], "year": 2000,
            "venue": None, "doi": None, "cited_by_count": cited}
    return {"results": [work]}


class TestBuildSamples:
    def test_accounting_buckets(self, tmp_path, stopwords):
        refs, results = {}, {}
        # three matched, one unmatched (empty search result), one excluded
        for i, cited in enumerate([5, 10, 15]):
            title = f"matched title {i}"
            key = ("m", "t", i)
            refs[key] = _ref(title)
            results[key] = _result(Status.VERIFIED)
            make_fixture(tmp_path, "works_search", {"title": title},
                         _search_body(title, cited))
        refs[("m", "t", 3)] = _ref("vanished title")
        results[("m", "t", 3)] = _result(Status.VERIFIED_WITH_ERROR)
        make_fixture(tmp_path, "works_search", {"title": "vanished title"},
                     {"results": []})
        refs[("m", "t", 4)] = _ref("fabricated title")
        results[("m", "t", 4)] = _result(Status.UNVERIFIED)

        client = OpenAlexClient(fixtures=tmp_path, offline=True)
        (sample,) = build_citation_samples(refs, results, client, stopwords)
        assert sample.model == "m"
        assert sorted(sample.counts) == [5, 10, 15]
        assert sample.n_unmatched == 1
        assert sample.n_excluded_status == 1
        assert sample.n_errors == 0
        assert sample.n_total == 5

    def test_client_errors_counted(self, tmp_path, stopwords):
        # No fixture at all: the offline miss is counted as an error.
        refs = {("m", "t", 0): _ref("never recorded")}
        results = {("m", "t", 0): _result(Status.VERIFIED)}
        client = OpenAlexClient(fixtures=tmp_path, offline=True)
        (sample,) = build_citation_samples(refs, results, client, stopwords)
        assert sample.n_errors == 1
        assert sample.counts == []


def _synthetic_samples(slope=-0.35, scale=2000.0, n=240, sigma=0.6, base=100):
    params, samples, truth = {}, [], {}
    for i, p in enumerate(np.logspace(0, 3, 10)):
        name = f"m{i:02d}"
        params[name] = float(p)
        median = scale * p ** slope
        truth[name] = median
        rng = np.random.default_rng(base + i)
        counts = np.maximum(
            1, np.round(median * np.exp(rng.normal(0, sigma, n)))).astype(int)
        samples.append(CitationSample(
            model=name,
            matched=[((name, "t", j), int(c)) for j, c in enumerate(counts)]))
    return params, samples, truth


class TestGradient:
    def test_slope_and_rank_recovered(self):
        params, samples, _ = _synthetic_samples()
        report = citation_gradient(samples, params, min_n=50, resamples=2000,
                                   seed=42)
        assert report.fit.slopes[0] == pytest.approx(-0.35, abs=0.05)
        assert report.spearman_rho == pytest.approx(-1.0)
        assert report.included_models == sorted(params)
        assert report.excluded_models == []

    def test_exclusions(self):
        params, samples, _ = _synthetic_samples()
        params["tiny"] = 0.5
        samples.append(CitationSample(
            model="tiny", matched=[(("tiny", "t", j), 3) for j in range(5)]))
        params["mystery"] = None
        samples.append(CitationSample(
            model="mystery",
            matched=[(("mystery", "t", j), 3) for j in range(100)]))
        report = citation_gradient(samples, params, min_n=50, resamples=500,
                                   seed=0)
        assert report.excluded_models == ["mystery", "tiny"]
        assert "tiny" not in report.medians

    def test_too_few_models(self):
        params, samples, _ = _synthetic_samples()
        with pytest.raises(ValueError, match="3 qualifying"):
            citation_gradient(samples[:2], params, min_n=50, resamples=100,
                              seed=0)

    def test_seed_determinism(self):
        params, samples, _ = _synthetic_samples()
        a = citation_gradient(samples, params, min_n=50, resamples=500, seed=9)
        b = citation_gradient(samples, params, min_n=50, resamples=500, seed=9)
        assert a.fit.slopes[0] == b.fit.slopes[0]
        for model in a.medians:
            assert (a.medians[model].lower, a.medians[model].upper) == \
                (b.medians[model].lower, b.medians[model].upper)
