import math
from itertools import combinations

import numpy as np
import pytest

import zcequant as z
from zcequant.errors import ParameterError

SEED = 20260810


def beg_mean(n, N, psi):
    return N * math.exp(-n * math.log1p(psi.value))


def test_beg_tiny_case():
    # N = 1: P(1) = 1/(psi+1)^n, P(0) its complement
    pmf = z.beg_pmf(1, 1, 1.0)
    assert pmf.probabilities == pytest.approx([0.5, 0.5], abs=1e-14)
    pmf = z.beg_pmf(3, 1, 0.5)
    p1 = (1.5) ** -3
    assert pmf.probabilities == pytest.approx([1 - p1, p1], rel=1e-12)


def test_beg_normalization_and_nonnegativity():
    for n, N, psi in [
        (1, 10, 0.01),
        (5, 100, z.psi_bayes(5, 0.9)),
        (50, 100, z.psi_ml(50, 0.99)),
        (50, 500, z.psi_bayes(50, 0.999)),
        (100, 1000, z.psi_bayes(100, 0.999)),
    ]:
        pmf = z.beg_pmf(n, N, psi)
        assert np.all(pmf.probabilities >= 0.0)
        assert pmf.probabilities.sum() == pytest.approx(1.0, abs=1e-8)


def test_beg_fig2_left_statistics():
    bayes = z.beg_pmf(50, 100, z.psi_bayes(50, 0.99))
    assert bayes.mean() == pytest.approx(1.0, abs=1e-6)
    # frozen from the closed-form variance (matches the published 1.46)
    assert bayes.variance() == pytest.approx(1.4601812372, abs=1e-6)
    assert bayes.survival(1) == pytest.approx(0.25, abs=0.01)

    ml = z.beg_pmf(50, 100, z.psi_ml(50, 0.99))
    assert ml.mean() == pytest.approx(1.2212707823, abs=1e-6)
    assert ml.variance() == pytest.approx(1.8396473606, abs=1e-6)


def test_beg_fig2_right_statistics():
    bayes = z.beg_pmf(100, 100, z.psi_bayes(100, 0.99))
    assert bayes.mean() == pytest.approx(1.0, abs=1e-6)
    assert bayes.variance() == pytest.approx(1.2125454640, abs=1e-6)


def test_beg_moments_match_pmf():
    for n, N, psi in [
        (50, 100, z.psi_bayes(50, 0.99)),
        (50, 100, z.psi_ml(50, 0.99)),
        (5, 40, z.psi_bayes(5, 0.9)),
    ]:
        pmf = z.beg_pmf(n, N, psi)
        for order in (1, 2, 3, 4):
            closed = z.beg_moment(order, n, N, psi)
            from_vector = pmf.moment(order)
            assert closed == pytest.approx(from_vector, rel=1e-6)


def test_beg_moment_identities():
    for n, N, alpha in [(3, 7, 0.8), (50, 100, 0.99), (20, 1000, 0.999)]:
        for psi in (z.psi_bayes(n, alpha), z.psi_ml(n, alpha)):
            mean = z.beg_moment(1, n, N, psi)
            assert mean == pytest.approx(beg_mean(n, N, psi), rel=1e-8)
            var = z.beg_moment(2, n, N, psi) - mean**2
            assert var == pytest.approx(z.beg_variance(n, N, psi), rel=1e-8)


def test_beg_variance_bernoulli_case():
    # N = 1 reduces to a Bernoulli count
    for n, psi in [(3, 0.5), (10, 0.1)]:
        p = math.exp(-n * math.log1p(psi))
        assert z.beg_variance(n, 1, psi) == pytest.approx(p * (1 - p), rel=1e-12)


def test_beg_moment_order_cap():
    with pytest.raises(ParameterError):
        z.beg_moment(9, 5, 10, 0.5)


def test_beg_stochastic_ordering():
    """The ML pmf has a heavier survival function at every k >= 1."""
    bayes = z.beg_pmf(50, 100, z.psi_bayes(50, 0.99))
    ml = z.beg_pmf(50, 100, z.psi_ml(50, 0.99))
    for k in range(1, 30):
        assert ml.survival(k - 1) > bayes.survival(k - 1)


def test_beg_degenerate_limit():
    pmf = z.beg_pmf(5, 50, 1e9)
    assert pmf.probabilities[0] == pytest.approx(1.0, abs=1e-9)


def test_beg_psi_domain():
    with pytest.raises(ParameterError):
        z.beg_pmf(5, 10, 0.0)
    with pytest.raises(ParameterError):
        z.beg_pmf(5, 10, -0.5)


def test_beg_sum_and_quadrature_agree():
    """Both evaluation paths agree on the full range for moderate N."""
    for n, N, psi in [
        (5, 60, z.psi_bayes(5, 0.9)),
        (50, 100, z.psi_bayes(50, 0.99)),
        (50, 100, z.psi_ml(50, 0.99)),
    ]:
        by_sum = z.beg_pmf(n, N, psi, method="sum")
        by_quad = z.beg_pmf(n, N, psi, method="quadrature")
        assert np.max(np.abs(by_sum.probabilities - by_quad.probabilities)) < 1e-11


def test_beg_monte_carlo_smoke():
    """Literal train/test oracle on a couple of cells (full grid in acceptance)."""
    gen = np.random.default_rng(SEED)
    R = 200_000
    for n, N, psi, lam in [
        (5, 10, z.psi_bayes(5, 0.9), 1.0),
        (20, 10, z.psi_ml(20, 0.99), 0.1),
    ]:
        sums = gen.exponential(1.0 / lam, (R, n)).sum(axis=1)
        eta = psi.value * sums
        counts = (gen.exponential(1.0 / lam, (R, N)) > eta[:, None]).sum(axis=1)
        hist = np.bincount(counts, minlength=N + 1) / R
        assert z.tv_distance(hist, z.beg_pmf(n, N, psi).probabilities) < 0.01


# -- GvS comparison law ------------------------------------------------------


def gvs_rank_enumeration(n, m, N):
    """Exact law by enumerating which ranks the future samples occupy."""
    total = math.comb(n + N, N)
    counts = np.zeros(N + 1)
    for future in combinations(range(n + N), N):
        past = sorted(set(range(n + N)) - set(future), reverse=True)
        threshold = past[m - 1]
        k = sum(1 for rank in future if rank > threshold)
        counts[k] += 1
    return counts / total


@pytest.mark.parametrize("n,m,N", [(1, 1, 1), (3, 2, 2), (4, 1, 3), (5, 3, 2), (6, 2, 4)])
def test_gvs_exact_small_cases(n, m, N):
    pmf = z.gvs_pmf(n, m, N)
    assert pmf.probabilities == pytest.approx(gvs_rank_enumeration(n, m, N), abs=1e-12)


def test_gvs_statistics():
    pmf = z.gvs_pmf(100, 1, 100)
    assert pmf.mean() == pytest.approx(100 / 101, abs=1e-6)
    assert pmf.probabilities.sum() == pytest.approx(1.0, abs=1e-10)
    tiny = z.gvs_pmf(1, 1, 1)
    assert tiny.probabilities == pytest.approx([0.5, 0.5], abs=1e-14)


def test_gvs_monte_carlo_smoke():
    gen = np.random.default_rng(SEED)
    R = 100_000
    n, m, N = 20, 2, 15
    u = gen.random((R, n + N))
    past, future = u[:, :n], u[:, n:]
    thresholds = np.sort(past, axis=1)[:, n - m]
    counts = (future > thresholds[:, None]).sum(axis=1)
    hist = np.bincount(counts, minlength=N + 1) / R
    assert z.tv_distance(hist, z.gvs_pmf(n, m, N).probabilities) < 0.01


def test_gvs_domain():
    with pytest.raises(ParameterError):
        z.gvs_pmf(3, 4, 10)
    with pytest.raises(ParameterError):
        z.gvs_pmf(3, 0, 10)


# -- container behavior ------------------------------------------------------


def test_pmf_csv_round_trip(tmp_path):
    pmf = z.beg_pmf(50, 100, z.psi_bayes(50, 0.99))
    path = tmp_path / "pmf.csv"
    pmf.to_csv(path)
    text = path.read_text()
    assert text.startswith("k,probability\n")
    assert text.rstrip().endswith(f"alpha=0.99")
    again = z.ExceedancePmf.from_csv(path)
    assert np.array_equal(again.probabilities, pmf.probabilities)
    assert again.params["n"] == 50
    assert again.params["N"] == 100
    assert again.params["psi"] == pytest.approx(pmf.params["psi"], rel=1e-15)


def test_tv_distance_pads():
    assert z.tv_distance([1.0], [0.5, 0.5]) == pytest.approx(0.5)
    assert z.tv_distance([0.5, 0.5], [0.5, 0.5]) == 0.0
