from __future__ import annotations

import math

import pytest
from pydantic import ValidationError

from mflab.core.models import SequenceBound
from mflab.rates.sequence_lemma import convolution_constant, saturating_sequence, verify_sequence_lemma


def test_convolution_constant_is_cached_and_finite() -> None:
    first = convolution_constant(0.1, 0.5, 2000)
    again = convolution_constant(0.1, 0.5, 2000)

    C, maximizing_n = first
    assert again is first
    assert math.isfinite(C)
    # n = 1 alone gives 2^(1/gamma - 1).
    assert C >= 2.0
    assert 1 <= maximizing_n <= 2000


@pytest.mark.parametrize(("gamma", "beta"), [(0.5, 0.0), (0.5, 0.3), (0.3, 0.2), (0.7, 0.25)])
def test_saturating_sequence_meets_the_conclusion(gamma: float, beta: float) -> None:
    C, _ = convolution_constant(beta, gamma, 10_000)
    sigma = 0.5 / C
    delta = saturating_sequence(1.0, sigma, gamma, beta, 0.5, 300)

    report = verify_sequence_lemma(SequenceBound(xi=1.0, sigma=sigma, gamma=gamma, beta=beta, delta=delta), 10_000)

    assert report.hypothesis_holds
    assert report.conclusion_holds
    assert report.sigma_c == pytest.approx(0.5)
    assert report.K == pytest.approx(max(0.5, 1.0 / (1.0 - 0.5)))


def test_large_sigma_voids_the_conclusion() -> None:
    C, _ = convolution_constant(0.1, 0.5, 10_000)
    sigma = 1.5 / C
    delta = saturating_sequence(1.0, sigma, 0.5, 0.1, 0.0, 50)

    report = verify_sequence_lemma(SequenceBound(xi=1.0, sigma=sigma, gamma=0.5, beta=0.1, delta=delta), 10_000)

    assert report.hypothesis_holds
    assert not report.conclusion_holds
    assert report.K == float("inf")


def test_violated_hypothesis_is_reported() -> None:
    delta = saturating_sequence(1.0, 0.01, 0.5, 0.1, 0.0, 50)
    delta[10] *= 10.0

    report = verify_sequence_lemma(SequenceBound(xi=1.0, sigma=0.01, gamma=0.5, beta=0.1, delta=delta), 10_000)

    assert not report.hypothesis_holds
    assert not report.conclusion_holds


def test_supplied_constant_skips_the_search() -> None:
    delta = saturating_sequence(1.0, 0.01, 0.5, 0.1, 0.0, 20)

    report = verify_sequence_lemma(
        SequenceBound(xi=1.0, sigma=0.01, gamma=0.5, beta=0.1, C_beta_gamma=5.0, delta=delta)
    )

    assert report.C_beta_gamma == 5.0
    assert report.maximizing_n == 0
    assert report.sigma_c == pytest.approx(0.05)


@pytest.mark.parametrize(
    "fields",
    [
        {"beta": 0.5, "gamma": 0.5},
        {"beta": 0.1, "gamma": 1.0},
        {"beta": 0.1, "gamma": 0.5, "delta": [1.0, -0.5]},
        {"beta": 0.1, "gamma": 0.5, "delta": [1.0, float("nan")]},
    ],
)
def test_sequence_bound_validation(fields: dict) -> None:
    values = {"xi": 1.0, "sigma": 0.1, "delta": [1.0, 0.5]} | fields

    with pytest.raises(ValidationError):
        SequenceBound(**values)


def test_no_memory_term_gives_the_plain_bound() -> None:
    delta = saturating_sequence(1.5, 0.0, 0.5, 0.1, 3.0, 40)

    report = verify_sequence_lemma(SequenceBound(xi=1.5, sigma=0.0, gamma=0.5, beta=0.1, delta=delta), 10_000)

    assert report.hypothesis_holds and report.conclusion_holds
    assert report.K == 3.0
    assert report.sigma_c == 0.0
