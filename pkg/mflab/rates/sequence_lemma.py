"""Numerical check of the discrete convolution (Gronwall-type) lemma.

Hypothesis, for n >= 1:

    delta_n <= xi n^a + sigma * sum_{j < n} delta_j (n - j)^e,   a = 1 - 1/gamma,  e = (beta - 1)/gamma

Conclusion, when sigma C < 1: delta_n <= K n^a with K = max(delta_0, xi / (1 - sigma C)).

C is the supremum over n of two convolution ratios:

    R(n)  = sum_{j < n} (j + 1)^a (n - j)^e / (n + 1)^a
    R'(n) = sum_{j < n} max(j, 1)^a (n - j)^e / n^a

R' is the ratio the induction on the n^a form actually needs; taking the
larger of the two keeps the conclusion provable for every n.
"""

from __future__ import annotations

import logging
from functools import lru_cache

import numpy as np

from ..core.models import SequenceBound, SequenceReport
from ..core.policies import build_rate_policy

logger = logging.getLogger(__name__)

RELATIVE_SLACK = 1e-9


def _exponents(beta: float, gamma: float) -> tuple[float, float]:
    return 1.0 - 1.0 / gamma, (beta - 1.0) / gamma


@lru_cache(maxsize=32)
def convolution_constant(beta: float, gamma: float, horizon: int) -> tuple[float, int]:
    """(C_{beta, gamma}, maximizing n) over n = 1..horizon."""
    a, e = _exponents(beta, gamma)
    j = np.arange(horizon, dtype=float)
    kernel = np.arange(1, horizon + 1, dtype=float) ** e
    shifted = np.convolve((j + 1.0) ** a, kernel)[:horizon]
    clamped = np.convolve(np.maximum(j, 1.0) ** a, kernel)[:horizon]
    n = np.arange(1, horizon + 1, dtype=float)
    ratio = np.maximum(shifted / (n + 1.0) ** a, clamped / n**a)
    best = int(np.argmax(ratio))
    return float(ratio[best]), best + 1


def _memory_term(delta: np.ndarray, e: float) -> np.ndarray:
    """sum_{j < n} delta_j (n - j)^e for n = 1..len(delta) - 1."""
    size = delta.size
    kernel = np.arange(1, size, dtype=float) ** e
    return np.convolve(delta[:-1], kernel)[: size - 1]


def saturating_sequence(
    xi: float,
    sigma: float,
    gamma: float,
    beta: float,
    delta0: float,
    n: int,
) -> list[float]:
    """delta_0..delta_n meeting the hypothesis with equality at every n >= 1."""
    a, e = _exponents(beta, gamma)
    delta = np.zeros(n + 1)
    delta[0] = delta0
    for step in range(1, n + 1):
        lags = np.arange(step, 0, -1, dtype=float) ** e
        delta[step] = xi * step**a + sigma * float(np.dot(delta[:step], lags))
    return delta.tolist()


def verify_sequence_lemma(sb: SequenceBound, horizon: int | None = None) -> SequenceReport:
    horizon = horizon or build_rate_policy().sequence_horizon
    delta = np.asarray(sb.delta, dtype=float)
    a, e = _exponents(sb.beta, sb.gamma)

    if sb.C_beta_gamma is not None:
        C, maximizing_n = sb.C_beta_gamma, 0
    else:
        C, maximizing_n = convolution_constant(sb.beta, sb.gamma, max(horizon, delta.size))
    sigma_c = sb.sigma * C

    n = np.arange(1, delta.size, dtype=float)
    if n.size:
        allowed = sb.xi * n**a + sb.sigma * _memory_term(delta, e)
        hypothesis = bool(np.all(delta[1:] <= allowed * (1.0 + RELATIVE_SLACK)))
    else:
        hypothesis = True

    if sigma_c < 1:
        K = max(float(delta[0]) if delta.size else 0.0, sb.xi / (1.0 - sigma_c))
        conclusion = hypothesis and bool(np.all(delta[1:] <= K * n**a * (1.0 + RELATIVE_SLACK)))
    else:
        K = float("inf")
        conclusion = False
    logger.debug("sequence lemma: C=%.6g sigma*C=%.4g K=%.6g hyp=%s concl=%s", C, sigma_c, K, hypothesis, conclusion)
    return SequenceReport(
        hypothesis_holds=hypothesis,
        conclusion_holds=conclusion,
        K=K,
        C_beta_gamma=C,
        maximizing_n=maximizing_n,
        sigma_c=sigma_c,
    )
