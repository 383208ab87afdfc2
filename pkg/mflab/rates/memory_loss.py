from __future__ import annotations

import logging
from typing import Callable, Sequence

from ..core.models import ConvergenceReport, MapFamily
from ..core.policies import RatePolicy, build_cone_params, build_rate_policy
from ..density.cone import require_in_cone
from ..density.density import Density, l1_distance
from ..transfer.operator import apply_transfer, coupled_spec, transfer_context
from .decay import build_convergence_report, split_windows

logger = logging.getLogger(__name__)


def memory_loss_experiment(
    f: Density,
    g: Density,
    h_sequence: Sequence[Density],
    n: int,
    family: MapFamily | str,
    gamma_star: float,
    epsilon: float,
    *,
    fit_window: tuple[int, int] | None = None,
    policy: RatePolicy | None = None,
    on_progress: Callable[[str], None] | None = None,
) -> ConvergenceReport:
    """d_k = ||L_k ... L_1 f - L_k ... L_1 g|| for L_k = L_{eps h_k}, h_k cycling through h_sequence.

    The bound exponent is 1 - 1/gamma with gamma the largest map exponent met
    along the sequence; f and g must lie in D^1_1 for that gamma. The bound
    constant covers the whole run and the back two thirds must level off.
    """
    if not h_sequence:
        raise ValueError("h_sequence must hold at least one density")
    policy = policy or build_rate_policy()
    specs = [coupled_spec(h, family, gamma_star, epsilon) for h in h_sequence]
    contexts = [transfer_context(spec, f.grid) for spec in specs]
    gamma = max(spec.exponent for spec in specs)
    params = build_cone_params(gamma)
    require_in_cone(f, params, 1, "f")
    require_in_cone(g, params, 1, "g")

    distances: list[tuple[int, float]] = []
    for step in range(1, n + 1):
        ctx = contexts[(step - 1) % len(contexts)]
        f = apply_transfer(ctx, f)
        g = apply_transfer(ctx, g)
        distances.append((step, l1_distance(f, g)))
        if on_progress is not None and step % 100 == 0:
            on_progress(f"memory loss step {step}/{n}: distance {distances[-1][1]:.3e}")

    logger.debug("memory loss over %d steps: d_1=%.3e d_n=%.3e", n, distances[0][1], distances[-1][1])
    front, back = split_windows(n, policy.fit_window_lo)
    window = fit_window or (policy.fit_window_lo, n)
    return build_convergence_report(distances, 1.0 - 1.0 / gamma, window, front, back, policy)
