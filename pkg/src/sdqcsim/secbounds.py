"""Closed-form correctness/security bounds and their composition.

The gadget aborts when fewer than t of the n pulses produced a photon, and
the simulator fails when more than t pulses were multi-photon; Hoeffding's
inequality bounds both tails, and balancing them fixes the threshold at
t/n = (eta1 + p2)/2, giving eps = exp(-nu * n) with nu = (eta1 - p2)^2 / 2.

Exponents are kept in log domain alongside the (possibly underflowed)
linear values so parameter sweeps stay meaningful past exp(-745).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .pulses import multiphoton_prob


def hoeffding_tail(n: int, p: float, k: float, side: str) -> float:
    """Hoeffding bound on a Binomial(n, p) tail: exp(-2 (p - k/n)^2 n).

    ``side="lower"`` bounds Pr[X <= k] (requires k <= np); ``side="upper"``
    bounds Pr[X >= k] (requires k >= np).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if side == "lower":
        if k > n * p:
            raise ValueError(f"lower tail needs k <= np, got k={k}, np={n * p}")
    elif side == "upper":
        if k < n * p:
            raise ValueError(f"upper tail needs k >= np, got k={k}, np={n * p}")
    else:
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")
    return math.exp(-2.0 * (p - k / n) ** 2 * n)


def binomial_cdf(n: int, p: float, k: int) -> float:
    """Exact Pr[Binomial(n, p) <= k] by direct pmf summation (oracle)."""
    if k < 0:
        return 0.0
    k = min(k, n)
    total = 0.0
    log_p = math.log(p) if p > 0 else -math.inf
    log_q = math.log1p(-p) if p < 1 else -math.inf
    for j in range(k + 1):
        if p == 0.0:
            total += 1.0 if j == 0 else 0.0
            continue
        if p == 1.0:
            total += 1.0 if j == n else 0.0
            continue
        log_c = math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1)
        total += math.exp(log_c + j * log_p + (n - j) * log_q)
    return min(1.0, total)


@dataclass(frozen=True)
class BoundReport:
    """All gadget bounds at one parameter point, linear and log domain."""

    eta1: float
    alpha_sq: float
    p2: float
    n: int
    t: float
    nu: float
    eps_cor: float
    eps_sec: float
    eps: float
    log_eps_cor: float
    log_eps_sec: float
    log_eps: float
    t_is_default: bool
    composed_bdqc: float | None = None
    composed_sdqc: float | None = None


def _exp(log_value: float) -> float:
    return math.exp(log_value) if log_value > -745.0 else 0.0


def gadget_bounds(eta1: float, alpha_sq: float, n: int, t: float | None = None) -> BoundReport:
    """Correctness/security bounds for the threshold gadget.

    With ``t`` omitted the equilibrium threshold t/n = (eta1 + p2)/2 is used
    and eps = exp(-nu n); that requires p2 <= eta1. With an explicit ``t``,
    each Hoeffding bound is reported where its side condition holds and is 1
    (vacuous) otherwise.
    """
    if not 0.0 <= eta1 <= 1.0:
        raise ValueError(f"eta1 must be in [0, 1], got {eta1}")
    if n < 1:
        raise ValueError("n must be >= 1")
    p2 = multiphoton_prob(alpha_sq)
    nu = (eta1 - p2) ** 2 / 2.0
    default = t is None
    if default:
        if p2 > eta1:
            raise ValueError(
                f"no positive gap: eta1={eta1} < p2={p2}; supply t explicitly"
            )
        t = (eta1 + p2) / 2.0 * n
    if not 0.0 <= t <= n:
        raise ValueError(f"threshold must satisfy 0 <= t <= n, got {t}")
    ratio = t / n
    log_cor = -2.0 * (eta1 - ratio) ** 2 * n if ratio <= eta1 else 0.0
    log_sec = -2.0 * (ratio - p2) ** 2 * n if ratio >= p2 else 0.0
    log_eps = max(log_cor, log_sec)
    return BoundReport(
        eta1=eta1,
        alpha_sq=alpha_sq,
        p2=p2,
        n=n,
        t=t,
        nu=nu,
        eps_cor=_exp(log_cor),
        eps_sec=_exp(log_sec),
        eps=_exp(log_eps),
        log_eps_cor=log_cor,
        log_eps_sec=log_sec,
        log_eps=log_eps,
        t_is_default=default,
    )


def composed_bounds(
    report: BoundReport,
    n_vertices: int,
    n_rounds: int | None = None,
    eps_s: float | None = None,
) -> BoundReport:
    """Compose per-extension errors: BDQC = |V| eps; SDQC = N |V| eps + eps_S.

    eps_S is the repetition protocol's own security bound and is supplied by
    the caller (its constants are external configuration).
    """
    if n_vertices < 1:
        raise ValueError("graph must have at least one vertex")
    bdqc = min(1.0, _exp(report.log_eps + math.log(n_vertices)))
    sdqc = None
    if n_rounds is not None:
        if eps_s is None:
            raise ValueError("sdqc composition needs eps_s")
        sdqc = min(1.0, _exp(report.log_eps + math.log(n_rounds * n_vertices)) + eps_s)
    return replace(report, composed_bdqc=bdqc, composed_sdqc=sdqc)


def postselect_bounds(eta1: float, alpha_sq: float, n: int) -> float:
    """Post-selected gadget bound: eps' = max(1 - eta1^n, p2^n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= eta1 <= 1.0:
        raise ValueError(f"eta1 must be in [0, 1], got {eta1}")
    p2 = multiphoton_prob(alpha_sq)
    return max(1.0 - eta1**n, p2**n)


def required_pulses(target_eps: float, eta1: float, alpha_sq: float) -> int:
    """Smallest n with exp(-nu n) <= target_eps."""
    if not 0.0 < target_eps < 1.0:
        raise ValueError(f"target epsilon must be in (0, 1), got {target_eps}")
    p2 = multiphoton_prob(alpha_sq)
    if eta1 <= p2:
        raise ValueError(f"no positive gap: eta1={eta1} <= p2={p2}")
    nu = (eta1 - p2) ** 2 / 2.0
    return max(1, math.ceil(math.log(1.0 / target_eps) / nu))
