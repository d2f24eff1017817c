"""Closed-form rate and fidelity for Bell-type sources with ideal detectors.

For n users at link transmittance eta with source a|00> + b|11>, every one of
the 6^(n/2 - 1) success patterns occurs with probability

    P = (1/2)^(3n/2 - 5) eta^(n/2) b^n [a^2 + b^2 (1 - eta)]^(n/2)

so the distribution rate is R = 6^(n/2 - 1) P and the square-root fidelity of
the conditional state is F = sqrt(a^n / [a^2 + b^2 (1 - eta)]^(n/2)). The
forms are evaluated in log space so that sweeps deep into the loss-dominated
regime do not underflow.
"""

import math
from dataclasses import dataclass

from .channels import eta_from_distance


def _validate(n_users: int, eta: float, vacuum_amplitude: float) -> None:
    if n_users < 4 or n_users % 2:
        raise ValueError("closed forms hold for even n_users >= 4")
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    if not 0.0 <= vacuum_amplitude <= 1.0:
        raise ValueError("vacuum amplitude must lie in [0, 1]")


def pattern_probability(n_users: int, eta: float,
                        vacuum_amplitude: float) -> float:
    """Success probability of one fixed detector pattern."""
    _validate(n_users, eta, vacuum_amplitude)
    a = vacuum_amplitude
    b_sq = 1.0 - a * a
    bracket = a * a + b_sq * (1.0 - eta)
    if eta == 0.0 or b_sq == 0.0 or bracket == 0.0:
        return 0.0
    half = n_users // 2
    log_p = ((3 * half - 5) * math.log(0.5)
             + half * math.log(eta)
             + half * math.log(b_sq)
             + half * math.log(bracket))
    return math.exp(log_p)


def analytic_rate(n_users: int, eta: float, vacuum_amplitude: float) -> float:
    """Distribution rate per attempt, summed over all success patterns."""
    _validate(n_users, eta, vacuum_amplitude)
    a = vacuum_amplitude
    b_sq = 1.0 - a * a
    bracket = a * a + b_sq * (1.0 - eta)
    if eta == 0.0 or b_sq == 0.0 or bracket == 0.0:
        return 0.0
    half = n_users // 2
    log_r = ((half - 1) * math.log(3.0)
             + (n_users - 4) * math.log(0.5)
             + half * math.log(eta)
             + half * math.log(b_sq)
             + half * math.log(bracket))
    return math.exp(log_r)


def analytic_fidelity(n_users: int, eta: float,
                      vacuum_amplitude: float) -> float:
    """Square-root fidelity of the post-selected state."""
    _validate(n_users, eta, vacuum_amplitude)
    a = vacuum_amplitude
    b_sq = 1.0 - a * a
    bracket = a * a + b_sq * (1.0 - eta)
    if bracket == 0.0:
        raise ValueError("fidelity undefined: post-selection never succeeds")
    if a == 0.0:
        return 0.0
    half = n_users // 2
    log_f = 0.5 * (n_users * math.log(a) - half * math.log(bracket))
    return math.exp(log_f)


def vacuum_weight_for_fidelity(n_users: int, eta: float,
                               fidelity: float) -> float:
    """Vacuum weight a^2 that yields the requested fidelity at this eta.

    Inverse of analytic_fidelity: a^2 = (1 - eta) F^(4/n) / (1 - eta F^(4/n)).
    """
    if n_users < 4 or n_users % 2:
        raise ValueError("closed forms hold for even n_users >= 4")
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    if not 0.0 < fidelity <= 1.0:
        raise ValueError("fidelity must lie in (0, 1]")
    f_pow = fidelity ** (4.0 / n_users)
    denom = 1.0 - eta * f_pow
    if denom <= 0.0:
        raise ValueError("no vacuum weight achieves this fidelity at eta = 1")
    return (1.0 - eta) * f_pow / denom


def direct_transmission_rate(n_users: int, eta: float) -> float:
    """Rate of the naive scheme that needs all n photons to survive."""
    if n_users < 2:
        raise ValueError("need at least 2 users")
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    if eta == 0.0:
        return 0.0
    return math.exp(n_users * math.log(eta))


@dataclass(frozen=True)
class BreakdownTerm:
    """One loss sector: m extra senders whose photons were all lost."""

    m: int
    amplitude: float
    projection_probability: float
    weighted: float


@dataclass(frozen=True)
class RateBreakdown:
    """Loss-sector decomposition of the per-pattern success probability."""

    n_users: int
    eta: float
    vacuum_amplitude: float
    terms: tuple
    pattern_prob: float
    total_rate: float
    fidelity: float


def rate_breakdown(n_users: int, eta: float,
                   vacuum_amplitude: float) -> RateBreakdown:
    """Per-sector amplitudes Y_m, projection probabilities p_m and the sums.

    Y_m = a^(n/2 - m) b^(n/2 + m) (1/sqrt 2)^(n/2 - 2),
    p_m = eta^(n/2) (1 - eta)^m (1/4)^(n/2 - 1), and the pattern probability
    is 2 sum_m C(n/2, m) p_m Y_m^2. The m = 0 sector carries the GHZ part:
    F^2 = 4 Y_0^2 p_0 / (2 P).
    """
    _validate(n_users, eta, vacuum_amplitude)
    a = vacuum_amplitude
    b = math.sqrt(1.0 - a * a)
    half = n_users // 2
    terms = []
    for m in range(half + 1):
        amplitude = (a ** (half - m) * b ** (half + m)
                     * (1.0 / math.sqrt(2.0)) ** (half - 2))
        projection = eta ** half * (1.0 - eta) ** m * 0.25 ** (half - 1)
        weighted = math.comb(half, m) * projection * amplitude ** 2
        terms.append(BreakdownTerm(m, amplitude, projection, weighted))
    pattern_prob = 2.0 * sum(t.weighted for t in terms)
    total = 6 ** (half - 1) * pattern_prob
    fidelity = (math.sqrt(4.0 * terms[0].amplitude ** 2
                          * terms[0].projection_probability
                          / (2.0 * pattern_prob))
                if pattern_prob > 0.0 else float("nan"))
    return RateBreakdown(n_users, eta, a, tuple(terms), pattern_prob, total,
                         fidelity)


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    if len(xs) != len(ys) or len(xs) < 2:
        raise ValueError("need two same-length sequences")
    lx = [math.log(x) for x in xs]
    ly = [math.log(y) for y in ys]
    mx = sum(lx) / len(lx)
    my = sum(ly) / len(ly)
    num = sum((x - mx) * (y - my) for x, y in zip(lx, ly))
    den = sum((x - mx) ** 2 for x in lx)
    return num / den


def crossover_distance(n_users: int, fidelity: float,
                       attenuation_db_per_km: float = 0.2,
                       max_km: float = 1000.0) -> float:
    """Shortest distance where the protocol rate beats direct transmission.

    At each distance the vacuum weight is re-tuned to hold the requested
    fidelity. Located by scan plus bisection; raises if there is no crossing
    below max_km.
    """

    def advantage(km: float) -> float:
        eta = eta_from_distance(km, attenuation_db_per_km)
        a_sq = vacuum_weight_for_fidelity(n_users, eta, fidelity)
        return (analytic_rate(n_users, eta, math.sqrt(a_sq))
                - direct_transmission_rate(n_users, eta))

    step = 1.0
    lo = 0.0
    hi = None
    km = step
    while km <= max_km:
        if advantage(km) > 0.0:
            hi = km
            break
        lo = km
        km += step
    if hi is None:
        raise ValueError(f"no crossover below {max_km} km")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if advantage(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return hi
