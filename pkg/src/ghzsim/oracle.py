"""Independent brute-force verifiers for the protocol pipeline.

These paths deliberately avoid the production machinery. Loss is modelled by
explicit environment modes coupled through a beamsplitter, every circuit
element is applied as a dense two-mode Fock matrix obtained by numerically
exponentiating the beamsplitter generator, and detection is an exhaustive
enumeration of photon-number outcomes on all environment and detector modes.
Only the sparse state container is shared with the main pipeline, so
agreement between the two routes is a meaningful cross-check rather than a
tautology.
"""

import math
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from . import fock, protocol
from .fock import PureState
from .protocol import ProtocolConfig
from .sources import BellSource

MAX_ORACLE_USERS = 8


@lru_cache(maxsize=64)
def _rotation_fock_matrix(theta: float, cutoff: int) -> np.ndarray:
    """exp(theta (a2^dag a1 - a1^dag a2)) on a two-mode Fock space.

    Sends |10> to cos(theta)|10> + sin(theta)|01>, the environment-mode form
    of a transmittance cos^2(theta) coupling.
    """
    dim = cutoff + 1
    a = np.diag(np.sqrt(np.arange(1, dim)), k=1)
    eye = np.eye(dim)
    a1 = np.kron(a, eye)
    a2 = np.kron(eye, a)
    gen = a2.T @ a1 - a1.T @ a2
    return expm(theta * gen)


@lru_cache(maxsize=16)
def _hbs_fock_matrix(cutoff: int) -> np.ndarray:
    """Half beamsplitter as a dense Fock-space matrix (rotation plus parity)."""
    dim = cutoff + 1
    parity = np.kron(np.eye(dim), np.diag((-1.0) ** np.arange(dim)))
    return _rotation_fock_matrix(math.pi / 4.0, cutoff) @ parity


def _apply_two_mode(state: PureState, pair, matrix: np.ndarray) -> PureState:
    """Apply a dense two-mode Fock matrix to modes pair = (p, q)."""
    p, q = pair
    dim = state.cutoff + 1
    out: dict = {}
    for occ, amp in state.terms.items():
        column = matrix[:, occ[p] * dim + occ[q]]
        for j in np.flatnonzero(np.abs(column) > 1e-15):
            n1, n2 = divmod(int(j), dim)
            new = list(occ)
            new[p] = n1
            new[q] = n2
            key = tuple(new)
            out[key] = out.get(key, 0j) + amp * column[j]
    return PureState(state.mode_count, out, state.cutoff)


def _layout(even_users: int):
    """Re-derived wiring of the central node (kept separate on purpose)."""
    blocks = even_users // 2 - 1
    users = []
    for k in range(blocks):
        base = list(range(4 * k, 4 * k + 4))
        if blocks == 1:
            users.extend(base)
        elif k == 0:
            users.extend(base[:3])
        elif k == blocks - 1:
            users.extend(base[1:])
        else:
            users.extend(base[1:3])
    connectors = [(4 * c + 3, 4 * c + 4) for c in range(blocks - 1)]
    elements = list(connectors)
    for k in range(blocks):
        m = 4 * k
        elements += [(m, m + 1), (m + 2, m + 3), (m, m + 2), (m + 1, m + 3)]
    return users, connectors, elements, 4 * blocks


def _response(model, observed: int, photons: int) -> float:
    """Detector response, re-derived from the model definitions."""
    eff, dark = model.efficiency, model.dark_prob
    if model.kind == "pnrd":
        total = 0.0
        for d in (0, 1):
            kept = observed - d
            if not 0 <= kept <= photons:
                continue
            p_dark = dark if d else 1.0 - dark
            total += (p_dark * math.comb(photons, kept)
                      * eff ** kept * (1.0 - eff) ** (photons - kept))
        return total
    if model.kind == "threshold":
        p_click = 1.0 - (1.0 - dark) * (1.0 - eff) ** photons
        return p_click if observed == 1 else (1.0 - p_click if observed == 0
                                              else 0.0)
    # quasi: uniform routing onto `multiplex` threshold detectors
    bins = model.multiplex
    total = 0.0
    for counts in _all_routings(photons, bins):
        weight = math.factorial(photons)
        for c in counts:
            weight //= math.factorial(c)
        p_route = weight * (1.0 / bins) ** photons
        total += p_route * _clicks_exactly(counts, observed, eff, dark)
    return total


def _all_routings(total: int, bins: int):
    if bins == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _all_routings(total - first, bins - 1):
            yield (first,) + rest


def _clicks_exactly(counts, wanted: int, eff: float, dark: float) -> float:
    dist = {0: 1.0}
    for c in counts:
        p = 1.0 - (1.0 - dark) * (1.0 - eff) ** c
        new: dict = {}
        for k, w in dist.items():
            new[k] = new.get(k, 0.0) + w * (1.0 - p)
            new[k + 1] = new.get(k + 1, 0.0) + w * p
        dist = new
    return dist.get(wanted, 0.0)


def _bell_pair_state(vacuum_amplitude: float, cutoff: int) -> PureState:
    a = vacuum_amplitude
    return PureState(2, {(0, 0): a, (1, 1): math.sqrt(1.0 - a * a)}, cutoff)


def _coherent_state(amplitude: complex, cutoff: int) -> PureState:
    scale = 1.0 / math.sqrt(1.0 + abs(amplitude) ** 2)
    return PureState(1, {(0,): scale, (1,): amplitude * scale}, cutoff)


def _evolved_state(config: ProtocolConfig, lost_users=()):
    """Pure state over [retained..., central..., environment...] modes.

    lost_users collapses those users' sources onto the photon-sent branch
    with the flying photon already removed (used by the Monte Carlo sampler,
    which samples the loss unravelling instead of keeping environment modes).
    """
    if not isinstance(config.source, BellSource):
        raise NotImplementedError(
            "the brute-force oracle only supports Bell-type sources")
    n_real = config.n_users
    even = n_real + (n_real % 2)
    if even > MAX_ORACLE_USERS:
        raise ValueError("instance too large for the brute-force oracle")
    users, connectors, elements, m_central = _layout(even)
    eta = config.eta
    track_env = not lost_users
    n_env = n_real if track_env else 0
    cutoff = n_real + len(connectors) + (even - n_real)

    a = config.source.vacuum_amplitude
    b = math.sqrt(1.0 - a * a)
    kept_norm = math.sqrt(a * a + b * b * eta)
    pieces = []
    for u in range(n_real):
        if u in lost_users:
            pieces.append(PureState(2, {(1, 0): 1.0}, cutoff))
        elif track_env:
            pieces.append(_bell_pair_state(a, cutoff))
        else:
            pieces.append(PureState(
                2, {(0, 0): a / kept_norm,
                    (1, 1): b * math.sqrt(eta) / kept_norm}, cutoff))
    state = pieces[0]
    for piece in pieces[1:]:
        state = fock.tensor(state, piece)
    if even != n_real:
        alpha = protocol._spare_amplitude(config)
        state = fock.tensor(state, _coherent_state(alpha, cutoff))
    for _ in connectors:
        state = fock.tensor(state, fock.basis_state((1, 0), cutoff))
    if track_env:
        state = fock.tensor(state, fock.vacuum(n_env, cutoff))

    total_modes = n_real + m_central + n_env
    perm = [0] * total_modes
    for u in range(n_real):
        perm[2 * u] = u
        perm[2 * u + 1] = n_real + users[u]
    offset = 2 * n_real
    if even != n_real:
        perm[offset] = n_real + users[even - 1]
        offset += 1
    for c, (p, q) in enumerate(connectors):
        perm[offset + 2 * c] = n_real + p
        perm[offset + 2 * c + 1] = n_real + q
    offset += 2 * len(connectors)
    for e in range(n_env):
        perm[offset + e] = n_real + m_central + e
    state = fock.permute_modes(state, perm)

    if track_env and eta < 1.0:
        theta = math.atan2(math.sqrt(1.0 - eta), math.sqrt(eta))
        coupling = _rotation_fock_matrix(theta, cutoff)
        for u in range(n_real):
            state = _apply_two_mode(
                state, (n_real + users[u], n_real + m_central + u), coupling)

    hbs_matrix = _hbs_fock_matrix(cutoff)
    for p, q in elements:
        state = _apply_two_mode(state, (n_real + p, n_real + q), hbs_matrix)
    return state, n_real, m_central, n_env


def brute_force_conditional(config: ProtocolConfig, pattern):
    """(pattern probability, conditional fidelity) by exhaustive enumeration."""
    pattern = tuple(int(x) for x in pattern)
    state, n_x, m_central, n_env = _evolved_state(config)
    if len(pattern) != m_central:
        raise ValueError("pattern length does not match the detector count")
    try:
        target = protocol.ghz_target_for_pattern(pattern, config.n_users)
        phi = target.state(cutoff=state.cutoff)
    except ValueError:
        phi = None  # not a heralding pattern; probability only
    measured = list(range(n_x, n_x + m_central + n_env))
    probability = 0.0
    aligned = 0.0
    for outcome, p, residual in fock.measure_modes(state, measured):
        resp = 1.0
        for obs, n in zip(pattern, outcome[:m_central]):
            resp *= _response(config.detector, obs, n)
            if resp == 0.0:
                break
        if resp == 0.0:
            continue
        probability += p * resp
        if phi is not None:
            aligned += p * resp * abs(fock.overlap(phi, residual)) ** 2
    if probability <= 0.0 or phi is None:
        return probability, None
    return probability, math.sqrt(min(aligned / probability, 1.0))


def brute_force_pattern_prob(config: ProtocolConfig, pattern) -> float:
    """Probability of one detector pattern by exhaustive enumeration."""
    return brute_force_conditional(config, pattern)[0]


def _sample_observed(model, true_counts: np.ndarray,
                     rng: np.random.Generator) -> np.ndarray:
    if model.kind == "pnrd":
        kept = rng.binomial(true_counts, model.efficiency)
        dark = rng.random(true_counts.shape) < model.dark_prob
        return kept + dark
    if model.kind == "threshold":
        p_click = 1.0 - (1.0 - model.dark_prob) * (
            1.0 - model.efficiency) ** true_counts
        return (rng.random(true_counts.shape) < p_click).astype(np.int64)
    bins = model.multiplex
    out = np.zeros(true_counts.shape, dtype=np.int64)
    flat = out.reshape(-1)
    for i, n in enumerate(true_counts.reshape(-1)):
        counts = rng.multinomial(int(n), [1.0 / bins] * bins)
        p = 1.0 - (1.0 - model.dark_prob) * (1.0 - model.efficiency) ** counts
        flat[i] = int(np.sum(rng.random(bins) < p))
    return out


def monte_carlo_rate(config: ProtocolConfig, samples: int, seed: int):
    """(rate estimate, standard error) by sampling the loss unravelling.

    Per attempt the sampler draws which flying photons were lost, pushes the
    corresponding pure branch through the oracle circuit, samples a
    photon-count outcome and then the detector responses. Bit-reproducible
    for a fixed seed.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    if not isinstance(config.source, BellSource):
        raise NotImplementedError(
            "the Monte Carlo sampler only supports Bell-type sources")
    rng = np.random.default_rng(seed)
    n = config.n_users
    even = n + (n % 2)
    eta = config.eta
    a = config.source.vacuum_amplitude
    b_sq = 1.0 - a * a
    p_lost = b_sq * (1.0 - eta)

    success_codes = set()
    for pat in protocol.enumerate_success_patterns(even):
        success_codes.add(int(sum(v * 3 ** d for d, v in enumerate(pat))))
    success_codes = np.array(sorted(success_codes), dtype=np.int64)

    lost = rng.random((samples, n)) < p_lost
    codes = lost @ (1 << np.arange(n, dtype=np.int64))

    @lru_cache(maxsize=None)
    def branch_distribution(code: int):
        lost_users = tuple(u for u in range(n) if code >> u & 1)
        state, n_x, m_central, _ = _evolved_state(config,
                                                  lost_users=lost_users or (-1,))
        groups = fock.measure_modes(state,
                                    list(range(n_x, n_x + m_central)))
        outcomes = np.array([o for o, _, _ in groups], dtype=np.int64)
        probs = np.array([p for _, p, _ in groups])
        cumulative = np.cumsum(probs / probs.sum())
        cumulative[-1] = 1.0
        return outcomes, cumulative

    hits = 0
    for code in np.unique(codes):
        idx = np.flatnonzero(codes == code)
        outcomes, cumulative = branch_distribution(int(code))
        pick = np.searchsorted(cumulative, rng.random(idx.size))
        true_counts = outcomes[pick]
        observed = _sample_observed(config.detector, true_counts, rng)
        obs_codes = np.minimum(observed, 2) @ (
            3 ** np.arange(observed.shape[1], dtype=np.int64))
        hits += int(np.isin(obs_codes, success_codes).sum())

    estimate = hits / samples
    stderr = math.sqrt(max(estimate * (1.0 - estimate), 0.0) / samples)
    return estimate, stderr
