"""End-to-end single-attempt simulation of the star-network protocol.

Each user keeps one mode of a two-mode source and launches the other through
a lossy fiber into the central node, where a fixed beamsplitter circuit mixes
all flying modes and every output is monitored by a detector. Conditioning on
a success pattern (exactly one pair of detectors firing per four-mode block)
leaves the retained modes in a GHZ state plus loss-induced junk.

Odd user counts embed into the next even circuit by feeding the spare input
port with a weak coherent qubit instead of a user's flying mode.
"""

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

from . import channels, fock, optics, sources
from .channels import DetectorModel, IDEAL_PNRD
from .fock import MixedState, PureState
from .sources import BellSource, SourceSpec

# detector index pairs within one four-mode block that herald a success
_BLOCK_PAIRS = tuple(itertools.combinations(range(4), 2))


def enumerate_success_patterns(n_users: int) -> list:
    """All success detector patterns of the even-user circuit.

    One pair of detectors fires in each block, so there are 6^(n/2 - 1)
    patterns. Odd user counts are handled by the embedding in run_attempt;
    pass the even count.
    """
    if n_users < 4 or n_users % 2:
        raise ValueError("success patterns are enumerated for even n_users >= 4")
    blocks = n_users // 2 - 1
    patterns = []
    for choice in itertools.product(_BLOCK_PAIRS, repeat=blocks):
        pattern = [0] * (4 * blocks)
        for k, (i, j) in enumerate(choice):
            pattern[4 * k + i] = 1
            pattern[4 * k + j] = 1
        patterns.append(tuple(pattern))
    return patterns


@lru_cache(maxsize=None)
def _success_set(even_users: int) -> frozenset:
    return frozenset(enumerate_success_patterns(even_users))


@dataclass(frozen=True)
class GhzTarget:
    """GHZ class on the retained modes selected by a detection pattern.

    The state is (|s1> + relative_sign |s2>)/sqrt(2) where the two bitstrings
    are complementary and s1 starts with an occupied first mode.
    """

    bitstrings: tuple
    relative_sign: int

    def n_parties(self) -> int:
        return len(self.bitstrings[0])

    def state(self, cutoff: int = 1) -> PureState:
        s1, s2 = self.bitstrings
        amp = 1.0 / math.sqrt(2.0)
        return PureState(len(s1), {s1: amp, s2: self.relative_sign * amp},
                         cutoff)


@dataclass(frozen=True)
class ProtocolConfig:
    """Full parameter set for one protocol instance.

    `cutoff` only controls the photon-number truncation of squeezed-light
    sources; the working per-mode cutoff of the simulation is derived from
    the maximum total photon number, which is exact. The spare-port fields
    apply to odd user counts: by default the coherent amplitude matches the
    users' flying single-photon amplitude after loss ("amplitude" rule), the
    "probability" rule matches the arrival probability instead, and an
    explicit amplitude overrides both.
    """

    n_users: int
    source: SourceSpec
    distance_km: float = 0.0
    attenuation_db_per_km: float = 0.2
    detector: DetectorModel = IDEAL_PNRD
    cutoff: int = 3
    spare_port_amplitude: complex | None = None
    spare_port_rule: str = "amplitude"

    def __post_init__(self):
        if self.n_users < 3:
            raise ValueError("need at least 3 users")
        if self.distance_km < 0:
            raise ValueError("distance must be non-negative")
        if self.cutoff < 1:
            raise ValueError("cutoff must be at least 1")
        if self.spare_port_rule not in ("amplitude", "probability"):
            raise ValueError("spare_port_rule must be 'amplitude' or 'probability'")

    @property
    def eta(self) -> float:
        return channels.eta_from_distance(self.distance_km,
                                          self.attenuation_db_per_km)


@dataclass
class ConditionalResult:
    """State of the retained modes after post-selecting one pattern."""

    pattern: tuple
    probability: float
    state: MixedState
    target: GhzTarget
    ghz_weight: float
    junk_branches: tuple
    fidelity: float

    @property
    def junk_weights(self) -> tuple:
        return tuple(w for w, _ in self.junk_branches)


def _spare_amplitude(config: ProtocolConfig) -> complex:
    if config.spare_port_amplitude is not None:
        return complex(config.spare_port_amplitude)
    flying = sources.flying_photon_amplitude(config.source)
    if config.spare_port_rule == "amplitude":
        return flying * math.sqrt(config.eta)
    return flying * flying * config.eta


def _central_ensemble(config: ProtocolConfig):
    """Ensemble on [retained..., central...] just before detection."""
    n_real = config.n_users
    even = n_real + (n_real % 2)
    unitary, layout = optics.central_circuit(even)

    user_state = sources.build_source_state(config.source)
    per_user = max(st.max_total_photons() for _, st in user_state.branches)
    total = n_real * per_user + len(layout.connector_pairs) + (even - n_real)
    working_cutoff = max(total, 1)

    user_state = MixedState([(w, st.with_cutoff(working_cutoff))
                             for w, st in user_state.branches])
    state = user_state
    for _ in range(n_real - 1):
        state = fock.mixed_product(state, user_state)
    if even != n_real:
        spare = sources.coherent_qubit(_spare_amplitude(config),
                                       cutoff=working_cutoff)
        state = fock.mixed_product(state, MixedState.from_pure(spare))
    for _ in layout.connector_pairs:
        ancilla = fock.basis_state((1, 0), working_cutoff)
        state = fock.mixed_product(state, MixedState.from_pure(ancilla))

    # assembly order -> [X_0..X_{n-1}, central modes by layout position]
    perm = [0] * (n_real + layout.mode_count)
    for u in range(n_real):
        perm[2 * u] = u
        perm[2 * u + 1] = n_real + layout.user_input_modes[u]
    offset = 2 * n_real
    if even != n_real:
        perm[offset] = n_real + layout.user_input_modes[even - 1]
        offset += 1
    for c, (p, q) in enumerate(layout.connector_pairs):
        perm[offset + 2 * c] = n_real + p
        perm[offset + 2 * c + 1] = n_real + q
    state = state.map_states(lambda st: fock.permute_modes(st, perm))

    flying = [n_real + layout.user_input_modes[u] for u in range(n_real)]
    state = channels.apply_loss(state, flying, config.eta)

    central = list(range(n_real, n_real + layout.mode_count))
    state = state.map_states(lambda st: optics.apply(unitary, st, central))
    return state, n_real, layout


@lru_cache(maxsize=8)
def _detection_groups(config: ProtocolConfig):
    state, n_x, layout = _central_ensemble(config)
    central = tuple(range(n_x, n_x + layout.mode_count))
    return channels.detection_groups(state, central), n_x, layout


def _validated_pattern(pattern, n_users: int) -> tuple:
    pattern = tuple(int(x) for x in pattern)
    even = n_users + (n_users % 2)
    if pattern not in _success_set(even):
        raise ValueError(f"{pattern} is not a success pattern for "
                         f"{n_users} users")
    return pattern


@lru_cache(maxsize=None)
def ghz_target_for_pattern(pattern: tuple, n_users: int) -> GhzTarget:
    """GHZ class heralded by a pattern, derived from an ideal-link run.

    The two bitstrings and their relative sign are read off a lossless Bell
    simulation with ideal detectors; for even user counts the two amplitudes
    are exactly balanced, for odd counts only the class is balanced and the
    sign follows the dominant pair.
    """
    pattern = _validated_pattern(pattern, n_users)
    ideal = ProtocolConfig(n_users=n_users,
                           source=BellSource(math.sqrt(0.5)),
                           distance_km=0.0, detector=IDEAL_PNRD)
    groups, _, _ = _detection_groups(ideal)
    parts = [(weight, residual) for counts, weight, residual in groups
             if counts == pattern]
    if not parts:
        raise ValueError(f"pattern {pattern} unreachable on ideal links")
    total = sum(w for w, _ in parts)
    merged = MixedState([(w / total, st) for w, st in parts]).merged()
    if len(merged.branches) != 1:
        raise ValueError("ideal-link conditional state is not pure")
    state = merged.branches[0][1]
    terms = sorted(state.terms.items(),
                   key=lambda kv: abs(kv[1]), reverse=True)[:2]
    if len(terms) != 2:
        raise ValueError("ideal-link conditional state is not a GHZ pair")
    (occ_a, amp_a), (occ_b, amp_b) = terms
    if occ_a[0] != 1:
        (occ_a, amp_a), (occ_b, amp_b) = (occ_b, amp_b), (occ_a, amp_a)
    if any(x + y != 1 for x, y in zip(occ_a, occ_b)):
        raise ValueError("GHZ bitstrings are not complementary")
    ratio = amp_b / amp_a
    if abs(ratio.imag) > 1e-9:
        raise ValueError("unexpected complex relative phase")
    sign = 1 if ratio.real > 0 else -1
    return GhzTarget(bitstrings=(occ_a, occ_b), relative_sign=sign)


def _decompose(conditional: MixedState, target: GhzTarget):
    """Split a unit-weight ensemble into GHZ weight and junk branches."""
    phi = target.state(cutoff=conditional.branches[0][1].cutoff)
    ghz_weight = 0.0
    junk = []
    for w, st in conditional.branches:
        c = fock.overlap(phi, st)
        ghz_weight += w * abs(c) ** 2
        rem_terms = dict(st.terms)
        for occ, amp in phi.terms.items():
            rem_terms[occ] = rem_terms.get(occ, 0j) - c * amp
        rem = PureState(st.mode_count, rem_terms, st.cutoff)
        p = rem.norm_squared()
        if p > 1e-24:
            junk.append((w * p, rem.normalized()))
    if junk:
        junk = list(MixedState(junk).merged().branches)
    return ghz_weight, tuple(junk)


def run_attempt(config: ProtocolConfig, pattern) -> ConditionalResult:
    """Simulate one attempt conditioned on one success pattern.

    Raises if the pattern has zero probability for this configuration (for
    example a pure-vacuum source).
    """
    pattern = _validated_pattern(pattern, config.n_users)
    groups, _, _ = _detection_groups(config)
    model = config.detector
    probability = 0.0
    contributions = []
    for counts, weight, residual in groups:
        resp = 1.0
        for obs, n in zip(pattern, counts):
            resp *= channels.response_distribution(model, n).get(obs, 0.0)
            if resp == 0.0:
                break
        if resp > 0.0:
            probability += weight * resp
            contributions.append((weight * resp, residual))
    if probability <= 0.0:
        raise ValueError("pattern has zero probability for this configuration")
    conditional = MixedState([(w / probability, st)
                              for w, st in contributions]).merged()
    target = ghz_target_for_pattern(pattern, config.n_users)
    ghz_weight, junk = _decompose(conditional, target)
    return ConditionalResult(pattern=pattern, probability=probability,
                             state=conditional, target=target,
                             ghz_weight=ghz_weight, junk_branches=junk,
                             fidelity=math.sqrt(ghz_weight))


def pattern_probabilities(config: ProtocolConfig) -> dict:
    """Probability of every success pattern for this configuration."""
    even = config.n_users + (config.n_users % 2)
    groups, _, _ = _detection_groups(config)
    return {pattern: channels.pattern_probability(groups, config.detector,
                                                  pattern)
            for pattern in enumerate_success_patterns(even)}


def aggregate_rate(config: ProtocolConfig):
    """(rate, fidelity): success probability per attempt summed over all
    patterns, and the per-pattern fidelity (identical across patterns)."""
    probs = pattern_probabilities(config)
    rate = sum(probs.values())
    first = next(p for p in probs if probs[p] > 0.0) if rate > 0.0 else None
    if first is None:
        raise ValueError("no success pattern has positive probability")
    fidelity = run_attempt(config, first).fidelity
    return rate, fidelity
