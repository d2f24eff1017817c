"""Fiber loss and photodetection.

Loss is the standard beamsplitter-to-environment channel applied as Kraus
branching on the sparse states: losing k photons from a mode with n photons
carries amplitude sqrt(C(n,k) eta^(n-k) (1-eta)^k). Detection is a classical
response map P(observed | true photon count), which is diagonal in photon
number for all three detector families, so conditioning on an observed
pattern only needs the photon-number measurement groups.
"""

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

from . import fock
from .fock import MixedState, PureState


def eta_from_distance(distance_km: float,
                      attenuation_db_per_km: float = 0.2) -> float:
    """Power transmittance of a fiber of the given length."""
    if distance_km < 0:
        raise ValueError("distance must be non-negative")
    if attenuation_db_per_km < 0:
        raise ValueError("attenuation must be non-negative")
    return 10.0 ** (-attenuation_db_per_km * distance_km / 10.0)


@dataclass(frozen=True)
class LossChannel:
    """Pure-loss channel with transmittance eta."""

    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")

    def apply(self, state, modes) -> MixedState:
        return apply_loss(state, modes, self.eta)


def apply_loss(state, modes, eta: float) -> MixedState:
    """Apply photon loss with transmittance eta to the given modes.

    Accepts a PureState or MixedState and returns a MixedState whose total
    weight equals the input trace. Composing eta1 then eta2 is the same
    channel as eta1 * eta2.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    modes = list(modes)
    for m in modes:
        if isinstance(state, PureState):
            count = state.mode_count
        else:
            count = state.mode_count()
        if not 0 <= m < count:
            raise ValueError(f"mode {m} out of range")
    if isinstance(state, PureState):
        mixed = MixedState.from_pure(state)
    else:
        mixed = state
    for m in modes:
        branches = []
        for w, st in mixed.branches:
            groups: dict = {}
            for occ, amp in st.terms.items():
                n = occ[m]
                for k in range(n + 1):
                    factor = math.sqrt(math.comb(n, k)
                                       * eta ** (n - k) * (1.0 - eta) ** k)
                    if factor == 0.0:
                        continue
                    new = occ[:m] + (n - k,) + occ[m + 1:]
                    sub = groups.setdefault(k, {})
                    sub[new] = sub.get(new, 0j) + amp * factor
            for k in sorted(groups):
                branch = PureState(st.mode_count, groups[k], st.cutoff)
                p = branch.norm_squared()
                if p <= 0.0:
                    continue
                branches.append((w * p, branch.normalized()))
        mixed = MixedState(branches)
    return mixed.merged()


@dataclass(frozen=True)
class DetectorModel:
    """One of three detector families with shared efficiency/dark parameters.

    kind "pnrd" resolves photon number exactly, thinned binomially by the
    efficiency, plus at most one dark count with probability dark_prob.
    kind "threshold" only reports click/no-click with
    P(click | n) = 1 - (1 - dark_prob) (1 - efficiency)^n.
    kind "quasi" splits the light evenly over `multiplex` threshold
    detectors and reports the number of them that clicked, so k photons are
    mistaken for one with probability (1/multiplex)^(k-1) at unit efficiency.
    """

    kind: str
    efficiency: float = 1.0
    dark_prob: float = 0.0
    multiplex: int = 1

    def __post_init__(self):
        if self.kind not in ("pnrd", "threshold", "quasi"):
            raise ValueError(f"unknown detector kind {self.kind!r}")
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        if not 0.0 <= self.dark_prob <= 1.0:
            raise ValueError("dark_prob must lie in [0, 1]")
        if self.multiplex < 1:
            raise ValueError("multiplex must be at least 1")

    @classmethod
    def pnrd(cls, efficiency: float = 1.0, dark_prob: float = 0.0):
        return cls("pnrd", efficiency, dark_prob)

    @classmethod
    def threshold(cls, efficiency: float = 1.0, dark_prob: float = 0.0):
        return cls("threshold", efficiency, dark_prob)

    @classmethod
    def quasi(cls, multiplex: int, efficiency: float = 1.0,
              dark_prob: float = 0.0):
        return cls("quasi", efficiency, dark_prob, multiplex)


IDEAL_PNRD = DetectorModel.pnrd()


def _bernoulli_sum(probs) -> dict:
    """Distribution of the number of successes of independent Bernoullis."""
    dist = {0: 1.0}
    for p in probs:
        new: dict = {}
        for k, w in dist.items():
            if p < 1.0:
                new[k] = new.get(k, 0.0) + w * (1.0 - p)
            if p > 0.0:
                new[k + 1] = new.get(k + 1, 0.0) + w * p
        dist = new
    return dist


@lru_cache(maxsize=4096)
def response_distribution(model: DetectorModel, photons: int) -> dict:
    """P(observed value | `photons` arriving), as {observed: probability}."""
    if photons < 0:
        raise ValueError("photon count must be non-negative")
    eff, dark = model.efficiency, model.dark_prob
    if model.kind == "pnrd":
        out: dict = {}
        for kept in range(photons + 1):
            p_kept = (math.comb(photons, kept)
                      * eff ** kept * (1.0 - eff) ** (photons - kept))
            if p_kept == 0.0:
                continue
            if dark < 1.0:
                out[kept] = out.get(kept, 0.0) + p_kept * (1.0 - dark)
            if dark > 0.0:
                out[kept + 1] = out.get(kept + 1, 0.0) + p_kept * dark
        return out
    if model.kind == "threshold":
        p_click = 1.0 - (1.0 - dark) * (1.0 - eff) ** photons
        return {obs: p for obs, p in ((0, 1.0 - p_click), (1, p_click)) if p > 0.0}
    # quasi: photons land uniformly on `multiplex` threshold detectors
    bins = model.multiplex
    out = {}
    total = math.factorial(photons)
    for counts in _compositions(photons, bins):
        weight = total
        for c in counts:
            weight //= math.factorial(c)
        p_route = weight * (1.0 / bins) ** photons
        clicks = _bernoulli_sum(
            1.0 - (1.0 - dark) * (1.0 - eff) ** c for c in counts)
        for m, q in clicks.items():
            out[m] = out.get(m, 0.0) + p_route * q
    return {m: p for m, p in out.items() if p > 0.0}


def _compositions(total: int, bins: int):
    if bins == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, bins - 1):
            yield (first,) + rest


def quasi_pnrd_misid_prob(n_detectors: int, k_photons: int) -> float:
    """P(k photons read out as exactly one) for an even n-way multiplexer."""
    if n_detectors < 1 or k_photons < 1:
        raise ValueError("need at least one detector and one photon")
    return (1.0 / n_detectors) ** (k_photons - 1)


def quasi_pnrd_tree_misid_prob(n_detectors: int, k_photons: int) -> float:
    """Same misidentification probability from the physical splitter tree.

    The tree is a cascade of beamsplitters with reflectances 1/n, 1/(n-1),
    ..., 1/2 so that every one of the n ideal threshold detectors sees a
    photon with probability 1/n; photons are routed independently and the
    whole assignment space is enumerated.
    """
    if n_detectors < 1 or k_photons < 1:
        raise ValueError("need at least one detector and one photon")
    reflect = [1.0 / (n_detectors - i) for i in range(n_detectors - 1)]
    probs = []
    passed = 1.0
    for r in reflect:
        probs.append(passed * r)
        passed *= (1.0 - r)
    probs.append(passed)
    single = 0.0
    for assignment in itertools.product(range(n_detectors), repeat=k_photons):
        if len(set(assignment)) != 1:
            continue
        p = 1.0
        for det in assignment:
            p *= probs[det]
        single += p
    return single


def detection_groups(state: MixedState, detector_modes) -> list:
    """Photon-number measurement groups over the detector modes.

    Returns (true_counts, weight, residual) triples; weights sum to the
    ensemble weight. This is the common substrate for click statistics and
    pattern conditioning.
    """
    out = []
    for w, st in state.branches:
        for outcome, p, residual in fock.measure_modes(st, detector_modes):
            out.append((outcome, w * p, residual))
    return out


def pattern_probability(groups, model: DetectorModel, pattern) -> float:
    """Probability that the detectors report `pattern`, given the groups."""
    total = 0.0
    for counts, weight, _ in groups:
        resp = 1.0
        for obs, n in zip(pattern, counts):
            resp *= response_distribution(model, n).get(obs, 0.0)
            if resp == 0.0:
                break
        total += weight * resp
    return total


def condition_on_pattern(state: MixedState, detector_modes,
                         model: DetectorModel, pattern):
    """Post-select on one observed detector pattern.

    Returns (probability, conditional MixedState on the remaining modes).
    Raises if the pattern has zero probability.
    """
    pattern = tuple(pattern)
    detector_modes = list(detector_modes)
    if len(pattern) != len(detector_modes):
        raise ValueError("pattern length must match the detector modes")
    groups = detection_groups(state, detector_modes)
    contributions = []
    probability = 0.0
    for counts, weight, residual in groups:
        resp = 1.0
        for obs, n in zip(pattern, counts):
            resp *= response_distribution(model, n).get(obs, 0.0)
            if resp == 0.0:
                break
        if resp > 0.0:
            probability += weight * resp
            contributions.append((weight * resp, residual))
    if probability <= 0.0:
        raise ValueError("pattern has zero probability")
    conditional = MixedState(
        [(w / probability, st) for w, st in contributions]).merged()
    return probability, conditional


def click_distribution(state: MixedState, detector_modes,
                       model: DetectorModel) -> list:
    """Full distribution of observed patterns with conditional states.

    Returns (pattern, probability, conditional MixedState) sorted by pattern;
    probabilities sum to the ensemble weight.
    """
    groups = detection_groups(state, detector_modes)
    acc: dict = {}
    for counts, weight, residual in groups:
        supports = [sorted(response_distribution(model, n)) for n in counts]
        for observed in itertools.product(*supports):
            resp = 1.0
            for obs, n in zip(observed, counts):
                resp *= response_distribution(model, n)[obs]
            if resp == 0.0:
                continue
            prob, parts = acc.get(observed, (0.0, []))
            parts.append((weight * resp, residual))
            acc[observed] = (prob + weight * resp, parts)
    out = []
    for observed in sorted(acc):
        prob, parts = acc[observed]
        if prob <= 0.0:
            continue
        conditional = MixedState([(w / prob, st) for w, st in parts]).merged()
        out.append((observed, prob, conditional))
    return out
