"""Initial states sent by each user node.

Every two-mode source lives on (retained mode, flying mode): the user keeps
the first mode and launches the second one toward the central node.
"""

import math
from dataclasses import dataclass

from .channels import DetectorModel, IDEAL_PNRD, response_distribution
from .fock import MixedState, PureState


def bell_pair(vacuum_amplitude: float, cutoff: int = 1) -> PureState:
    """Photon-number Bell-type pair a|00> + sqrt(1 - a^2)|11>.

    The vacuum amplitude a controls the trade-off between distribution rate
    (small a) and tolerance to loss-induced junk (large a).
    """
    a = float(vacuum_amplitude)
    if not 0.0 <= a <= 1.0:
        raise ValueError("vacuum amplitude must lie in [0, 1]")
    return PureState(2, {(0, 0): a, (1, 1): math.sqrt(1.0 - a * a)}, cutoff)


def tmsv_truncated(lam: float, cutoff: int) -> PureState:
    """Two-mode squeezed vacuum sqrt(1 - lam^2) sum_n lam^n |n, n>.

    lam = tanh(r) for squeezing parameter r; the state is truncated at the
    per-mode cutoff and left sub-normalized, which is exactly the weight of
    the discarded tail.
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError("lam must lie in [0, 1)")
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    scale = math.sqrt(1.0 - lam * lam)
    return PureState(2, {(n, n): scale * lam ** n for n in range(cutoff + 1)},
                     cutoff, prune_eps=0.0)


def split_fock(photons: int, transmittance: float, cutoff: int) -> PureState:
    """|n> split on a beamsplitter into (kept, passed) with the given t."""
    t = float(transmittance)
    if not 0.0 <= t <= 1.0:
        raise ValueError("transmittance must lie in [0, 1]")
    terms = {}
    for k in range(photons + 1):
        amp = math.sqrt(math.comb(photons, k)
                        * t ** k * (1.0 - t) ** (photons - k))
        terms[(k, photons - k)] = amp
    return PureState(2, terms, cutoff)


def herald_single_photon(lam: float, cutoff: int, herald: DetectorModel,
                         transmittance: float):
    """Heralded quasi single photon from a two-mode squeezed source.

    The signal arm is measured with the herald detector; conditioning on the
    reading "1" leaves a photon-number-diagonal mixture on the idler, which is
    then split into (retained, flying) with the given transmittance. Returns
    (herald probability, conditional MixedState); the herald probability is
    bookkeeping only and is not part of the distribution rate.
    """
    tmsv = tmsv_truncated(lam, cutoff)
    branches = []
    herald_prob = 0.0
    for n in range(cutoff + 1):
        weight = abs(tmsv.amplitude((n, n))) ** 2
        p_one = response_distribution(herald, n).get(1, 0.0)
        w = weight * p_one
        if w <= 0.0:
            continue
        herald_prob += w
        branches.append((w, split_fock(n, transmittance, cutoff)))
    if herald_prob <= 0.0:
        raise ValueError("herald never fires for these parameters")
    return herald_prob, MixedState(
        [(w / herald_prob, st) for w, st in branches])


def coherent_qubit(amplitude: complex, cutoff: int = 1) -> PureState:
    """Normalized vacuum/one-photon superposition (|0> + alpha|1>)/sqrt(1+|alpha|^2)."""
    alpha = complex(amplitude)
    scale = 1.0 / math.sqrt(1.0 + abs(alpha) ** 2)
    return PureState(1, {(0,): scale, (1,): alpha * scale}, cutoff)


def lam_from_squeezing_db(squeezing_db: float) -> float:
    """tanh of the squeezing parameter, from the level in dB (20 log10 e^r)."""
    if squeezing_db < 0:
        raise ValueError("squeezing must be non-negative")
    return math.tanh(squeezing_db * math.log(10.0) / 20.0)


def squeezing_db_from_lam(lam: float) -> float:
    if not 0.0 <= lam < 1.0:
        raise ValueError("lam must lie in [0, 1)")
    return 20.0 * math.atanh(lam) / math.log(10.0)


@dataclass(frozen=True)
class BellSource:
    """Deterministic Bell-type pair source."""

    vacuum_amplitude: float


@dataclass(frozen=True)
class SpdcSource:
    """Heralded single-photon source built from a two-mode squeezed state."""

    lam: float
    splitter_t: float = 0.95
    cutoff: int = 3
    herald: DetectorModel = IDEAL_PNRD


@dataclass(frozen=True)
class CoherentSource:
    """Weak coherent qubit (used for the spare port of odd-user networks)."""

    amplitude: complex


SourceSpec = BellSource | SpdcSource | CoherentSource


def build_source_state(spec: SourceSpec) -> MixedState:
    """Ensemble on (retained, flying) modes for one user."""
    if isinstance(spec, BellSource):
        return MixedState.from_pure(bell_pair(spec.vacuum_amplitude))
    if isinstance(spec, SpdcSource):
        _, mixed = herald_single_photon(spec.lam, spec.cutoff, spec.herald,
                                        spec.splitter_t)
        return mixed
    raise ValueError(f"no two-mode state for source spec {spec!r}")


def flying_photon_amplitude(spec: SourceSpec) -> float:
    """Amplitude with which the source's flying mode carries one photon.

    Used to match a coherent qubit to the other users' single-photon
    amplitude when filling the spare port of an odd-user network.
    """
    if isinstance(spec, BellSource):
        a = spec.vacuum_amplitude
        return math.sqrt(1.0 - a * a)
    if isinstance(spec, SpdcSource):
        return math.sqrt(1.0 - spec.splitter_t)
    raise ValueError(f"no flying amplitude for source spec {spec!r}")
