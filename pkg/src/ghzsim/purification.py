"""Entanglement purification for photon-presence encoded GHZ states.

Two noisy copies are combined with a transversal CNOT (copy one controls,
copy two targets) and the target copy is measured; the round succeeds when
every target detector fires. For the loss-dominated mixtures produced by
post-selected star-network distribution the surviving branch is exactly the
even-parity GHZ state, because no spurious branch is the bitwise complement
of another. The surviving state always carries the plus sign regardless of
the input signs; the conditional measurement flips odd-parity inputs, and a
local phase flip by any single party would undo it if the minus sign were
wanted.
"""

from dataclasses import dataclass

from . import fock
from .fock import MixedState, PureState
from .protocol import ConditionalResult, GhzTarget


def transversal_cnot(state: PureState, n_parties: int) -> PureState:
    """Bitwise CNOT from modes [0, n) onto modes [n, 2n)."""
    if state.mode_count != 2 * n_parties:
        raise ValueError("state must hold exactly two copies")
    out = {}
    for occ, amp in state.terms.items():
        if any(x > 1 for x in occ):
            raise ValueError(
                "purification requires at most one photon per mode")
        control = occ[:n_parties]
        target = occ[n_parties:]
        flipped = tuple(t ^ c for c, t in zip(control, target))
        out[control + flipped] = amp
    return PureState(state.mode_count, out, state.cutoff)


def pairwise_xor_table(bitstrings):
    """table[i][j] = bitwise XOR of entries i and j.

    Useful for reading off which branch pairs can survive the all-fire
    post-selection: only pairs whose XOR is all ones contribute.
    """
    rows = [tuple(b) for b in bitstrings]
    return [[tuple(x ^ y for x, y in zip(r, c)) for c in rows] for r in rows]


@dataclass(frozen=True)
class PurificationOutcome:
    success_probability: float
    state: MixedState
    fidelity: float
    target: GhzTarget


def purify_pair(first: MixedState, second: MixedState,
                bitstrings) -> PurificationOutcome:
    """Run one purification round on two n-party mixtures."""
    n = first.mode_count()
    if second.mode_count() != n:
        raise ValueError("copies must have the same number of parties")
    bitstrings = tuple(tuple(int(x) for x in b) for b in bitstrings)
    joint = fock.mixed_product(first, second)
    all_ones = tuple([1] * n)
    target_modes = list(range(n, 2 * n))

    success = 0.0
    survivors = []
    for weight, branch in joint.branches:
        flipped = transversal_cnot(branch, n)
        for outcome, prob, residual in fock.measure_modes(flipped,
                                                          target_modes):
            if outcome == all_ones:
                success += weight * prob
                survivors.append((weight * prob, residual))
    if success <= 0.0:
        raise ValueError("purification never succeeds for these inputs")

    state = MixedState([(w / success, s) for w, s in survivors]).merged()
    target = GhzTarget(bitstrings, 1)
    fidelity = fock.sqrt_fidelity(target.state(cutoff=first.branches[0][1].cutoff),
                                  state)
    return PurificationOutcome(success, state, fidelity, target)


def epl_purify(first: ConditionalResult,
               second: ConditionalResult) -> PurificationOutcome:
    """Purify the outputs of two protocol attempts that heralded the same
    target (the detector patterns themselves may differ between attempts
    only if they herald identical bitstrings)."""
    if first.target.bitstrings != second.target.bitstrings:
        raise ValueError("attempts herald different states; cannot purify")
    return purify_pair(first.state, second.state, first.target.bitstrings)


def success_with_ideal_partner(ghz_weight: float) -> float:
    """Success probability when the second copy is a perfect GHZ state."""
    return 0.5 * ghz_weight


def iid_success_estimate(ghz_weight: float) -> float:
    """Success probability for two independent loss-only copies."""
    return 0.5 * ghz_weight ** 2
