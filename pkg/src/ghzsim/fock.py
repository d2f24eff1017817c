"""Sparse Fock-space states for multimode optical circuits.

A pure state is a map from photon-occupation tuples to complex amplitudes.
Sub-normalized states are first class: after conditioning, the squared norm of
a branch is the probability of that branch, and normalization only ever
happens explicitly. A mixed state is a weighted ensemble of normalized pure
branches, which stays cheap as long as the ensembles are small (loss branches,
heralding branches) instead of full density matrices.
"""

import math

DEFAULT_PRUNE_EPS = 1e-15

Occupation = tuple[int, ...]


class CutoffOverflowError(ValueError):
    """An operation tried to populate an occupation above the state cutoff."""


class PureState:
    """Sparse superposition of photon-number basis states.

    Instances are value semantic: every operation returns a new state and
    never mutates its inputs. Amplitudes whose magnitude is at or below
    ``prune_eps`` are dropped at construction time.
    """

    __slots__ = ("mode_count", "cutoff", "terms")

    def __init__(self, mode_count: int, terms: dict, cutoff: int,
                 prune_eps: float = DEFAULT_PRUNE_EPS):
        if mode_count < 0:
            raise ValueError("mode_count must be non-negative")
        if cutoff < 0:
            raise ValueError("cutoff must be non-negative")
        clean = {}
        for occ, amp in terms.items():
            a = complex(amp)
            if abs(a) <= prune_eps:
                continue
            occ = tuple(occ)
            if len(occ) != mode_count:
                raise ValueError(
                    f"occupation {occ} does not have {mode_count} modes")
            for n in occ:
                if n < 0:
                    raise ValueError(f"negative occupation in {occ}")
                if n > cutoff:
                    raise CutoffOverflowError(
                        f"occupation {occ} exceeds per-mode cutoff {cutoff}")
            clean[occ] = a
        self.mode_count = mode_count
        self.cutoff = cutoff
        self.terms = clean

    def norm_squared(self) -> float:
        return sum(a.real * a.real + a.imag * a.imag
                   for a in self.terms.values())

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def scaled(self, factor: complex) -> "PureState":
        return PureState(self.mode_count,
                         {occ: amp * factor for occ, amp in self.terms.items()},
                         self.cutoff)

    def normalized(self) -> "PureState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero state")
        return self.scaled(1.0 / n)

    def with_cutoff(self, cutoff: int) -> "PureState":
        """Same state with a different per-mode cutoff (revalidated)."""
        return PureState(self.mode_count, self.terms, cutoff)

    def max_total_photons(self) -> int:
        return max((sum(occ) for occ in self.terms), default=0)

    def amplitude(self, occupation) -> complex:
        return self.terms.get(tuple(occupation), 0j)

    def __repr__(self):
        return (f"PureState(modes={self.mode_count}, cutoff={self.cutoff}, "
                f"terms={len(self.terms)}, norm_sq={self.norm_squared():.6g})")


def basis_state(occupation, cutoff: int) -> PureState:
    occupation = tuple(occupation)
    return PureState(len(occupation), {occupation: 1.0}, cutoff)


def vacuum(mode_count: int, cutoff: int) -> PureState:
    return basis_state((0,) * mode_count, cutoff)


def overlap(left: PureState, right: PureState) -> complex:
    """Inner product <left|right> over the shared occupation support."""
    if left.mode_count != right.mode_count:
        raise ValueError("overlap needs states on the same number of modes")
    if len(left.terms) > len(right.terms):
        return sum(left.terms[occ].conjugate() * amp
                   for occ, amp in right.terms.items() if occ in left.terms)
    return sum(amp.conjugate() * right.terms[occ]
               for occ, amp in left.terms.items() if occ in right.terms)


def tensor(left: PureState, right: PureState) -> PureState:
    """Tensor product; the right factor's modes are appended after the left's."""
    if left.cutoff != right.cutoff:
        raise ValueError(
            f"cutoff mismatch: {left.cutoff} vs {right.cutoff}")
    terms = {}
    for occ1, a1 in left.terms.items():
        for occ2, a2 in right.terms.items():
            terms[occ1 + occ2] = a1 * a2
    return PureState(left.mode_count + right.mode_count, terms, left.cutoff)


def permute_modes(state: PureState, permutation) -> PureState:
    """Relabel modes: old mode i becomes mode permutation[i]."""
    perm = tuple(permutation)
    if sorted(perm) != list(range(state.mode_count)):
        raise ValueError("not a permutation of the state's modes")
    terms = {}
    for occ, amp in state.terms.items():
        new = [0] * state.mode_count
        for i, n in enumerate(occ):
            new[perm[i]] = n
        terms[tuple(new)] = amp
    return PureState(state.mode_count, terms, state.cutoff)


def measure_modes(state: PureState, modes) -> list:
    """Projective photon-number measurement on a subset of modes.

    Returns a list of (outcome, probability, residual) sorted by outcome.
    Probabilities sum to the squared norm of the input and every residual is
    normalized on the remaining modes (a zero-mode scalar state when all modes
    are measured).
    """
    modes = list(modes)
    if not modes:
        raise ValueError("measure_modes needs at least one mode")
    if len(set(modes)) != len(modes):
        raise ValueError("duplicate mode indices")
    for m in modes:
        if not 0 <= m < state.mode_count:
            raise ValueError(f"mode {m} out of range")
    mset = set(modes)
    keep = [i for i in range(state.mode_count) if i not in mset]
    groups: dict = {}
    for occ, amp in state.terms.items():
        outcome = tuple(occ[m] for m in modes)
        rest = tuple(occ[i] for i in keep)
        groups.setdefault(outcome, {})[rest] = amp
    results = []
    for outcome in sorted(groups):
        sub = groups[outcome]
        p = sum(a.real * a.real + a.imag * a.imag for a in sub.values())
        if p <= 0.0:
            continue
        inv = 1.0 / math.sqrt(p)
        residual = PureState(len(keep),
                             {occ: a * inv for occ, a in sub.items()},
                             state.cutoff)
        results.append((outcome, p, residual))
    return results


class MixedState:
    """Weighted ensemble of normalized pure branches.

    Weights are probabilities: they sum to one under trace-preserving
    evolution and to the conditioning probability after post-selection.
    Branches with non-positive weight are dropped; branch states must come in
    normalized (normalization is explicit in this library, never implicit).
    """

    __slots__ = ("branches",)

    def __init__(self, branches, norm_tol: float = 1e-9):
        checked = []
        for weight, state in branches:
            if weight < 0:
                raise ValueError("negative branch weight")
            if weight == 0:
                continue
            if abs(state.norm_squared() - 1.0) > norm_tol:
                raise ValueError("branch states must be normalized")
            checked.append((float(weight), state))
        if not checked:
            raise ValueError("mixed state needs at least one branch")
        self.branches = tuple(checked)

    @classmethod
    def from_pure(cls, state: PureState) -> "MixedState":
        """Wrap a (possibly sub-normalized) pure state; weight = its norm^2."""
        return cls([(state.norm_squared(), state.normalized())])

    def total_weight(self) -> float:
        return sum(w for w, _ in self.branches)

    def mode_count(self) -> int:
        return self.branches[0][1].mode_count

    def renormalized(self) -> "MixedState":
        total = self.total_weight()
        return MixedState([(w / total, st) for w, st in self.branches])

    def map_states(self, fn) -> "MixedState":
        return MixedState([(w, fn(st)) for w, st in self.branches])

    def merged(self, tol: float = 1e-12) -> "MixedState":
        """Combine branches that are equal up to a global phase.

        Branches are keyed by a canonical form (amplitudes rotated so the
        first one is real-positive, then rounded), so merging stays linear
        in the branch count; a residual overlap test inside each bucket
        guards against rounding collisions.
        """
        digits = max(1, min(15, round(-math.log10(tol))))
        out: list = []
        buckets: dict = {}
        for w, st in self.branches:
            occs = tuple(sorted(st.terms))
            ref = st.terms[occs[0]]
            phase = ref / abs(ref)
            canon = tuple(
                (round((st.terms[o] / phase).real, digits),
                 round((st.terms[o] / phase).imag, digits)) for o in occs)
            placed = False
            for idx in buckets.get((occs, canon), ()):
                w0, st0 = out[idx]
                if abs(abs(overlap(st0, st)) - 1.0) <= tol:
                    out[idx] = (w0 + w, st0)
                    placed = True
                    break
            if not placed:
                buckets.setdefault((occs, canon), []).append(len(out))
                out.append((w, st))
        return MixedState(out)

    def __repr__(self):
        return (f"MixedState(branches={len(self.branches)}, "
                f"weight={self.total_weight():.6g})")


def mixed_product(left: MixedState, right: MixedState) -> MixedState:
    """Tensor product of two ensembles (branch-wise cross product)."""
    return MixedState([(w1 * w2, tensor(s1, s2))
                       for w1, s1 in left.branches
                       for w2, s2 in right.branches])


def sqrt_fidelity(target: PureState, ensemble: MixedState) -> float:
    """Square-root fidelity sqrt(<target|rho|target>) of an ensemble.

    The ensemble's weights are renormalized first, so conditioned ensembles
    can be passed as produced. The square-root convention is used throughout
    this package.
    """
    if abs(target.norm_squared() - 1.0) > 1e-9:
        raise ValueError("target must be normalized")
    total = ensemble.total_weight()
    if total <= 0.0:
        raise ValueError("zero-weight mixed state has no fidelity")
    value = sum(w * abs(overlap(target, st)) ** 2
                for w, st in ensemble.branches) / total
    return math.sqrt(min(max(value, 0.0), 1.0))
