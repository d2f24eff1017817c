"""Mode unitaries for beamsplitter networks and their Fock-space action.

A mode unitary u acts on creation operators column-wise, a_i^dag ->
sum_j u[j, i] b_j^dag, so in the single-photon sector the amplitude vector
transforms exactly as u. Applying u to a general sparse state expands each
occupation monomial multinomially; the expansion of a given input occupation
is cached per unitary because protocol sweeps reuse a handful of occupations
thousands of times.
"""

import math
from dataclasses import dataclass

import numpy as np

from .fock import CutoffOverflowError, PureState

UNITARITY_ATOL = 1e-12

# per-unitary cache: matrix bytes -> {input occupation -> {output occupation:
# coefficient}}
_EXPANSION_CACHE: dict = {}


class ModeUnitary:
    """A unitary matrix acting on optical modes (not on Fock space directly)."""

    __slots__ = ("matrix", "dim", "key")

    def __init__(self, matrix):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("mode unitary must be a square matrix")
        if not np.allclose(m @ m.conj().T, np.eye(m.shape[0]),
                           rtol=0.0, atol=UNITARITY_ATOL):
            raise ValueError("matrix is not unitary within 1e-12")
        m.setflags(write=False)
        self.matrix = m
        self.dim = m.shape[0]
        self.key = m.tobytes()


def hbs() -> ModeUnitary:
    """Half beamsplitter, (1/sqrt(2)) [[1, 1], [1, -1]]."""
    s = 1.0 / math.sqrt(2.0)
    return ModeUnitary([[s, s], [s, -s]])


def four_mode_circuit() -> ModeUnitary:
    """Two crossed rays of half beamsplitters on four modes.

    Equal to the Kronecker square of hbs(); entries are exactly +-1/2.
    """
    h = np.array([[1.0, 1.0], [1.0, -1.0]])
    return ModeUnitary(0.5 * np.kron(h, h))


@dataclass(frozen=True)
class CircuitLayout:
    """Wiring of the central node.

    user_input_modes[u] is the central mode that receives user u's flying
    qubit. Each connector pair (p, q) lists the two inputs of a connector
    half beamsplitter: a single ancilla photon enters at p, vacuum at q, and
    the outputs feed the adjacent edge modes of two neighbouring four-mode
    blocks. Every central output mode carries a detector.
    """

    n_users: int
    mode_count: int
    user_input_modes: tuple
    connector_pairs: tuple
    detector_modes: tuple


def central_circuit(n_users: int):
    """Central-node unitary and layout for an even number of users >= 4.

    The circuit is n_users/2 - 1 four-mode blocks; adjacent blocks share a
    connector half beamsplitter whose input ancilla photon turns into
    (|10> + |01>)/sqrt(2) across the neighbouring edge modes.
    """
    if n_users < 4:
        raise ValueError("central circuit needs at least 4 users")
    if n_users % 2:
        raise ValueError("central circuit is defined for even user counts; "
                         "odd counts embed into the next even circuit")
    blocks = n_users // 2 - 1
    mode_count = 4 * blocks

    block_u = four_mode_circuit().matrix
    big = np.zeros((mode_count, mode_count), dtype=complex)
    for k in range(blocks):
        big[4 * k:4 * k + 4, 4 * k:4 * k + 4] = block_u

    conn = np.eye(mode_count, dtype=complex)
    s = 1.0 / math.sqrt(2.0)
    pairs = []
    for c in range(blocks - 1):
        p, q = 4 * c + 3, 4 * c + 4
        conn[p, p] = s
        conn[q, p] = s
        conn[p, q] = s
        conn[q, q] = -s
        pairs.append((p, q))

    users = []
    for k in range(blocks):
        base = [4 * k, 4 * k + 1, 4 * k + 2, 4 * k + 3]
        if blocks == 1:
            users.extend(base)
        elif k == 0:
            users.extend(base[:3])
        elif k == blocks - 1:
            users.extend(base[1:])
        else:
            users.extend(base[1:3])

    unitary = ModeUnitary(big @ conn)
    layout = CircuitLayout(n_users=n_users, mode_count=mode_count,
                           user_input_modes=tuple(users),
                           connector_pairs=tuple(pairs),
                           detector_modes=tuple(range(mode_count)))
    return unitary, layout


def _compositions(total: int, bins: int):
    """All ways to place `total` photons into `bins` ordered slots."""
    if bins == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, bins - 1):
            yield (first,) + rest


def _column_power(column, n: int, dim: int) -> dict:
    """Expansion of (sum_j column[j] b_j^dag)^n as {occupation: coefficient}."""
    nonzero = [(j, column[j]) for j in range(dim) if column[j] != 0]
    fact_n = math.factorial(n)
    out = {}
    for counts in _compositions(n, len(nonzero)):
        coeff = fact_n
        for c in counts:
            coeff //= math.factorial(c)
        value = complex(coeff)
        occ = [0] * dim
        for (j, v), c in zip(nonzero, counts):
            if c:
                value *= v ** c
                occ[j] = c
        out[tuple(occ)] = value
    return out


def _expand_occupation(matrix, occupation) -> dict:
    """Image of one occupation monomial under the creation-operator rewrite."""
    dim = len(occupation)
    poly = {(0,) * dim: 1.0 + 0j}
    for i, n in enumerate(occupation):
        if n == 0:
            continue
        factor = _column_power(matrix[:, i], n, dim)
        merged: dict = {}
        for occ1, c1 in poly.items():
            for occ2, c2 in factor.items():
                key = tuple(a + b for a, b in zip(occ1, occ2))
                merged[key] = merged.get(key, 0j) + c1 * c2
        poly = merged
    denom = math.sqrt(math.prod(math.factorial(n) for n in occupation))
    out = {}
    for occ, coeff in poly.items():
        if coeff == 0:
            continue
        out[occ] = coeff * math.sqrt(math.prod(math.factorial(n) for n in occ)) / denom
    return out


def apply(unitary: ModeUnitary, state: PureState, modes) -> PureState:
    """Apply a mode unitary to a subset of a state's modes.

    Raises CutoffOverflowError if any output term would exceed the state's
    per-mode cutoff, which signals that the cutoff is too small for this
    circuit.
    """
    modes = list(modes)
    if len(modes) != unitary.dim:
        raise ValueError(f"unitary acts on {unitary.dim} modes, got {len(modes)}")
    if len(set(modes)) != len(modes):
        raise ValueError("duplicate mode indices")
    for m in modes:
        if not 0 <= m < state.mode_count:
            raise ValueError(f"mode {m} out of range")

    cache = _EXPANSION_CACHE.setdefault(unitary.key, {})
    matrix = unitary.matrix
    cutoff = state.cutoff
    out_terms: dict = {}
    for occ, amp in state.terms.items():
        sub = tuple(occ[m] for m in modes)
        expansion = cache.get(sub)
        if expansion is None:
            expansion = _expand_occupation(matrix, sub)
            cache[sub] = expansion
        for out_sub, coeff in expansion.items():
            new = list(occ)
            for m, n in zip(modes, out_sub):
                if n > cutoff:
                    raise CutoffOverflowError(
                        f"circuit populates occupation {n} above cutoff {cutoff}")
                new[m] = n
            key = tuple(new)
            prev = out_terms.get(key)
            out_terms[key] = amp * coeff if prev is None else prev + amp * coeff
    return PureState(state.mode_count, out_terms, cutoff)


def compose(first: ModeUnitary, then: ModeUnitary) -> ModeUnitary:
    """Unitary equivalent to applying `first`, then `then`."""
    if first.dim != then.dim:
        raise ValueError("dimension mismatch")
    return ModeUnitary(then.matrix @ first.matrix)
