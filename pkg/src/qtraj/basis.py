"""Occupation basis for the half-filled main/ancilla fermion chain.

The chain has L/2 main sites c_1..c_{L/2} and L/2 ancilla sites
a_1..a_{L/2}, interleaved into a single line of L modes,

    mode 0 = c_1, mode 1 = a_1, mode 2 = c_2, mode 3 = a_2, ...

so that both hoppings of a bulk block (c_i <-> a_i and c_{i+1} <-> a_i)
connect modes at distance one and carry no string signs.  Basis words are
integers with bit q giving the occupation of mode q; only the half-filled
sector (popcount L/2) is enumerated.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

L_MAX = 24  # binomial(24, 12) = 2_704_156, the desk-scale memory bound


@dataclass(frozen=True)
class ModeLayout:
    """Interleaved mode ordering for L modes (L even, 4 <= L <= L_MAX)."""

    L: int

    def __post_init__(self) -> None:
        if self.L % 2 != 0 or not (4 <= self.L <= L_MAX):
            raise ValueError(f"L must be even with 4 <= L <= {L_MAX}, got {self.L}")

    @property
    def n_blocks(self) -> int:
        return self.L // 2

    def mode_of_main(self, i: int) -> int:
        """Global mode index of main-chain site c_i (sites are 1-based)."""
        self._check_site(i)
        return 2 * (i - 1)

    def mode_of_ancilla(self, i: int) -> int:
        """Global mode index of ancilla site a_i (sites are 1-based)."""
        self._check_site(i)
        return 2 * (i - 1) + 1

    def _check_site(self, i: int) -> None:
        if not (1 <= i <= self.L // 2):
            raise ValueError(f"site index {i} outside 1..{self.L // 2}")


@dataclass(frozen=True)
class BlockAddress:
    """One measurement block: main sites i, i+1 (periodic) and ancilla i.

    ``modes`` holds the global indices (c_i, c_{i+1 mod L/2}, a_i).  The
    last block i = L/2 wraps around and couples c_{L/2} to c_1.
    """

    i: int
    modes: tuple[int, int, int]
    is_boundary: bool


def block_address(layout: ModeLayout, i: int) -> BlockAddress:
    """Build the BlockAddress for block i = 1..L/2 of the layout."""
    n = layout.n_blocks
    if not (1 <= i <= n):
        raise ValueError(f"block index {i} outside 1..{n}")
    c_i = layout.mode_of_main(i)
    c_next = layout.mode_of_main(1 if i == n else i + 1)
    a_i = layout.mode_of_ancilla(i)
    return BlockAddress(i=i, modes=(c_i, c_next, a_i), is_boundary=(i == n))


class FockBasis:
    """Sorted enumeration of the half-filled occupation words for L modes.

    Attributes
    ----------
    layout : ModeLayout
    N : int
        Particle count, always L/2.
    states : np.ndarray of uint64
        All words with popcount N, sorted ascending as unsigned integers.
    index : dict[int, int]
        Inverse map word -> dense position in ``states``.
    """

    def __init__(self, layout: ModeLayout):
        self.layout = layout
        self.N = layout.L // 2
        words = []
        for occ in combinations(range(layout.L), self.N):
            w = 0
            for q in occ:
                w |= 1 << q
            words.append(w)
        words.sort()
        self.states = np.array(words, dtype=np.uint64)
        self.index = {w: k for k, w in enumerate(words)}

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def L(self) -> int:
        return self.layout.L

    def index_of(self, word: int) -> int:
        """Dense index of a basis word; KeyError if not half-filled."""
        return self.index[int(word)]

    def block_address(self, i: int) -> BlockAddress:
        return block_address(self.layout, i)

    def sector_groups_cached(self, i: int) -> "SectorGroups":
        """Gather tables for block i, built once and reused."""
        try:
            cache = self._groups_cache
        except AttributeError:
            cache = self._groups_cache = {}
        if i not in cache:
            cache[i] = sector_groups(self, self.block_address(i))
        return cache[i]

    def __repr__(self) -> str:  # pragma: no cover
        return f"FockBasis(L={self.L}, N={self.N}, dim={self.dim})"


def enumerate_basis(L: int) -> FockBasis:
    """Enumerate the half-filled basis for L modes.

    Raises
    ------
    ValueError
        If L is odd or outside [4, 24].
    """
    basis = FockBasis(ModeLayout(L))
    assert basis.dim == comb(L, L // 2)
    return basis


def block_occupation(word: int, addr: BlockAddress) -> tuple[int, int, int]:
    """Occupations (n_c_i, n_c_{i+1}, n_a_i) of the block's three modes."""
    c_i, c_next, a_i = addr.modes
    word = int(word)
    return ((word >> c_i) & 1, (word >> c_next) & 1, (word >> a_i) & 1)


def _between_mask(addr: BlockAddress) -> int:
    # non-block modes strictly between the lowest and highest block mode
    lo, hi = min(addr.modes), max(addr.modes)
    mask = ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1)
    for q in addr.modes:
        mask &= ~(1 << q)
    return mask


def rest_parity(word: int, addr: BlockAddress) -> int:
    """Parity (-1)^n over non-block modes between the block's ends.

    For bulk blocks the three modes are contiguous, the mode set in
    between is empty and the parity is +1.  For the boundary block
    (modes L-2, 0, L-1) the set is 1..L-3 and the parity is that of the
    string crossed by the wrap-around hopping c_1 <-> a_{L/2}.
    """
    return -1 if (int(word) & _between_mask(addr)).bit_count() % 2 else 1


@dataclass(frozen=True)
class SectorGroups:
    """Per-block gather tables over a FockBasis.

    Words sharing a rest configuration (all modes outside the block) are
    grouped into rows of three, ordered by the sector basis:

      N_p=1 columns: block occupations (0,0,1), (0,1,0), (1,0,0)
      N_p=2 columns: block occupations (1,0,1), (0,1,1), (1,1,0)

    ``par1``/``par2`` hold the rest parity of each row (+1/-1), used only
    by the jw-exact convention at the boundary block.
    """

    addr: BlockAddress
    g1: np.ndarray  # (n1, 3) int64 indices into basis.states
    g2: np.ndarray  # (n2, 3) int64
    par1: np.ndarray  # (n1,) float64, +-1.0
    par2: np.ndarray  # (n2,) float64
    triv: np.ndarray  # indices of words with the block in the 0- or 3-particle sector


_SECTOR1_COLS = {(0, 0, 1): 0, (0, 1, 0): 1, (1, 0, 0): 2}
_SECTOR2_COLS = {(1, 0, 1): 0, (0, 1, 1): 1, (1, 1, 0): 2}


def sector_groups(basis: FockBasis, addr: BlockAddress) -> SectorGroups:
    """Build the gather tables for one block.

    Every N_p=1 (N_p=2) word belongs to exactly one complete row: with the
    block bits removed, the rest configuration determines the other two
    sector members, which are always present in the half-filled basis.
    """
    block_mask = 0
    for q in addr.modes:
        block_mask |= 1 << q
    rows1: dict[int, list[int]] = {}
    rows2: dict[int, list[int]] = {}
    triv: list[int] = []
    for k, w in enumerate(basis.states):
        w = int(w)
        occ = block_occupation(w, addr)
        rest = w & ~block_mask
        col = _SECTOR1_COLS.get(occ)
        if col is not None:
            rows1.setdefault(rest, [-1, -1, -1])[col] = k
            continue
        col = _SECTOR2_COLS.get(occ)
        if col is not None:
            rows2.setdefault(rest, [-1, -1, -1])[col] = k
        else:
            triv.append(k)

    def pack(rows: dict[int, list[int]]) -> tuple[np.ndarray, np.ndarray]:
        rests = sorted(rows)
        g = np.array([rows[r] for r in rests], dtype=np.int64).reshape(-1, 3)
        assert (g >= 0).all(), "incomplete sector row"
        par = np.array([rest_parity(r, addr) for r in rests], dtype=np.float64)
        return g, par

    g1, par1 = pack(rows1)
    g2, par2 = pack(rows2)
    return SectorGroups(
        addr=addr, g1=g1, g2=g2, par1=par1, par2=par2,
        triv=np.array(triv, dtype=np.int64),
    )
