"""Reduced density matrices, von Neumann entropies, mutual information.

Entropies are computed from the Schmidt decomposition of the amplitude
matrix M[cut pattern, complement pattern] rather than from an explicit
reduced density matrix; the two routes agree since the eigenvalues of
rho = M M^dag are the squared singular values of M.  All entropies are in
nats.

Two sign conventions are supported.  ``block-local`` treats basis words as
plain labels (no reordering signs).  ``jw-exact`` multiplies each
amplitude by the fermionic crossing parity picked up when the occupied
cut modes are moved in front of the occupied complement modes; for states
supported on a single complement configuration the sign is a constant
phase per cut pattern, so both conventions give identical spectra.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .basis import FockBasis, ModeLayout
from .blocks import check_convention
from .state import StateVector

EIGENVALUE_CLAMP = 1e-12
MUTUAL_INFO_CLAMP = 1e-10
MAX_EXPLICIT_CUT = 13  # 2^13 x 2^13 RDM is the largest we materialize


class CutName(str, Enum):
    B = "B"
    BPRIME = "Bprime"
    C = "C"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class Cut:
    """A subset of global modes."""

    name: CutName
    modes: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("cut modes must be distinct")


def cut_B(layout: ModeLayout) -> Cut:
    """First half of the main chain: c_1 .. c_{L/4}."""
    _require_quarter(layout)
    return Cut(CutName.B, tuple(layout.mode_of_main(i) for i in range(1, layout.L // 4 + 1)))


def cut_Bprime(layout: ModeLayout) -> Cut:
    """Second half of the main chain: c_{L/4+1} .. c_{L/2}."""
    _require_quarter(layout)
    return Cut(
        CutName.BPRIME,
        tuple(layout.mode_of_main(i) for i in range(layout.L // 4 + 1, layout.L // 2 + 1)),
    )


def cut_C(layout: ModeLayout) -> Cut:
    """The whole main chain (all even modes)."""
    return Cut(CutName.C, tuple(layout.mode_of_main(i) for i in range(1, layout.L // 2 + 1)))


def custom_cut(modes) -> Cut:
    return Cut(CutName.CUSTOM, tuple(sorted(int(q) for q in modes)))


def _require_quarter(layout: ModeLayout) -> None:
    if layout.L % 4 != 0:
        raise ValueError(f"cuts B/Bprime need L divisible by 4, got L={layout.L}")


@dataclass(frozen=True)
class CutIndex:
    """Precomputed word -> (row, col, sign) tables for one cut of a basis."""

    cut: Cut
    convention: str
    rows: np.ndarray  # (dim,) compressed cut-pattern index
    cols: np.ndarray  # (dim,) compressed complement-pattern index
    signs: np.ndarray | None  # (dim,) +-1.0, None for block-local
    row_patterns: np.ndarray  # realized cut occupation patterns, ascending
    n_rows: int
    n_cols: int


def cut_index(basis: FockBasis, cut: Cut, convention: str = "block-local") -> CutIndex:
    """Build (and cache on the basis) the grouping tables for a cut."""
    check_convention(convention)
    for q in cut.modes:
        if not (0 <= q < basis.L):
            raise ValueError(f"cut mode {q} outside 0..{basis.L - 1}")
    try:
        cache = basis._cut_cache
    except AttributeError:
        cache = basis._cut_cache = {}
    key = (cut, convention)
    if key not in cache:
        cache[key] = _build_cut_index(basis, cut, convention)
    return cache[key]


def _build_cut_index(basis: FockBasis, cut: Cut, convention: str) -> CutIndex:
    words = basis.states
    cut_modes = sorted(cut.modes)
    comp_modes = [q for q in range(basis.L) if q not in set(cut_modes)]

    def pack(modes) -> np.ndarray:
        pat = np.zeros(basis.dim, dtype=np.uint64)
        for k, q in enumerate(modes):
            pat |= ((words >> np.uint64(q)) & np.uint64(1)) << np.uint64(k)
        return pat

    row_patterns, rows = np.unique(pack(cut_modes), return_inverse=True)
    col_patterns, cols = np.unique(pack(comp_modes), return_inverse=True)

    signs = None
    if convention == "jw-exact":
        comp_mask = np.uint64(0)
        for q in comp_modes:
            comp_mask |= np.uint64(1) << np.uint64(q)
        inv = np.zeros(basis.dim, dtype=np.uint64)
        for q in cut_modes:
            below = comp_mask & np.uint64((1 << q) - 1)
            occ_q = (words >> np.uint64(q)) & np.uint64(1)
            inv += occ_q * np.bitwise_count(words & below)
        signs = 1.0 - 2.0 * (inv & np.uint64(1)).astype(np.float64)

    return CutIndex(
        cut=cut,
        convention=convention,
        rows=rows.astype(np.int64),
        cols=cols.astype(np.int64),
        signs=signs,
        row_patterns=row_patterns,
        n_rows=len(row_patterns),
        n_cols=len(col_patterns),
    )


def schmidt_matrix(state: StateVector, ix: CutIndex) -> np.ndarray:
    m = np.zeros((ix.n_rows, ix.n_cols), dtype=np.complex128)
    amps = state.amps if ix.signs is None else state.amps * ix.signs
    m[ix.rows, ix.cols] = amps
    return m


def entropy_from_index(state: StateVector, ix: CutIndex) -> float:
    s = np.linalg.svd(schmidt_matrix(state, ix), compute_uv=False)
    lam = s * s
    lam = lam[lam > EIGENVALUE_CLAMP]
    # roundoff can push an eigenvalue a hair above 1; entropy is >= 0
    return max(float(-np.sum(lam * np.log(lam))), 0.0)


def entanglement_entropy(state: StateVector, cut: Cut, convention: str = "block-local") -> float:
    """Von Neumann entropy of the reduced state on ``cut``, in nats."""
    return entropy_from_index(state, cut_index(state.basis, cut, convention))


@dataclass(frozen=True)
class ReducedDensityMatrix:
    """Explicit reduced density matrix on the 2^|cut| occupation basis.

    The occupation basis is ordered by the packed cut pattern (lowest cut
    mode = least significant bit).
    """

    cut: Cut
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = self.matrix
        if np.abs(m - m.conj().T).max() > 1e-12:
            raise ValueError("reduced density matrix is not Hermitian")
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"reduced density matrix has trace {tr!r}")
        evals = np.linalg.eigvalsh(m)
        if evals.min() < -1e-10 or evals.max() > 1.0 + 1e-10:
            raise ValueError("reduced density matrix eigenvalues outside [0, 1]")


def reduced_density_matrix(
    state: StateVector, cut: Cut, convention: str = "block-local"
) -> ReducedDensityMatrix:
    """Build rho on the cut by grouping amplitudes into a Schmidt matrix."""
    if len(cut.modes) > MAX_EXPLICIT_CUT:
        raise ValueError(f"explicit RDM limited to cuts of <= {MAX_EXPLICIT_CUT} modes")
    ix = cut_index(state.basis, cut, convention)
    m = schmidt_matrix(state, ix)
    rho_small = m @ m.conj().T
    full = np.zeros((1 << len(cut.modes),) * 2, dtype=np.complex128)
    pos = ix.row_patterns.astype(np.int64)
    full[np.ix_(pos, pos)] = rho_small
    return ReducedDensityMatrix(cut=cut, matrix=full)


def von_neumann_entropy(rho: ReducedDensityMatrix) -> float:
    """-Tr[rho ln rho] with eigenvalues <= 1e-12 clamped out; nats."""
    lam = np.linalg.eigvalsh(rho.matrix)
    lam = lam[lam > EIGENVALUE_CLAMP]
    return max(float(-np.sum(lam * np.log(lam))), 0.0)


def standard_cut_indices(basis: FockBasis, convention: str = "block-local"):
    """CutIndex triple for (B, Bprime, C)."""
    layout = basis.layout
    return (
        cut_index(basis, cut_B(layout), convention),
        cut_index(basis, cut_Bprime(layout), convention),
        cut_index(basis, cut_C(layout), convention),
    )


def entropies_with_mutual_information(state: StateVector, ixs) -> tuple[float, float, float, float]:
    """(S_B, S_Bprime, S_C, I_BBprime) from precomputed cut indices."""
    s_b = entropy_from_index(state, ixs[0])
    s_bp = entropy_from_index(state, ixs[1])
    s_c = entropy_from_index(state, ixs[2])
    i_bb = s_b + s_bp - s_c
    if i_bb < 0.0 and abs(i_bb) < MUTUAL_INFO_CLAMP:
        i_bb = 0.0
    return s_b, s_bp, s_c, i_bb


def mutual_information(state: StateVector, convention: str = "block-local") -> float:
    """I = S_B + S_Bprime - S_C for the standard half-chain cuts."""
    ixs = standard_cut_indices(state.basis, convention)
    return entropies_with_mutual_information(state, ixs)[3]
