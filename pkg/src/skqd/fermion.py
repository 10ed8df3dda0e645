"""Single-impurity Anderson Hamiltonians and determinant-sector algebra.

The impurity occupies spatial mode 0; bath modes follow. Spin-orbitals are
ordered with the full spin-up block before the spin-down block, modes
ascending within each block, which fixes every fermionic sign below. A
determinant is a pair of occupation bitmasks (up, down) with bit p giving
the occupancy of mode p; the emitted bitstring is the concatenated
(up, down) occupation string with mode 0 first.

The on-site repulsion U n_up n_down stays an exact rank-one two-body tensor
h_pqrs = U w_p w_q w_r w_s under every single-particle rotation used here,
with the weight vector transforming as w -> Xi^T w. Sector operators are
assembled from per-spin one-body matrices and Kronecker products.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from .errors import (
    InvalidSectorError,
    InvalidSizeError,
    NormalizationError,
    ShapeError,
)
from .states import StateVector


# ---------------------------------------------------------------------------
# determinant enumeration


@lru_cache(maxsize=256)
def _spin_tables(n_modes: int, k: int):
    """Masks of all weight-k occupations, sorted by occupation string, plus index map."""
    if not 0 <= k <= n_modes:
        raise InvalidSectorError(f"cannot place {k} electrons in {n_modes} modes")
    masks = []
    for occ in combinations(range(n_modes), k):
        m = 0
        for p in occ:
            m |= 1 << p
        masks.append(m)
    masks.sort(key=lambda m: _mask_to_string(m, n_modes))
    index = {m: i for i, m in enumerate(masks)}
    return tuple(masks), index


def _mask_to_string(mask: int, n_modes: int) -> str:
    return "".join("1" if (mask >> p) & 1 else "0" for p in range(n_modes))


def _string_to_mask(s: str) -> int:
    m = 0
    for p, c in enumerate(s):
        if c == "1":
            m |= 1 << p
    return m


def _parity(mask: int, below: int) -> int:
    """(-1)^(number of occupied modes with index < below)."""
    return -1 if bin(mask & ((1 << below) - 1)).count("1") & 1 else 1


@dataclass(frozen=True, eq=False)
class DeterminantSector:
    """Fixed (n_up, n_down) determinant space with a total lexicographic order."""

    n_modes: int
    n_up: int
    n_down: int

    @property
    def up_masks(self):
        return _spin_tables(self.n_modes, self.n_up)[0]

    @property
    def down_masks(self):
        return _spin_tables(self.n_modes, self.n_down)[0]

    @property
    def dim_up(self) -> int:
        return len(self.up_masks)

    @property
    def dim_down(self) -> int:
        return len(self.down_masks)

    @property
    def dim(self) -> int:
        return self.dim_up * self.dim_down

    @property
    def n_bits(self) -> int:
        return 2 * self.n_modes

    def split(self, index: int) -> tuple:
        return divmod(index, self.dim_down)

    def join(self, i_up: int, i_down: int) -> int:
        return i_up * self.dim_down + i_down

    def masks(self, index: int) -> tuple:
        i_up, i_down = self.split(index)
        return self.up_masks[i_up], self.down_masks[i_down]

    def bitstring(self, index: int) -> str:
        m_up, m_down = self.masks(index)
        return _mask_to_string(m_up, self.n_modes) + _mask_to_string(m_down, self.n_modes)

    def index_of(self, bitstring: str) -> int:
        if len(bitstring) != self.n_bits:
            raise ShapeError(f"bitstring length {len(bitstring)} != {self.n_bits}")
        m_up = _string_to_mask(bitstring[: self.n_modes])
        m_down = _string_to_mask(bitstring[self.n_modes:])
        up_index = _spin_tables(self.n_modes, self.n_up)[1]
        down_index = _spin_tables(self.n_modes, self.n_down)[1]
        if m_up not in up_index or m_down not in down_index:
            raise InvalidSectorError(f"bitstring {bitstring} not in sector "
                                     f"({self.n_up},{self.n_down})")
        return self.join(up_index[m_up], down_index[m_down])

    def index_of_masks(self, m_up: int, m_down: int) -> int:
        up_index = _spin_tables(self.n_modes, self.n_up)[1]
        down_index = _spin_tables(self.n_modes, self.n_down)[1]
        return self.join(up_index[m_up], down_index[m_down])


# ---------------------------------------------------------------------------
# Hamiltonians


@dataclass(frozen=True)
class RankOneInteraction:
    """Two-body tensor h_pqrs = strength * w_p w_q w_r w_s."""

    strength: float
    weights: np.ndarray

    def rotated(self, xi: np.ndarray) -> "RankOneInteraction":
        return RankOneInteraction(self.strength, xi.T @ self.weights)

    def dense(self) -> np.ndarray:
        w = self.weights
        return self.strength * np.einsum("p,q,r,s->pqrs", w, w, w, w)


@dataclass(frozen=True, eq=False)
class FermionHamiltonian:
    """One-body matrix plus an optional two-body interaction and scalar shift."""

    n_modes: int
    h_one: np.ndarray
    interaction: object = None  # RankOneInteraction | dense ndarray | None
    core_shift: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        h = np.asarray(self.h_one, dtype=float)
        if h.shape != (self.n_modes, self.n_modes):
            raise ShapeError(f"h_one of shape {h.shape} for {self.n_modes} modes")
        if np.max(np.abs(h - h.T)) > 1e-12:
            raise ShapeError("h_one must be symmetric to 1e-12")
        object.__setattr__(self, "h_one", h)
        if isinstance(self.interaction, np.ndarray):
            t = self.interaction
            if t.shape != (self.n_modes,) * 4:
                raise ShapeError("dense two-body tensor has wrong shape")
            if (np.max(np.abs(t - t.transpose(1, 0, 3, 2))) > 1e-12
                    or np.max(np.abs(t - t.transpose(2, 3, 0, 1))) > 1e-12):
                raise ShapeError("two-body tensor lacks the required symmetries")


def build_siam_position(L: int, U: float, t: float = 1.0, V: float = -1.0,
                        eps_imp: float = None) -> FermionHamiltonian:
    """Impurity + open bath chain of L sites in the position basis.

    Defaults follow the particle-hole symmetric point: t=1, V=-1 and
    eps_imp=-U/2 when eps_imp is not given.
    """
    if L < 1:
        raise InvalidSizeError(f"need at least one bath site, got L={L}")
    if eps_imp is None:
        eps_imp = -U / 2.0
    n = L + 1
    h = np.zeros((n, n))
    h[0, 0] = eps_imp
    h[0, 1] = h[1, 0] = V
    for i in range(1, L):
        h[i, i + 1] = h[i + 1, i] = -t
    w = np.zeros(n)
    w[0] = 1.0
    return FermionHamiltonian(n, h, RankOneInteraction(float(U), w))


@dataclass(frozen=True)
class BasisRotation:
    """Orthonormal single-particle map; column p holds the new mode p in old modes."""

    xi: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        n = xi.shape[0]
        if xi.shape != (n, n):
            raise ShapeError("rotation must be square")
        if np.max(np.abs(xi.T @ xi - np.eye(n))) > 1e-10:
            raise ShapeError("rotation is not orthonormal to 1e-10")
        object.__setattr__(self, "xi", xi)


def accumulate_rotations(chain) -> np.ndarray:
    """Position-to-current map for a rotation chain applied left to right."""
    if chain is None:
        return None
    if isinstance(chain, BasisRotation):
        return chain.xi
    if isinstance(chain, np.ndarray):
        return chain
    total = None
    for rot in chain:
        xi = rot.xi if isinstance(rot, BasisRotation) else np.asarray(rot)
        total = xi if total is None else total @ xi
    return total


def _fix_column_signs(mat: np.ndarray) -> np.ndarray:
    out = mat.copy()
    for c in range(out.shape[1]):
        i = int(np.argmax(np.abs(out[:, c])))
        if out[i, c] < 0:
            out[:, c] = -out[:, c]
    return out


def to_momentum_basis(h: FermionHamiltonian):
    """Diagonalize the bath hopping block; the impurity mode stays put.

    Bath modes come out ordered by ascending single-particle energy, so the
    hybridization row holds V_k = V * Xi_{0k}.
    """
    n = h.n_modes
    t_block = h.h_one[1:, 1:]
    eps_k, xi = np.linalg.eigh(t_block)
    xi = _fix_column_signs(xi)
    full = np.eye(n)
    full[1:, 1:] = xi
    h_new = full.T @ h.h_one @ full
    interaction = h.interaction
    if isinstance(interaction, RankOneInteraction):
        interaction = interaction.rotated(full)
    rotated = FermionHamiltonian(n, h_new, interaction, h.core_shift)
    return rotated, BasisRotation(full)


def to_k_adjacent_natural_orbitals(h_mom: FermionHamiltonian, gamma: "OneRdm", k_f: int):
    """Block-diagonalize the 1-RDM around the Fermi level.

    Blocks (in overall mode indices, bath k-mode k sits at index k+1):
    the impurity with bath modes k_f-1, k_f, k_f+1; the Fermi sea below
    (bath 0..k_f-2); the remaining modes above (bath k_f+2..L-1). Within a
    block, natural orbitals are ordered by descending occupation and
    sign-fixed on their largest component.
    """
    n = h_mom.n_modes
    L = n - 1
    if not (k_f - 1 >= 0 and k_f + 1 <= L - 1):
        raise IndexError(f"Fermi index {k_f} needs k_f-1 >= 0 and k_f+1 <= {L - 1}")
    g = np.asarray(gamma.gamma if isinstance(gamma, OneRdm) else gamma, dtype=float)
    if g.shape != (n, n):
        raise ShapeError(f"1-RDM of shape {g.shape} for {n} modes")
    blocks = [
        [0, k_f, k_f + 1, k_f + 2],
        list(range(1, k_f)),
        list(range(k_f + 3, n)),
    ]
    xi = np.zeros((n, n))
    for blk in blocks:
        if not blk:
            continue
        sub = g[np.ix_(blk, blk)]
        occ, vecs = np.linalg.eigh(sub)
        vecs = _fix_column_signs(vecs[:, np.argsort(-occ)])
        xi[np.ix_(blk, blk)] = vecs
    h_new = xi.T @ h_mom.h_one @ xi
    interaction = h_mom.interaction
    if isinstance(interaction, RankOneInteraction):
        interaction = interaction.rotated(xi)
    rotated = FermionHamiltonian(n, h_new, interaction, h_mom.core_shift)
    return rotated, BasisRotation(xi)


def sector(h: FermionHamiltonian, n_up: int, n_down: int) -> DeterminantSector:
    if not (0 <= n_up <= h.n_modes and 0 <= n_down <= h.n_modes):
        raise InvalidSectorError(
            f"({n_up},{n_down}) electrons do not fit in {h.n_modes} modes"
        )
    return DeterminantSector(h.n_modes, n_up, n_down)


def half_filling_sector(h: FermionHamiltonian) -> DeterminantSector:
    """Equal-spin half filling: n_up = n_down = n_modes // 2."""
    k = h.n_modes // 2
    return sector(h, k, k)


# ---------------------------------------------------------------------------
# second-quantized kernels


def one_body_moves(a: np.ndarray, n_modes: int, masks, index):
    """Moves of sum_pq a_pq c+_p c_q within one spin species.

    Returns a list over source determinants of (target, amplitude) pairs,
    signs from the parity of occupied modes preceding the touched ones.
    """
    cols = [np.nonzero(a[:, q])[0] for q in range(n_modes)]
    moves = []
    for m in masks:
        out = []
        q = m
        while q:
            qbit = q & -q
            qi = qbit.bit_length() - 1
            q ^= qbit
            mq = m ^ qbit
            sq = _parity(m, qi)
            for p in cols[qi]:
                pbit = 1 << p
                if mq & pbit:
                    continue
                s = sq * _parity(mq, p)
                out.append((index[mq | pbit], s * a[p, qi]))
        moves.append(out)
    return moves


def one_body_matrix(a: np.ndarray, n_modes: int, k: int) -> sp.csr_matrix:
    """Sparse matrix of a one-body operator in the weight-k determinant space."""
    masks, index = _spin_tables(n_modes, k)
    rows, cols, vals = [], [], []
    for j, out in enumerate(one_body_moves(a, n_modes, masks, index)):
        for i, v in out:
            rows.append(i)
            cols.append(j)
            vals.append(v)
    d = len(masks)
    return sp.csr_matrix((vals, (rows, cols)), shape=(d, d))


def annihilation_matrix(u: np.ndarray, n_modes: int, k: int) -> sp.csr_matrix:
    """Matrix of b(u) = sum_q u_q c_q from weight-k to weight-(k-1) space."""
    masks_k, _ = _spin_tables(n_modes, k)
    _, index_km1 = _spin_tables(n_modes, k - 1)
    rows, cols, vals = [], [], []
    for j, m in enumerate(masks_k):
        for q in range(n_modes):
            if u[q] == 0.0 or not (m >> q) & 1:
                continue
            rows.append(index_km1[m ^ (1 << q)])
            cols.append(j)
            vals.append(_parity(m, q) * u[q])
    shape = (len(_spin_tables(n_modes, k - 1)[0]), len(masks_k))
    return sp.csr_matrix((vals, (rows, cols)), shape=shape)


def _pair_blocks(h: FermionHamiltonian, sec: DeterminantSector):
    """Per-spin sparse blocks (A_up, A_down, W_up, W_down) for h in the sector."""
    key = ("blocks", sec)
    if key not in h._cache:
        a_up = one_body_matrix(h.h_one, h.n_modes, sec.n_up)
        a_down = a_up if sec.n_down == sec.n_up else one_body_matrix(
            h.h_one, h.n_modes, sec.n_down)
        w_up = w_down = None
        if isinstance(h.interaction, RankOneInteraction):
            ww = np.outer(h.interaction.weights, h.interaction.weights)
            w_up = one_body_matrix(ww, h.n_modes, sec.n_up)
            w_down = w_up if sec.n_down == sec.n_up else one_body_matrix(
                ww, h.n_modes, sec.n_down)
        h._cache[key] = (a_up, a_down, w_up, w_down)
    return h._cache[key]


def sector_matrix(h: FermionHamiltonian, sec: DeterminantSector) -> sp.csr_matrix:
    """Sparse sector Hamiltonian via Kronecker composition of spin blocks."""
    key = ("matrix", sec)
    if key in h._cache:
        return h._cache[key]
    a_up, a_down, w_up, w_down = _pair_blocks(h, sec)
    i_up = sp.identity(sec.dim_up, format="csr")
    i_down = sp.identity(sec.dim_down, format="csr")
    mat = sp.kron(a_up, i_down) + sp.kron(i_up, a_down)
    if w_up is not None:
        mat = mat + h.interaction.strength * sp.kron(w_up, w_down)
    elif isinstance(h.interaction, np.ndarray):
        mat = mat + _dense_two_body_matrix(h.interaction, h.n_modes, sec)
    if h.core_shift:
        mat = mat + h.core_shift * sp.identity(sec.dim, format="csr")
    mat = mat.tocsr()
    h._cache[key] = mat
    return mat


def _dense_two_body_matrix(t: np.ndarray, n_modes: int, sec: DeterminantSector):
    # H2 = (1/2) sum_{pqrs,st} h_pqrs [E_pr,s E_qs,t - d_st d_qr E_ps,s]
    # Same-spin part collapses to one matrix per species; cross part is a
    # Kronecker sum over (p,r),(q,s) pairs. Only used for small test systems.
    def e_mat(p, r, k):
        a = np.zeros((n_modes, n_modes))
        a[p, r] = 1.0
        return one_body_matrix(a, n_modes, k)

    def same_spin(k):
        dim = len(_spin_tables(n_modes, k)[0])
        acc = sp.csr_matrix((dim, dim))
        cache = {}
        for p in range(n_modes):
            for r in range(n_modes):
                if (p, r) not in cache:
                    cache[(p, r)] = e_mat(p, r, k)
        for p in range(n_modes):
            for q in range(n_modes):
                for r in range(n_modes):
                    for s in range(n_modes):
                        if t[p, q, r, s] == 0.0:
                            continue
                        acc = acc + t[p, q, r, s] * (cache[(p, r)] @ cache[(q, s)])
                        if q == r:
                            acc = acc - t[p, q, r, s] * cache[(p, s)]
        return 0.5 * acc

    i_up = sp.identity(sec.dim_up, format="csr")
    i_down = sp.identity(sec.dim_down, format="csr")
    total = sp.kron(same_spin(sec.n_up), i_down) + sp.kron(i_up, same_spin(sec.n_down))
    cache_up, cache_down = {}, {}
    for p in range(n_modes):
        for r in range(n_modes):
            cache_up[(p, r)] = e_mat(p, r, sec.n_up)
            cache_down[(p, r)] = (cache_up[(p, r)] if sec.n_down == sec.n_up
                                  else e_mat(p, r, sec.n_down))
    for p in range(n_modes):
        for q in range(n_modes):
            for r in range(n_modes):
                for s in range(n_modes):
                    if t[p, q, r, s] == 0.0:
                        continue
                    total = total + t[p, q, r, s] * sp.kron(cache_up[(p, r)],
                                                            cache_down[(q, s)])
    return total


def sector_apply(h: FermionHamiltonian, sec: DeterminantSector, v: StateVector) -> StateVector:
    """H @ v within the sector, via the cached sparse sector operator."""
    if v.dim != sec.dim:
        raise ShapeError(f"state of length {v.dim} for sector of dimension {sec.dim}")
    return StateVector(sector_matrix(h, sec) @ v.amps, v.basis)


def determinant_moves(h: FermionHamiltonian, sec: DeterminantSector):
    """Per-spin move tables used to enumerate H applied to one determinant.

    Returns (one_up, one_down, rank_up, rank_down, strength): each table maps
    a spin-determinant index to a list of (target index, amplitude). The
    rank-one tables enumerate the generalized number operator b+(w) b(w).
    """
    key = ("moves", sec)
    if key in h._cache:
        return h._cache[key]
    up_masks, up_index = _spin_tables(h.n_modes, sec.n_up)
    down_masks, down_index = _spin_tables(h.n_modes, sec.n_down)
    one_up = one_body_moves(h.h_one, h.n_modes, up_masks, up_index)
    one_down = (one_up if sec.n_down == sec.n_up
                else one_body_moves(h.h_one, h.n_modes, down_masks, down_index))
    rank_up = rank_down = None
    strength = 0.0
    if isinstance(h.interaction, RankOneInteraction):
        ww = np.outer(h.interaction.weights, h.interaction.weights)
        strength = h.interaction.strength
        rank_up = one_body_moves(ww, h.n_modes, up_masks, up_index)
        rank_down = (rank_up if sec.n_down == sec.n_up
                     else one_body_moves(ww, h.n_modes, down_masks, down_index))
    elif h.interaction is not None:
        raise NotImplementedError(
            "determinant enumeration supports rank-one interactions only")
    h._cache[key] = (one_up, one_down, rank_up, rank_down, strength)
    return h._cache[key]


# ---------------------------------------------------------------------------
# observables


@dataclass(frozen=True)
class OneRdm:
    """Spin-summed one-body reduced density matrix."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if np.max(np.abs(g - g.T)) > 1e-9:
            raise ShapeError("1-RDM must be symmetric")
        object.__setattr__(self, "gamma", g)

    @property
    def trace(self) -> float:
        return float(np.trace(self.gamma))

    def occupations(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.gamma)


def one_rdm(sec: DeterminantSector, v: StateVector) -> OneRdm:
    """Gamma_pq = sum_sigma <v| c+_p,sigma c_q,sigma |v> for a normalized v."""
    if v.dim != sec.dim:
        raise ShapeError("state does not match the sector")
    v.require_normalized(1e-8)
    n = sec.n_modes
    vt = v.amps.reshape(sec.dim_up, sec.dim_down)
    gamma = np.zeros((n, n))

    def accumulate(masks, index, contract):
        for j, m in enumerate(masks):
            q = m
            while q:
                qbit = q & -q
                qi = qbit.bit_length() - 1
                q ^= qbit
                mq = m ^ qbit
                sq = _parity(m, qi)
                for p in range(n):
                    pbit = 1 << p
                    if mq & pbit:
                        continue
                    s = sq * _parity(mq, p)
                    gamma[p, qi] += s * contract(index[mq | pbit], j)

    up_masks, up_index = _spin_tables(n, sec.n_up)
    down_masks, down_index = _spin_tables(n, sec.n_down)
    accumulate(up_masks, up_index,
               lambda i, j: float(np.real(np.vdot(vt[i, :], vt[j, :]))))
    accumulate(down_masks, down_index,
               lambda i, j: float(np.real(np.vdot(vt[:, i], vt[:, j]))))
    return OneRdm((gamma + gamma.T) / 2.0)


def _mode_vector(rotation, n_modes: int, position_mode: int) -> np.ndarray:
    r = accumulate_rotations(rotation)
    if r is None:
        u = np.zeros(n_modes)
        u[position_mode] = 1.0
        return u
    return np.asarray(r)[position_mode, :].copy()


def _number_expect(w_up, w_down, vt):
    up = float(np.real(np.sum(np.conj(vt) * (w_up @ vt))))
    down = float(np.real(np.sum(np.conj(vt) * (vt @ w_down.T))))
    return up, down


def staggered_spin_correlation(sec: DeterminantSector, v: StateVector, j: int,
                               rotation_chain=None) -> float:
    """(-1)^j [ <S_d . S_j> - <S_d> . <S_j> ] with Pauli-convention spin operators.

    Operators are defined on position modes (impurity d, bath site j) and
    rotated into the basis of v through the accumulated rotation chain.
    """
    n = sec.n_modes
    if not 0 <= j <= n - 2:
        raise IndexError(f"bath site {j} outside 0..{n - 2}")
    if v.dim != sec.dim:
        raise ShapeError("state does not match the sector")
    u_d = _mode_vector(rotation_chain, n, 0)
    u_j = _mode_vector(rotation_chain, n, j + 1)
    vt = v.amps.reshape(sec.dim_up, sec.dim_down)

    n_d = one_body_matrix(np.outer(u_d, u_d), n, sec.n_up)
    n_j = one_body_matrix(np.outer(u_j, u_j), n, sec.n_up)
    n_d_dn = (n_d if sec.n_down == sec.n_up
              else one_body_matrix(np.outer(u_d, u_d), n, sec.n_down))
    n_j_dn = (n_j if sec.n_down == sec.n_up
              else one_body_matrix(np.outer(u_j, u_j), n, sec.n_down))

    au_d, au_j = n_d @ vt, n_j @ vt
    ad_d, ad_j = vt @ n_d_dn.T, vt @ n_j_dn.T
    szsz = float(np.real(
        np.vdot(au_d, au_j) - np.vdot(au_d, ad_j)
        - np.vdot(ad_d, au_j) + np.vdot(ad_d, ad_j)))
    nd_up, nd_dn = _number_expect(n_d, n_d_dn, vt)
    nj_up, nj_dn = _number_expect(n_j, n_j_dn, vt)
    sz_d, sz_j = nd_up - nd_dn, nj_up - nj_dn

    # transverse part: S^x_d S^x_j + S^y_d S^y_j = 2 (S+_d S-_j + S-_d S+_j)
    # with S+ = c+_up c_dn, evaluated as overlaps of lowered/raised states.
    # Down-block operators see the parity of the up count at application time.
    def lowered(u):
        # S-(u) v = c+_dn(u) c_up(u) v, lives in sector (n_up-1, n_down+1)
        b_up = annihilation_matrix(u, n, sec.n_up)
        c_dn = annihilation_matrix(u, n, sec.n_down + 1).T
        sgn = (-1) ** (sec.n_up - 1)
        return sgn * (c_dn @ (b_up @ vt).T).T

    def raised(u):
        # S+(u) v = c+_up(u) c_dn(u) v, lives in sector (n_up+1, n_down-1)
        b_dn = annihilation_matrix(u, n, sec.n_down)
        c_up = annihilation_matrix(u, n, sec.n_up + 1).T
        sgn = (-1) ** sec.n_up
        return sgn * (c_up @ (b_dn @ vt.T).T)

    flip_lower = flip_raise = 0.0
    if sec.n_up >= 1 and sec.n_down <= n - 1:
        flip_lower = float(np.real(np.vdot(lowered(u_d), lowered(u_j))))
    if sec.n_down >= 1 and sec.n_up <= n - 1:
        flip_raise = float(np.real(np.vdot(raised(u_d), raised(u_j))))

    dot = szsz + 2.0 * (flip_lower + flip_raise)
    value = dot - sz_d * sz_j
    return (-1) ** j * value


def staggered_density_correlation(sec: DeterminantSector, v: StateVector, j: int,
                                  rotation_chain=None) -> float:
    """(-1)^j sum_sigma [ <n_d,sigma n_j,sigma> - <n_d,sigma><n_j,sigma> ]."""
    n = sec.n_modes
    if not 0 <= j <= n - 2:
        raise IndexError(f"bath site {j} outside 0..{n - 2}")
    if v.dim != sec.dim:
        raise ShapeError("state does not match the sector")
    u_d = _mode_vector(rotation_chain, n, 0)
    u_j = _mode_vector(rotation_chain, n, j + 1)
    vt = v.amps.reshape(sec.dim_up, sec.dim_down)
    n_d = one_body_matrix(np.outer(u_d, u_d), n, sec.n_up)
    n_j = one_body_matrix(np.outer(u_j, u_j), n, sec.n_up)
    n_d_dn = (n_d if sec.n_down == sec.n_up
              else one_body_matrix(np.outer(u_d, u_d), n, sec.n_down))
    n_j_dn = (n_j if sec.n_down == sec.n_up
              else one_body_matrix(np.outer(u_j, u_j), n, sec.n_down))
    nd_up, nd_dn = _number_expect(n_d, n_d_dn, vt)
    nj_up, nj_dn = _number_expect(n_j, n_j_dn, vt)
    up_term = float(np.real(np.vdot(n_d @ vt, n_j @ vt))) - nd_up * nj_up
    down_term = float(np.real(np.vdot(vt @ n_d_dn.T, vt @ n_j_dn.T))) - nd_dn * nj_dn
    return (-1) ** j * (up_term + down_term)
