"""Finite XXZ kink chain on the spin-1/2 product basis.

Basis convention: a configuration is an integer whose bit ``x`` refers to
site ``a + x``; a set bit means spin down.  With this convention the total
magnetization sector is fixed by the popcount, so sector masks are cheap.

Kink ground states are built from the explicit configuration weights

    psi_m  ~  sum over configs with total S^3 = m of  q^(-sum of down positions)

which is what ``(S^-)^k |up...up>`` produces (the product over down sites
of ``q^{-x}``; positions measured from the left end, the global factor
drops out after normalization).  All amplitudes are real and nonnegative,
which makes matrix elements of ``S^-`` between neighbouring kinks real.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, ResourceError
from .policy import DEFAULT_POLICY, NumericPolicy

__all__ = [
    "q_from_delta",
    "ChainSpec",
    "popcount",
    "sector_indices",
    "spin_operator",
    "total_sz",
    "is_hermitian",
    "hamiltonian_spin_form",
    "hamiltonian_projector_form",
    "build_hamiltonian",
    "lowering_operator",
    "kink_state",
    "KinkGroundFamily",
    "kink_ground_family",
    "Cluster",
    "SectorBlock",
    "SpectralDecomposition",
    "spectral_decomposition",
    "ground_space_check",
    "gap_scan",
    "richardson_extrapolate",
]


def q_from_delta(delta: float) -> float:
    """Root of ``q**2 - 2*delta*q + 1 = 0`` in (0, 1).

    Written as ``1 / (delta + sqrt(delta**2 - 1))`` so that large
    anisotropies do not lose digits to cancellation.
    """
    delta = float(delta)
    if not delta > 1.0 or not math.isfinite(delta):
        raise DomainError(
            f"anisotropy must satisfy delta > 1 (got {delta}); "
            "the isotropic and easy-plane regimes are not supported"
        )
    return 1.0 / (delta + math.sqrt((delta - 1.0) * (delta + 1.0)))


@dataclass(frozen=True)
class ChainSpec:
    """Sites ``a..b`` of the kink chain with anisotropy ``delta``."""

    a: int
    b: int
    delta: float
    q: float | None = None
    policy: NumericPolicy = field(default=DEFAULT_POLICY, repr=False, compare=False)

    def __post_init__(self):
        if int(self.a) != self.a or int(self.b) != self.b:
            raise DomainError("site indices must be integers")
        if self.b - self.a + 1 < 2:
            raise DomainError(f"chain needs at least two sites (a={self.a}, b={self.b})")
        q = q_from_delta(self.delta) if self.q is None else float(self.q)
        if not 0.0 < q < 1.0:
            raise DomainError(f"q must lie in (0, 1), got {q}")
        mismatch = abs(q + 1.0 / q - 2.0 * self.delta)
        if mismatch > self.policy.q_consistency * max(1.0, 2.0 * self.delta):
            raise DomainError(f"q + 1/q = 2*delta violated by {mismatch:.3e}")
        object.__setattr__(self, "q", q)

    @classmethod
    def centered(cls, L: int, delta: float, **kw) -> "ChainSpec":
        """Chain of ``L`` sites placed so the kink sits between sites 0 and 1."""
        a = -(L // 2 - 1)
        return cls(a, a + L - 1, delta, **kw)

    @property
    def L(self) -> int:
        return self.b - self.a + 1

    @property
    def dim(self) -> int:
        return 1 << self.L

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.a, self.b + 1)

    @property
    def magnetizations(self) -> list[float]:
        """Total S^3 values, from all-down to all-up."""
        return [k - self.L / 2 for k in range(self.L + 1)]

    def bit(self, site: int) -> int:
        if not self.a <= site <= self.b:
            raise DomainError(f"site {site} outside chain [{self.a}, {self.b}]")
        return site - self.a

    def n_down(self, m) -> int:
        two_m = 2.0 * float(m)
        k = round(two_m)
        if abs(two_m - k) > 1e-9 or (self.L - k) % 2:
            raise DomainError(f"magnetization {m} is not a sector of an L={self.L} chain")
        nd = (self.L - k) // 2
        if not 0 <= nd <= self.L:
            raise DomainError(f"magnetization {m} outside [-{self.L}/2, {self.L}/2]")
        return nd


# ---------------------------------------------------------------------------
# basis helpers

def popcount(arr) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.int64)
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(arr).astype(np.int64)
    out = np.zeros_like(arr)
    work = arr.copy()
    while np.any(work):
        out += work & 1
        work >>= 1
    return out


def sector_indices(L: int, n_down: int) -> np.ndarray:
    idx = np.arange(1 << L, dtype=np.int64)
    return idx[popcount(idx) == n_down]


def _bits(L: int) -> np.ndarray:
    """``(2**L, L)`` array of occupation bits (1 = down)."""
    idx = np.arange(1 << L, dtype=np.int64)
    return (idx[:, None] >> np.arange(L)) & 1


def spin_operator(chain: ChainSpec, component: str, site: int) -> sp.csr_matrix:
    """Single-site spin operator ``S^c_site`` for c in {x, y, z, +, -}."""
    L, x = chain.L, chain.bit(site)
    idx = np.arange(chain.dim, dtype=np.int64)
    down = (idx >> x) & 1
    if component == "z":
        return sp.diags(0.5 - down.astype(float), format="csr")
    # S^+ takes down -> up (clears the bit), S^- sets it
    raise_cols = idx[down == 1]
    lower_cols = idx[down == 0]
    flip = np.int64(1) << x
    splus = sp.csr_matrix(
        (np.ones(raise_cols.size), (raise_cols ^ flip, raise_cols)), shape=(chain.dim,) * 2
    )
    sminus = sp.csr_matrix(
        (np.ones(lower_cols.size), (lower_cols ^ flip, lower_cols)), shape=(chain.dim,) * 2
    )
    if component == "+":
        return splus
    if component == "-":
        return sminus
    if component == "x":
        return (0.5 * (splus + sminus)).tocsr()
    if component == "y":
        return (-0.5j * (splus - sminus)).tocsr()
    raise DomainError(f"unknown spin component {component!r}")


def total_sz(chain: ChainSpec) -> sp.csr_matrix:
    idx = np.arange(chain.dim, dtype=np.int64)
    return sp.diags(chain.L / 2 - popcount(idx).astype(float), format="csr")


def is_hermitian(A, tol: float = DEFAULT_POLICY.hermitian) -> bool:
    if sp.issparse(A):
        diff = (A - A.conj().T).tocoo()
        return diff.nnz == 0 or float(np.max(np.abs(diff.data))) <= tol
    A = np.asarray(A)
    return float(np.max(np.abs(A - A.conj().T), initial=0.0)) <= tol


def _max_abs(A) -> float:
    if sp.issparse(A):
        A = A.tocoo()
        return float(np.max(np.abs(A.data), initial=0.0))
    return float(np.max(np.abs(A), initial=0.0))


# ---------------------------------------------------------------------------
# Hamiltonian

def hamiltonian_spin_form(chain: ChainSpec) -> sp.csr_matrix:
    """Kink Hamiltonian written with nearest-neighbour spin couplings.

    ``-sum_x [ (S1 S1 + S2 S2)/delta + S3 S3 - 1/4 ] - (1/2) sqrt(1 - delta^-2) (S3_a - S3_b)``
    """
    L, dim = chain.L, chain.dim
    idx = np.arange(dim, dtype=np.int64)
    sz = 0.5 - _bits(L).astype(float)
    diag = np.zeros(dim)
    rows, cols, vals = [], [], []
    hop = -0.5 / chain.delta
    for x in range(L - 1):
        diag += 0.25 - sz[:, x] * sz[:, x + 1]
        differ = ((idx >> x) ^ (idx >> (x + 1))) & 1
        src = idx[differ == 1]
        rows.append(src ^ (np.int64(3) << x))
        cols.append(src)
        vals.append(np.full(src.size, hop))
    diag -= 0.5 * math.sqrt(1.0 - chain.delta ** -2) * (sz[:, 0] - sz[:, L - 1])
    rows.append(idx)
    cols.append(idx)
    vals.append(diag)
    H = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )
    H.sum_duplicates()
    return H


def hamiltonian_projector_form(chain: ChainSpec) -> sp.csr_matrix:
    """Sum of rank-one bond projectors onto ``q|up,down> - |down,up>``."""
    L, dim, q = chain.L, chain.dim, chain.q
    idx = np.arange(dim, dtype=np.int64)
    norm = 1.0 + q * q
    rows, cols, vals = [], [], []
    for x in range(L - 1):
        left = (idx >> x) & 1
        right = (idx >> (x + 1)) & 1
        updown = idx[(left == 0) & (right == 1)]
        downup = updown ^ (np.int64(3) << x)
        rows += [updown, downup, updown, downup]
        cols += [updown, downup, downup, updown]
        vals += [
            np.full(updown.size, q * q / norm),
            np.full(updown.size, 1.0 / norm),
            np.full(updown.size, -q / norm),
            np.full(updown.size, -q / norm),
        ]
    H = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )
    H.sum_duplicates()
    return H


def build_hamiltonian(chain: ChainSpec, check: bool = True) -> sp.csr_matrix:
    """Kink Hamiltonian ``H[a, b]``.

    With ``check`` the projector-sum form is built independently and the two
    must agree entrywise to ``policy.hermitian``.
    """
    H = hamiltonian_spin_form(chain)
    if check:
        defect = _max_abs(H - hamiltonian_projector_form(chain))
        if defect > chain.policy.hermitian:
            raise AssertionError(
                f"spin form and projector form of H disagree by {defect:.3e}"
            )
    return H


def lowering_operator(chain: ChainSpec) -> sp.csr_matrix:
    """q-deformed lowering operator ``sum_x S^-_x t_{x+1} ... t_b`` with ``t = q^(2 S^3)``."""
    L, dim, q = chain.L, chain.dim, chain.q
    idx = np.arange(dim, dtype=np.int64)
    bits = _bits(L)
    # exponent of q from the twists to the right of x: +1 per up spin, -1 per down spin
    twist = np.cumsum((1 - 2 * bits)[:, ::-1], axis=1)[:, ::-1]
    rows, cols, vals = [], [], []
    for x in range(L):
        up = bits[:, x] == 0
        src = idx[up]
        power = twist[up, x + 1] if x + 1 < L else np.zeros(src.size, dtype=np.int64)
        rows.append(src | (np.int64(1) << x))
        cols.append(src)
        vals.append(q ** power.astype(float))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )


# ---------------------------------------------------------------------------
# kink ground states

def _kink_sector_amplitudes(chain: ChainSpec, n_down: int) -> tuple[np.ndarray, np.ndarray]:
    idx = sector_indices(chain.L, n_down)
    positions = (((idx[:, None] >> np.arange(chain.L)) & 1) * np.arange(chain.L)).sum(axis=1)
    # weight q^(-sum of down positions); shift the log before exponentiating
    logw = -positions * math.log(chain.q)
    w = np.exp(logw - logw.max())
    return idx, w / np.linalg.norm(w)


def kink_state(chain: ChainSpec, m) -> np.ndarray:
    """Normalized kink ground state with total ``S^3 = m``; real, nonnegative amplitudes."""
    idx, amp = _kink_sector_amplitudes(chain, chain.n_down(m))
    psi = np.zeros(chain.dim)
    psi[idx] = amp
    return psi


@dataclass
class KinkGroundFamily:
    """The ``L + 1`` kink states of a chain and the ground-state projector."""

    chain: ChainSpec
    magnetizations: list[float]
    sector_indices: list[np.ndarray]
    amplitudes: list[np.ndarray]

    def __len__(self):
        return len(self.magnetizations)

    @property
    def states(self) -> list[np.ndarray]:
        out = []
        for idx, amp in zip(self.sector_indices, self.amplitudes):
            v = np.zeros(self.chain.dim)
            v[idx] = amp
            out.append(v)
        return out

    def state(self, m) -> np.ndarray:
        return self.states[self.magnetizations.index(float(m))]

    @cached_property
    def basis(self) -> np.ndarray:
        """``(2**L, L+1)`` matrix whose columns are the kink states, ordered by m."""
        return np.column_stack(self.states)

    @cached_property
    def projector(self) -> sp.csr_matrix:
        if self.chain.L > 12:
            raise ResourceError(
                "explicit ground projector above L=12 is too large; use project() instead"
            )
        rows, cols, vals = [], [], []
        for idx, amp in zip(self.sector_indices, self.amplitudes):
            rows.append(np.repeat(idx, idx.size))
            cols.append(np.tile(idx, idx.size))
            vals.append(np.outer(amp, amp).ravel())
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.chain.dim,) * 2,
        )

    def project(self, v: np.ndarray) -> np.ndarray:
        B = self.basis
        return B @ (B.conj().T @ v)

    def gram(self) -> np.ndarray:
        return self.basis.T @ self.basis

    def orthonormality_defect(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(len(self)))))

    def idempotency_defect(self) -> float:
        """``max |P^2 - P|`` entrywise, using ``P^2 - P = B (G - 1) B^T``.

        Each basis row touches exactly one column of ``B`` (its sector),
        so the maximum factorizes over pairs of sectors.
        """
        G = self.gram() - np.eye(len(self))
        peaks = np.array([np.max(np.abs(a)) for a in self.amplitudes])
        return float(np.max(np.abs(G) * np.outer(peaks, peaks)))

    def residuals(self, H) -> np.ndarray:
        return np.array([np.linalg.norm(H @ v) for v in self.states])


def kink_ground_family(chain: ChainSpec) -> KinkGroundFamily:
    ms, idxs, amps = [], [], []
    for nd in range(chain.L, -1, -1):
        idx, amp = _kink_sector_amplitudes(chain, nd)
        ms.append(chain.L / 2 - nd)
        idxs.append(idx)
        amps.append(amp)
    return KinkGroundFamily(chain, ms, idxs, amps)


# ---------------------------------------------------------------------------
# spectral decomposition

@dataclass
class SectorBlock:
    n_down: int | None
    indices: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray | None


@dataclass
class Cluster:
    energy: float
    members: list[tuple[int, np.ndarray]]

    @property
    def multiplicity(self) -> int:
        return sum(cols.size for _, cols in self.members)


@dataclass
class SpectralDecomposition:
    """Eigen-decomposition grouped into clusters of (numerically) equal energy."""

    dim: int
    blocks: list[SectorBlock]
    clusters: list[Cluster]
    tol: float

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.sort(np.concatenate([b.energies for b in self.blocks]))

    @property
    def energies(self) -> np.ndarray:
        return np.array([c.energy for c in self.clusters])

    def cluster_basis(self, k: int) -> np.ndarray:
        c = self.clusters[k]
        dtype = np.result_type(*(self.blocks[b].vectors.dtype for b, _ in c.members))
        out = np.zeros((self.dim, c.multiplicity), dtype=dtype)
        j = 0
        for b, cols in c.members:
            blk = self.blocks[b]
            out[blk.indices, j:j + cols.size] = blk.vectors[:, cols]
            j += cols.size
        return out

    def bases(self) -> list[np.ndarray]:
        return [self.cluster_basis(k) for k in range(len(self.clusters))]

    def projector(self, k: int) -> np.ndarray:
        Q = self.cluster_basis(k)
        return Q @ Q.conj().T

    def kernel_index(self, threshold: float = DEFAULT_POLICY.kernel_threshold) -> int | None:
        for k, c in enumerate(self.clusters):
            if abs(c.energy) <= threshold:
                return k
        return None

    def gap(self, threshold: float = DEFAULT_POLICY.kernel_threshold) -> float:
        """Smallest cluster energy above ``threshold``."""
        above = [c.energy for c in self.clusters if c.energy > threshold]
        return min(above) if above else math.inf

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for k, c in enumerate(self.clusters):
            out += c.energy * self.projector(k)
        return out


def _infer_sites(dim: int) -> int:
    L = dim.bit_length() - 1
    if 1 << L != dim:
        raise DomainError(f"operator dimension {dim} is not a power of two")
    return L


def _cluster(blocks: list[SectorBlock], tol: float) -> list[Cluster]:
    entries = [
        (e, b, j) for b, blk in enumerate(blocks) for j, e in enumerate(blk.energies)
    ]
    entries.sort(key=lambda t: t[0])
    groups: list[list[tuple]] = []
    for e in entries:
        if groups and e[0] - groups[-1][-1][0] <= tol:
            groups[-1].append(e)
        else:
            groups.append([e])
    clusters = []
    for g in groups:
        by_block: dict[int, list[int]] = {}
        for _, b, j in g:
            by_block.setdefault(b, []).append(j)
        members = [(b, np.array(cols)) for b, cols in sorted(by_block.items())]
        clusters.append(Cluster(float(np.mean([e for e, _, _ in g])), members))
    return clusters


def spectral_decomposition(
    H,
    sectorized: bool = True,
    sectors: Sequence[int] | None = None,
    vectors: bool = True,
    policy: NumericPolicy = DEFAULT_POLICY,
) -> SpectralDecomposition:
    """Dense eigen-decomposition, optionally one total-S^3 sector at a time.

    ``sectors`` restricts the computation to the listed numbers of down
    spins (sectorized mode only).  Eigenvalues closer than
    ``policy.cluster_tol`` are grouped into one cluster.
    """
    dim = H.shape[0]
    L = _infer_sites(dim)
    if L > policy.max_sites:
        raise ResourceError(
            f"L={L} exceeds the exact-diagonalization cap of {policy.max_sites} sites; "
            "use a sector-restricted or iterative method"
        )
    if not is_hermitian(H, policy.hermitian):
        raise DomainError("spectral_decomposition needs a Hermitian operator")
    Hs = sp.csr_matrix(H)

    if not sectorized:
        if dim > policy.dense_dim_cap:
            raise ResourceError(
                f"dense dimension {dim} exceeds cap {policy.dense_dim_cap}; "
                "pass sectorized=True or restrict to sectors"
            )
        dense = Hs.toarray()
        if vectors:
            E, U = np.linalg.eigh(dense)
        else:
            E, U = np.linalg.eigvalsh(dense), None
        blocks = [SectorBlock(None, np.arange(dim), E, U)]
        return SpectralDecomposition(dim, blocks, _cluster(blocks, policy.cluster_tol), policy.cluster_tol)

    coo = Hs.tocoo()
    mask = np.abs(coo.data) > 0
    if np.any(popcount(coo.row[mask]) != popcount(coo.col[mask])):
        raise DomainError("operator mixes total-S^3 sectors; use sectorized=False")
    wanted = range(L + 1) if sectors is None else sectors
    blocks = []
    for nd in wanted:
        idx = sector_indices(L, nd)
        block = Hs[idx][:, idx].toarray()
        if vectors:
            E, U = np.linalg.eigh(block)
        else:
            E, U = np.linalg.eigvalsh(block), None
        blocks.append(SectorBlock(nd, idx, E, U))
    return SpectralDecomposition(dim, blocks, _cluster(blocks, policy.cluster_tol), policy.cluster_tol)


def ground_space_check(L: int, delta: float, policy: NumericPolicy = DEFAULT_POLICY) -> dict:
    """Kernel dimension, worst kink residual and projector idempotency for one chain."""
    chain = ChainSpec.centered(L, delta, policy=policy)
    H = build_hamiltonian(chain)
    fam = kink_ground_family(chain)
    sd = spectral_decomposition(H, vectors=False, policy=policy)
    k0 = sd.kernel_index(policy.kernel_threshold)
    return {
        "L": L,
        "delta": float(delta),
        "kernel_dim": 0 if k0 is None else sd.clusters[k0].multiplicity,
        "max_residual": float(max(fam.residuals(H))),
        "idempotency": float(fam.idempotency_defect()),
    }


def gap_scan(delta: float, sizes, policy: NumericPolicy = DEFAULT_POLICY) -> list[tuple[int, float]]:
    """``(L, smallest nonzero eigenvalue)`` for each chain length."""
    out = []
    for L in sizes:
        H = build_hamiltonian(ChainSpec.centered(int(L), delta, policy=policy))
        out.append((int(L), spectral_decomposition(H, vectors=False, policy=policy).gap(policy.kernel_threshold)))
    return out


def richardson_extrapolate(sizes, values, power: float = 2.0) -> float:
    """Eliminate a ``c / L**power`` correction using the two largest sizes."""
    (L1, g1), (L2, g2) = sorted(zip(sizes, values))[-2:]
    w1, w2 = float(L1) ** power, float(L2) ** power
    return (w2 * g2 - w1 * g1) / (w2 - w1)
