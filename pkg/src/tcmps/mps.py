"""Matrix product states for qubit chains.

Site tensors have legs ``(left bond, physical, right bond)``. Site 0 is the
most significant bit of a computational-basis index, so the dense vector of
an MPS is ``psi[b_0 b_1 ... b_{N-1}]`` in row-major order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

DEFAULT_CUTOFF = 1e-14


class MPSError(ValueError):
    """Invalid MPS operation (bad site, non-unitary gate, length mismatch)."""


def _svd(m: np.ndarray):
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but robust
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


def truncation_rank(s: np.ndarray, cutoff: float, max_bond: int | None) -> int:
    """Number of singular values kept.

    Drops the smallest values while the discarded weight ``sum s^2`` stays at
    or below ``cutoff`` times the total weight.
    """
    w = s * s
    total = w.sum()
    keep = len(s)
    if cutoff > 0 and total > 0:
        # tail[i] = weight of s[i:], non-increasing
        tail = np.cumsum(w[::-1])[::-1]
        ok = np.nonzero(tail <= cutoff * total)[0]
        if ok.size:
            keep = max(1, int(ok[0]))
    if max_bond is not None:
        keep = min(keep, max_bond)
    return max(1, keep)


class MPS:
    """Open-boundary MPS with a tracked orthogonality center.

    Gates are applied in place; methods return ``self`` for chaining.
    """

    def __init__(self, tensors, cutoff: float = DEFAULT_CUTOFF, max_bond: int | None = None,
                 ortho_center: int | None = None, check_unitary: bool = False):
        self.tensors = [np.asarray(t, dtype=complex) for t in tensors]
        if not self.tensors:
            raise MPSError("an MPS needs at least one site")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise MPSError("boundary bonds must have dimension 1")
        for a, b in zip(self.tensors, self.tensors[1:]):
            if a.shape[2] != b.shape[0]:
                raise MPSError(f"bond mismatch {a.shape} -> {b.shape}")
        self.cutoff = float(cutoff)
        self.max_bond = max_bond
        self.ortho_center = ortho_center
        self.check_unitary = check_unitary
        self.truncation_error = 0.0

    def __len__(self) -> int:
        return len(self.tensors)

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def copy(self) -> "MPS":
        out = MPS([t.copy() for t in self.tensors], self.cutoff, self.max_bond,
                  self.ortho_center, self.check_unitary)
        out.truncation_error = self.truncation_error
        return out

    # -- canonical form -------------------------------------------------

    def _left_step(self, i: int) -> None:
        """QR site ``i`` into a left isometry, push R into site ``i+1``."""
        a = self.tensors[i]
        dl, d, dr = a.shape
        q, r = np.linalg.qr(a.reshape(dl * d, dr))
        self.tensors[i] = q.reshape(dl, d, q.shape[1])
        self.tensors[i + 1] = np.tensordot(r, self.tensors[i + 1], axes=(1, 0))

    def _right_step(self, i: int) -> None:
        """LQ site ``i`` into a right isometry, push L into site ``i-1``."""
        a = self.tensors[i]
        dl, d, dr = a.shape
        q, r = np.linalg.qr(a.reshape(dl, d * dr).T)
        self.tensors[i] = q.T.reshape(q.shape[1], d, dr)
        self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], r.T, axes=(2, 0))

    def canonicalize(self, center: int) -> "MPS":
        """Move the orthogonality center to ``center``."""
        n = self.n_sites
        if not 0 <= center < n:
            raise MPSError(f"site {center} out of range for {n} sites")
        if self.ortho_center is None:
            for i in range(center):
                self._left_step(i)
            for i in range(n - 1, center, -1):
                self._right_step(i)
        else:
            for i in range(self.ortho_center, center):
                self._left_step(i)
            for i in range(self.ortho_center, center, -1):
                self._right_step(i)
        self.ortho_center = center
        return self

    # -- norms ----------------------------------------------------------

    def norm(self) -> float:
        if self.ortho_center is not None:
            return float(np.linalg.norm(self.tensors[self.ortho_center]))
        return float(np.sqrt(abs(inner(self, self))))

    def normalize(self) -> "MPS":
        """Scale to unit norm. Raises on a zero-norm state."""
        if self.ortho_center is None:
            self.canonicalize(0)
        c = self.ortho_center
        nrm = np.linalg.norm(self.tensors[c])
        if nrm == 0.0 or not np.isfinite(nrm):
            raise MPSError("cannot normalize a zero-norm state")
        if abs(nrm - 1.0) > 1e-15:
            self.tensors[c] = self.tensors[c] / nrm
        return self

    # -- gates ----------------------------------------------------------

    def _check_site(self, site: int) -> None:
        if not 0 <= site < self.n_sites:
            raise MPSError(f"site {site} out of range for {self.n_sites} sites")

    def _check_unitary(self, u: np.ndarray) -> None:
        if self.check_unitary and not np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=1e-12, rtol=0):
            raise MPSError("gate is not unitary within 1e-12")

    def apply_1q(self, site: int, u) -> "MPS":
        """Exact single-site gate; leaves the canonical form intact."""
        self._check_site(site)
        u = np.asarray(u, dtype=complex)
        if u.shape != (2, 2):
            raise MPSError(f"1q gate must be 2x2, got {u.shape}")
        self._check_unitary(u)
        self.tensors[site] = np.einsum("st,atb->asb", u, self.tensors[site])
        return self

    def apply_diag_1q(self, site: int, d0: complex, d1: complex) -> "MPS":
        """Diagonal single-site gate ``diag(d0, d1)``."""
        t = self.tensors[site].copy()
        t[:, 0, :] *= d0
        t[:, 1, :] *= d1
        self.tensors[site] = t
        return self

    def apply_2q(self, left_site: int, u, right_site: int | None = None,
                 center_right: bool = True) -> "MPS":
        """Gate on sites ``(left_site, left_site + 1)`` with SVD truncation.

        ``u`` is 4x4 in the basis ``|s_left s_right>``. The discarded weight
        is rescaled away so the norm is unchanged. The orthogonality center
        ends on the right site unless ``center_right`` is false.
        """
        if right_site is not None and right_site != left_site + 1:
            raise MPSError(f"2q gates need adjacent sites, got ({left_site}, {right_site})")
        self._check_site(left_site)
        if left_site + 1 >= self.n_sites:
            raise MPSError(f"no site to the right of {left_site}")
        u = np.asarray(u, dtype=complex)
        if u.shape != (4, 4):
            raise MPSError(f"2q gate must be 4x4, got {u.shape}")
        self._check_unitary(u)

        i = left_site
        if self.ortho_center is None or self.ortho_center not in (i, i + 1):
            target = i if self.ortho_center is None or self.ortho_center <= i else i + 1
            self.canonicalize(target)
        a, b = self.tensors[i], self.tensors[i + 1]
        dl, dr = a.shape[0], b.shape[2]
        theta = np.tensordot(a, b, axes=(2, 0))  # (dl, 2, 2, dr)
        theta = np.einsum("xy,ayb->axb", u, theta.reshape(dl, 4, dr))
        m = theta.reshape(dl * 2, 2 * dr)
        uu, s, vh = _svd(m)
        k = truncation_rank(s, self.cutoff, self.max_bond)
        if k < len(s):
            kept = s[:k]
            total = np.sqrt(np.sum(s * s))
            self.truncation_error += float(np.sum(s[k:] ** 2) / total**2) if total > 0 else 0.0
            nk = np.sqrt(np.sum(kept * kept))
            s = kept * (total / nk) if nk > 0 else kept
            uu, vh = uu[:, :k], vh[:k]
        if center_right:
            self.tensors[i] = uu.reshape(dl, 2, k)
            self.tensors[i + 1] = (s[:, None] * vh).reshape(k, 2, dr)
            self.ortho_center = i + 1
        else:
            self.tensors[i] = (uu * s[None, :]).reshape(dl, 2, k)
            self.tensors[i + 1] = vh.reshape(k, 2, dr)
            self.ortho_center = i
        return self

    # -- conversions ----------------------------------------------------

    def to_dense(self) -> np.ndarray:
        """Full state vector of length ``2**N`` (site 0 most significant)."""
        psi = self.tensors[0]
        for t in self.tensors[1:]:
            psi = np.tensordot(psi, t, axes=(psi.ndim - 1, 0))
        return psi.reshape(-1)

    def amplitude(self, bits) -> complex:
        v = np.ones(1, dtype=complex)
        for t, b in zip(self.tensors, bits):
            v = v @ t[:, int(b), :]
        return complex(v[0])

    def bond_profile_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("site,bond_dim\n")
            for i, d in enumerate(self.bond_dims):
                fh.write(f"{i},{d}\n")


def product_state(bits, cutoff: float = DEFAULT_CUTOFF, max_bond: int | None = None) -> MPS:
    """Computational basis state, e.g. ``product_state("010")``."""
    bits = [int(b) for b in bits]
    if not bits:
        raise MPSError("bits must be nonempty")
    tensors = []
    for b in bits:
        if b not in (0, 1):
            raise MPSError(f"bits must be 0/1, got {b}")
        t = np.zeros((1, 2, 1), dtype=complex)
        t[0, b, 0] = 1.0
        tensors.append(t)
    return MPS(tensors, cutoff, max_bond, ortho_center=0)


def product_state_from_vectors(vectors, cutoff: float = DEFAULT_CUTOFF) -> MPS:
    """Product of normalized single-qubit states."""
    tensors = []
    for v in vectors:
        v = np.asarray(v, dtype=complex)
        tensors.append((v / np.linalg.norm(v)).reshape(1, 2, 1))
    return MPS(tensors, cutoff, ortho_center=0)


def max_bond_profile(n: int, chi: int) -> list[int]:
    return [min(chi, 2 ** (i + 1), 2 ** (n - i - 1)) for i in range(n - 1)]


def random_mps(n: int, chi: int, seed=None, cutoff: float = DEFAULT_CUTOFF,
               max_bond: int | None = None) -> MPS:
    """Normalized MPS from i.i.d. complex Gaussian entries.

    Interior bond ``i`` has dimension ``min(chi, 2**(i+1), 2**(N-i-1))``.
    """
    if chi < 1 or n < 1:
        raise MPSError("need n >= 1 and chi >= 1")
    rng = np.random.default_rng(seed)
    dims = [1] + max_bond_profile(n, chi) + [1]
    tensors = []
    for i in range(n):
        shape = (dims[i], 2, dims[i + 1])
        tensors.append((rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2))
    state = MPS(tensors, cutoff, max_bond)
    state.canonicalize(0)
    return state.normalize()


def inner(a: MPS, b: MPS) -> complex:
    """``<a|b>``."""
    if a.n_sites != b.n_sites:
        raise MPSError(f"length mismatch: {a.n_sites} vs {b.n_sites}")
    env = np.ones((1, 1), dtype=complex)
    for ta, tb in zip(a.tensors, b.tensors):
        # env[a', b'] = sum conj(ta[a, s, a']) env[a, b] tb[b, s, b']
        tmp = np.tensordot(env, tb, axes=(1, 0))  # (a, s, b')
        env = np.tensordot(ta.conj(), tmp, axes=([0, 1], [0, 1]))
    return complex(env[0, 0])


@dataclass
class BitstringSampleSet:
    """Counts of sampled bitstrings; strings list site 0 first."""

    counts: Counter = field(default_factory=Counter)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def merge(self, other: "BitstringSampleSet") -> "BitstringSampleSet":
        self.counts.update(other.counts)
        return self

    def frequency(self, bits) -> float:
        key = bits if isinstance(bits, str) else "".join(str(int(b)) for b in bits)
        tot = self.total
        return self.counts.get(key, 0) / tot if tot else 0.0

    def most_common(self, k: int | None = None):
        # ties broken by bitstring for a stable order
        items = sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return items if k is None else items[:k]


def sample_bitstrings(state: MPS, n_samples: int, seed=None) -> BitstringSampleSet:
    """Draw ``n_samples`` bitstrings from the Born distribution.

    Sweeps left to right through conditional marginals. Samples that share a
    prefix are carried together and split binomially at each site, which is
    equivalent to drawing them one by one.
    """
    if n_samples < 0:
        raise MPSError("n_samples must be >= 0")
    work = state.copy()
    work.canonicalize(0)
    nrm = np.linalg.norm(work.tensors[0])
    if abs(nrm - 1.0) > 1e-6:
        raise MPSError(f"state is not normalized (norm {nrm:.3g})")
    rng = np.random.default_rng(seed)
    out = BitstringSampleSet()
    if n_samples == 0:
        return out
    # each branch: (prefix, left vector normalized to the prefix, count)
    prefixes = [""]
    vecs = np.ones((1, 1), dtype=complex)
    counts = np.array([n_samples], dtype=np.int64)
    for t in work.tensors:
        w0 = vecs @ t[:, 0, :]
        w1 = vecs @ t[:, 1, :]
        p0 = np.einsum("ij,ij->i", w0.conj(), w0).real
        p1 = np.einsum("ij,ij->i", w1.conj(), w1).real
        prob0 = np.divide(p0, p0 + p1, out=np.full_like(p0, 0.5), where=(p0 + p1) > 0)
        n0 = rng.binomial(counts, np.clip(prob0, 0.0, 1.0))
        n1 = counts - n0
        new_prefixes, new_vecs, new_counts = [], [], []
        for bit, n_b, w, p in ((0, n0, w0, p0), (1, n1, w1, p1)):
            idx = np.nonzero(n_b)[0]
            if idx.size:
                new_prefixes.extend(prefixes[j] + str(bit) for j in idx)
                new_vecs.append(w[idx] / np.sqrt(p[idx])[:, None])
                new_counts.append(n_b[idx])
        prefixes = new_prefixes
        vecs = np.concatenate(new_vecs)
        counts = np.concatenate(new_counts)
    out.counts.update(dict(zip(prefixes, counts.tolist())))
    return out
