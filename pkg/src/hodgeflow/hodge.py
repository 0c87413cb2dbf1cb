"""
Hodge Laplacians of an order-2 complex and their spectral decomposition.

The edge space splits into three mutually orthogonal blocks:

* gradient: eigenvectors of ``L1_down = B1^T B1`` with non-zero eigenvalue,
  spanning ``im(B1^T)``;
* curl: eigenvectors of ``L1_up = B2 B2^T`` with non-zero eigenvalue,
  spanning ``im(B2)``;
* harmonic: an orthonormal basis of ``ker(L1)``.

Block sizes are classified with a floating-point tolerance and then checked
against ranks of the integer boundary matrices computed by exact modular
elimination.  A disagreement raises :class:`ConsistencyError` instead of
silently returning a misclassified basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .complex import BoundaryPair
from .errors import ConsistencyError, ValidationError

EPS = np.finfo(float).eps
KINDS = ("harmonic", "gradient", "curl")

# two primes just below 2**31: residues multiply without overflowing int64
_PRIMES = (2147483647, 2147483629)


@dataclass(frozen=True)
class HodgeLaplacians:
    """Integer sparse Hodge Laplacians; ``l1 == l1_down + l1_up`` exactly."""

    l0: sp.csr_matrix
    l1_down: sp.csr_matrix
    l1_up: sp.csr_matrix
    l1: sp.csr_matrix
    l2: sp.csr_matrix


def laplacians(b: BoundaryPair) -> HodgeLaplacians:
    b1 = sp.csr_matrix(b.b1, dtype=np.int64)
    b2 = sp.csr_matrix(b.b2, dtype=np.int64)
    l0 = (b1 @ b1.T).tocsr()
    down = (b1.T @ b1).tocsr()
    up = (b2 @ b2.T).tocsr()
    l2 = (b2.T @ b2).tocsr()
    return HodgeLaplacians(l0, down, up, (down + up).tocsr(), l2)


def _rank_mod_p(a: np.ndarray, p: int) -> int:
    a = np.mod(a, p).astype(np.int64)
    n_rows, n_cols = a.shape
    rank = 0
    for col in range(n_cols):
        if rank == n_rows:
            break
        nz = np.flatnonzero(a[rank:, col])
        if nz.size == 0:
            continue
        piv = rank + nz[0]
        if piv != rank:
            a[[rank, piv]] = a[[piv, rank]]
        inv = pow(int(a[rank, col]), p - 2, p)
        a[rank] = (a[rank] * inv) % p
        below = a[rank + 1 :, col]
        rows = np.flatnonzero(below) + rank + 1
        if rows.size:
            a[rows] = (a[rows] - np.outer(a[rows, col], a[rank]) % p) % p
        rank += 1
    return rank


def exact_rank(m) -> int:
    """Rank over the rationals of an integer matrix.

    Gaussian elimination is carried out modulo two large primes.  The rank
    modulo ``p`` never exceeds the rational rank and matches it unless ``p``
    divides every maximal non-vanishing minor, so the larger of the two
    residual ranks is returned.  Wide matrices are reduced through the Gram
    matrix ``m m^T``, which has the same rational rank and fewer columns.
    """
    a = m.toarray() if sp.issparse(m) else np.asarray(m)
    if a.size == 0:
        return 0
    if not np.issubdtype(a.dtype, np.integer):
        if not np.all(a == np.round(a)):
            raise ValidationError("exact_rank needs an integer matrix")
        a = np.round(a).astype(np.int64)
    a = a.astype(np.int64)
    if a.shape[0] > a.shape[1]:
        a = a.T
    if a.shape[1] > 2 * a.shape[0]:
        a = a @ a.T
    return max(_rank_mod_p(a, p) for p in _PRIMES)


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry (first on ties) is positive."""
    if vecs.size == 0:
        return vecs
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def _degenerate_groups(vals: np.ndarray, scale: float) -> list[list[int]]:
    groups, cur = [], []
    for k in range(len(vals)):
        if cur and abs(vals[k] - vals[cur[-1]]) <= 1e-8 * max(scale, 1.0):
            cur.append(k)
        else:
            if len(cur) > 1:
                groups.append(cur)
            cur = [k]
    if len(cur) > 1:
        groups.append(cur)
    return groups


@dataclass(frozen=True)
class HodgeSpectrum:
    """Edge eigenbasis split into harmonic, gradient and curl blocks.

    ``degenerate`` maps a block kind to index groups of (numerically) repeated
    eigenvalues; eigenvectors inside such a group are one arbitrary basis of
    the eigenspace and should not be interpreted individually.
    """

    grad_eigvals: np.ndarray
    grad_eigvecs: np.ndarray
    curl_eigvals: np.ndarray
    curl_eigvecs: np.ndarray
    harm_eigvecs: np.ndarray
    zero_tol: float
    degenerate: dict[str, list[list[int]]] = field(default_factory=dict)

    @property
    def n_edges(self) -> int:
        return self.harm_eigvecs.shape[0]

    @property
    def n_down(self) -> int:
        return len(self.grad_eigvals)

    @property
    def n_up(self) -> int:
        return len(self.curl_eigvals)

    @property
    def n_harm(self) -> int:
        return self.harm_eigvecs.shape[1]

    @property
    def basis(self) -> np.ndarray:
        """Columns ordered harmonic, gradient, curl (ascending within block)."""
        return np.hstack([self.harm_eigvecs, self.grad_eigvecs, self.curl_eigvecs])

    @property
    def eigvals(self) -> np.ndarray:
        return np.concatenate([np.zeros(self.n_harm), self.grad_eigvals, self.curl_eigvals])

    @property
    def kinds(self) -> np.ndarray:
        return np.array(
            ["harmonic"] * self.n_harm + ["gradient"] * self.n_down + ["curl"] * self.n_up
        )

    def block(self, kind: str) -> tuple[np.ndarray, np.ndarray]:
        if kind == "harmonic":
            return np.zeros(self.n_harm), self.harm_eigvecs
        if kind == "gradient":
            return self.grad_eigvals, self.grad_eigvecs
        if kind == "curl":
            return self.curl_eigvals, self.curl_eigvecs
        raise ValidationError(f"unknown subspace kind {kind!r}")

    def to_dict(self) -> dict:
        blocks = []
        for kind in KINDS:
            vals, vecs = self.block(kind)
            blocks.append(
                {
                    "kind": kind,
                    "eigvals": vals.tolist(),
                    # row-major E x k matrix, one column per eigenvector
                    "eigvecs": vecs.tolist(),
                    "degenerate": self.degenerate.get(kind, []),
                }
            )
        return {"zero_tol": self.zero_tol, "blocks": blocks}

    @classmethod
    def from_dict(cls, data: dict) -> "HodgeSpectrum":
        blocks = {b["kind"]: b for b in data["blocks"]}

        def vecs(kind, n_rows):
            v = np.asarray(blocks[kind]["eigvecs"], dtype=float)
            return v.reshape(n_rows, -1) if v.size else np.zeros((n_rows, 0))

        n = max(len(blocks[k]["eigvecs"]) for k in KINDS)
        return cls(
            grad_eigvals=np.asarray(blocks["gradient"]["eigvals"], dtype=float),
            grad_eigvecs=vecs("gradient", n),
            curl_eigvals=np.asarray(blocks["curl"]["eigvals"], dtype=float),
            curl_eigvecs=vecs("curl", n),
            harm_eigvecs=vecs("harmonic", n),
            zero_tol=float(data["zero_tol"]),
            degenerate={k: blocks[k].get("degenerate", []) for k in KINDS},
        )


def default_zero_tol(l1) -> float:
    """``E * eps * lambda_max(L1)``."""
    dense = l1.toarray() if sp.issparse(l1) else np.asarray(l1, dtype=float)
    if dense.size == 0:
        return 0.0
    lam_max = float(np.linalg.eigvalsh(dense.astype(float))[-1])
    return dense.shape[0] * EPS * max(lam_max, 1.0)


def spectrum(h: HodgeLaplacians, b: BoundaryPair, zero_tol: float | None = None) -> HodgeSpectrum:
    """Eigendecompose ``L1_down`` and ``L1_up`` and build the harmonic basis."""
    n_e = h.l1.shape[0]
    if n_e == 0:
        raise ValidationError("no edges: the edge spectrum is empty")
    l1 = h.l1.toarray().astype(float)
    lam_all, vec_all = np.linalg.eigh(l1)
    if zero_tol is None:
        zero_tol = n_e * EPS * max(float(lam_all[-1]), 1.0)
    zero_tol = float(zero_tol)

    wd, vd = np.linalg.eigh(h.l1_down.toarray().astype(float))
    wu, vu = np.linalg.eigh(h.l1_up.toarray().astype(float))
    gmask, cmask = wd > zero_tol, wu > zero_tol
    n_down, n_up = int(gmask.sum()), int(cmask.sum())
    n_harm = n_e - n_down - n_up
    if n_harm < 0:
        raise ConsistencyError(
            f"tolerance misclassification: {n_down} gradient + {n_up} curl "
            f"eigenvalues exceed E = {n_e} at zero_tol = {zero_tol:.3e}"
        )
    rank_b1, rank_b2 = exact_rank(b.b1), exact_rank(b.b2)
    if (n_down, n_up) != (rank_b1, rank_b2):
        raise ConsistencyError(
            "tolerance misclassification: eigenvalue counts "
            f"(gradient {n_down}, curl {n_up}) disagree with exact ranks "
            f"(rank B1 = {rank_b1}, rank B2 = {rank_b2}) at zero_tol = {zero_tol:.3e}"
        )
    n_null = int((lam_all <= zero_tol).sum())
    if n_null != n_harm:
        raise ConsistencyError(
            f"tolerance misclassification: dim ker(L1) = {n_null} but "
            f"E - rank B1 - rank B2 = {n_harm}"
        )

    grad = _fix_signs(vd[:, gmask])
    curl = _fix_signs(vu[:, cmask])
    harm = vec_all[:, lam_all <= zero_tol]
    if n_harm:
        other = np.hstack([grad, curl])
        harm = harm - other @ (other.T @ harm)
        u, _, _ = np.linalg.svd(harm, full_matrices=False)
        harm = _fix_signs(u[:, :n_harm])
    else:
        harm = np.zeros((n_e, 0))

    scale = float(lam_all[-1])
    degenerate = {
        "gradient": _degenerate_groups(wd[gmask], scale),
        "curl": _degenerate_groups(wu[cmask], scale),
    }
    if n_harm > 1:
        degenerate["harmonic"] = [list(range(n_harm))]
    return HodgeSpectrum(
        grad_eigvals=wd[gmask],
        grad_eigvecs=grad,
        curl_eigvals=wu[cmask],
        curl_eigvecs=curl,
        harm_eigvecs=harm,
        zero_tol=zero_tol,
        degenerate=degenerate,
    )


@dataclass(frozen=True)
class BettiNumbers:
    beta0: int
    beta1: int


def betti(h: HodgeLaplacians, s: HodgeSpectrum, b: BoundaryPair | None = None) -> BettiNumbers:
    """Betti numbers from rank counting, cross-checked against Laplacian kernels.

    ``beta0 = N - rank(B1)`` must equal ``dim ker(L0)``, and ``beta1`` (the
    harmonic block size) must equal ``dim ker(L1)``.
    """
    n = h.l0.shape[0]
    rank_b1 = exact_rank(b.b1) if b is not None else s.n_down
    beta0 = n - rank_b1
    if n:
        l0 = h.l0.toarray().astype(float)
        w0 = np.linalg.eigvalsh(l0)
        tol0 = n * EPS * max(float(w0[-1]), 1.0)
        ker0 = int((w0 <= tol0).sum())
    else:
        ker0 = 0
    if ker0 != beta0:
        raise ConsistencyError(f"beta0 mismatch: N - rank(B1) = {beta0}, dim ker(L0) = {ker0}")
    if s.n_edges:
        w1 = np.linalg.eigvalsh(h.l1.toarray().astype(float))
        ker1 = int((w1 <= s.zero_tol).sum())
    else:
        ker1 = 0
    if ker1 != s.n_harm:
        raise ConsistencyError(f"beta1 mismatch: N_harm = {s.n_harm}, dim ker(L1) = {ker1}")
    return BettiNumbers(beta0, s.n_harm)


def lift_edge_to_node(b1, u1, lam: float, zero_tol: float = 1e-10, norm_tol: float = 1e-6) -> np.ndarray:
    """Map a gradient eigenvector of ``L1_down`` to the matching eigenvector of ``L0``.

    ``u0 = B1 u1 / sqrt(lam)`` has unit norm exactly when ``u1`` is a unit
    eigenvector of ``B1^T B1`` with eigenvalue ``lam``; anything else (a
    kernel vector, a curl vector, a wrong eigenvalue) is rejected.
    """
    if lam <= zero_tol:
        raise ValidationError(f"cannot lift kernel vector: lambda = {lam} <= zero_tol")
    u1 = np.asarray(u1, dtype=float)
    u0 = (b1 @ u1) / np.sqrt(lam)
    norm = float(np.linalg.norm(u0))
    if abs(norm - 1.0) > norm_tol:
        raise ValidationError(
            f"lifted vector has norm {norm:.3e}; input is not a unit gradient "
            f"eigenvector for lambda = {lam}"
        )
    return u0


def quadratic_variation(l, x) -> float:
    """``x^T L x``, the total variation of ``x`` measured by ``L``."""
    x = np.asarray(x, dtype=float)
    if l.shape[0] != x.shape[0] or l.shape[1] != x.shape[0]:
        raise ValidationError(f"shape mismatch: operator {l.shape}, vector {x.shape}")
    val = float(x @ (l @ x))
    # PSD operators only go negative by rounding
    return max(val, 0.0)


def dense(m) -> np.ndarray:
    return m.toarray().astype(float) if sp.issparse(m) else np.asarray(m, dtype=float)
