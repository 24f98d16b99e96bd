"""Dense complex linear algebra shared by every other module.

Tensor indexing is row-major throughout: the left factor of a Kronecker
product is the slowest index, so ``vec(A @ X) == kron(A, eye(n)) @ vec(X)``
with ``vec = ndarray.ravel()``.  All randomness is drawn from explicitly
passed ``numpy.random.Generator`` instances, which keeps every construction
seedable and reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, SizingError

# Contract checks at 1e-10 relative, equality assertions at 1e-9 unless a
# suite overrides; double precision leaves ample headroom at dimension <= 256.
CONTRACT_TOL = 1e-10
EQUALITY_TOL = 1e-9
MAX_TOTAL_DIM = 4096

CMatrix = np.ndarray


def as_cmatrix(m) -> CMatrix:
    """Coerce to a complex 2-d array and reject non-finite entries."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ContractError(f"expected a matrix, got ndim={a.ndim}")
    require_finite(a)
    return a


def require_finite(a) -> None:
    if not np.all(np.isfinite(a)):
        raise ContractError("matrix contains NaN or Inf entries")


def dagger(m: CMatrix) -> CMatrix:
    return np.conj(m.T)


def frob(m: CMatrix) -> float:
    return float(np.linalg.norm(m))


def is_hermitian(m: CMatrix, tol: float = CONTRACT_TOL) -> bool:
    scale = max(frob(m), 1.0)
    return frob(m - dagger(m)) <= tol * scale


def kron(a, b, max_dim: int = MAX_TOTAL_DIM) -> CMatrix:
    """Kronecker product, left factor slowest index."""
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    if a.shape[0] * b.shape[0] > max_dim or a.shape[1] * b.shape[1] > max_dim:
        raise SizingError(
            f"kron result {a.shape[0] * b.shape[0]}x{a.shape[1] * b.shape[1]} "
            f"exceeds the configured maximum dimension {max_dim}"
        )
    return np.kron(a, b)


def _phase_fix_columns(q: CMatrix) -> CMatrix:
    """Rotate each column so its largest-modulus entry is real positive.

    Makes eigenbases deterministic up to degenerate clusters.
    """
    q = q.copy()
    for j in range(q.shape[1]):
        col = q[:, j]
        i = int(np.argmax(np.abs(col)))
        a = col[i]
        if abs(a) > 0.0:
            col *= np.conj(a) / abs(a)
    return q


@dataclass(frozen=True)
class HermEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> CMatrix:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ dagger(q)


def herm_eig(m, tol: float = CONTRACT_TOL) -> HermEig:
    """Eigendecomposition of a Hermitian matrix.

    Raises ContractError when the input is not Hermitian within the relative
    tolerance.  Column phases are fixed deterministically; the basis within a
    degenerate eigenvalue cluster remains implementation-defined.
    """
    m = as_cmatrix(m)
    scale = max(frob(m), 1.0)
    if frob(m - dagger(m)) > tol * scale:
        raise ContractError("herm_eig requires a Hermitian matrix")
    vals, vecs = np.linalg.eigh((m + dagger(m)) / 2.0)
    order = np.argsort(vals)[::-1]
    vals = np.real(vals[order])
    vecs = _phase_fix_columns(vecs[:, order])
    return HermEig(eigenvalues=vals, eigenvectors=vecs)


def partial_trace(m, dims, keep) -> CMatrix:
    """Reduce a matrix on a tensor product to the factors listed in `keep`.

    `dims` lists the factor dimensions in row-major order, `keep` the indices
    of the factors to retain (original order).  The trace is preserved.
    """
    m = as_cmatrix(m)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise ContractError(
            f"dims {dims} imply dimension {total}, got matrix {m.shape}"
        )
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ContractError(f"keep indices {keep} out of range for {len(dims)} factors")
    nfac = len(dims)
    tensor = m.reshape(dims + dims)
    traced = [i for i in range(nfac) if i not in keep]
    for count, i in enumerate(traced):
        axis = i - count  # axes shift as we trace factors out
        tensor = np.trace(tensor, axis1=axis, axis2=axis + (nfac - count))
    kept_dim = int(np.prod([dims[k] for k in keep])) if keep else 1
    return tensor.reshape(kept_dim, kept_dim)


def trace_norm(m) -> float:
    """Sum of singular values."""
    m = as_cmatrix(m)
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def operator_norm(m) -> float:
    m = as_cmatrix(m)
    return float(np.linalg.svd(m, compute_uv=False)[0])


@dataclass
class GramSchmidtResult:
    vectors: list = field(default_factory=list)
    dropped: list = field(default_factory=list)
    all_zero: bool = False


def gram_schmidt(vectors, tol: float = CONTRACT_TOL) -> GramSchmidtResult:
    """Orthonormalize a vector family, dropping near-dependent members.

    A vector is dropped when its component orthogonal to the span of the
    previously accepted ones falls below `tol` times its own norm.  A second
    orthogonalization pass keeps pairwise inner products at machine level.
    """
    vectors = [np.asarray(v, dtype=complex).ravel() for v in vectors]
    result = GramSchmidtResult()
    if not vectors:
        result.all_zero = True
        return result
    dim = vectors[0].size
    basis = np.zeros((dim, len(vectors)), dtype=complex)
    count = 0
    norms = []
    for idx, v in enumerate(vectors):
        n0 = float(np.linalg.norm(v))
        norms.append(n0)
        if n0 <= tol:
            result.dropped.append(idx)
            continue
        w = v.copy()
        if count:
            q = basis[:, :count]
            for _ in range(2):  # re-orthogonalize for numerical stability
                w = w - q @ (np.conj(q.T) @ w)
        n = float(np.linalg.norm(w))
        if n <= tol * n0:
            result.dropped.append(idx)
            continue
        basis[:, count] = w / n
        count += 1
    result.vectors = [basis[:, j].copy() for j in range(count)]
    result.all_zero = count == 0 and all(n <= tol for n in norms)
    return result


def sqrtm_psd(m, clip_tol: float = 1e-13) -> CMatrix:
    """Square root of a positive semidefinite Hermitian matrix."""
    eig = herm_eig(m)
    vals = eig.eigenvalues
    floor = -clip_tol * max(abs(vals[0]) if len(vals) else 1.0, 1.0)
    if len(vals) and vals[-1] < floor:
        raise ContractError(f"matrix is not PSD: min eigenvalue {vals[-1]:.3e}")
    clipped = np.clip(vals, 0.0, None)
    q = eig.eigenvectors
    return (q * np.sqrt(clipped)) @ dagger(q)


def vec(m: CMatrix) -> np.ndarray:
    return np.asarray(m, dtype=complex).ravel()


def unvec(v, dim: int) -> CMatrix:
    return np.asarray(v, dtype=complex).reshape(dim, dim)


# ---------------------------------------------------------------------------
# Seeded sampling helpers
# ---------------------------------------------------------------------------


def random_complex_matrix(rng: np.random.Generator, rows: int, cols=None) -> CMatrix:
    cols = rows if cols is None else cols
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)


def random_hermitian(rng: np.random.Generator, n: int) -> CMatrix:
    g = random_complex_matrix(rng, n)
    return (g + dagger(g)) / 2.0


def haar_unitary(rng: np.random.Generator, n: int) -> CMatrix:
    g = random_complex_matrix(rng, n)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_projection(rng: np.random.Generator, n: int, rank: int) -> CMatrix:
    if not 0 < rank <= n:
        raise ContractError(f"projection rank {rank} out of range for dimension {n}")
    u = haar_unitary(rng, n)[:, :rank]
    return u @ dagger(u)


def random_unit_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    v = random_complex_matrix(rng, n, 1).ravel()
    return v / np.linalg.norm(v)
