"""Dense complex linear algebra used throughout nfl_lab.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The two wrapper
types, :class:`UnitaryOperator` and :class:`HermitianMatrix`, only exist to
check their defining invariant once, at construction, and to freeze the
underlying buffer so instances can be shared between workers.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyInput, NonSquare, NotHermitian, NotUnitary

UNITARY_ATOL = 1e-10
DET_ATOL = 1e-8
HERMITIAN_ATOL = 1e-12
RANK_TOL = 1e-8


def _frozen(a):
    a = np.array(a, dtype=complex, copy=True)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    a.flags.writeable = False
    return a


def _square(m):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {m.shape}")
    return m


def unitarity_error(m):
    """Return max |(M^dag M - I)_ij|."""
    m = _square(m)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


@dataclass(frozen=True, eq=False)
class UnitaryOperator:
    """A d x d unitary matrix, validated to ``UNITARY_ATOL`` on construction."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(_square(self.matrix))
        err = unitarity_error(m)
        if err > UNITARY_ATOL:
            raise NotUnitary(f"||U^dag U - I||_max = {err:.3e} exceeds {UNITARY_ATOL}")
        det_err = abs(abs(np.linalg.det(m)) - 1.0)
        if det_err > DET_ATOL:
            raise NotUnitary(f"|det U| deviates from 1 by {det_err:.3e}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def dag(self):
        return UnitaryOperator(self.matrix.conj().T)

    def __matmul__(self, other):
        if isinstance(other, UnitaryOperator):
            return UnitaryOperator(self.matrix @ other.matrix)
        return self.matrix @ other

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d, dtype=complex))


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(_square(self.matrix))
        err = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
        if err > HERMITIAN_ATOL:
            raise NotHermitian(f"||H - H^dag||_max = {err:.3e} exceeds {HERMITIAN_ATOL}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]


def positive_qr(m):
    """QR of a (possibly stacked) matrix with R's diagonal made real and >= 0.

    Works on arrays of shape ``(..., n, k)`` and returns the reduced
    factorisation. Fixing the diagonal phases makes the factorisation unique,
    which is what turns QR of a Ginibre matrix into a Haar sample.
    """
    q, r = np.linalg.qr(m)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    mag = np.abs(diag)
    phase = np.where(mag > 0, diag / np.where(mag > 0, mag, 1.0), 1.0)
    q = q * phase[..., None, :]
    r = r * phase.conj()[..., :, None]
    return q, r


def qr_decompose(m):
    """Return ``(Q, R)`` with ``m = Q @ R``, Q unitary, R upper triangular.

    The diagonal of R is real and non-negative.
    """
    m = np.asarray(_square(m), dtype=complex)
    return positive_qr(m)


def _fix_phase(vecs, tol=RANK_TOL):
    """Rotate each column so that its first non-negligible entry is real positive.

    Returns the rotated columns and the phases that were divided out.
    """
    idx = np.argmax(np.abs(vecs) > tol, axis=0)
    lead = vecs[idx, np.arange(vecs.shape[1])]
    mag = np.abs(lead)
    phase = np.where(mag > 0, lead / np.where(mag > 0, mag, 1.0), 1.0)
    return vecs * phase.conj(), phase


def schmidt_decompose(v, d_x, d_r, tol=RANK_TOL):
    """Schmidt decomposition of a bipartite pure state.

    Parameters
    ----------
    v : array_like
        State vector of length ``d_x * d_r`` in the ordering ``x * d_r + r``.
    d_x, d_r : int
        Dimensions of the system and reference factors.
    tol : float
        Singular values at or below ``tol`` are discarded.

    Returns
    -------
    coeffs : ndarray
        Schmidt coefficients (squared singular values), descending.
    left : ndarray
        ``(d_x, rank)`` array whose columns are the system-side vectors.
    right : ndarray
        ``(d_r, rank)`` array whose columns are the reference-side vectors,
        so that ``v = sum_k sqrt(coeffs[k]) * kron(left[:, k], right[:, k])``.
    """
    v = np.asarray(v, dtype=complex).ravel()
    if v.size != d_x * d_r:
        raise DimensionMismatch(f"state has length {v.size}, expected {d_x}*{d_r}")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-10:
        raise DimensionMismatch(f"state is not normalised (norm {norm!r})")
    u, s, vh = np.linalg.svd(v.reshape(d_x, d_r), full_matrices=False)
    keep = s > tol
    left, s, right = u[:, keep], s[keep], vh[keep].T
    left, phase = _fix_phase(left, tol)
    right = right * phase
    return s**2, left, right


def schmidt_reconstruct(coeffs, left, right):
    """Inverse of :func:`schmidt_decompose`."""
    m = (left * np.sqrt(coeffs)) @ right.T
    return m.ravel()


def expm_hermitian(h, scale=1.0):
    """Return ``exp(i * scale * H)`` as a :class:`UnitaryOperator`.

    Uses the eigendecomposition of the Hermitian generator.
    """
    if not isinstance(h, HermitianMatrix):
        h = HermitianMatrix(h)
    w, vecs = np.linalg.eigh(h.matrix)
    return UnitaryOperator((vecs * np.exp(1j * scale * w)) @ vecs.conj().T)


def _stack(vectors):
    vectors = [np.asarray(x, dtype=complex).ravel() for x in vectors]
    if not vectors:
        raise EmptyInput("no vectors given")
    n = vectors[0].size
    if any(x.size != n for x in vectors):
        raise DimensionMismatch("vectors have different lengths")
    return np.stack(vectors, axis=1)


def span_decomposition(vectors, tol=RANK_TOL):
    """Return ``(basis, complement, rank)`` for the span of ``vectors``.

    ``basis`` holds an orthonormal basis of the span as columns and
    ``complement`` one of its orthogonal complement; together they form a
    unitary matrix.
    """
    a = _stack(vectors) if not isinstance(vectors, np.ndarray) or vectors.ndim != 2 else vectors
    u, s, _ = np.linalg.svd(a, full_matrices=True)
    rank = int(np.sum(s > tol))
    basis, _ = _fix_phase(u[:, :rank], tol)
    return basis, u[:, rank:], rank


def orthonormal_basis_of_span(vectors, tol=RANK_TOL):
    """Orthonormal basis (as columns) and numerical rank of the span of ``vectors``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    basis, _, rank = span_decomposition(_stack(vectors), tol)
    return basis, rank


def gram_schmidt(vectors, tol=RANK_TOL):
    """Modified Gram-Schmidt; drops vectors whose residual norm is <= tol."""
    out = []
    for x in _stack(vectors).T:
        x = x.copy()
        for q in out:
            x -= (q.conj() @ x) * q
        n = np.linalg.norm(x)
        if n > tol:
            out.append(x / n)
    if not out:
        return np.zeros((_stack(vectors).shape[0], 0), dtype=complex)
    return np.stack(out, axis=1)


def max_norm(a):
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def trace_norm(a):
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))
