"""Seeded Haar sampling: unitaries, pure states, Schmidt-rank-r states,
training sets and random bistochastic matrices.

Every public sampler takes a :class:`SeedSpec` and is a pure function of it.
Batched variants (``haar_unitaries``, ``haar_pure_states``, ...) exist for
Monte Carlo loops; they are not guaranteed to reproduce the single-draw
samplers element by element, only to be deterministic themselves.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidDimension,
    OrthonormalOverflow,
    RankOutOfRange,
)
from .linalg import RANK_TOL, UnitaryOperator, positive_qr, schmidt_decompose, span_decomposition

MIN_SCHMIDT_COEFF = 1e-6
_U64 = 1 << 64

ORTHONORMAL = "orthonormal"
GENERIC = "generic"
STYLES = (ORTHONORMAL, GENERIC)


@dataclass(frozen=True)
class SeedSpec:
    """Address of one reproducible random stream.

    The generator for ``(master_seed, stream_index, path)`` is PCG64 seeded
    from ``numpy.random.SeedSequence(master_seed, spawn_key=(stream_index,
    *path))``. SeedSequence hashes its entropy and spawn key together, so
    distinct addresses give statistically independent streams. ``path`` lets
    callers carve sub-streams (trial, pair, ...) without arithmetic on
    indices.
    """

    master_seed: int
    stream_index: int = 0
    path: tuple = field(default=())

    def __post_init__(self):
        for name, value in (("master_seed", self.master_seed), ("stream_index", self.stream_index)):
            if not 0 <= int(value) < _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value}")
        object.__setattr__(self, "path", tuple(int(p) for p in self.path))
        if any(p < 0 for p in self.path):
            raise ValueError("path entries must be non-negative")

    def generator(self):
        ss = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_index), *self.path))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *keys):
        return SeedSpec(self.master_seed, self.stream_index, self.path + tuple(keys))


def as_generator(seed):
    """Accept a SeedSpec, a bare integer or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, SeedSpec):
        return seed.generator()
    return SeedSpec(int(seed)).generator()


def ginibre(rng, shape):
    """Complex Gaussian array with E|z|^2 = 1."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def haar_columns(rng, d, k, batch=()):
    """First ``k`` columns of Haar-random unitaries on C^d, shape ``batch + (d, k)``."""
    q, _ = positive_qr(ginibre(rng, tuple(batch) + (d, k)))
    return q


def _check_dim(d, minimum=1):
    if int(d) != d or d < minimum:
        raise InvalidDimension(f"dimension must be an integer >= {minimum}, got {d}")


def haar_unitary(d, seed):
    """Haar-random element of U(d) (Ginibre matrix + phase-fixed QR)."""
    _check_dim(d)
    return UnitaryOperator(haar_columns(as_generator(seed), d, d))


def haar_unitaries(d, n, seed):
    """``n`` Haar unitaries as an ``(n, d, d)`` array."""
    _check_dim(d)
    return haar_columns(as_generator(seed), d, d, batch=(n,))


def haar_pure_state(d, seed):
    _check_dim(d)
    return haar_pure_states(d, 1, seed)[0]


def haar_pure_states(d, n, seed):
    """``n`` Haar-random unit vectors in C^d, shape ``(n, d)``."""
    _check_dim(d)
    z = ginibre(as_generator(seed), (n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _schmidt_coeffs(rng, r, n):
    """``n`` rows of Haar-induced Schmidt coefficients with min >= MIN_SCHMIDT_COEFF."""
    c = np.empty((n, r))
    todo = np.arange(n)
    while todo.size:
        z = ginibre(rng, (todo.size, r))
        p = np.abs(z) ** 2
        p /= p.sum(axis=1, keepdims=True)
        c[todo] = p
        todo = todo[p.min(axis=1) < MIN_SCHMIDT_COEFF]
    return c


@dataclass(frozen=True, eq=False)
class BipartiteState:
    """Pure state on H_X (x) H_R with its Schmidt data.

    ``amplitudes`` has length ``d_x * d_r`` (system index major). ``left`` and
    ``right`` hold the Schmidt vectors as columns.
    """

    d_x: int
    d_r: int
    amplitudes: np.ndarray
    schmidt_rank: int
    schmidt_coeffs: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).ravel()
        if a.size != self.d_x * self.d_r:
            raise DimensionMismatch(f"amplitudes have length {a.size}, expected {self.d_x * self.d_r}")
        if abs(np.linalg.norm(a) - 1.0) > 1e-10:
            raise DimensionMismatch("state is not normalised")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_vector(cls, v, d_x, d_r):
        coeffs, left, right = schmidt_decompose(v, d_x, d_r)
        return cls(d_x, d_r, v, len(coeffs), coeffs, left, right)

    def as_matrix(self):
        return self.amplitudes.reshape(self.d_x, self.d_r)

    def numerical_rank(self, tol=RANK_TOL):
        return int(np.sum(np.linalg.svd(self.as_matrix(), compute_uv=False) > tol))


def _check_rank(d_x, d_r, r):
    _check_dim(d_x)
    _check_dim(d_r)
    if int(r) != r or not 1 <= r <= min(d_x, d_r):
        raise RankOutOfRange(f"Schmidt rank {r} outside [1, {min(d_x, d_r)}]")


def _assemble(coeffs, left, right):
    # sum_k sqrt(c_k) xi_k zeta_k^T, batched over leading axes
    return np.einsum("...ik,...k,...jk->...ij", left, np.sqrt(coeffs), right)


def schmidt_rank_state(d_x, d_r, r, seed):
    """Random pure state of exact Schmidt rank ``r``.

    Coefficients are the squared moduli of a Haar r-dimensional state
    (resampled while any is below ``MIN_SCHMIDT_COEFF``); the Schmidt vectors
    are the first r columns of independent Haar unitaries on each factor.
    """
    _check_rank(d_x, d_r, r)
    rng = as_generator(seed)
    c = _schmidt_coeffs(rng, r, 1)[0]
    xi = haar_columns(rng, d_x, r)
    zeta = haar_columns(rng, d_r, r)
    m = _assemble(c, xi, zeta)
    return BipartiteState(d_x, d_r, m.ravel(), r, c, xi, zeta)


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """``t`` input/output pairs of Schmidt rank ``r`` generated by one unitary.

    Inputs and outputs are stored as stacked ``(t, d_x, d_r)`` amplitude
    matrices; ``left`` holds the system-side Schmidt vectors ``(t, d_x, r)``.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    coeffs: np.ndarray
    left: np.ndarray
    right: np.ndarray
    r: int
    span_dim: int
    style: str

    @property
    def t(self):
        return self.inputs.shape[0]

    @property
    def d_x(self):
        return self.inputs.shape[1]

    @property
    def d_r(self):
        return self.inputs.shape[2]

    @property
    def schmidt_vectors(self):
        """All system-side Schmidt vectors as columns of a ``(d_x, t*r)`` array."""
        return self.left.transpose(1, 0, 2).reshape(self.d_x, self.t * self.r)

    @cached_property
    def span_basis(self):
        """``(basis, complement)`` of span{xi_jk} as orthonormal columns."""
        if self.t == 0:
            return np.zeros((self.d_x, 0), dtype=complex), np.eye(self.d_x, dtype=complex)
        basis, comp, _ = span_decomposition(self.schmidt_vectors)
        return basis, comp

    @cached_property
    def pairs(self):
        out = []
        for j in range(self.t):
            inp = BipartiteState(self.d_x, self.d_r, self.inputs[j].ravel(), self.r,
                                 self.coeffs[j], self.left[j], self.right[j])
            outp = BipartiteState.from_vector(self.outputs[j].ravel(), self.d_x, self.d_r)
            out.append((inp, outp))
        return out


def training_set(u, d_r, r, t, style, seed):
    """Draw ``t`` Schmidt-rank-``r`` inputs and their images under ``u (x) I``.

    ``style="orthonormal"`` takes all system-side Schmidt vectors from
    disjoint column blocks of one Haar unitary, so the r*t vectors are
    orthonormal. ``style="generic"`` draws every input independently with
    :func:`schmidt_rank_state`.
    """
    if not isinstance(u, UnitaryOperator):
        u = UnitaryOperator(u)
    d = u.dim
    _check_rank(d, d_r, r)
    if int(t) != t or t < 0:
        raise InvalidDimension(f"t must be a non-negative integer, got {t}")
    t = int(t)
    if style not in STYLES:
        raise ValueError(f"unknown training-set style {style!r}")
    rng = as_generator(seed)
    if style == ORTHONORMAL:
        if r * t > d:
            raise OrthonormalOverflow(f"r*t = {r * t} orthonormal vectors do not fit in dimension {d}")
        block = haar_columns(rng, d, r * t)
        left = block.reshape(d, t, r).transpose(1, 0, 2)
    else:
        left = haar_columns(rng, d, r, batch=(t,))
    coeffs = _schmidt_coeffs(rng, r, t)
    right = haar_columns(rng, d_r, r, batch=(t,))
    inputs = _assemble(coeffs, left, right)
    outputs = u.matrix @ inputs
    ts = TrainingSet(inputs, outputs, coeffs, left, right, r, 0, style)
    span = r * t if style == ORTHONORMAL else ts.span_basis[0].shape[1]
    object.__setattr__(ts, "span_dim", span)
    return ts


@dataclass(frozen=True, eq=False)
class BistochasticMatrix:
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidDimension("bistochastic matrix must be square")
        if np.any(m < 0):
            raise ValueError("bistochastic matrix has negative entries")
        if np.max(np.abs(m.sum(axis=0) - 1)) > 1e-9 or np.max(np.abs(m.sum(axis=1) - 1)) > 1e-9:
            raise ValueError("rows and columns must sum to one")
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    @property
    def dim(self):
        return self.entries.shape[0]


def random_bistochastic(d, seed):
    """Entry-wise squared modulus of a Haar unitary."""
    _check_dim(d, 2)
    return BistochasticMatrix(np.abs(haar_unitary(d, seed).matrix) ** 2)


def random_bistochastic_batch(d, n, seed):
    """``n`` unistochastic matrices as an ``(n, d, d)`` float array."""
    _check_dim(d, 2)
    return np.abs(haar_unitaries(d, n, seed)) ** 2


def haar_trace_moments(d, n, seed, phi=0.7, chunk=20000):
    """Monte Carlo moments of Tr Y over ``n`` Haar unitaries on C^d.

    Returns a list of ``(label, mean, stderr, exact)`` rows for
    E|Tr Y|^2 = 1, E|Tr Y|^4 = 2 (d >= 2), E[Re(Tr Y e^{i phi})^2] = 1/2 and
    E[Re(Tr Y e^{i phi})] = 0.
    """
    _check_dim(d, 2)
    if n < 2:
        raise ValueError("need at least two samples")
    rng = as_generator(seed)
    sums = np.zeros(4)
    sq = np.zeros(4)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        tr = np.trace(haar_columns(rng, d, d, batch=(m,)), axis1=1, axis2=2)
        a2 = np.abs(tr) ** 2
        re = (tr * np.exp(1j * phi)).real
        vals = np.stack([a2, a2**2, re**2, re])
        sums += vals.sum(axis=1)
        sq += (vals**2).sum(axis=1)
        done += m
    mean = sums / n
    stderr = np.sqrt(np.maximum(sq / n - mean**2, 0.0) / (n - 1))
    labels = ["E|TrY|^2", "E|TrY|^4", "E[Re(TrY e^{i phi})^2]", "E[Re(TrY e^{i phi})]"]
    exact = [1.0, 2.0, 0.5, 0.0]
    return [(lab, float(m), float(s), e) for lab, m, s, e in zip(labels, mean, stderr, exact)]
