"""Hypothesis construction for unitary learning.

Two learners are provided. :func:`perfect_learner` builds, directly from the
training data, a unitary that agrees with the target on the span of the
training inputs up to one global phase and is Haar random elsewhere.
:func:`variational_learner` minimises the overlap cost over the full unitary
group with a finite-difference Adam loop, or with SPSA when the cost is only
available through simulated measurement shots.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from .errors import DimensionMismatch, InvalidArgs
from .linalg import UnitaryOperator
from .sampling import as_generator, haar_columns

PERFECT = "perfect"
VARIATIONAL = "variational"
VARIATIONAL_SHOTS = "variational_shots"
METHODS = (PERFECT, VARIATIONAL, VARIATIONAL_SHOTS)


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 5000
    cost_tol: float = 1e-6
    learning_rate: float = 0.1
    fd_step: float = 1e-5
    shots: int | None = None
    restarts: int = 3

    def __post_init__(self):
        for name in ("max_iters", "cost_tol", "learning_rate", "fd_step", "restarts"):
            if not getattr(self, name) > 0:
                raise InvalidArgs(f"{name} must be positive")
        if self.cost_tol >= 1:
            raise InvalidArgs("cost_tol must be < 1")
        if self.shots is not None and self.shots < 1:
            raise InvalidArgs("shots must be >= 1")


@dataclass(frozen=True, eq=False)
class HypothesisResult:
    v: UnitaryOperator
    method: str
    final_cost: float
    iterations: int
    global_phase: float
    complement_dim: int
    converged: bool = True
    history: tuple = ()


def _check_dims(v, s):
    if v.dim != s.d_x:
        raise DimensionMismatch(f"hypothesis acts on dimension {v.dim}, training set on {s.d_x}")


def _overlaps(vm, s):
    """<phi_j| (V (x) I) |psi_j> for every pair."""
    return np.einsum("jab,jab->j", s.outputs.conj(), vm @ s.inputs)


def cost(v, s):
    """1 - mean_j |<phi_j|(V (x) I)|psi_j>|^2; zero for an empty set."""
    _check_dims(v, s)
    if s.t == 0:
        return 0.0
    p = np.abs(_overlaps(v.matrix, s)) ** 2
    return float(np.clip(1.0 - p.mean(), 0.0, 1.0))


def sampled_cost(v, s, shots, seed):
    """Shot-noise estimate of :func:`cost`.

    Each overlap probability is replaced by the frequency of successes in
    ``shots`` Bernoulli trials, as an all-zeros measurement would give.
    """
    _check_dims(v, s)
    if shots < 1:
        raise InvalidArgs("shots must be >= 1")
    if s.t == 0:
        return 0.0
    p = np.clip(np.abs(_overlaps(v.matrix, s)) ** 2, 0.0, 1.0)
    counts = as_generator(seed).binomial(shots, p)
    return float(1.0 - np.mean(counts / shots))


def risk(u, v):
    """Haar-averaged squared trace distance between U|x> and V|x>.

    Closed form ``1 - (d + |Tr U^dag V|^2) / (d (d + 1))``, clamped at 0.
    """
    if u.dim != v.dim:
        raise DimensionMismatch("u and v have different dimensions")
    d = u.dim
    tr = np.vdot(u.matrix, v.matrix)  # Tr(U^dag V)
    return max(0.0, 1.0 - (d + abs(tr) ** 2) / (d * (d + 1)))


def risk_monte_carlo(u, v, n, seed, chunk=20000):
    """Monte Carlo estimate of the risk over ``n`` Haar-random inputs.

    Returns ``(mean, stderr)``.
    """
    if u.dim != v.dim:
        raise DimensionMismatch("u and v have different dimensions")
    if n < 1:
        raise InvalidArgs("n must be >= 1")
    d = u.dim
    w = u.matrix.conj().T @ v.matrix
    rng = as_generator(seed)
    total = total_sq = 0.0
    done = 0
    while done < n:
        m = min(chunk, n - done)
        x = rng.standard_normal((m, d)) + 1j * rng.standard_normal((m, d))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        f = np.abs(np.einsum("na,ab,nb->n", x.conj(), w, x)) ** 2
        vals = np.clip(1.0 - f, 0.0, None)
        total += vals.sum()
        total_sq += (vals**2).sum()
        done += m
    mean = total / n
    var = max(0.0, total_sq / n - mean**2) * n / max(n - 1, 1)
    return mean, math.sqrt(var / n)


def perfect_learner(u, s, seed):
    """Hypothesis V = U W with W = e^{i theta} on span(training inputs) and Haar outside.

    ``theta`` is uniform on [0, 2 pi) and the block on the orthogonal
    complement is an independent Haar unitary, so averaging over seeds
    reproduces the ensemble over all perfectly trained hypotheses.
    """
    _check_dims(u, s)
    d = u.dim
    rng = as_generator(seed)
    theta = float(rng.uniform(0.0, 2 * np.pi))
    basis, comp = s.span_basis
    k = comp.shape[1]
    w = np.exp(1j * theta) * (basis @ basis.conj().T)
    if k:
        y = haar_columns(rng, k, k)
        w = w + comp @ y @ comp.conj().T
    v = UnitaryOperator(u.matrix @ w)
    return HypothesisResult(v, PERFECT, cost(v, s), 0, theta, k)


@lru_cache(maxsize=None)
def gell_mann_basis(d):
    """Identity plus the d^2 - 1 generalised Gell-Mann matrices, shape (d^2, d, d).

    All elements are Hermitian and mutually orthogonal under the trace inner
    product; real combinations of them span every d x d Hermitian matrix.
    """
    mats = [np.eye(d, dtype=complex)]
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1
            mats.append(m)
            m = np.zeros((d, d), dtype=complex)
            m[j, k], m[k, j] = -1j, 1j
            mats.append(m)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        mats.append(np.diag(diag * np.sqrt(2 / (l * (l + 1)))).astype(complex))
    out = np.stack(mats)
    out.flags.writeable = False
    return out


def parametrized_unitary(params, d):
    """exp(i sum_k params[k] G_k) as a raw array."""
    h = np.tensordot(params, gell_mann_basis(d), axes=1)
    w, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(1j * w)) @ vecs.conj().T


def fd_gradient(f, x, step):
    """Central finite-difference gradient of a scalar function."""
    g = np.empty_like(x)
    e = np.zeros_like(x)
    for k in range(x.size):
        e[k] = step
        g[k] = (f(x + e) - f(x - e)) / (2 * step)
        e[k] = 0.0
    return g


def _adam(f, x, cfg, beta1=0.9, beta2=0.999, eps=1e-8):
    """Minimise ``f`` from ``x``; returns (best_x, best_f, iterations, history)."""
    m = np.zeros_like(x)
    vel = np.zeros_like(x)
    best_x, best_f = x.copy(), f(x)
    history = [best_f]
    it = 0
    while it < cfg.max_iters and best_f > cfg.cost_tol:
        it += 1
        g = fd_gradient(f, x, cfg.fd_step)
        m = beta1 * m + (1 - beta1) * g
        vel = beta2 * vel + (1 - beta2) * g * g
        mhat = m / (1 - beta1**it)
        vhat = vel / (1 - beta2**it)
        x = x - cfg.learning_rate * mhat / (np.sqrt(vhat) + eps)
        fx = f(x)
        if fx < best_f:
            best_x, best_f = x.copy(), fx
        history.append(best_f)
    return best_x, best_f, it, history


def _spsa(f_noisy, f_exact, x, cfg, rng, c=0.1, alpha=0.602, gamma=0.101):
    """Simultaneous-perturbation stochastic approximation on a noisy objective.

    The best-so-far point is tracked with the noisy estimate; ``f_exact`` is
    only used for the stopping rule and the reported cost.
    """
    a = cfg.learning_rate
    big_a = 0.1 * cfg.max_iters
    best_x, best_noisy = x.copy(), f_noisy(x)
    history = [best_noisy]
    it = 0
    while it < cfg.max_iters:
        it += 1
        ak = a / (it + big_a) ** alpha * (big_a + 1) ** alpha
        ck = c / it**gamma
        delta = rng.choice((-1.0, 1.0), size=x.size)
        g = (f_noisy(x + ck * delta) - f_noisy(x - ck * delta)) / (2 * ck) * delta
        x = x - ak * g
        fx = f_noisy(x)
        if fx <= best_noisy:
            best_x, best_noisy = x.copy(), fx
        history.append(best_noisy)
        if f_exact(best_x) <= cfg.cost_tol:
            break
    return best_x, f_exact(best_x), it, history


def variational_learner(u, s, cfg, seed):
    """Learn V(theta) = exp(i H(theta)) by minimising the training cost.

    ``H`` ranges over all Hermitian matrices (Gell-Mann basis plus identity,
    d^2 real parameters). With ``cfg.shots`` unset the exact cost is
    minimised with Adam on central finite differences; otherwise SPSA is run
    on :func:`sampled_cost`. Up to ``cfg.restarts`` random restarts are made,
    stopping early once one reaches ``cfg.cost_tol``. The reported
    ``final_cost`` is always the exact cost of the returned unitary.
    """
    _check_dims(u, s)
    d = u.dim
    rng = as_generator(seed)
    n_params = d * d
    method = VARIATIONAL if cfg.shots is None else VARIATIONAL_SHOTS

    if s.t == 0:
        x0 = rng.normal(size=n_params)
        v = UnitaryOperator(parametrized_unitary(x0, d))
        return HypothesisResult(v, method, 0.0, 0, 0.0, d - s.span_dim)

    def exact(x):
        p = np.abs(_overlaps(parametrized_unitary(x, d), s)) ** 2
        return float(1.0 - p.mean())

    def noisy(x):
        p = np.clip(np.abs(_overlaps(parametrized_unitary(x, d), s)) ** 2, 0.0, 1.0)
        return float(1.0 - np.mean(rng.binomial(cfg.shots, p) / cfg.shots))

    best = None
    total_iters = 0
    for _ in range(cfg.restarts):
        x0 = rng.normal(size=n_params)
        if cfg.shots is None:
            x, fx, it, hist = _adam(exact, x0, cfg)
        else:
            x, fx, it, hist = _spsa(noisy, exact, x0, cfg, rng)
        total_iters += it
        if best is None or fx < best[1]:
            best = (x, fx, hist)
        if best[1] <= cfg.cost_tol:
            break
    x, fx, hist = best
    v = UnitaryOperator(parametrized_unitary(x, d))
    final = cost(v, s)
    phase = float(np.angle(_overlaps(v.matrix, s)[0]))
    return HypothesisResult(v, method, final, total_iters, phase, d - s.span_dim,
                            converged=final <= cfg.cost_tol, history=tuple(hist))
