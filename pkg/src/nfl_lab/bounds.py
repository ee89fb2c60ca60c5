"""Closed-form and Monte Carlo no-free-lunch bounds.

Quantum bound: average risk of a perfectly trained hypothesis when the
``t`` training inputs have Schmidt rank ``r``. Classical bounds: average
squared half-1-norm risk of learning a deterministic, permutation,
stochastic or bistochastic ``d x d`` matrix from ``t`` of its columns.
Also provides the minimal Schmidt rank at which the quantum bound drops to
or below each classical one.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
import math

import numpy as np

from .errors import DegenerateSplit, InvalidArgs
from .sampling import SeedSpec, as_generator, haar_columns, haar_pure_states

E2 = math.e**2
DIRECT_F_MAX_D = 20
DEFAULT_N_MATRICES = 1000


class BoundKind(str, Enum):
    quantum_nfl = "quantum_nfl"
    classical_deterministic = "classical_deterministic"
    classical_permutation = "classical_permutation"
    classical_stochastic = "classical_stochastic"
    classical_bistochastic_analytic = "classical_bistochastic_analytic"
    classical_bistochastic_mc = "classical_bistochastic_mc"


CLOSED_FORM_KINDS = (
    BoundKind.quantum_nfl,
    BoundKind.classical_deterministic,
    BoundKind.classical_permutation,
    BoundKind.classical_stochastic,
    BoundKind.classical_bistochastic_analytic,
)
THRESHOLD_KINDS = (
    BoundKind.classical_permutation,
    BoundKind.classical_deterministic,
    BoundKind.classical_bistochastic_mc,
    BoundKind.classical_stochastic,
)


@dataclass
class BoundCurve:
    kind: BoundKind
    d: int
    r: int
    points: list  # [(t, value), ...]
    mc_stderr: list | None = None

    @property
    def t_values(self):
        return [t for t, _ in self.points]

    @property
    def values(self):
        return [v for _, v in self.points]


@dataclass
class RiskStats:
    d: int
    r: int
    t: int
    n_unitaries: int
    n_sets: int
    mean_risk: float
    sample_std: float
    stderr: float
    non_converged: int = 0
    extra: dict = field(default_factory=dict)


def _check_d(d, minimum=2):
    if int(d) != d or d < minimum:
        raise InvalidArgs(f"d must be an integer >= {minimum}, got {d}")


def _check_t(d, t, strict=False):
    if int(t) != t or t < 0 or (t >= d if strict else t > d):
        rel = "<" if strict else "<="
        raise InvalidArgs(f"t must satisfy 0 <= t {rel} d = {d}, got {t}")


def _clamp01(x):
    return min(1.0, max(0.0, x))


def quantum_nfl_bound(d, r, t):
    """1 - (r^2 t^2 + d + 1) / (d (d + 1)), clamped to [0, 1]."""
    _check_d(d)
    if int(r) != r or not 1 <= r <= d:
        raise InvalidArgs(f"r must satisfy 1 <= r <= d, got {r}")
    if int(t) != t or t < 0:
        raise InvalidArgs(f"t must be >= 0, got {t}")
    return _clamp01(1.0 - (r * r * t * t + d + 1) / (d * (d + 1)))


def quantum_risk_std(d, r, t):
    """Standard deviation of the perfectly trained risk over targets and sets."""
    quantum_nfl_bound(d, r, t)
    if r * t >= d:
        return 0.0
    return math.sqrt(2 * r * r * t * t + 1) / (d * (d + 1))


def classical_deterministic_bound(d, t):
    _check_d(d)
    _check_t(d, t)
    return _clamp01((1 - t / d) * (1 - 1 / d))


def classical_permutation_bound(d, t):
    _check_d(d)
    _check_t(d, t)
    return _clamp01(1 - (t + 1) / d)


def _stochastic_F_direct(d):
    ratio = Fraction((d - 1) * ((d - 2) ** (d + 1) + 2 * (d - 1) ** d), (d + 1) * d ** (d + 1))
    return E2 * float(ratio)


def _stochastic_F_log(d):
    first = (d + 1) * math.log(d - 2) if d > 2 else -math.inf
    second = math.log(2) + d * math.log(d - 1)
    log_sum = np.logaddexp(first, second)
    return math.exp(2 + math.log(d - 1) - math.log(d + 1) - (d + 1) * math.log(d) + log_sum)


def stochastic_F(d):
    """Renormalised Haar average of (1/2 ||p - uniform||_1)^2 over probability columns.

    ``e^2 (d-1) / ((d+1) d^(d+1)) * ((d-2)^(d+1) + 2 (d-1)^d)``; evaluated
    exactly in rationals up to d = 20 and in log space above.
    """
    _check_d(d)
    if d <= DIRECT_F_MAX_D:
        return _stochastic_F_direct(d)
    return _stochastic_F_log(d)


def classical_stochastic_bound(d, t):
    _check_d(d)
    _check_t(d, t)
    return _clamp01((1 - t / d) * stochastic_F(d))


def bistochastic_analytic_bound(d, t):
    """Weak analytic lower bound (1/(1+d)) (1 - (t+1)/d) for bistochastic matrices."""
    _check_d(d)
    _check_t(d, t)
    return _clamp01((1 - (t + 1) / d) / (1 + d))


def half_l1_sq(p, h):
    """(1/2 ||p - h||_1)^2 along the last axis."""
    return (0.5 * np.abs(p - h).sum(axis=-1)) ** 2


def stochastic_F_monte_carlo(d, n, seed, chunk=100_000):
    """e^2 times the Monte Carlo mean of (1/2 ||p - uniform||_1)^2.

    ``p`` are the outcome probabilities of Haar-random pure states. Returns
    ``(estimate, stderr)``.
    """
    return haar_l1_loss(d, np.full(d, 1.0 / d), n, seed, chunk, scale=E2)


def haar_l1_loss(d, h, n, seed, chunk=100_000, scale=1.0):
    """Mean and stderr of scale * (1/2 ||p - h||_1)^2 over Haar-state probabilities p."""
    _check_d(d)
    if n < 2:
        raise InvalidArgs("need at least two samples")
    h = np.asarray(h, dtype=float)
    rng = as_generator(seed)
    total = total_sq = 0.0
    done = 0
    while done < n:
        m = min(chunk, n - done)
        p = np.abs(haar_pure_states(d, m, rng)) ** 2
        vals = scale * half_l1_sq(p, h)
        total += vals.sum()
        total_sq += (vals**2).sum()
        done += m
    mean = total / n
    var = max(0.0, (total_sq - n * mean**2) / (n - 1))
    return mean, math.sqrt(var / n)


def bistochastic_optimal_hypothesis(known_columns):
    """(1 - sum of known columns) / (d - t): the best guess for any unseen column."""
    known_columns = np.asarray(known_columns)
    d, t = known_columns.shape[-2], known_columns.shape[-1]
    if t >= d:
        raise DegenerateSplit(f"no unseen columns left with t = {t}, d = {d}")
    return (1.0 - known_columns.sum(axis=-1)) / (d - t)


def _bistochastic_losses(d, t_values, n_matrices, seed):
    """Per-matrix mean unseen-column loss, shape (n_matrices, len(t_values)).

    Matrix ``m`` is drawn from the sub-stream ``seed.child(m)``, so results
    do not depend on how the matrices are split between workers.
    """
    if not isinstance(seed, SeedSpec):
        seed = SeedSpec(int(seed))
    out = np.empty((n_matrices, len(t_values)))
    for m in range(n_matrices):
        b = np.abs(haar_columns(seed.child(m).generator(), d, d)) ** 2
        for k, t in enumerate(t_values):
            h = bistochastic_optimal_hypothesis(b[:, :t])
            out[m, k] = half_l1_sq(b[:, t:].T, h).mean()
    return out


def _mc_summary(d, t, per_matrix):
    n = per_matrix.size
    scale = (1 - t / d) * E2
    mean = float(per_matrix.mean())
    std = float(per_matrix.std(ddof=1)) if n > 1 else 0.0
    return scale * mean, scale * std / math.sqrt(n)


def bistochastic_mc_bound(d, t, n_matrices=DEFAULT_N_MATRICES, seed=0):
    """Monte Carlo bistochastic bound ``(1 - t/d) e^2 E[(1/2||col - h_opt||_1)^2]``.

    The first ``t`` columns of each random unistochastic matrix are the
    training data. Returns ``(value, stderr)``.
    """
    _check_d(d)
    if int(t) != t or t < 0:
        raise InvalidArgs(f"t must be >= 0, got {t}")
    if t >= d:
        raise DegenerateSplit(f"t = {t} leaves no unseen column in dimension {d}")
    if n_matrices < 1:
        raise InvalidArgs("n_matrices must be >= 1")
    losses = _bistochastic_losses(d, [t], n_matrices, seed)
    return _mc_summary(d, t, losses[:, 0])


def bistochastic_mc_curve(d, t_values, n_matrices=DEFAULT_N_MATRICES, seed=0):
    """Bistochastic MC bound at several t, sharing one matrix ensemble.

    Values for ``t >= d`` are exactly 0.
    """
    _check_d(d)
    t_values = [int(t) for t in t_values]
    if any(t < 0 for t in t_values):
        raise InvalidArgs("t must be >= 0")
    inner = [t for t in t_values if t < d]
    losses = _bistochastic_losses(d, inner, n_matrices, seed) if inner else None
    points, errs = [], []
    for t in t_values:
        if t >= d:
            value, err = 0.0, 0.0
        else:
            value, err = _mc_summary(d, t, losses[:, inner.index(t)])
        points.append((t, value))
        errs.append(err)
    return BoundCurve(BoundKind.classical_bistochastic_mc, d, 1, points, errs)


def classical_bound(kind, d, t, mc_params=None):
    """Value of a classical bound; 0 once every column has been observed (t >= d)."""
    kind = BoundKind(kind)
    if t >= d and kind is not BoundKind.classical_permutation:
        return 0.0
    if kind is BoundKind.classical_permutation:
        return classical_permutation_bound(d, min(t, d))
    if kind is BoundKind.classical_deterministic:
        return classical_deterministic_bound(d, t)
    if kind is BoundKind.classical_stochastic:
        return classical_stochastic_bound(d, t)
    if kind is BoundKind.classical_bistochastic_analytic:
        return bistochastic_analytic_bound(d, t)
    if kind is BoundKind.classical_bistochastic_mc:
        mc_params = mc_params or {}
        return bistochastic_mc_bound(d, t, **mc_params)[0]
    raise InvalidArgs(f"{kind.value} is not a classical bound")


def rank_threshold(kind, d, t, mc_params=None):
    """Smallest real Schmidt rank r >= 1 with quantum_nfl_bound(d, r, t) <= classical bound.

    Closed forms: permutation sqrt((d+1)/t), deterministic
    sqrt((d^2-1)/(d t)); stochastic and bistochastic solve
    r^2 t^2 >= d (d+1) (1 - B) - (d+1) for the classical value B, with the
    bistochastic B taken from :func:`bistochastic_mc_bound` (``mc_params``
    forwards ``n_matrices`` and ``seed``). Values below 1 are reported as 1,
    since a rank-1 training set already suffices there.
    """
    kind = BoundKind(kind)
    _check_d(d)
    if int(t) != t or t < 1:
        raise InvalidArgs(f"t must be >= 1, got {t}")
    if kind is BoundKind.classical_permutation:
        r = math.sqrt((d + 1) / t)
    elif kind is BoundKind.classical_deterministic:
        r = math.sqrt((d * d - 1) / (d * t))
    elif kind in (BoundKind.classical_stochastic, BoundKind.classical_bistochastic_mc):
        b = classical_bound(kind, d, t, mc_params)
        r = math.sqrt(max(0.0, (d * (d + 1) * (1 - b) - (1 + d)) / (t * t)))
    else:
        raise InvalidArgs(f"no rank threshold for {kind.value}")
    return max(1.0, r)


def bound_curve(kind, d, t_values, r=1, n_matrices=DEFAULT_N_MATRICES, seed=0):
    """Evaluate one bound kind over ``t_values``."""
    kind = BoundKind(kind)
    if kind is BoundKind.quantum_nfl:
        return BoundCurve(kind, d, r, [(t, quantum_nfl_bound(d, r, t)) for t in t_values])
    if kind is BoundKind.classical_bistochastic_mc:
        return bistochastic_mc_curve(d, t_values, n_matrices, seed)
    _check_d(d)
    return BoundCurve(kind, d, 1, [(t, classical_bound(kind, d, t)) for t in t_values])
