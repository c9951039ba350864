"""Forward models, event sampling and event statistics for single-SG,
double-SG and EPRB experiments with outcomes k, l in (+1, 0, -1).

Outcome tables are stored positionally in the order (+1, 0, -1); pair tables
are 3x3 arrays indexed [k-position, l-position].
"""
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import rng
from .errors import EmptyLog, Infeasible, InvalidSource
from .linalg import as_matrix, hermiticity_defect, identity, eig_hermitian, kron
from .projectors import OUTCOMES, beam_projectors
from .spin import direction, spin_projection

SOURCE_TOL = 1e-9
KINDS = ("single-sg", "double-sg", "eprb")
_POS = {k: i for i, k in enumerate(OUTCOMES)}
PAIR_OUTCOMES = tuple((k, l) for k in OUTCOMES for l in OUTCOMES)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    a: np.ndarray
    b: np.ndarray = None
    n_events: int = 1
    seed: int = 0
    chunk: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.n_events < 1:
            raise ValueError("n_events must be at least 1")
        object.__setattr__(self, "a", direction(self.a))
        if self.kind == "single-sg":
            if self.b is not None:
                raise ValueError("single-sg takes no second direction")
        else:
            if self.b is None:
                raise ValueError(f"{self.kind} needs a second direction b")
            object.__setattr__(self, "b", direction(self.b))

    @property
    def paired(self):
        return self.kind != "single-sg"


@dataclass(frozen=True)
class FrequencyTable:
    """Relative frequencies; ``values`` has shape (3,) or (3, 3).

    Empirical tables also carry the integer ``counts`` and hold exact
    ``Fraction`` values.
    """

    values: np.ndarray
    counts: np.ndarray = field(default=None, compare=False)

    @property
    def paired(self):
        return np.ndim(self.values) == 2

    def f(self, k, l=None):
        if l is None:
            return self.values[_POS[k]]
        return self.values[_POS[k], _POS[l]]

    def marginal(self):
        """Sum over the second outcome: the first-magnet table."""
        return FrequencyTable(np.array([sum(row) for row in self.values], dtype=self.values.dtype))

    def total(self):
        return sum(np.ravel(self.values))


@dataclass(frozen=True)
class MomentSet:
    """values[p] = <k^p> or values[p, q] = <k^p l^q> for p, q in 0..2."""

    values: np.ndarray

    @property
    def paired(self):
        return np.ndim(self.values) == 2

    def __getitem__(self, idx):
        return self.values[idx]


@dataclass(frozen=True)
class EventLog:
    config: ExperimentConfig
    events: np.ndarray  # int8, shape (N,) or (N, 2)

    def __post_init__(self):
        ev = self.events
        expected = (self.config.n_events, 2) if self.config.paired else (self.config.n_events,)
        if ev.shape != expected:
            raise ValueError(f"events shape {ev.shape} does not match config {expected}")
        if not np.all(np.isin(ev, OUTCOMES)):
            raise ValueError("events contain labels outside (+1, 0, -1)")

    def __len__(self):
        return len(self.events)


@dataclass(frozen=True)
class SourceState:
    """Validated source matrix: Hermitian, trace 1, positive semidefinite.

    ``psd_adjustment`` records eigenvalue mass clipped while repairing a
    reconstructed matrix (0 for sources given directly).
    """

    matrix: np.ndarray
    psd_adjustment: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "matrix", validate_source(self.matrix))

    @property
    def dim(self):
        return self.matrix.shape[0]

    @classmethod
    def unchecked(cls, matrix, psd_adjustment=0.0):
        """Wrap a matrix known to be valid by construction, skipping validation."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "matrix", np.asarray(matrix, dtype=complex))
        object.__setattr__(obj, "psd_adjustment", psd_adjustment)
        return obj


def validate_source(F, dim=None, tol=SOURCE_TOL):
    if isinstance(F, SourceState):
        F = F.matrix
    try:
        F = as_matrix(F)
    except ValueError as exc:
        raise InvalidSource(str(exc)) from None
    if dim is not None and F.shape != (dim, dim):
        raise InvalidSource(f"source must be {dim}x{dim}, got {F.shape[0]}x{F.shape[1]}")
    defect = hermiticity_defect(F)
    if defect > tol:
        raise InvalidSource(f"source is not Hermitian (defect {defect:.3e})")
    tr = np.trace(F)
    if abs(tr - 1.0) > tol:
        raise InvalidSource(f"source trace is {tr.real:.17g}, expected 1")
    lo = eig_hermitian(F, tol).eigenvalues[-1]
    if lo < -tol:
        raise InvalidSource(f"source is not positive semidefinite (min eigenvalue {lo:.3e})")
    return F


def _real_trace(x):
    return float(np.real(np.trace(x)))


def single_sg_frequencies(F, a):
    F = validate_source(F, 3)
    M = beam_projectors(a)
    return FrequencyTable(np.array([_real_trace(m @ F @ m) for m in M.projectors]))


def double_sg_frequencies(F, a, b):
    """f(k, l) = Tr M_l(b) M_k(a) F M_k(a) M_l(b)."""
    F = validate_source(F, 3)
    Ma = beam_projectors(a).projectors
    Mb = beam_projectors(b).projectors
    table = np.empty((3, 3))
    for i, mk in enumerate(Ma):
        filtered = mk @ F @ mk
        for j, ml in enumerate(Mb):
            table[i, j] = _real_trace(ml @ filtered @ ml)
    return FrequencyTable(table)


def pair_projectors(a, b):
    """M_k(a) ⊗ M_l(b) as a 3x3 nested list over outcome positions."""
    Ma = beam_projectors(a).projectors
    Mb = beam_projectors(b).projectors
    return [[kron(mk, ml) for ml in Mb] for mk in Ma]


def eprb_frequencies(F, a, b):
    """f(k, l) = Tr F (M_k(a) ⊗ 1)(1 ⊗ M_l(b))."""
    F = validate_source(F, 9)
    P = pair_projectors(a, b)
    return FrequencyTable(np.array([[_real_trace(F @ P[i][j]) for j in range(3)] for i in range(3)]))


def eprb_moments(F, a, b):
    """<k^p l^q> = Tr F (a·S)^p ⊗ (b·S)^q."""
    F = validate_source(F, 9)
    Ka, Kb = spin_projection(a), spin_projection(b)
    pa = [identity(3), Ka, Ka @ Ka]
    pb = [identity(3), Kb, Kb @ Kb]
    return MomentSet(np.array([[_real_trace(F @ kron(pa[p], pb[q])) for q in range(3)] for p in range(3)]))


def single_moments(F, a):
    """<k^p> = Tr F (a·S)^p."""
    F = validate_source(F, 3)
    K = spin_projection(a)
    return MomentSet(np.array([_real_trace(F), _real_trace(F @ K), _real_trace(F @ K @ K)]))


def moments_from_table(table):
    """Moments accumulated from a frequency table by direct summation."""
    ks = np.array(OUTCOMES)
    if table.paired:
        return MomentSet(np.array([[sum(table.values[i, j] * ks[i] ** p * ks[j] ** q
                                        for i in range(3) for j in range(3))
                                    for q in range(3)] for p in range(3)]))
    return MomentSet(np.array([sum(table.values[i] * ks[i] ** p for i in range(3)) for p in range(3)]))


def frequencies_from_moments(m1, m2):
    """Invert the three-outcome moment relation.

    f(k) = (1 - m2) + (m1/2) k + ((3 m2 - 2)/2) k². Works with floats or
    Fractions; exact inputs give exact outputs.
    """
    if isinstance(m1, Fraction) or isinstance(m2, Fraction):
        half = Fraction(1, 2)
        m1, m2 = Fraction(m1), Fraction(m2)
    else:
        half = 0.5
    vals = [(1 - m2) + half * m1 * k + half * (3 * m2 - 2) * k * k for k in OUTCOMES]
    worst = min(vals)
    if worst < -1e-12:
        raise Infeasible(f"moments m1={m1}, m2={m2} give negative frequency {float(worst):.3e}")
    dtype = object if isinstance(vals[0], Fraction) else float
    return FrequencyTable(np.array(vals, dtype=dtype))


def _counts(log):
    if len(log) == 0:
        raise EmptyLog("event log is empty")
    ev = np.asarray(log.events)
    if log.config.paired:
        idx = (1 - ev[:, 0]) * 3 + (1 - ev[:, 1])
        return np.bincount(idx.astype(np.int64), minlength=9).reshape(3, 3)
    return np.bincount((1 - ev).astype(np.int64), minlength=3)


def relative_frequencies(log):
    counts = _counts(log)
    n = int(counts.sum())
    vals = np.array([Fraction(int(c), n) for c in counts.ravel()], dtype=object).reshape(counts.shape)
    return FrequencyTable(vals, counts)


def moments_from_events(log):
    """Exact moments: integer sums of k^p (l^q) divided once by N."""
    counts = _counts(log)
    n = int(counts.sum())
    ks = OUTCOMES
    if log.config.paired:
        vals = [[Fraction(sum(int(counts[i, j]) * ks[i] ** p * ks[j] ** q
                              for i in range(3) for j in range(3)), n)
                 for q in range(3)] for p in range(3)]
    else:
        vals = [Fraction(sum(int(counts[i]) * ks[i] ** p for i in range(3)), n) for p in range(3)]
    return MomentSet(np.array(vals, dtype=object))


def _inverse_cdf(probs, u):
    probs = np.clip(np.asarray(probs, dtype=float).ravel(), 0.0, None)
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(probs) - 1)


def sample_events(freq, n_events, seed, config=None, chunk=1):
    """Draw ``n_events`` outcomes by inverse CDF over the fixed outcome order.

    The single-stream default (``chunk=1``) uses uniforms 1..N of the
    SplitMix64 stream seeded with ``seed``. With ``chunk=c > 1`` event n
    belongs to chunk n // c, which draws from its own stream seeded with
    ``seed ^ chunk_index``.
    """
    if n_events < 1:
        raise ValueError("n_events must be at least 1")
    if chunk <= 1:
        u = rng.uniforms(seed, n_events)
    else:
        parts = []
        for ci, start in enumerate(range(0, n_events, chunk)):
            parts.append(rng.uniforms(int(seed) ^ ci, min(chunk, n_events - start)))
        u = np.concatenate(parts)
    idx = _inverse_cdf(freq.values, u)
    labels = np.array(OUTCOMES, dtype=np.int8)
    if freq.paired:
        events = np.stack([labels[idx // 3], labels[idx % 3]], axis=1)
    else:
        events = labels[idx]
    if config is None:
        kind = "double-sg" if freq.paired else "single-sg"
        config = ExperimentConfig(kind, (0.0, 0.0, 1.0), (0.0, 0.0, 1.0) if freq.paired else None,
                                  n_events, seed, chunk)
    return EventLog(config, events)


def simulate(config, F):
    """Forward model for ``config`` followed by :func:`sample_events`."""
    if config.kind == "single-sg":
        table = single_sg_frequencies(F, config.a)
    elif config.kind == "double-sg":
        table = double_sg_frequencies(F, config.a, config.b)
    else:
        table = eprb_frequencies(F, config.a, config.b)
    return sample_events(table, config.n_events, config.seed, config, config.chunk)


def counterexample_frequencies(a, b, r):
    """Isotropic-source double-SG table with a·b replaced by (a·b)^r.

    r = 1 is the quantum table; for r > 1 every entry stays a valid
    frequency and both marginals stay 1/3, but no source matrix produces
    the table for all settings.
    """
    if int(r) != r or r < 1:
        raise ValueError("r must be a positive integer")
    x = float(np.dot(direction(a), direction(b))) ** int(r)
    table = np.empty((3, 3))
    for i, k in enumerate(OUTCOMES):
        for j, l in enumerate(OUTCOMES):
            if k == l != 0:
                table[i, j] = (1 + x) ** 2 / 12
            elif k == l == 0:
                table[i, j] = x * x / 3
            elif k == -l:
                table[i, j] = (1 - x) ** 2 / 12
            else:
                table[i, j] = (1 - x * x) / 6
    return FrequencyTable(table)


def as_eprb_table(table):
    """Relabel l -> -l so the double-SG template reads as pair-source data.

    Under this relabeling the r = 1 template coincides with the singlet.
    """
    return FrequencyTable(np.asarray(table.values)[:, ::-1].copy())
