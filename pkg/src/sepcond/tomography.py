"""Source reconstruction from moment data and the quantum-representability
(separability) fit for multi-setting pair-frequency data."""
from dataclasses import dataclass
from functools import lru_cache
import itertools

import numpy as np

from .errors import NonRealCoefficient, NotPSD, SingularDesign
from .experiment import SourceState, pair_projectors  # noqa: F401  (SourceState re-exported)
from .linalg import as_matrix, dagger, eig_hermitian, identity, kron
from .projectors import beam_projectors, solve
from .spin import direction, normalized, operator_basis, spin_projection

F0_SINGLE = 1.0 / np.sqrt(3.0)
F0_PAIR = 1.0 / 3.0
CONDITION_LIMIT = 1e6
REPAIR_LIMIT = 0.05
NEGATIVE_TOL = 1e-9


@dataclass(frozen=True)
class ExpansionCoefficients:
    """Real coefficients over B_i (shape (9,)) or B_i ⊗ B_j (shape (9, 9))."""

    values: np.ndarray

    @property
    def paired(self):
        return np.ndim(self.values) == 2

    def __getitem__(self, idx):
        return self.values[idx]


@dataclass(frozen=True)
class SeparabilityReport:
    fitted: SourceState
    residual: float
    psd_adjustment: float


def canonical_design():
    """Five directions giving full-rank first- and second-moment systems."""
    return [
        np.array([0.0, 0.0, 1.0]),
        np.array([1.0, 0.0, 0.0]),
        normalized([1.0, 1.0, 0.0]),
        normalized([1.0, 0.0, 1.0]),
        normalized([0.0, 1.0, 1.0]),
    ]


def canonical_pair_design():
    d = canonical_design()
    return list(itertools.product(d, d))


@lru_cache(maxsize=None)
def _pair_basis():
    B = operator_basis()
    return tuple(kron(B[i], B[j]) for i in range(9) for j in range(9))


def expand_source(F):
    """Coefficients f_i = Tr(B_i^H F), or f_ij = Tr((B_i ⊗ B_j)^H F) for 9x9 F."""
    F = as_matrix(F.matrix if isinstance(F, SourceState) else F)
    if F.shape == (3, 3):
        basis = operator_basis()
    elif F.shape == (9, 9):
        basis = _pair_basis()
    else:
        raise ValueError(f"expected a 3x3 or 9x9 matrix, got {F.shape}")
    c = np.array([np.trace(dagger(b) @ F) for b in basis])
    worst = float(np.max(np.abs(c.imag)))
    if worst > 1e-8:
        raise NonRealCoefficient(f"expansion coefficient has imaginary part {worst:.3e}")
    c = c.real
    return ExpansionCoefficients(c if F.shape == (3, 3) else c.reshape(9, 9))


def _combine(c):
    c = np.asarray(c, dtype=float)
    basis = operator_basis() if c.ndim == 1 else _pair_basis()
    return sum(x * b for x, b in zip(c.ravel(), basis))


def assemble_source(c):
    values = np.asarray(getattr(c, "values", c), dtype=float)
    expected, f0 = (F0_SINGLE, values[0]) if values.ndim == 1 else (F0_PAIR, values[0, 0])
    if abs(f0 - expected) > 1e-12:
        raise ValueError(f"leading coefficient is {f0:.17g}, trace 1 requires {expected:.17g}")
    F = _combine(values)
    lo = eig_hermitian(F).eigenvalues[-1]
    if lo < -NEGATIVE_TOL:
        raise NotPSD(f"coefficients give a matrix with eigenvalue {lo:.3e}")
    return SourceState(F)


def predict_first_moment(c, a):
    f = np.asarray(getattr(c, "values", c))
    a = direction(a)
    return float(np.sqrt(2.0) * (a[0] * f[1] + a[1] * f[2] + a[2] * f[3]))


def _second_moment_row(a):
    ax, ay, az = a
    r2, r6 = np.sqrt(2.0), np.sqrt(6.0)
    return np.array([
        np.sqrt(2.0 / 3.0) * ax * ax - (ay * ay + az * az) / r6,
        (az * az - ay * ay) / r2,
        r2 * ax * ay,
        r2 * ax * az,
        r2 * ay * az,
    ])


def predict_second_moment(c, a):
    """<k²> from the expansion; the constant is f_0 Tr(B_0 (a·S)²) = 2/3."""
    f = np.asarray(getattr(c, "values", c))
    a = direction(a)
    return float(2.0 / 3.0 + _second_moment_row(a) @ f[4:9])


def _least_squares(A, y, validate=True):
    A = np.asarray(A, dtype=float)
    if validate:
        sv = np.linalg.svd(A, compute_uv=False)
        cond = np.inf if sv[-1] == 0.0 else sv[0] / sv[-1]
        if A.shape[0] < A.shape[1] or not cond < CONDITION_LIMIT:
            raise SingularDesign(f"design matrix {A.shape} has condition number {cond:.3e}")
    try:
        return solve(A.T @ A, A.T @ np.asarray(y, dtype=float))
    except np.linalg.LinAlgError:
        raise SingularDesign("normal equations are singular") from None


def psd_repair(F):
    """Clip negative eigenvalues, rescale to trace 1; returns (matrix, clipped mass)."""
    spec = eig_hermitian(F)
    w = spec.eigenvalues
    clipped = float(np.clip(-w, 0.0, None).sum())
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    v = spec.eigenvectors
    G = (v * w) @ dagger(v)
    return 0.5 * (G + dagger(G)), clipped


def _repaired_state(F):
    lo = eig_hermitian(F).eigenvalues[-1]
    if lo >= 0.0:
        return SourceState(F)
    G, clipped = psd_repair(F)
    if clipped > REPAIR_LIMIT:
        raise NotPSD(f"reconstruction needs {clipped:.3e} of eigenvalue mass clipped (limit {REPAIR_LIMIT})")
    return SourceState(G, psd_adjustment=clipped)


def reconstruct_source(observations, validate=True):
    """3x3 source from (direction, <k>, <k²>) triples.

    Solves the first-moment equations for f_1..f_3 and the second-moment
    equations for f_4..f_8 by least squares, then repairs small negative
    eigenvalues caused by sampling noise.
    """
    dirs = [direction(a) for a, _, _ in observations]
    m1 = np.array([float(x) for _, x, _ in observations])
    m2 = np.array([float(x) for _, _, x in observations])
    if not dirs:
        raise SingularDesign("no observations")
    first = _least_squares(np.sqrt(2.0) * np.array(dirs), m1, validate)
    second = _least_squares(np.array([_second_moment_row(a) for a in dirs]), m2 - 2.0 / 3.0, validate)
    c = np.concatenate([[F0_SINGLE], first, second])
    return _repaired_state(_combine(c))


def _powers(a):
    K = spin_projection(a)
    return (identity(3), K, K @ K)


def _basis_traces(mats):
    """t[i, p] = Tr(B_i X_p), real for Hermitian X_p."""
    B = operator_basis()
    return np.array([[np.trace(b @ x).real for x in mats] for b in B])


def reconstruct_pair_source(observations, validate=True):
    """9x9 source from ((a, b), MomentSet) observations.

    Each moment <k^p l^q> with (p, q) != (0, 0) is linear in the 80 free
    coefficients: Tr((B_i ⊗ B_j)(a·S)^p ⊗ (b·S)^q) = Tr(B_i (a·S)^p) Tr(B_j (b·S)^q).
    """
    rows, rhs = [], []
    for (a, b), moments in observations:
        ta, tb = _basis_traces(_powers(a)), _basis_traces(_powers(b))
        for p in range(3):
            for q in range(3):
                if p == q == 0:
                    continue
                row = np.outer(ta[:, p], tb[:, q]).ravel()
                rows.append(row[1:])
                rhs.append(float(moments[p, q]) - F0_PAIR * row[0])
    if not rows:
        raise SingularDesign("no observations")
    c = _least_squares(np.array(rows), np.array(rhs), validate)
    return _repaired_state(_combine(np.concatenate([[F0_PAIR], c]).reshape(9, 9)))


def _simplex_projection(w):
    """Euclidean projection of a vector onto {x >= 0, sum x = 1}."""
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(w) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.clip(w - css[rho] / (rho + 1), 0.0, None)


def _project_density(F):
    spec = eig_hermitian(0.5 * (F + dagger(F)), tol=np.inf)
    v = spec.eigenvectors
    G = (v * _simplex_projection(spec.eigenvalues)) @ dagger(v)
    return 0.5 * (G + dagger(G))


def _frequency_design(dataset):
    rows, y = [], []
    for (a, b), table in dataset:
        ta = _basis_traces(beam_projectors(a).projectors)
        tb = _basis_traces(beam_projectors(b).projectors)
        vals = np.asarray(table.values, dtype=float)
        for i in range(3):
            for j in range(3):
                rows.append(np.outer(ta[:, i], tb[:, j]).ravel())
                y.append(vals[i, j])
    return np.array(rows), np.array(y)


def separability_residual(dataset, rounds=100):
    """Fit a single 9x9 source to pair-frequency tables taken at several settings.

    The unconstrained least-squares coefficients (minimum norm, trace fixed)
    are computed first; their negative eigenvalue mass is reported as
    ``psd_adjustment``. If the result is not positive semidefinite the fit
    continues with accelerated projected gradient steps onto the set of
    trace-1 PSD matrices. ``residual`` is the RMS misfit over all entries.
    """
    dataset = list(dataset)
    if not dataset:
        raise ValueError("dataset is empty")
    A, y = _frequency_design(dataset)
    rhs = y - F0_PAIR * A[:, 0]
    free, *_ = np.linalg.lstsq(A[:, 1:], rhs, rcond=1e-12)
    c = np.concatenate([[F0_PAIR], free])
    F = _combine(c.reshape(9, 9))
    w = eig_hermitian(F).eigenvalues
    adjustment = float(np.clip(-w, 0.0, None).sum())
    if w[-1] < -1e-12:
        # F0 pinned: in the orthonormal product basis Frobenius and coefficient norms agree
        step = 1.0 / np.linalg.norm(A, 2) ** 2
        x = expand_source(_project_density(F)).values.ravel()
        z, t = x.copy(), 1.0
        for _ in range(rounds):
            grad = A.T @ (A @ z - y)
            x_new = expand_source(_project_density(_combine((z - step * grad).reshape(9, 9)))).values.ravel()
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            z = x_new + ((t - 1.0) / t_new) * (x_new - x)
            x, t = x_new, t_new
        c = x
        F = _project_density(_combine(c.reshape(9, 9)))
        c = expand_source(F).values.ravel()
    residual = float(np.sqrt(np.mean((A @ c - y) ** 2)))
    return SeparabilityReport(SourceState(F), residual, adjustment)
