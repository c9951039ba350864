"""Parameter evolution of a 3x3 source: propagator, von Neumann trajectory,
pure-state trajectory and the evolution diagnostics."""
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientPoints, NotNormalized, OutOfDomain, UnitarityError
from .experiment import SourceState, validate_source
from .linalg import dagger, eig_hermitian, identity, unitary_from_generator
from .spin import operator_basis

UNITARITY_TOL = 1e-10


@dataclass(frozen=True)
class HamiltonianSchedule:
    """Coefficients h_1..h_8 of H = sum_i h_i B_i as a function of lambda.

    ``lambdas``/``coefficients`` tabulate the h_i (linear interpolation in
    between); a single row means constant coefficients for every lambda.
    ``shift`` adds shift * identity to H, which must not change the dynamics
    of the source matrix.
    """

    lambdas: np.ndarray
    coefficients: np.ndarray
    shift: float = 0.0

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lambdas, dtype=float))
        coef = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        if coef.shape != (len(lam), 8):
            raise ValueError(f"need one row of 8 coefficients per lambda, got {coef.shape}")
        if np.any(np.diff(lam) <= 0.0):
            raise ValueError("schedule lambdas must be strictly ascending")
        if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(coef))):
            raise ValueError("schedule has non-finite entries")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "coefficients", coef)

    @classmethod
    def constant(cls, h, shift=0.0):
        return cls(np.array([0.0]), np.asarray(h, dtype=float).reshape(1, 8), shift)

    @property
    def is_constant(self):
        return len(self.lambdas) == 1

    def h(self, lam):
        if self.is_constant:
            return self.coefficients[0]
        lo, hi = self.lambdas[0], self.lambdas[-1]
        if lam < lo - 1e-12 or lam > hi + 1e-12:
            raise OutOfDomain(f"lambda={lam} outside schedule domain [{lo}, {hi}]")
        return np.array([np.interp(lam, self.lambdas, col) for col in self.coefficients.T])


@dataclass(frozen=True)
class PropagatorSolution:
    grid: np.ndarray
    unitaries: np.ndarray  # shape (len(grid), 3, 3)

    def at(self, i):
        return self.unitaries[i]


@dataclass(frozen=True)
class EvolutionReport:
    spectrum_drift: float
    trace_derivative_residual: float
    unitarity_defect: float = 0.0


def hamiltonian_at(s, lam):
    B = operator_basis()
    h = s.h(lam)
    H = sum(hi * b for hi, b in zip(h, B[1:]))
    if s.shift:
        H = H + s.shift * identity(3)
    return H


def _grid(lambda_max, step, lambda_start):
    span = lambda_max - lambda_start
    if span <= 0.0:
        raise ValueError("lambda_max must exceed the start of the interval")
    if step is None:
        step = 1e-3 * span
    if step <= 0.0:
        raise ValueError("step must be positive")
    # equal steps covering the interval exactly; step is rounded to fit
    n = max(1, int(round(span / step)))
    return lambda_start + span * np.arange(n + 1) / n


def _unitarity_defect(V):
    return float(np.max(np.abs(dagger(V) @ V - identity(V.shape[0]))))


def evolve_propagator(s, lambda_max, step=None, lambda_start=0.0):
    """Solve i dV/dlambda = H V, V(start) = 1, on a uniform grid.

    Each step applies the exact exponential of the midpoint Hamiltonian,
    V(l + d) = exp(-i d H(l + d/2)) V(l): unitary at every step, exact for
    constant H and second order for smoothly varying H.
    """
    grid = _grid(lambda_max, step, lambda_start)
    out = np.empty((len(grid), 3, 3), dtype=complex)
    V = identity(3)
    out[0] = V
    fixed = None
    if s.is_constant:
        fixed = unitary_from_generator(hamiltonian_at(s, 0.0), grid[1] - grid[0])
    for i in range(1, len(grid)):
        d = grid[i] - grid[i - 1]
        U = fixed if fixed is not None else unitary_from_generator(hamiltonian_at(s, grid[i - 1] + 0.5 * d), d)
        V = U @ V
        defect = _unitarity_defect(V)
        if defect > UNITARITY_TOL:
            raise UnitarityError(f"propagator lost unitarity at lambda={grid[i]}: {defect:.3e}")
        out[i] = V
    return PropagatorSolution(grid, out)


def evolve_source(F0, s, lambda_max, step=None):
    """F(lambda) = V(lambda) F0 V(lambda)^H along the propagator grid.

    Returns the trajectory as a list of (lambda, SourceState) together with
    its :class:`EvolutionReport`.
    """
    F0 = validate_source(F0, 3)
    sol = evolve_propagator(s, lambda_max, step)
    traj = []
    for lam, V in zip(sol.grid, sol.unitaries):
        F = V @ F0 @ dagger(V)
        traj.append((float(lam), SourceState.unchecked(0.5 * (F + dagger(F)))))
    h = sol.grid[1] - sol.grid[0]
    defect = max(_unitarity_defect(V) for V in sol.unitaries)
    if len(traj) >= 3:
        report = evolution_diagnostics(traj, h)
        report = EvolutionReport(report.spectrum_drift, report.trace_derivative_residual, defect)
    else:
        report = EvolutionReport(_spectrum_drift(traj), 0.0, defect)
    return traj, report


def evolve_pure_state(psi0, s, lambda_max, step=None):
    psi0 = np.asarray(psi0, dtype=complex).reshape(-1)
    norm = np.linalg.norm(psi0)
    if abs(norm - 1.0) > 1e-12:
        raise NotNormalized(f"initial state has norm {norm:.17g}")
    sol = evolve_propagator(s, lambda_max, step)
    return [(float(lam), V @ psi0) for lam, V in zip(sol.grid, sol.unitaries)]


def _matrix(F):
    return F.matrix if isinstance(F, SourceState) else np.asarray(F)


def _spectrum_drift(traj):
    ref = eig_hermitian(_matrix(traj[0][1])).eigenvalues
    return max(float(np.max(np.abs(eig_hermitian(_matrix(F)).eigenvalues - ref))) for _, F in traj)


def evolution_diagnostics(traj, h):
    """Spectrum drift and central-difference |Tr dF/dlambda| along a trajectory.

    Both vanish for unitary evolution; a nonzero spectrum drift marks data
    outside the fixed-spectrum class.
    """
    if len(traj) < 3:
        raise InsufficientPoints(f"need at least 3 trajectory points, got {len(traj)}")
    lams = np.array([lam for lam, _ in traj])
    if np.max(np.abs(np.diff(lams) - h)) > 1e-9 * max(1.0, abs(h)):
        raise ValueError("trajectory is not uniformly spaced with the given h")
    mats = [_matrix(F) for _, F in traj]
    tr_res = max(abs(np.trace(mats[i + 1] - mats[i - 1])) / (2.0 * h) for i in range(1, len(mats) - 1))
    return EvolutionReport(_spectrum_drift(traj), float(tr_res))
