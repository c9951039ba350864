"""Beam projectors M_k(a): the closed quadratic form in a·S and an
independent construction from Lagrange interpolation over the spectrum."""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrum
from .linalg import HERMITIAN_TOL, check_hermitian, dagger, eig_hermitian, identity
from .spin import spin_projection

OUTCOMES = (1, 0, -1)


@dataclass(frozen=True)
class ProjectorSet:
    outcomes: tuple
    projectors: tuple

    def __getitem__(self, k):
        # nearest label, so computed eigenvalues can be looked up by their ideal value
        dist = [abs(o - k) for o in self.outcomes]
        i = int(np.argmin(dist))
        if dist[i] > 1e-9 * max(1.0, abs(k)):
            raise KeyError(k)
        return self.projectors[i]

    def __len__(self):
        return len(self.projectors)


def _symmetrize(p):
    return 0.5 * (p + dagger(p))


def beam_projectors(a):
    """M_k(a) = 1 - K² + (k/2)K + (k²/2)(3K² - 2) with K = a·S, k = +1, 0, -1."""
    K = spin_projection(a)
    K2 = K @ K
    one = identity(3)
    mats = []
    for k in OUTCOMES:
        m = one - K2 + 0.5 * k * K + 0.5 * k * k * (3.0 * K2 - 2.0 * one)
        mats.append(_symmetrize(m))
    return ProjectorSet(OUTCOMES, tuple(mats))


def vandermonde(nodes):
    nodes = np.asarray(nodes, dtype=float)
    return np.vander(nodes, len(nodes), increasing=True)


def solve(a, b):
    """Gaussian elimination with partial pivoting (small dense systems)."""
    dtype = np.result_type(np.asarray(a).dtype, np.asarray(b).dtype, float)
    a = np.array(a, dtype=dtype)
    b = np.array(b, dtype=dtype)
    n = a.shape[0]
    vector = b.ndim == 1
    if vector:
        b = b[:, None]
    for col in range(n):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if a[piv, col] == 0.0:
            raise np.linalg.LinAlgError("singular matrix")
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        for row in range(col + 1, n):
            f = a[row, col] / a[col, col]
            a[row, col:] -= f * a[col, col:]
            b[row] -= f * b[col]
    x = np.zeros_like(b)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return x[:, 0] if vector else x


def lagrange_projectors(A, tol=HERMITIAN_TOL):
    """Spectral projectors of a non-degenerate Hermitian matrix as polynomials in A.

    P_i = sum_n b[i, n] A^n with b = (V^T)^{-1} and V[k, n] = lambda_k^n, i.e.
    the Lagrange basis polynomial of eigenvalue i evaluated at A. Outcomes are
    the eigenvalues in descending order.
    """
    A = check_hermitian(A, tol)
    lam = eig_hermitian(A, tol).eigenvalues
    n = len(lam)
    spread = lam[0] - lam[-1]
    gaps = lam[:-1] - lam[1:]
    if n > 1 and (spread == 0.0 or gaps.min() < 1e-6 * spread):
        raise DegenerateSpectrum(f"eigenvalues {lam.tolist()} are not well separated")
    b = solve(vandermonde(lam).T, np.eye(n))
    powers = [identity(n)]
    for _ in range(n - 1):
        powers.append(powers[-1] @ A)
    mats = []
    for i in range(n):
        p = sum(b[i, m] * powers[m] for m in range(n))
        mats.append(_symmetrize(p))
    return ProjectorSet(tuple(float(x) for x in lam), tuple(mats))


def reconstruct_observable(ps):
    """Return (M_+1 - M_-1, M_+1 + M_-1), i.e. a·S and (a·S)²."""
    return ps[1] - ps[-1], ps[1] + ps[-1]
