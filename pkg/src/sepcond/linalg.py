"""Small dense complex matrix tools: trace, Kronecker product, a cyclic
Jacobi eigensolver for Hermitian matrices and functions built on it."""
from dataclasses import dataclass

import numpy as np

from .errors import NotHermitian

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (descending) and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def identity(dim):
    return np.eye(dim, dtype=complex)


def trace(a):
    return complex(np.trace(as_matrix(a)))


def kron(a, b):
    # (A⊗B)[i*m + k, j*m + l] = A[i, j] * B[k, l]
    return np.kron(as_matrix(a), as_matrix(b))


def dagger(a):
    return np.conj(np.transpose(a))


def hermiticity_defect(a):
    a = np.asarray(a)
    return float(np.max(np.abs(a - dagger(a)))) if a.size else 0.0


def check_hermitian(a, tol=HERMITIAN_TOL):
    a = as_matrix(a)
    defect = hermiticity_defect(a)
    if defect > tol:
        raise NotHermitian(f"matrix is not Hermitian: max|A - A^H| = {defect:.3e} > {tol:.1e}")
    return a


def _jacobi_rotation(app, aqq, apq):
    """2x2 unitary G with (G^H [[app, apq], [conj(apq), aqq]] G) diagonal."""
    r = abs(apq)
    phase = apq / r
    theta = (aqq - app) / (2.0 * r)
    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
    if theta < 0.0:
        t = -t
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    # diag(1, conj(phase)) makes the pivot real, then a real plane rotation
    return np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])


def eig_hermitian(a, tol=HERMITIAN_TOL, max_sweeps=60):
    """Diagonalize a Hermitian matrix by cyclic complex Jacobi sweeps.

    Iterates until the off-diagonal Frobenius norm drops below
    ``1e-14 * ||A||_F``. Eigenvalues are returned in descending order;
    equal eigenvalues keep the order in which they appear on the diagonal.
    """
    a = check_hermitian(a, tol)
    a = 0.5 * (a + dagger(a))
    n = a.shape[0]
    v = identity(n)
    scale = np.linalg.norm(a)
    if n > 1 and scale > 0.0:
        threshold = 1e-14 * scale
        pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]
        for _ in range(max_sweeps):
            off = np.sqrt(2.0 * sum(abs(a[p, q]) ** 2 for p, q in pairs))
            if off <= threshold:
                break
            for p, q in pairs:
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                g = _jacobi_rotation(a[p, p].real, a[q, q].real, apq)
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = dagger(g) @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ g
        else:
            raise RuntimeError("Jacobi iteration did not converge")
    w = np.real(np.diag(a)).copy()
    order = np.argsort(-w, kind="stable")
    return Spectrum(w[order], v[:, order])


def unitary_from_generator(a, phi, tol=HERMITIAN_TOL):
    """exp(-i*phi*A) for Hermitian A via its spectral decomposition."""
    spec = eig_hermitian(a, tol)
    v = spec.eigenvectors
    return (v * np.exp(-1j * phi * spec.eigenvalues)) @ dagger(v)


def is_psd(a, tol=HERMITIAN_TOL):
    """Return ``(ok, min_eigenvalue)``; ok iff the smallest eigenvalue >= -tol."""
    lo = float(eig_hermitian(a, tol).eigenvalues[-1])
    return lo >= -tol, lo
