"""Spin-1 operators, rotations of magnet directions and the 3x3 operator basis."""
from dataclasses import dataclass

import numpy as np

from .errors import IdentityMismatch, NotUnit
from .linalg import dagger, identity, unitary_from_generator

UNIT_TOL = 1e-9
_R2 = np.sqrt(2.0)
_R3 = np.sqrt(3.0)

E_X = np.array([1.0, 0.0, 0.0])
E_Y = np.array([0.0, 1.0, 0.0])
E_Z = np.array([0.0, 0.0, 1.0])


def direction(v, tol=UNIT_TOL):
    """Validate a 3-vector as a unit vector and renormalize it.

    Raises NotUnit when the norm is off by more than ``tol``.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise NotUnit(f"a direction needs three finite components, got {v!r}")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > tol:
        raise NotUnit(f"direction {v.tolist()} has norm {norm:.17g}, expected 1")
    return v / norm


def normalized(v):
    """Scale an arbitrary nonzero vector to unit length."""
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class SpinTriple:
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray

    def __iter__(self):
        return iter((self.sx, self.sy, self.sz))


@dataclass(frozen=True)
class AxisAngle:
    axis: np.ndarray
    angle: float


def spin1_matrices():
    sx = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / _R2
    sy = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / _R2
    sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    return SpinTriple(sx, sy, sz)


_S = spin1_matrices()


def spin_projection(a):
    """a·S for a unit vector a."""
    a = direction(a)
    return a[0] * _S.sx + a[1] * _S.sy + a[2] * _S.sz


def rodrigues_rotate(u, axis, phi):
    u = direction(u)
    axis = direction(axis)
    c, s = np.cos(phi), np.sin(phi)
    v = u * c + np.cross(axis, u) * s + axis * np.dot(axis, u) * (1.0 - c)
    return v / np.linalg.norm(v)


def canonical_perpendicular(u):
    u = direction(u)
    ref = E_Y if abs(u[0]) > 0.9 else E_X
    return normalized(np.cross(u, ref))


def _antiparallel_axis(u):
    ref = E_Y if abs(u[0]) > 0.9 else E_X
    return normalized(ref - np.dot(ref, u) * u)


def axis_angle_between(u, w):
    """Axis and angle of the rotation about u×w that carries u onto w.

    Parallel inputs give angle 0 about :func:`canonical_perpendicular`;
    antiparallel inputs give angle pi about the projection of e_x (e_y when
    u is close to e_x) orthogonal to u.
    """
    u = direction(u)
    w = direction(w)
    cross = np.cross(u, w)
    sin_phi = np.linalg.norm(cross)
    cos_phi = float(np.dot(u, w))
    if sin_phi < 1e-14:
        if cos_phi > 0.0:
            return AxisAngle(canonical_perpendicular(u), 0.0)
        return AxisAngle(_antiparallel_axis(u), float(np.pi))
    axis = cross / sin_phi
    # remove round-off leakage along u; matters when u and w are nearly antiparallel
    axis = normalized(axis - np.dot(axis, u) * u)
    return AxisAngle(axis, float(np.arctan2(sin_phi, cos_phi)))


def rotation_unitary(u, w):
    """Spin-space unitary exp(-i*phi*alpha·S) of the rotation taking u to w."""
    rot = axis_angle_between(u, w)
    return unitary_from_generator(spin_projection(rot.axis), rot.angle)


def rotate_spin_projection(u, w, tol=1e-10):
    u = direction(u)
    w = direction(w)
    U = rotation_unitary(u, w)
    result = U @ spin_projection(u) @ dagger(U)
    mismatch = float(np.max(np.abs(result - spin_projection(w))))
    if mismatch > tol:
        raise IdentityMismatch(f"rotated u·S differs from w·S by {mismatch:.3e}")
    return result


def operator_basis():
    """Orthonormal Hermitian basis B_0..B_8 of the 3x3 matrices.

    B_0 is the normalized identity; B_1..B_8 are traceless and built from
    the spin-1 matrices, so (B_i, B_j) = Tr(B_i^H B_j) = delta_ij.
    """
    sx, sy, sz = _S
    one = identity(3)
    return (
        one / _R3,
        sx / _R2,
        sy / _R2,
        sz / _R2,
        -np.sqrt(2.0 / 3.0) * one + np.sqrt(1.5) * (sx @ sx),
        -_R2 * one + (sx @ sx) / _R2 + _R2 * (sz @ sz),
        (sx @ sy + sy @ sx) / _R2,
        (sx @ sz + sz @ sx) / _R2,
        (sy @ sz + sz @ sy) / _R2,
    )
