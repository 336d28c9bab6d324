"""2x2 transfer-matrix algebra, scattering amplitudes and PT-parameter tools.

Global convention: a transfer matrix maps the amplitude pair
``(forward, backward)`` on the left side of a scatterer to the pair on the
right side::

    [u_right]       [u_left]
    [v_right] = M . [v_left]

With that orientation, left incidence gives ``t = det(M)/m22`` and
``r_left = -m21/m22``; right incidence gives ``t_right = 1/m22`` and
``r_right = m12/m22``.  For unimodular matrices both transmissions equal
``1/m22``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

DEFAULT_SINGULARITY_TOL = 1e-9


class ScatterNetError(Exception):
    """Base class for numerical failures raised by this package."""


class SpectralSingularity(ScatterNetError):
    """Raised when m22 vanishes, so amplitudes diverge."""

    def __init__(self, m22_abs: float):
        self.m22_abs = m22_abs
        super().__init__(f"spectral singularity: |m22| = {m22_abs:.3e}")


class DegenerateSMatrix(ScatterNetError):
    """Raised when the S-matrix is undefined (a = 0)."""


class NotUnimodular(ScatterNetError):
    """Raised when an operation requires det(M) = 1."""


def _as_mat2(m) -> np.ndarray:
    arr = np.array(m, dtype=complex)
    if arr.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    return arr


def det2(m: np.ndarray) -> complex:
    return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def inv2(m: np.ndarray) -> np.ndarray:
    """Closed-form inverse of a 2x2 matrix."""
    d = det2(m)
    if d == 0:
        raise ZeroDivisionError("singular 2x2 matrix")
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=complex) / d


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Immutable complex 2x2 transfer matrix in the global convention."""

    mat: np.ndarray
    det: complex

    def __init__(self, mat):
        arr = _as_mat2(mat)
        arr.setflags(write=False)
        object.__setattr__(self, "mat", arr)
        object.__setattr__(self, "det", det2(arr))

    @classmethod
    def identity(cls) -> "TransferMatrix":
        return cls(np.eye(2))

    @property
    def m11(self) -> complex:
        return complex(self.mat[0, 0])

    @property
    def m12(self) -> complex:
        return complex(self.mat[0, 1])

    @property
    def m21(self) -> complex:
        return complex(self.mat[1, 0])

    @property
    def m22(self) -> complex:
        return complex(self.mat[1, 1])

    @property
    def trace(self) -> complex:
        return complex(self.mat[0, 0] + self.mat[1, 1])

    def norm(self) -> float:
        return float(np.max(np.abs(self.mat)))

    def inverse(self) -> "TransferMatrix":
        return TransferMatrix(inv2(self.mat))

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        return TransferMatrix(self.mat @ other.mat)

    def allclose(self, other: "TransferMatrix", rtol=1e-12, atol=0.0) -> bool:
        scale = max(self.norm(), other.norm(), 1.0)
        return bool(np.max(np.abs(self.mat - other.mat)) <= rtol * scale + atol)

    def __repr__(self):
        rows = ", ".join(
            "[" + ", ".join(f"{z:.6g}" for z in row) + "]" for row in self.mat
        )
        return f"TransferMatrix([{rows}])"


@dataclass(frozen=True)
class PTParams:
    """The (a, b, c) parameterization ``[[a*, i b], [-i c, a]]``."""

    a: complex
    b: complex
    c: complex

    @property
    def det(self) -> complex:
        return abs(self.a) ** 2 - self.b * self.c


@dataclass(frozen=True)
class ScatteringAmplitudes:
    t: complex
    r_left: complex
    r_right: complex
    t_right: complex

    @property
    def T(self) -> float:
        return abs(self.t) ** 2

    @property
    def R_left(self) -> float:
        return abs(self.r_left) ** 2

    @property
    def R_right(self) -> float:
        return abs(self.r_right) ** 2


@dataclass(frozen=True)
class SEigenvalues:
    lambda_plus: complex
    lambda_minus: complex

    @property
    def ratio(self) -> float:
        lm = abs(self.lambda_minus)
        return math.inf if lm == 0 else abs(self.lambda_plus) / lm


def transfer_to_scattering(M: TransferMatrix, tol: float = DEFAULT_SINGULARITY_TOL) -> ScatteringAmplitudes:
    """Scattering amplitudes of a transfer matrix.

    Raises
    ------
    SpectralSingularity
        If ``|m22| < tol * max(1, ||M||)``.
    """
    m22 = M.m22
    if abs(m22) < tol * max(1.0, M.norm()):
        raise SpectralSingularity(abs(m22))
    return ScatteringAmplitudes(
        t=M.det / m22,
        r_left=-M.m21 / m22,
        r_right=M.m12 / m22,
        t_right=1.0 / m22,
    )


def scattering_matrix(M: TransferMatrix) -> np.ndarray:
    """S-matrix ``[[r_left, t_right], [t, r_right]]`` (rows: outgoing left, right)."""
    amp = transfer_to_scattering(M, tol=0.0)
    return np.array([[amp.r_left, amp.t_right], [amp.t, amp.r_right]])


def pt_params(M: TransferMatrix) -> PTParams:
    return PTParams(a=M.m22, b=-1j * M.m12, c=1j * M.m21)


def s_eigenvalues(p: PTParams) -> SEigenvalues:
    """Eigenvalues ``i/(2a) [(b+c) +/- sqrt((b-c)^2 - 4)]`` of the S-matrix.

    Sorted so that ``|lambda_plus| >= |lambda_minus|``; equal moduli are
    ordered by descending imaginary part.
    """
    if p.a == 0:
        raise DegenerateSMatrix("a = 0: S-matrix undefined")
    lp, lm = s_eigenvalue_branches(p)
    key = lambda z: (round(abs(z), 13), z.imag)
    if key(lm) > key(lp):
        lp, lm = lm, lp
    return SEigenvalues(lp, lm)


def s_eigenvalue_branches(p: PTParams) -> tuple[complex, complex]:
    """The two eigenvalues labelled by the sign in front of the square root."""
    if p.a == 0:
        raise DegenerateSMatrix("a = 0: S-matrix undefined")
    d = p.b - p.c
    # factored discriminant keeps (b-c)^2 - 4 accurate near the exceptional point
    root = cmath.sqrt((d - 2) * (d + 2))
    pre = 1j / (2 * p.a)
    return pre * ((p.b + p.c) + root), pre * ((p.b + p.c) - root)


@dataclass(frozen=True)
class PTSymmetryReport:
    omega: complex
    residual_m22: float
    residual_m12: float
    residual_m21: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.residual_m22, self.residual_m12, self.residual_m21) <= self.tol


def check_pt_symmetry(cell: Callable[[complex], TransferMatrix], omega, tol: float = 1e-12) -> PTSymmetryReport:
    """Check m22(w) = m11*(w*), m12(w) = -m12*(w*), m21(w) = -m21*(w*)."""
    m = cell(omega).mat
    mc = cell(np.conj(omega)).mat
    scale = max(1.0, float(np.max(np.abs(m))))
    return PTSymmetryReport(
        omega=complex(omega),
        residual_m22=abs(m[1, 1] - np.conj(mc[0, 0])) / scale,
        residual_m12=abs(m[0, 1] + np.conj(mc[0, 1])) / scale,
        residual_m21=abs(m[1, 0] + np.conj(mc[1, 0])) / scale,
        tol=tol,
    )
