"""Concrete scattering cells that produce transfer matrices."""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import PTParams, TransferMatrix


@dataclass(frozen=True)
class PhysicalConstants:
    """Natural units by default."""

    hbar: float = 1.0
    e_charge: float = 1.0
    c_light: float = 1.0
    default_mass: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "e_charge", "c_light", "default_mass"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


NATURAL_UNITS = PhysicalConstants()


@dataclass(frozen=True)
class FreeSegment:
    """Uniform segment with direction-dependent wavevectors.

    The forward wave is ``exp(i k_forward x)`` and the backward wave
    ``exp(-i k_backward x)``.
    """

    length: float
    k_forward: complex
    k_backward: complex | None = None
    mass: float = 1.0

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("length must be >= 0")
        if self.mass <= 0:
            raise ValueError("mass must be > 0")
        if self.k_backward is None:
            object.__setattr__(self, "k_backward", self.k_forward)


def free_segment_matrix(seg: FreeSegment) -> TransferMatrix:
    L = seg.length
    return TransferMatrix(
        np.diag([cmath.exp(1j * seg.k_forward * L), cmath.exp(-1j * seg.k_backward * L)])
    )


@dataclass(frozen=True)
class ABRingSpec:
    """Two-arm ring threaded by a magnetic flux."""

    k: float
    flux: float
    circumference: float
    arm1: float | None = None
    arm2: float | None = None

    def __post_init__(self):
        L = self.circumference
        if not L > 0:
            raise ValueError("circumference must be > 0")
        a1, a2 = self.arm1, self.arm2
        if a1 is None and a2 is None:
            a1 = a2 = L / 2
        elif a1 is None:
            a1 = L - a2
        elif a2 is None:
            a2 = L - a1
        if a1 <= 0 or a2 <= 0:
            raise ValueError("arm lengths must be > 0")
        if abs(a1 + a2 - L) > 1e-12 * max(1.0, L):
            raise ValueError("arm lengths must sum to the circumference")
        object.__setattr__(self, "arm1", a1)
        object.__setattr__(self, "arm2", a2)

    @classmethod
    def from_flux_phase(cls, k, flux_phase, circumference, arm1=None, arm2=None,
                        consts: PhysicalConstants = NATURAL_UNITS) -> "ABRingSpec":
        """Build from the flux phase ``psi = -e Phi / (hbar c)``."""
        flux = -flux_phase * consts.hbar * consts.c_light / consts.e_charge
        return cls(k, flux, circumference, arm1, arm2)

    def flux_phase(self, consts: PhysicalConstants = NATURAL_UNITS) -> float:
        return -consts.e_charge * self.flux / (consts.hbar * consts.c_light)


def ab_ring_wavevectors(spec: ABRingSpec, consts: PhysicalConstants = NATURAL_UNITS) -> tuple[float, float]:
    """Arm wavevectors ``k +/- e Phi / (hbar c L)``.

    Arm 1 propagates forward with ``k1`` and backward with ``k2``; arm 2 the
    other way round.
    """
    shift = consts.e_charge * spec.flux / (consts.hbar * consts.c_light * spec.circumference)
    return spec.k + shift, spec.k - shift


def ab_ring_arms(spec: ABRingSpec, consts: PhysicalConstants = NATURAL_UNITS) -> tuple[FreeSegment, FreeSegment]:
    k1, k2 = ab_ring_wavevectors(spec, consts)
    return (
        FreeSegment(spec.arm1, k1, k2, consts.default_mass),
        FreeSegment(spec.arm2, k2, k1, consts.default_mass),
    )


def pt_cell(p: PTParams) -> TransferMatrix:
    a, b, c = complex(p.a), complex(p.b), complex(p.c)
    return TransferMatrix([[a.conjugate(), 1j * b], [-1j * c, a]])


@dataclass(frozen=True)
class BraggParams:
    """Grating ``n(z) = n0 + n1 cos(2 beta z) + i n2 sin(2 beta z)`` on ``|z| < L/2``."""

    n0: float
    n1: float
    n2: float
    grating_number: float
    length: float

    def __post_init__(self):
        if not self.n0 > 0:
            raise ValueError("n0 must be > 0")
        if not self.length > 0:
            raise ValueError("length must be > 0")

    def detuning(self, k: float) -> float:
        return self.grating_number - k

    @classmethod
    def from_detuning(cls, n0, n1, n2, delta, k, length) -> "BraggParams":
        return cls(n0, n1, n2, k + delta, length)


def _sin_over(lam: complex, L: float) -> complex:
    """sin(lam L)/lam, continuous through lam = 0."""
    x = lam * L
    if abs(x) < 1e-4:
        x2 = x * x
        return L * (1 - x2 / 6 + x2 * x2 / 120)
    return cmath.sin(x) / lam


def bragg_lambda(p: BraggParams, k: float) -> complex:
    """Coupled-mode eigenvalue ``sqrt(delta^2 - k^2 (n1^2 - n2^2) / (4 n0^2))``.

    This is the choice that makes the near-Bragg matrix unimodular.
    """
    delta = p.detuning(k)
    return cmath.sqrt(delta**2 - k**2 * (p.n1**2 - p.n2**2) / (4 * p.n0**2))


def bragg_matrix(p: BraggParams, k: float) -> TransferMatrix:
    if not k > 0:
        raise ValueError("k must be > 0")
    delta = p.detuning(k)
    lam = bragg_lambda(p, k)
    L = p.length
    cos = cmath.cos(lam * L)
    s = _sin_over(lam, L)
    return TransferMatrix([
        [cos - 1j * delta * s, 1j * (p.n1 + p.n2) / (2 * p.n0) * k * s],
        [-1j * (p.n1 - p.n2) / (2 * p.n0) * k * s, cos + 1j * delta * s],
    ])


@dataclass(frozen=True)
class PTTable:
    """Tabulated PT cell: (a, b, c) sampled on an omega grid.

    Evaluation interpolates each coefficient linearly, separately in its real
    and imaginary parts.  Evaluation is read-only and thread-safe.
    """

    omega: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray = field(repr=False)

    def __init__(self, omega: Sequence[float], a, b, c):
        w = np.asarray(omega, dtype=float)
        if w.ndim != 1 or len(w) < 2:
            raise ValueError("omega grid needs at least two points")
        if np.any(np.diff(w) <= 0):
            raise ValueError("omega grid must be strictly increasing")
        arrays = [np.asarray(x, dtype=complex) for x in (a, b, c)]
        for name, arr in zip("abc", arrays):
            if arr.shape != w.shape:
                raise ValueError(f"coefficient {name} has {arr.size} samples, expected {w.size}")
        object.__setattr__(self, "omega", w)
        for name, arr in zip("abc", arrays):
            object.__setattr__(self, name, arr)

    def params(self, omega: float) -> PTParams:
        w = float(np.real(omega))
        if w < self.omega[0] or w > self.omega[-1]:
            raise ValueError(f"omega={w} outside table range [{self.omega[0]}, {self.omega[-1]}]")

        def interp(y):
            return complex(np.interp(w, self.omega, y.real) + 1j * np.interp(w, self.omega, y.imag))

        return PTParams(interp(self.a), interp(self.b), interp(self.c))

    def __call__(self, omega: float) -> TransferMatrix:
        return pt_cell(self.params(omega))


CellEvaluator = Callable[[float], TransferMatrix]
