"""Parameter sweeps, singularity/exceptional-point finders and ATR detection.

A *family* is any callable mapping a real control parameter ``omega`` to a
network node or a :class:`~scatternet.core.TransferMatrix`.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .core import (
    DegenerateSMatrix,
    ScatterNetError,
    SpectralSingularity,
    TransferMatrix,
    pt_params,
    s_eigenvalue_branches,
    s_eigenvalues,
    transfer_to_scattering,
)
from .network import (
    Parallel,
    chebyshev_u,
    compose,
    parallel_identical,
    serial_identical,
    solve_bruteforce,
)

DEFAULT_SCAN = 2001
DEFAULT_TOL = 1e-9
ATR_TOL = 1e-6
UNBROKEN_TOL = 1e-10

Family = Callable[[float], object]


def _matrix(family: Family, omega: float, diagnostics: list | None = None) -> TransferMatrix:
    obj = family(omega)
    if isinstance(obj, TransferMatrix):
        return obj
    return compose(obj, diagnostics)


def _grid(lo: float, hi: float, steps: int) -> np.ndarray:
    if not lo < hi:
        raise ValueError("sweep range needs lo < hi")
    if steps < 2:
        raise ValueError("sweep needs at least 2 steps")
    return np.linspace(lo, hi, int(steps))


def _map(fn, values, threads: int):
    if threads is None or threads <= 1:
        return [fn(v) for v in values]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, values))


# -- sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRecord:
    omega: float
    t: complex
    r_left: complex
    r_right: complex
    eig_ratio: float
    det_residual: float
    flags: tuple = ()
    matrix: TransferMatrix | None = field(default=None, repr=False, compare=False)

    @property
    def T(self) -> float:
        return abs(self.t) ** 2

    @property
    def R_left(self) -> float:
        return abs(self.r_left) ** 2

    @property
    def R_right(self) -> float:
        return abs(self.r_right) ** 2


_NAN = complex(math.nan, math.nan)


def evaluate_point(family: Family, omega: float, singularity_tol: float = DEFAULT_TOL) -> SweepRecord:
    """Compose the family at one parameter value and collect amplitudes.

    Failures are recorded as flags instead of being raised.  When a parallel
    root cannot be expressed as a transfer matrix (zero transmission), the
    amplitudes come from the brute-force junction solver.
    """
    flags: list[str] = []
    omega = float(omega)
    obj = None
    try:
        obj = family(omega)
        M = obj if isinstance(obj, TransferMatrix) else compose(obj, flags)
    except ScatterNetError as exc:
        flags.append(f"error:{type(exc).__name__}")
        if isinstance(obj, Parallel):
            try:
                left = solve_bruteforce(obj, "left")
                right = solve_bruteforce(obj, "right")
                flags.append("oracle_amplitudes")
                return SweepRecord(omega, left.t, left.r, right.r, math.nan, math.nan, tuple(flags))
            except ScatterNetError as exc2:
                flags.append(f"error:{type(exc2).__name__}")
        return SweepRecord(omega, _NAN, _NAN, _NAN, math.nan, math.nan, tuple(flags))

    det_residual = abs(M.det - 1)
    try:
        ratio = s_eigenvalues(pt_params(M)).ratio
    except DegenerateSMatrix:
        ratio = math.nan
        flags.append("degenerate_s_matrix")
    try:
        amp = transfer_to_scattering(M, singularity_tol)
    except SpectralSingularity:
        flags.append("spectral_singularity")
        return SweepRecord(omega, _NAN, _NAN, _NAN, ratio, det_residual, tuple(flags), M)
    return SweepRecord(omega, amp.t, amp.r_left, amp.r_right, ratio, det_residual, tuple(flags), M)


def sweep(family: Family, lo: float, hi: float, steps: int, threads: int = 1,
          singularity_tol: float = DEFAULT_TOL) -> list[SweepRecord]:
    """Evaluate ``family`` on a uniform grid; records are in grid order."""
    grid = _grid(lo, hi, steps)
    return _map(lambda w: evaluate_point(family, w, singularity_tol), grid, threads)


def classify_phase(ratio: float, tol: float = UNBROKEN_TOL) -> str:
    if math.isnan(ratio):
        return "undefined"
    return "unbroken" if ratio - 1 <= tol else "broken"


# -- root refinement helpers -------------------------------------------------

def _polish_complex(f: Callable[[float], complex], w0: float, lo: float, hi: float,
                    max_iter: int = 60) -> tuple[float, float]:
    """Gauss-Newton iterations minimizing |f| along the real axis.

    Derivatives are secant estimates.  Returns the best ``(omega, |f|)``.
    """
    scale = max(abs(lo), abs(hi), 1.0)
    w, fw = w0, f(w0)
    best = (w, abs(fw))
    h = 1e-7 * max(hi - lo, 1e-12)
    for _ in range(max_iter):
        w2 = min(max(w + h, lo), hi)
        if w2 == w:
            w2 = max(w - h, lo)
        fw2 = f(w2)
        d = (fw2 - fw) / (w2 - w)
        if d == 0:
            break
        step = (np.conj(d) * fw).real / abs(d) ** 2
        w_new = min(max(w - step, lo), hi)
        f_new = f(w_new)
        if abs(f_new) < best[1]:
            best = (w_new, abs(f_new))
        if abs(w_new - w) <= 4e-16 * scale or best[1] == 0:
            break
        h = max(abs(w_new - w), 1e-12 * scale)
        w, fw = w_new, f_new
    return best


def _minimize_modulus(f: Callable[[float], complex], a: float, b: float) -> tuple[float, float]:
    res = optimize.minimize_scalar(
        lambda w: abs(f(w)), bounds=(a, b), method="bounded",
        options={"xatol": 1e-14 * max(1.0, abs(a), abs(b))},
    )
    w0 = float(res.x)
    w1, r1 = _polish_complex(f, w0, a, b)
    r0 = abs(f(w0))
    return (w1, r1) if r1 <= r0 else (w0, r0)


def _local_minima(values: np.ndarray) -> list[int]:
    idx = []
    n = len(values)
    for i in range(n):
        v = values[i]
        if not np.isfinite(v):
            continue
        left = values[i - 1] if i > 0 else np.inf
        right = values[i + 1] if i < n - 1 else np.inf
        left = np.inf if not np.isfinite(left) else left
        right = np.inf if not np.isfinite(right) else right
        if v <= left and v <= right and (v < left or v < right):
            idx.append(i)
    return idx


def _dedupe(reports, key=lambda r: r.omega, tol=1e-9):
    out = []
    for rep in sorted(reports, key=key):
        if out and abs(key(rep) - key(out[-1])) <= tol * max(1.0, abs(key(rep))):
            if rep.residual < out[-1].residual:
                out[-1] = rep
            continue
        out.append(rep)
    return out


# -- spectral singularities --------------------------------------------------

@dataclass(frozen=True)
class SingularityReport:
    kind: str
    omega_c: float
    residual: float
    bracket: tuple
    tol: float

    @property
    def omega(self) -> float:
        return self.omega_c

    @property
    def is_singular(self) -> bool:
        return self.residual < self.tol


_ENTRY = {"lasing": (1, 1), "cpa": (0, 0)}


def find_spectral_singularities(family: Family, lo: float, hi: float, kind: str = "lasing",
                                tol: float = DEFAULT_TOL, steps: int = DEFAULT_SCAN,
                                threads: int = 1, include_near_misses: bool = False) -> list[SingularityReport]:
    """Locate real zeros of M22 (lasing threshold) or M11 (coherent perfect absorption).

    Local minima of the entry modulus on a scan grid are refined inside the
    bracket of their neighbours.  Only roots with residual below ``tol`` are
    returned unless ``include_near_misses`` is set.
    """
    if kind not in _ENTRY:
        raise ValueError("kind must be 'lasing' or 'cpa'")
    i, j = _ENTRY[kind]

    def f(w):
        try:
            return complex(_matrix(family, w).mat[i, j])
        except (ScatterNetError, ZeroDivisionError):
            return complex(math.nan, math.nan)

    grid = _grid(lo, hi, steps)
    vals = np.abs(np.array(_map(f, grid, threads)))
    reports = []
    for idx in _local_minima(vals):
        a = grid[max(idx - 1, 0)]
        b = grid[min(idx + 1, len(grid) - 1)]
        w, res = _minimize_modulus(f, a, b)
        rep = SingularityReport(kind, w, res, (float(a), float(b)), tol)
        if rep.is_singular or include_near_misses:
            reports.append(rep)
    return _dedupe(reports, key=lambda r: r.omega_c)


def verify_singularity(family: Family, report: SingularityReport) -> float:
    """Re-evaluate the entry modulus at the reported parameter."""
    i, j = _ENTRY[report.kind]
    return abs(_matrix(family, report.omega_c).mat[i, j])


# -- exceptional points ------------------------------------------------------

@dataclass(frozen=True)
class ExceptionalPointReport:
    mode: str
    N: int
    omega: float
    residual: float
    branch_sign: str
    ratio_before: float
    ratio_after: float
    tol: float

    @property
    def crossing(self) -> str:
        before = classify_phase(self.ratio_before)
        after = classify_phase(self.ratio_after)
        return f"{before}->{after}"


def ep_residual(m: TransferMatrix, mode: str, sign: int, N: int = 1) -> complex:
    """Exceptional-point condition for a single cell viewed under ``mode``.

    single:   (b - c) - sign*2
    serial:   (b - c) - sign*2 sin(phi)/sin(N phi), written as 2/U_{N-1}(Tr/2)
    parallel: lambda_sign - (N+1)/(N-1)
    """
    p = pt_params(m)
    if mode == "single":
        return p.b - p.c - 2 * sign
    if mode == "serial":
        u = chebyshev_u(N - 1, m.trace / 2)
        if abs(u) < 1e-12:
            raise ZeroDivisionError("sin(N phi) = 0")
        return p.b - p.c - 2 * sign / u
    if mode == "parallel":
        lp, lm = s_eigenvalue_branches(p)
        lam = lp if sign > 0 else lm
        return lam - (N + 1) / (N - 1)
    raise ValueError(f"unknown mode {mode!r}")


def composed_matrix(m: TransferMatrix, mode: str, N: int = 1) -> TransferMatrix:
    if mode == "single":
        return m
    if mode == "serial":
        return serial_identical(m, N)
    if mode == "parallel":
        return parallel_identical(m, N)
    raise ValueError(f"unknown mode {mode!r}")


def _ratio(family, w, mode, N):
    try:
        return s_eigenvalues(pt_params(composed_matrix(_matrix(family, w), mode, N))).ratio
    except (ScatterNetError, ZeroDivisionError, ValueError):
        return math.nan


def find_exceptional_points(family: Family, lo: float, hi: float, mode: str = "single",
                            N: int = 1, tol: float = DEFAULT_TOL, steps: int = DEFAULT_SCAN,
                            threads: int = 1, diagnostics: list | None = None) -> list[ExceptionalPointReport]:
    """Roots of the exceptional-point condition for ``mode`` in ``[lo, hi]``.

    Real residuals are bracketed by sign changes and solved with Brent's
    method; complex residuals are located by modulus minimization.  Scan
    points where ``sin(N phi) = 0`` (serial mode) are skipped and noted in
    ``diagnostics``.
    """
    if mode == "parallel" and N < 2:
        raise ValueError("parallel mode needs N >= 2")
    if mode == "serial" and N < 1:
        raise ValueError("serial mode needs N >= 1")
    if mode == "single":
        N = 1
    grid = _grid(lo, hi, steps)
    step = grid[1] - grid[0]
    mats = _map(lambda w: _safe_matrix(family, w), grid, threads)
    reports = []
    for sign in (+1, -1):
        def f(w, sign=sign):
            return ep_residual(_matrix(family, w), mode, sign, N)

        vals = np.full(len(grid), complex(math.nan, math.nan))
        for n, m in enumerate(mats):
            if m is None:
                continue
            try:
                vals[n] = ep_residual(m, mode, sign, N)
            except ZeroDivisionError:
                if diagnostics is not None:
                    diagnostics.append(f"skipped omega={grid[n]!r}: sin(N phi) = 0")
            except ScatterNetError:
                pass
        finite = np.isfinite(vals)
        if not finite.any():
            continue
        is_real = np.all(np.abs(vals[finite].imag) <= 1e-12 * max(1.0, np.max(np.abs(vals[finite]))))
        candidates = []
        if is_real:
            re = vals.real
            for n in range(len(grid) - 1):
                a, b = re[n], re[n + 1]
                if not (np.isfinite(a) and np.isfinite(b)):
                    continue
                if a == 0:
                    candidates.append(grid[n])
                elif a * b < 0:
                    try:
                        candidates.append(optimize.brentq(
                            lambda w: f(w).real, grid[n], grid[n + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))
                    except (ValueError, ZeroDivisionError, ScatterNetError):
                        continue
            if np.isfinite(re[-1]) and re[-1] == 0:
                candidates.append(grid[-1])
        else:
            mod = np.abs(vals)
            for n in _local_minima(mod):
                a = grid[max(n - 1, 0)]
                b = grid[min(n + 1, len(grid) - 1)]

                def g(w):
                    try:
                        return f(w)
                    except (ScatterNetError, ZeroDivisionError):
                        return complex(math.nan, math.nan)
                candidates.append(_minimize_modulus(g, a, b)[0])
        for w in candidates:
            try:
                res = abs(f(w))
            except (ScatterNetError, ZeroDivisionError):
                continue
            if not res < tol:
                if diagnostics is not None:
                    diagnostics.append(f"rejected omega={w!r}: residual {res:.3e}")
                continue
            h = step / 2
            reports.append(ExceptionalPointReport(
                mode=mode, N=N, omega=float(w), residual=float(res),
                branch_sign="+" if sign > 0 else "-",
                ratio_before=_ratio(family, max(w - h, lo), mode, N),
                ratio_after=_ratio(family, min(w + h, hi), mode, N),
                tol=tol,
            ))
    reports.sort(key=lambda r: (r.omega, r.branch_sign))
    return reports


def _safe_matrix(family, w):
    try:
        return _matrix(family, w)
    except ScatterNetError:
        return None


# -- Bragg grating -----------------------------------------------------------

def bragg_parallel_ep(n0: float, n1: float, delta: float, k: float, N: int) -> float:
    """Gain/loss index n2 that makes M21 vanish for N parallel Bragg cells.

    Solves the (2,1) entry of the identical-cell parallel matrix for n2:
    ``n2 = (N^2+1)/(2N) n1 - (N^2-1)/N * n0 delta / k``.  With n1 = n2 this
    gives ``n2 = 2 n0 delta (N+1) / (k (N-1))``.
    """
    if not k > 0:
        raise ValueError("k must be > 0")
    if N < 1:
        raise ValueError("N must be >= 1")
    return (N * N + 1) / (2 * N) * n1 - (N * N - 1) / N * n0 * delta / k


# -- anisotropic transmission resonances -------------------------------------

@dataclass(frozen=True)
class ATRRecord:
    omega: float
    direction: str
    T: float
    dead_side_R: float
    other_side_R: float


def detect_atr(records: Sequence[SweepRecord], tol: float = ATR_TOL) -> list[ATRRecord]:
    """Points with unit transmission and reflectionless incidence from one side only.

    ``direction`` names the side whose incident wave is not reflected.
    """
    if not records:
        raise ValueError("no records")
    out = []
    for rec in records:
        T, RL, RR = rec.T, rec.R_left, rec.R_right
        if not (np.isfinite(T) and abs(T - 1) < tol):
            continue
        if RL < tol and not RR < tol:
            out.append(ATRRecord(rec.omega, "left", T, RL, RR))
        elif RR < tol and not RL < tol:
            out.append(ATRRecord(rec.omega, "right", T, RR, RL))
    return out


def bidirectional_transparency(records: Sequence[SweepRecord], tol: float = ATR_TOL) -> list[float]:
    """Parameter values where T = 1 and both reflectances vanish."""
    return [
        rec.omega for rec in records
        if np.isfinite(rec.T) and abs(rec.T - 1) < tol and rec.R_left < tol and rec.R_right < tol
    ]
