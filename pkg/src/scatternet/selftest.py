"""Randomized self-checks run by ``scatternet selftest``.

Each suite compares two independent evaluation routes and returns
``(passed, worst_error, detail)``.
"""
from __future__ import annotations

import math

import numpy as np

from .analysis import detect_atr, evaluate_point, find_spectral_singularities, bragg_parallel_ep, verify_singularity
from .cells import ABRingSpec, BraggParams, bragg_matrix, pt_cell
from .config import ab_ring_node
from .core import PTParams, TransferMatrix, pt_params, s_eigenvalues, transfer_to_scattering
from .network import (
    BranchSpec,
    Parallel,
    VertexParams,
    identical_reduction,
    parallel_compose,
    parallel_identical,
    serial_compose,
    serial_identical,
    solve_bruteforce,
)


def random_unimodular(rng: np.random.Generator) -> TransferMatrix:
    m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return TransferMatrix(m / np.sqrt(np.linalg.det(m)))


def random_parallel(rng: np.random.Generator, N: int) -> Parallel:
    def wv():
        return float(rng.uniform(0.5, 2.0))

    branches = [BranchSpec(random_unimodular(rng), k=wv(), kp=wv(), q=wv(), qp=wv()) for _ in range(N)]
    return Parallel(tuple(branches), VertexParams(k=wv(), kp=wv()), VertexParams(k=wv(), kp=wv()))


def amplitude_error(node: Parallel) -> tuple[float, bool]:
    diag: list = []
    M = parallel_compose(node, diag)
    amp = transfer_to_scattering(M, tol=0.0)
    worst = 0.0
    for side, t, r in (("left", amp.t, amp.r_left), ("right", amp.t_right, amp.r_right)):
        sol = solve_bruteforce(node, side)
        scale = max(abs(sol.t), abs(sol.r))
        worst = max(worst, abs(t - sol.t) / scale, abs(r - sol.r) / scale)
    return worst, bool(diag)


def suite_oracle(rng, count=200):
    worst, flagged = 0.0, 0
    for _ in range(count):
        err, deg = amplitude_error(random_parallel(rng, int(rng.integers(2, 6))))
        worst = max(worst, err)
        flagged += deg
    return worst < 1e-9, worst, f"{count} systems, {flagged} degenerate-link fallbacks"


def suite_ab_ring(rng):
    worst = 0.0
    for k in rng.uniform(0.2, 3.0, 5):
        L = 2 * math.pi / k * 3  # kL = 6 pi
        for psi, L_ in ((math.pi, 2 * math.pi), (float(rng.uniform(0, 2 * math.pi)), L)):
            sol = solve_bruteforce(ab_ring_node(ABRingSpec.from_flux_phase(k, psi, L_)))
            worst = max(worst, abs(sol.t) ** 2)
    return worst < 1e-10, worst, "T at psi = pi and at kL = 2 pi n"


def suite_chebyshev(rng, count=100):
    worst = 0.0
    for _ in range(count):
        m = random_unimodular(rng)
        for N in (2, 3, 10, 50):
            direct = serial_compose([m] * N)
            err = np.max(np.abs(serial_identical(m, N).mat - direct.mat)) / max(1.0, direct.norm())
            worst = max(worst, err)
    return worst < 1e-9, worst, f"{count} matrices, N in 2,3,10,50"


def random_pt(rng) -> PTParams:
    b, c = rng.uniform(-2, 2, 2)
    mod = math.sqrt(1 + b * c) if 1 + b * c > 0 else None
    if mod is None:
        b, c = abs(b), abs(c)
        mod = math.sqrt(1 + b * c)
    return PTParams(mod * np.exp(1j * rng.uniform(0, 2 * math.pi)), b, c)


def suite_parallel_identical(rng, count=100):
    worst, worst_det = 0.0, 0.0
    for _ in range(count):
        p = random_pt(rng)
        m = pt_cell(p)
        N = int(rng.integers(2, 7))
        M = parallel_identical(m, N)
        T = identical_reduction(N)
        sim = T @ m.mat @ np.linalg.inv(T)
        # composite coefficients from M12 = -i b_N, M21 = i c_N
        b_n, c_n = 1j * M.m12, -1j * M.m21
        worst = max(worst, np.max(np.abs(M.mat - sim)), abs((b_n - c_n) + (p.b - p.c)))
        worst_det = max(worst_det, abs(M.det - 1))
    return worst < 1e-12 and worst_det < 1e-10, worst, f"{count} PT cells, worst |det-1| {worst_det:.1e}"


def suite_pt_phase(rng, count=200):
    worst = 0.0
    for _ in range(count):
        p = random_pt(rng)
        ev = s_eigenvalues(p)
        prod = ev.lambda_plus * ev.lambda_minus
        worst = max(worst, abs(prod + abs(p.a) ** 2 / p.a**2))
        if (p.b - p.c) ** 2 < 4:
            worst = max(worst, abs(abs(ev.lambda_plus) - abs(ev.lambda_minus)))
    return worst < 1e-12, worst, f"{count} PT parameter sets"


def suite_bragg(rng, count=100):
    worst = 0.0
    for _ in range(count):
        n0 = rng.uniform(1, 3)
        n1, n2 = rng.uniform(-0.1, 0.1, 2)
        k = rng.uniform(5, 20)
        p = BraggParams.from_detuning(n0, n1, n2, rng.uniform(-1, 1), k, rng.uniform(0.5, 5))
        worst = max(worst, abs(bragg_matrix(p, k).det - 1))
    p = BraggParams.from_detuning(1.5, 0.05, 0.05, 0.3, 10.0, 2.0)
    rec = evaluate_point(lambda w: bragg_matrix(p, 10.0), 0.0)
    atr = detect_atr([rec])
    ok = worst < 1e-10 and rec.r_left == 0 and abs(abs(rec.t) - 1) < 1e-10 and len(atr) == 1
    return ok, worst, "det = 1 and invisibility at n1 = n2"


def suite_bragg_parallel(rng):
    worst = 0.0
    for N in (2, 3, 5):
        n0, n1, delta, k, L = 1.5, 0.02, float(rng.uniform(-0.5, 0.5)), 10.0, 2.0
        n2 = bragg_parallel_ep(n0, n1, delta, k, N)
        m = bragg_matrix(BraggParams.from_detuning(n0, n1, n2, delta, k, L), k)
        worst = max(worst, abs(parallel_identical(m, N).m21))
    ok = worst < 1e-8 and bragg_parallel_ep(1.5, 0.02, 0.3, 10.0, 1) == 0.02
    return ok, worst, "N in 2,3,5"


def serial_singularity_family(N: int, phi: float, omega_c: float):
    """Unimodular cells with fixed Bloch phase whose m22 crosses the serial singularity value."""
    x = math.cos(phi)
    target = math.sin((N - 1) * phi) / math.sin(N * phi)

    def family(w):
        a = target + (w - omega_c) * (1 + 0.3j)
        m11 = 2 * x - a
        return serial_identical(TransferMatrix([[m11, 1.0], [m11 * a - 1, a]]), N)

    return family


def suite_serial_singularity(rng):
    worst = 0.0
    found = True
    for N in (2, 3, 5):
        omega_c = float(rng.uniform(-0.5, 0.5))
        fam = serial_singularity_family(N, float(rng.uniform(0.2, 0.9)) * math.pi / N, omega_c)
        reps = find_spectral_singularities(fam, -1.0, 1.0, "lasing", tol=1e-9, steps=401)
        if len(reps) != 1:
            found = False
            continue
        worst = max(worst, verify_singularity(fam, reps[0]))
        found = found and abs(reps[0].omega_c - omega_c) < 1e-8
    return found and worst < 1e-9, worst, "N in 2,3,5"


def suite_flux(rng, count=50):
    worst = 0.0
    for _ in range(count):
        N = int(rng.integers(2, 5))
        k = float(rng.uniform(0.5, 2.0))
        branches = []
        for _ in range(N):
            L = float(rng.uniform(0.5, 3.0))
            branches.append(BranchSpec(TransferMatrix(np.diag([np.exp(1j * k * L), np.exp(-1j * k * L)]))))
        node = Parallel(tuple(branches), VertexParams(k=k), VertexParams(k=k))
        sol = solve_bruteforce(node)
        worst = max(worst, abs(abs(sol.t) ** 2 + abs(sol.r) ** 2 - 1))
        try:
            amp = transfer_to_scattering(parallel_compose(node))
            worst = max(worst, abs(amp.T + amp.R_left - 1))
        except Exception:
            pass
    return worst < 1e-10, worst, f"{count} lossless networks"


SUITES = [
    ("oracle_equivalence", suite_oracle),
    ("ab_ring_zeros", suite_ab_ring),
    ("chebyshev_serial", suite_chebyshev),
    ("parallel_identical", suite_parallel_identical),
    ("pt_phase", suite_pt_phase),
    ("bragg_cell", suite_bragg),
    ("bragg_parallel_ep", suite_bragg_parallel),
    ("serial_singularity", suite_serial_singularity),
    ("flux_conservation", suite_flux),
]


def run_all(seed: int = 0):
    results = []
    for name, fn in SUITES:
        rng = np.random.default_rng([seed, len(results)])
        try:
            ok, worst, detail = fn(rng)
        except Exception as exc:  # a crash is a failed suite, not a crashed run
            ok, worst, detail = False, math.nan, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), float(worst), detail))
    return results
