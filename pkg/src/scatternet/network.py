"""Serial, parallel and recursive composition of scattering cells.

Parallel bundles follow the two-vertex topology: N branches share a left
junction O and a right junction O'.  Junction algebra (vertex matrices,
link matrices, reference-channel reduction) is written in the *junction
orientation* where a branch matrix maps the amplitudes at O' to those at
O.  Public inputs and outputs use the global convention of
:mod:`scatternet.core`, so branch matrices are inverted on entry and the
composed result is inverted on exit.

:func:`solve_bruteforce` is an independent check: it assembles continuity,
current conservation and the branch relations into one dense linear system.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .core import (
    NotUnimodular,
    ScatterNetError,
    TransferMatrix,
    det2,
    inv2,
)

LINK_TOL = 1e-10
SIN_PHI_SWITCH = 1e-6
UNIMODULAR_TOL = 1e-10
ZERO_TRANSMISSION = 1e-12


class DegenerateVertex(ScatterNetError):
    pass


class DegenerateLink(ScatterNetError):
    pass


class NoUniqueSolution(ScatterNetError):
    pass


@dataclass(frozen=True)
class VertexParams:
    """Lead data and contact potential at a junction.

    ``k`` is the forward and ``kp`` the backward wavevector on the lead
    touching the junction.
    """

    V0: complex = 0.0
    mass: float = 1.0
    k: complex = 1.0
    kp: complex | None = None
    hbar: float = 1.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("vertex mass must be > 0")
        if self.kp is None:
            object.__setattr__(self, "kp", self.k)

    @property
    def alpha(self) -> complex:
        return self.k / self.mass

    @property
    def beta(self) -> complex:
        return self.kp / self.mass

    @property
    def gamma(self) -> complex:
        return -2j * self.V0 / self.hbar**2


@dataclass(frozen=True)
class BranchSpec:
    """One channel of a parallel bundle.

    ``k``/``kp`` are the forward/backward wavevectors of the branch at O,
    ``q``/``qp`` at O'.  Unset wavevectors inherit the lead value of the
    adjacent vertex; an unset ``mass_out`` inherits ``mass``.
    """

    node: "NetworkNode"
    k: complex | None = None
    kp: complex | None = None
    q: complex | None = None
    qp: complex | None = None
    mass: float = 1.0
    mass_out: float | None = None

    def __post_init__(self):
        if isinstance(self.node, TransferMatrix):
            object.__setattr__(self, "node", Leaf(self.node))
        if not self.mass > 0 or (self.mass_out is not None and not self.mass_out > 0):
            raise ValueError("branch masses must be > 0")

    def resolved(self, vin: VertexParams, vout: VertexParams) -> "BranchSpec":
        k = vin.k if self.k is None else self.k
        kp = (vin.kp if self.k is None else k) if self.kp is None else self.kp
        q = vout.k if self.q is None else self.q
        qp = (vout.kp if self.q is None else q) if self.qp is None else self.qp
        mass_out = self.mass if self.mass_out is None else self.mass_out
        return BranchSpec(self.node, k, kp, q, qp, self.mass, mass_out)


@dataclass(frozen=True)
class Leaf:
    matrix: TransferMatrix


@dataclass(frozen=True)
class Serial:
    children: tuple

    def __init__(self, children: Sequence["NetworkNode"]):
        children = tuple(Leaf(c) if isinstance(c, TransferMatrix) else c for c in children)
        if not children:
            raise ValueError("Serial node needs at least one child")
        object.__setattr__(self, "children", children)


@dataclass(frozen=True)
class SerialRepeat:
    child: "NetworkNode"
    count: int

    def __post_init__(self):
        if isinstance(self.child, TransferMatrix):
            object.__setattr__(self, "child", Leaf(self.child))
        if int(self.count) < 1:
            raise ValueError("repeat count must be >= 1")


@dataclass(frozen=True)
class Parallel:
    branches: tuple
    vertex_in: VertexParams = field(default_factory=VertexParams)
    vertex_out: VertexParams = field(default_factory=VertexParams)
    reference: int = 0

    def __post_init__(self):
        branches = tuple(
            b if isinstance(b, BranchSpec) else BranchSpec(b) for b in self.branches
        )
        if not branches:
            raise ValueError("Parallel node needs at least one branch")
        if not 0 <= self.reference < len(branches):
            raise ValueError(f"reference index {self.reference} out of range")
        object.__setattr__(self, "branches", branches)

    @property
    def N(self) -> int:
        return len(self.branches)


NetworkNode = Union[Leaf, Serial, SerialRepeat, Parallel]


# -- junction algebra (O' -> O orientation) -----------------------------------

def vertex_q(vp: VertexParams, branch: BranchSpec, N: int, side: str = "in") -> np.ndarray:
    """Vertex matrix mapping branch amplitudes to lead amplitudes at O or O'."""
    if side == "in":
        a, b, g = vp.alpha, vp.beta, vp.gamma
        aj = branch.k / branch.mass
        bj = branch.kp / branch.mass
        pre = N * (a + b)
        if abs(pre) == 0:
            raise DegenerateVertex("alpha + beta = 0 at vertex O")
        q = [[b - g + N * aj, b - g - N * bj], [a + g - N * aj, a + g + N * bj]]
    elif side == "out":
        a, b, g = vp.alpha, vp.beta, vp.gamma
        m_out = branch.mass if branch.mass_out is None else branch.mass_out
        aj = branch.q / m_out
        bj = branch.qp / m_out
        pre = N * (a + b)
        if abs(pre) == 0:
            raise DegenerateVertex("alpha' + beta' = 0 at vertex O'")
        q = [[b + g + N * aj, b + g - N * bj], [a - g - N * aj, a - g + N * bj]]
    else:
        raise ValueError("side must be 'in' or 'out'")
    return np.array(q, dtype=complex) / pre


def link_matrix(mi: np.ndarray, mj: np.ndarray, di: complex | None = None,
                dj: complex | None = None, tol: float = LINK_TOL) -> np.ndarray:
    """Link matrix L_ij with ``[u_i, v_i] = L_ij [u_j, v_j]`` at the junction.

    ``mi`` and ``mj`` map the far-end amplitudes of each branch to the near
    end.  Continuity of the wave function at both ends fixes L_ij.  For
    unimodular branches this is the familiar closed form with denominator
    ``m11 - m12 + m21 - m22`` of branch i; for general determinants the far
    end row sums are taken from the true inverses.
    """
    mi = np.asarray(mi, dtype=complex)
    mj = np.asarray(mj, dtype=complex)
    di = det2(mi) if di is None else di
    dj = det2(mj) if dj is None else dj
    # row sums of inverse branch matrices: e . M^{-1}
    w1i, w2i = (mi[1, 1] - mi[1, 0]) / di, (mi[0, 0] - mi[0, 1]) / di
    w1j, w2j = (mj[1, 1] - mj[1, 0]) / dj, (mj[0, 0] - mj[0, 1]) / dj
    den = w2i - w1i
    if abs(den) < tol * max(1.0, abs(w1i), abs(w2i)):
        raise DegenerateLink(f"link denominator {abs(den):.3e} below tolerance")
    return np.array(
        [[w2i - w1j, w2i - w2j], [w1j - w1i, w2j - w1i]], dtype=complex
    ) / den


def reference_reduction(vp: VertexParams, branches: Sequence[BranchSpec], s: int,
                        side: str, matrices: Sequence[np.ndarray],
                        tol: float = LINK_TOL) -> np.ndarray:
    """Sum of Q_j L_{j,s}: lead amplitudes in terms of the reference branch s.

    ``matrices`` are the junction-orientation branch matrices (O' -> O).  For
    ``side='out'`` the link matrices are built from their inverses.
    """
    N = len(branches)
    mats = [np.asarray(m, dtype=complex) for m in matrices]
    if side == "out":
        mats = [inv2(m) for m in mats]
    total = np.zeros((2, 2), dtype=complex)
    for j, br in enumerate(branches):
        L = np.eye(2) if j == s else link_matrix(mats[j], mats[s], tol=tol)
        total += vertex_q(vp, br, N, side) @ L
    return total


def _resolved_branches(node: Parallel) -> list[BranchSpec]:
    return [b.resolved(node.vertex_in, node.vertex_out) for b in node.branches]


def parallel_compose(node: Parallel, diagnostics: list | None = None,
                     reference: int | None = None, link_tol: float = LINK_TOL,
                     branch_matrices: Sequence[TransferMatrix] | None = None) -> TransferMatrix:
    """Effective transfer matrix ``(T_s M_s T'_s^-1)^-1`` of a parallel bundle.

    Falls back to :func:`oracle_matrix` when a link denominator vanishes and
    records ``'degenerate_link_fallback'`` in ``diagnostics``.
    """
    s = node.reference if reference is None else reference
    branches = _resolved_branches(node)
    if branch_matrices is None:
        branch_matrices = [compose(b.node, diagnostics, path=f"branch[{j}]") for j, b in enumerate(branches)]
    jmats = [inv2(g.mat) for g in branch_matrices]
    try:
        t_in = reference_reduction(node.vertex_in, branches, s, "in", jmats, link_tol)
        t_out = reference_reduction(node.vertex_out, branches, s, "out", jmats, link_tol)
    except DegenerateLink:
        if diagnostics is not None:
            diagnostics.append("degenerate_link_fallback")
        return oracle_matrix(node, branch_matrices=branch_matrices)
    if abs(det2(t_out)) < 1e-14 * max(1.0, float(np.max(np.abs(t_out)))) ** 2:
        raise DegenerateVertex("T'_s is singular")
    m_junc = t_in @ jmats[s] @ inv2(t_out)
    return TransferMatrix(inv2(m_junc))


def _eq_matrix(N: int) -> tuple[np.ndarray, np.ndarray]:
    p, q = N + 1, N - 1
    t = 0.5 * np.array([[p, -q], [-q, p]], dtype=complex)
    t_inv = 0.5 / N * np.array([[p, q], [q, p]], dtype=complex)
    return t, t_inv


def identical_reduction(N: int) -> np.ndarray:
    """Reference reduction for N identical branches, zero contact potential."""
    return _eq_matrix(N)[0]


def parallel_identical(m: TransferMatrix, N: int) -> TransferMatrix:
    """N identical cells in parallel with transparent junctions.

    Closed-form entries in terms of ``a* = m11, b = -i m12, c = i m21,
    a = m22``.  The result is the similarity transform of ``m`` by the
    identical-branch reduction matrix, so it holds in either orientation.
    """
    N = int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    a_conj, b, c, a = m.m11, -1j * m.m12, 1j * m.m21, m.m22
    n2 = N * N - 1
    p2, q2 = (N + 1) ** 2, (N - 1) ** 2
    pre = 1 / (4 * N)
    return TransferMatrix(pre * np.array([
        [p2 * a_conj + 1j * n2 * (b + c) - q2 * a,
         n2 * a_conj + 1j * (p2 * b + q2 * c) - n2 * a],
        [-n2 * a_conj - 1j * (q2 * b + p2 * c) + n2 * a,
         -q2 * a_conj - 1j * n2 * (b + c) + p2 * a],
    ]))


def chebyshev_u(n: int, x: complex) -> complex:
    """Chebyshev polynomial of the second kind, U_n(x), for n >= -1."""
    if n == -1:
        return 0.0
    u_prev, u = 1.0 + 0j, 2 * x + 0j
    if n == 0:
        return u_prev
    for _ in range(n - 1):
        u_prev, u = u, 2 * x * u - u_prev
    return u


def bloch_phase(m: TransferMatrix) -> complex:
    """Principal-branch phase with Tr(m) = 2 cos(phi)."""
    return cmath.acos(m.trace / 2)


def serial_identical(m: TransferMatrix, N: int, method: str = "auto") -> TransferMatrix:
    """N identical unimodular cells in series.

    ``method='bloch'`` uses ``[m sin(N phi) - sin((N-1) phi)] / sin(phi)``;
    ``'recurrence'`` evaluates the same Chebyshev coefficients by their
    three-term recurrence, which stays exact as ``sin(phi) -> 0``.
    ``'auto'`` switches to the recurrence when ``|sin(phi)| < 1e-6``.
    """
    N = int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    if abs(m.det - 1) > UNIMODULAR_TOL * max(1.0, m.norm() ** 2):
        raise NotUnimodular(f"det(m) = {m.det:.6g}, expected 1")
    if N == 1:
        return m
    phi = bloch_phase(m)
    sin_phi = cmath.sin(phi)
    if method == "auto":
        method = "recurrence" if abs(sin_phi) < SIN_PHI_SWITCH else "bloch"
    if method == "bloch":
        c_m = cmath.sin(N * phi) / sin_phi
        c_i = cmath.sin((N - 1) * phi) / sin_phi
    elif method == "recurrence":
        x = m.trace / 2
        c_m = chebyshev_u(N - 1, x)
        c_i = chebyshev_u(N - 2, x)
    else:
        raise ValueError(f"unknown method {method!r}")
    return TransferMatrix(c_m * m.mat - c_i * np.eye(2))


def serial_compose(cells: Sequence[TransferMatrix]) -> TransferMatrix:
    """Chain cells listed left to right in space."""
    out = np.eye(2, dtype=complex)
    for c in cells:
        out = c.mat @ out
    return TransferMatrix(out)


def compose(root: NetworkNode, diagnostics: list | None = None, path: str = "root") -> TransferMatrix:
    try:
        if isinstance(root, TransferMatrix):
            return root
        if isinstance(root, Leaf):
            return root.matrix
        if isinstance(root, Serial):
            return serial_compose([
                compose(c, diagnostics, f"{path}/children[{i}]") for i, c in enumerate(root.children)
            ])
        if isinstance(root, SerialRepeat):
            return serial_identical(compose(root.child, diagnostics, f"{path}/child"), root.count)
        if isinstance(root, Parallel):
            mats = [compose(b.node, diagnostics, f"{path}/branches[{j}]") for j, b in enumerate(root.branches)]
            return parallel_compose(root, diagnostics, branch_matrices=mats)
    except ScatterNetError as exc:
        if not getattr(exc, "node_path", None):
            exc.node_path = path
            exc.args = (f"{path}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
        raise
    raise TypeError(f"unknown network node {type(root).__name__}")


# -- brute-force oracle ------------------------------------------------------

@dataclass(frozen=True)
class OracleSolution:
    """Solution of the full junction linear system for one incidence side.

    ``u``, ``v``, ``up``, ``vp`` are the per-branch amplitudes at O and O'.
    ``t`` and ``r`` are the transmitted and reflected amplitudes for the
    chosen incidence side.
    """

    incidence: str
    u: np.ndarray
    v: np.ndarray
    up: np.ndarray
    vp: np.ndarray
    lead_v: complex
    lead_up: complex
    residual: float

    @property
    def t(self) -> complex:
        return self.lead_up if self.incidence == "left" else self.lead_v

    @property
    def r(self) -> complex:
        return self.lead_v if self.incidence == "left" else self.lead_up


def solve_bruteforce(node: Parallel, incidence: str = "left",
                     branch_matrices: Sequence[TransferMatrix] | None = None,
                     cond_limit: float = 1e13) -> OracleSolution:
    """Solve the (4N+2)-unknown junction system directly.

    Unknowns are ``u_j, v_j, u'_j, v'_j`` for every branch plus the outgoing
    lead amplitudes.  Incidence ``'left'`` fixes ``u = 1, v' = 0``;
    ``'right'`` fixes ``u = 0, v' = 1``.  At each junction the wave function
    is continuous and the mass-weighted derivative jumps by
    ``2 V0 / hbar^2`` times the junction value.
    """
    branches = _resolved_branches(node)
    if branch_matrices is None:
        branch_matrices = [compose(b.node) for b in branches]
    N = len(branches)
    vin, vout = node.vertex_in, node.vertex_out
    if incidence == "left":
        u_in, vp_in = 1.0, 0.0
    elif incidence == "right":
        u_in, vp_in = 0.0, 1.0
    else:
        raise ValueError("incidence must be 'left' or 'right'")

    n_unk = 4 * N + 2
    iv, iup = 4 * N, 4 * N + 1
    A = np.zeros((n_unk, n_unk), dtype=complex)
    rhs = np.zeros(n_unk, dtype=complex)
    row = 0
    for j, (br, g) in enumerate(zip(branches, branch_matrices)):
        base = 4 * j
        for r_ in range(2):
            A[row, base + 2 + r_] = 1.0
            A[row, base] = -g.mat[r_, 0]
            A[row, base + 1] = -g.mat[r_, 1]
            row += 1
    # continuity at O: u_j + v_j = u + v
    for j in range(N):
        A[row, 4 * j] = A[row, 4 * j + 1] = 1.0
        A[row, iv] = -1.0
        rhs[row] = u_in
        row += 1
    # current at O: alpha u - beta v - sum(alpha_j u_j - beta_j v_j) + gamma (u + v) = 0
    g_in = vin.gamma
    for j, br in enumerate(branches):
        A[row, 4 * j] = -br.k / br.mass
        A[row, 4 * j + 1] = br.kp / br.mass
    A[row, iv] = -vin.beta + g_in
    rhs[row] = -(vin.alpha + g_in) * u_in
    row += 1
    # continuity at O': u'_j + v'_j = u' + v'
    for j in range(N):
        A[row, 4 * j + 2] = A[row, 4 * j + 3] = 1.0
        A[row, iup] = -1.0
        rhs[row] = vp_in
        row += 1
    # current at O': alpha' u' - beta' v' - sum(alpha'_j u'_j - beta'_j v'_j) - gamma' (u' + v') = 0
    g_out = vout.gamma
    for j, br in enumerate(branches):
        A[row, 4 * j + 2] = -br.q / br.mass_out
        A[row, 4 * j + 3] = br.qp / br.mass_out
    A[row, iup] = vout.alpha - g_out
    rhs[row] = (vout.beta + g_out) * vp_in
    row += 1

    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > cond_limit:
        raise NoUniqueSolution(f"junction system is singular (cond = {cond:.3e})")
    x = np.linalg.solve(A, rhs)
    residual = float(np.linalg.norm(A @ x - rhs) / (np.linalg.norm(A) * np.linalg.norm(x) + np.linalg.norm(rhs)))
    return OracleSolution(
        incidence=incidence,
        u=x[0:4 * N:4].copy(), v=x[1:4 * N:4].copy(),
        up=x[2:4 * N:4].copy(), vp=x[3:4 * N:4].copy(),
        lead_v=complex(x[iv]), lead_up=complex(x[iup]),
        residual=residual,
    )


def oracle_matrix(node: Parallel, branch_matrices: Sequence[TransferMatrix] | None = None) -> TransferMatrix:
    """Transfer matrix rebuilt from oracle solutions for both incidence sides."""
    left = solve_bruteforce(node, "left", branch_matrices)
    right = solve_bruteforce(node, "right", branch_matrices)
    t, r = left.t, left.r
    tr, rr = right.t, right.r
    scale = max(1.0, abs(t), abs(r), abs(rr))
    if abs(tr) < ZERO_TRANSMISSION * scale:
        raise NoUniqueSolution(f"|t| = {abs(tr):.3e}: transfer matrix undefined at zero transmission")
    m22 = 1 / tr
    m12 = rr / tr
    m21 = -r / tr
    m11 = t - m12 * r
    return TransferMatrix([[m11, m12], [m21, m22]])
