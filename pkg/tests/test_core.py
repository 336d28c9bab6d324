import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scatternet.cells import pt_cell
from scatternet.core import (
    DegenerateSMatrix,
    PTParams,
    SpectralSingularity,
    TransferMatrix,
    check_pt_symmetry,
    pt_params,
    s_eigenvalues,
    scattering_matrix,
    transfer_to_scattering,
)

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)
mat2 = st.lists(cplx, min_size=4, max_size=4).map(lambda v: np.array(v).reshape(2, 2))


def test_identity_amplitudes():
    amp = transfer_to_scattering(TransferMatrix.identity())
    assert amp.t == 1 and amp.r_left == 0 and amp.r_right == 0


def test_free_propagation_quarter_wave():
    M = TransferMatrix(np.diag([1j, -1j]))
    amp = transfer_to_scattering(M)
    assert amp.t == pytest.approx(1j)
    assert amp.T == pytest.approx(1.0)
    assert amp.R_left == 0 and amp.R_right == 0


def test_pt_cell_generalized_unitarity():
    # a = 1+i, b = c = 1: |a|^2 = 2 = 1 + bc, so T = 1/2 and R = |c|^2/|a|^2 = |b|^2/|a|^2 = 1/2
    amp = transfer_to_scattering(pt_cell(PTParams(1 + 1j, 1, 1)))
    assert amp.T == pytest.approx(0.5, abs=1e-15)
    assert amp.R_left == pytest.approx(0.5, abs=1e-15)
    assert amp.R_right == pytest.approx(0.5, abs=1e-15)
    assert abs(amp.T - 1) == pytest.approx(math.sqrt(amp.R_left * amp.R_right), abs=1e-15)


def test_singular_m22_is_signalled():
    with pytest.raises(SpectralSingularity) as info:
        transfer_to_scattering(TransferMatrix([[1, 1], [-1, 1e-12]]))
    assert info.value.m22_abs == pytest.approx(1e-12)


def test_pt_params_roundtrip():
    p = pt_params(TransferMatrix.identity())
    assert (p.a, p.b, p.c) == (1, 0, 0)
    p = pt_params(pt_cell(PTParams(1 + 1j, 1, 1)))
    assert p.a == 1 + 1j and p.b == pytest.approx(1) and p.c == pytest.approx(1)


def test_s_matrix_has_1_over_a_denominators():
    p = PTParams(0.8 - 0.3j, 0.7, -0.2)
    S = scattering_matrix(pt_cell(p))
    # rows (outgoing left, outgoing right): [[i c, 1], [det, i b]] / a
    np.testing.assert_allclose(S, np.array([[1j * p.c, 1], [p.det, 1j * p.b]]) / p.a, atol=1e-15)


def test_s_eigenvalues_identity():
    ev = s_eigenvalues(PTParams(1, 0, 0))
    assert {ev.lambda_plus, ev.lambda_minus} == {1, -1}
    assert ev.ratio == 1


def test_s_eigenvalues_broken_example():
    ev = s_eigenvalues(PTParams(1, 3, 0))
    s5 = math.sqrt(5)
    assert ev.lambda_plus == pytest.approx(1j * (3 + s5) / 2, abs=1e-14)
    assert ev.lambda_minus == pytest.approx(1j * (3 - s5) / 2, abs=1e-14)
    assert ev.ratio == pytest.approx(6.854101966249685, rel=1e-13)


@pytest.mark.parametrize("sign", [1, -1])
def test_s_eigenvalues_coalesce_at_ep(sign):
    b = 0.4
    c = b - 2 * sign
    a = cmath.sqrt(1 + b * c) if 1 + b * c > 0 else 1.3
    ev = s_eigenvalues(PTParams(a, b, c))
    assert ev.lambda_plus == pytest.approx(ev.lambda_minus, abs=1e-12)
    assert ev.lambda_plus == pytest.approx(1j * (b + c) / (2 * a), abs=1e-12)


def test_s_eigenvalues_degenerate():
    with pytest.raises(DegenerateSMatrix):
        s_eigenvalues(PTParams(0, 1, 1))


def test_check_pt_symmetry():
    free = lambda k: TransferMatrix(np.diag([cmath.exp(1j * k), cmath.exp(-1j * k)]))
    assert check_pt_symmetry(free, 0.7).passed
    bad = lambda w: TransferMatrix([[1, 0.5], [0, 1]])
    rep = check_pt_symmetry(bad, 0.3)
    assert not rep.passed
    assert rep.residual_m12 == pytest.approx(1.0)
    assert rep.residual_m22 == 0 and rep.residual_m21 == 0


def test_transfer_matrix_rejects_bad_input():
    with pytest.raises(ValueError):
        TransferMatrix([[1, 2, 3], [4, 5, 6]])
    with pytest.raises(ValueError):
        TransferMatrix([[np.nan, 0], [0, 1]])
    M = TransferMatrix.identity()
    with pytest.raises(ValueError):
        M.mat[0, 0] = 2


@given(mat2, mat2)
def test_det_multiplicative(a, b):
    A, B = TransferMatrix(a), TransferMatrix(b)
    lhs = (A @ B).det
    rhs = A.det * B.det
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs), A.norm() ** 2 * B.norm() ** 2)


@given(mat2)
def test_inverse(a):
    A = TransferMatrix(a)
    if abs(A.det) <= 1e-10 * max(1.0, A.norm()) ** 2:
        return
    # conditioning enters through the inverse norm
    scale = A.norm() * A.inverse().norm()
    assert np.max(np.abs((A @ A.inverse()).mat - np.eye(2))) <= 1e-12 * max(1.0, scale)


@given(mat2)
def test_unimodular_pt_params(a):
    d = np.linalg.det(a)
    if abs(d) < 1e-3:
        return
    M = TransferMatrix(a / np.sqrt(d))
    p = pt_params(M)
    # |a|^2 - bc generalizes to m11 m22 - m12 m21 when m11 != a*
    assert abs(M.m11 * p.a - p.b * p.c - 1) <= 1e-12 * max(1.0, M.norm()) ** 2


@given(finite, finite, st.floats(0, 2 * math.pi))
@settings(max_examples=200)
def test_eigenvalue_product_and_unbroken_moduli(b, c, theta):
    if 1 + b * c <= 0:
        return
    a = math.sqrt(1 + b * c) * cmath.exp(1j * theta)
    p = PTParams(a, b, c)
    ev = s_eigenvalues(p)
    assert abs(ev.lambda_plus * ev.lambda_minus + abs(a) ** 2 / a**2) <= 1e-12
    if (b - c) ** 2 < 4:
        assert abs(abs(ev.lambda_plus) - abs(ev.lambda_minus)) <= 1e-12
    assert ev.ratio >= 1 - 1e-12


@given(cplx, finite, finite)
def test_pt_cell_denominators(a, b, c):
    if abs(a) < 1e-3:
        return
    amp = transfer_to_scattering(pt_cell(PTParams(a, b, c)), tol=0)
    assert amp.t_right == pytest.approx(1 / a, rel=1e-14)
    assert amp.r_left == pytest.approx(1j * c / a, rel=1e-14, abs=1e-300)
    assert amp.r_right == pytest.approx(1j * b / a, rel=1e-14, abs=1e-300)
