import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bubbletower.errors import DomainError, PositivityError, SingularityError
from bubbletower.green import (DomainGeometry, InteractionMatrix, NEG_INFINITY, grad_fields, green,
                               harmonic_mode_dtn, interaction_matrix, is_neg_infinity, jacobi_eigh,
                               least_eigenpair, robin)

BALL, EXT = DomainGeometry.UnitBall, DomainGeometry.ExteriorUnitBall
N = 6


def random_point(rng, geometry, n=N, inner=(0.05, 0.9), outer=(1.1, 3.0)):
    d = rng.normal(size=n)
    d /= np.linalg.norm(d)
    r = rng.uniform(*inner) if geometry is BALL else rng.uniform(*outer)
    return r * d


def test_robin_examples():
    assert robin(BALL, np.zeros(N), np.zeros(N)) == 1.0
    x = np.array([0.3, 0.2, 0, 0, 0, 0.1])
    assert robin(BALL, x, x) == pytest.approx((1 - x @ x) ** (2 - N), rel=1e-14)
    a = 1.7
    x1 = np.zeros(N)
    x1[0] = a
    assert robin(EXT, x1, -x1) == pytest.approx((a * a + 1) ** (2 - N), rel=1e-14)


def test_robin_is_image_charge():
    rng = np.random.default_rng(1)
    for _ in range(10):
        y, z = random_point(rng, BALL), random_point(rng, BALL)
        img = (np.linalg.norm(z) * np.linalg.norm(y - z / (z @ z))) ** (2 - N)
        assert robin(BALL, y, z) == pytest.approx(img, rel=1e-12)


def test_green_center_value():
    z = np.zeros(N)
    z[2] = 0.5
    assert green(BALL, np.zeros(N), z) == pytest.approx(2.0 ** (N - 2) - 1, rel=1e-14)


def test_green_vanishes_on_boundary():
    z = np.array([0.2, -0.1, 0.3, 0, 0, 0])
    e = np.ones(N) / np.sqrt(N)
    vals = [abs(green(BALL, (1 - h) * e, z)) for h in (1e-3, 1e-4, 1e-5)]
    assert vals[0] <= 1e-1 and vals[2] < vals[1] < vals[0]
    assert vals[2] <= 1e-3


@pytest.mark.parametrize("geometry", [BALL, EXT])
def test_green_symmetric_and_positive(geometry, rng):
    for _ in range(20):
        y, z = random_point(rng, geometry), random_point(rng, geometry)
        g = green(geometry, y, z)
        assert g > 0
        assert g == pytest.approx(green(geometry, z, y), rel=1e-12)


def test_green_errors():
    with pytest.raises(SingularityError):
        green(BALL, np.zeros(N), np.zeros(N))
    with pytest.raises(DomainError):
        green(BALL, np.ones(N), np.zeros(N))
    with pytest.raises(DomainError):
        robin(EXT, np.zeros(N), np.ones(N))


@pytest.mark.parametrize("geometry", [BALL, EXT])
def test_gradients_match_fd(geometry, rng):
    h = 1e-6
    for _ in range(10):
        y, z = random_point(rng, geometry), random_point(rng, geometry)
        gG, gH = grad_fields(geometry, y, z)
        for k in range(N):
            e = np.zeros(N)
            e[k] = h
            fdG = (green(geometry, y + e, z) - green(geometry, y - e, z)) / (2 * h)
            fdH = (robin(geometry, y + e, z) - robin(geometry, y - e, z)) / (2 * h)
            assert gG[k] == pytest.approx(fdG, rel=1e-6, abs=1e-6 * np.max(np.abs(gG)))
            assert gH[k] == pytest.approx(fdH, rel=1e-6, abs=1e-6 * np.max(np.abs(gH)))


def test_robin_gradient_on_diagonal():
    _, g0 = grad_fields(BALL, np.zeros(N), np.zeros(N))
    assert np.all(g0 == 0)
    x = np.array([0.2, 0.1, 0, 0, -0.3, 0])
    _, g = grad_fields(BALL, x, x)
    R = lambda y: robin(BALL, y, y)
    fd = np.array([(R(x + 1e-6 * e) - R(x - 1e-6 * e)) / 2e-6 for e in np.eye(N)])
    assert np.allclose(g, fd, rtol=1e-6)


def test_exterior_antipodal_gradient_on_axis():
    x = np.zeros(N)
    x[0] = 2.0
    gG, gH = grad_fields(EXT, x, -x)
    assert np.all(np.abs(gG[1:]) <= 1e-15) and np.all(np.abs(gH[1:]) <= 1e-15)


@pytest.mark.parametrize("geometry", [BALL, EXT])
def test_regular_part_is_harmonic(geometry, rng):
    # keep the image charge at distance O(1) so the O(h²) stencil error stays small
    h = 1e-3
    kw = dict(inner=(0.05, 0.5), outer=(1.6, 3.0))
    for _ in range(5):
        y, z = random_point(rng, geometry, **kw), random_point(rng, geometry, **kw)
        lap = sum(robin(geometry, y + h * e, z) + robin(geometry, y - h * e, z) for e in np.eye(N))
        lap = (lap - 2 * N * robin(geometry, y, z)) / h**2
        assert abs(lap) <= 1e-5 * max(1.0, robin(geometry, y, z))


def test_interaction_matrix_examples():
    M = interaction_matrix(BALL, np.zeros((1, N)))
    assert M.entries.tolist() == [[1.0]]
    x = np.zeros(N)
    x[0] = 0.3
    assert interaction_matrix(BALL, [x, x]).degenerate
    a = 1.6
    xa = np.zeros(N)
    xa[0] = a
    M = interaction_matrix(EXT, [xa, -xa])
    assert M.entries[0, 1] == pytest.approx(-((2 * a) ** (2 - N) - (a * a + 1) ** (2 - N)), rel=1e-13)


@pytest.mark.parametrize("geometry", [BALL, EXT])
def test_sign_class(geometry, rng):
    for m in (2, 3, 4):
        pts = [random_point(rng, geometry) for _ in range(m)]
        M = interaction_matrix(geometry, pts)
        E = M.entries
        assert np.allclose(E, E.T, atol=1e-12)
        assert np.all(np.diag(E) > 0)
        assert np.all(E[~np.eye(m, dtype=bool)] < 0)


def test_least_eigenpair_examples():
    one = least_eigenpair(InteractionMatrix(1, np.zeros((1, N)), np.array([[1.0]]), False))
    assert one.rho == 1.0 and one.r_vec.tolist() == [1.0]
    h, g = 3.0, 0.7
    sd = least_eigenpair(InteractionMatrix(2, np.zeros((2, N)), np.array([[h, -g], [-g, h]]), False))
    assert sd.rho == pytest.approx(h - g, rel=1e-14)
    assert np.allclose(sd.r_vec, [2**-0.5, 2**-0.5], atol=1e-14)
    deg = least_eigenpair(InteractionMatrix(2, np.zeros((2, N)), np.full((2, 2), np.nan), True))
    assert deg.rho is NEG_INFINITY and is_neg_infinity(deg.rho) and deg.r_vec is None


def test_least_eigenpair_equation(rng):
    pts = [random_point(rng, BALL) for _ in range(3)]
    M = interaction_matrix(BALL, pts)
    sd = least_eigenpair(M)
    assert np.allclose(M.entries @ sd.r_vec, sd.rho * sd.r_vec, atol=1e-10 * np.max(np.abs(M.entries)))
    assert np.linalg.norm(sd.r_vec) == pytest.approx(1.0, rel=1e-14)


def test_positivity_violation():
    A = np.array([[1.0, 0.5], [0.5, 1.0]])    # positive off-diagonal: least eigenvector has mixed signs
    with pytest.raises(PositivityError):
        least_eigenpair(InteractionMatrix(2, np.zeros((2, N)), A, False))


def _char_poly_roots(A):
    return np.sort(np.roots(np.poly(A)).real)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3).flatmap(lambda m: st.lists(st.floats(-5, 5), min_size=m * m, max_size=m * m)))
def test_jacobi_against_characteristic_polynomial(vals):
    m = int(round(np.sqrt(len(vals))))
    A = np.array(vals).reshape(m, m)
    A = 0.5 * (A + A.T)
    w, V = jacobi_eigh(A)
    # the characteristic polynomial oracle, for 1 <= m <= 3
    c = np.poly(A)
    scale = max(1.0, np.max(np.abs(A)))
    for lam in w:
        assert abs(np.polyval(c, lam)) <= 1e-9 * scale**m
    assert np.allclose(np.sort(w), np.linalg.eigvalsh(A), atol=1e-10 * scale)
    assert np.allclose(A @ V, V * w, atol=1e-10 * scale)


def test_dtn_modes():
    assert harmonic_mode_dtn(6, 1, 0.3) == 6
    assert harmonic_mode_dtn(6, 2, 0.3) == 8
    assert harmonic_mode_dtn(6, 3, 0.1) == harmonic_mode_dtn(6, 3, 1.0)
    with pytest.raises(DomainError):
        harmonic_mode_dtn(6, 0, 1.0)
