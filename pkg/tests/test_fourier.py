import itertools
import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brw.errors import InvalidParameters, NonConvergent
from brw.fourier import (_suffix_products, eta_hat, eta_hat_sq, expected_mu_hat_sq,
                         expected_mu_hat_sq_limit, mc_mu_hat_sq, mu_hat_sq_upper_bound, nu_hat,
                         sobolev_comparison_constants, sobolev_norm, sobolev_profile)
from brw.params import ParameterSet

P7 = ParameterSet(lam=0.7)
SQRT = ParameterSet(lam=2 ** -0.5)


def brute_second_moment(params: ParameterSet, n: int, t: np.ndarray) -> np.ndarray:
    """E|mu_n^(t)|^2 by averaging over every label configuration of the depth-n tree."""
    ell, m = params.arity, params.m
    # vertices level by level; a leaf's ancestors are found by integer division
    levels = [ell**k for k in range(1, n + 1)]
    offsets = np.cumsum([0] + levels)
    n_vertices = offsets[-1]
    leaves = np.arange(ell**n)
    anc = np.array([offsets[k - 1] + leaves // ell ** (n - k) for k in range(1, n + 1)])
    digits = np.array(params.digits)
    probs = np.array(params.probs)
    lam_pows = params.lam ** np.arange(1, n + 1)
    total = np.zeros(len(t))
    for config in itertools.product(range(m), repeat=int(n_vertices)):
        c = np.array(config)
        weight = np.prod(probs[c])
        f = (digits[c[anc]] * lam_pows[:, None]).sum(axis=0)
        mu = np.exp(1j * np.outer(t, f)).mean(axis=1)
        total += weight * np.abs(mu) ** 2
    return total


# -- characteristic functions -----------------------------------------------

def test_eta_examples():
    p = ParameterSet(lam=0.5)
    assert eta_hat(p, 0.0) == 1
    assert eta_hat(p, 2 * np.pi) == pytest.approx(1.0)
    assert abs(eta_hat(p, np.pi)) < 1e-15


@settings(max_examples=50, deadline=None)
@given(st.floats(-200, 200, allow_nan=False))
def test_eta_closed_form(t):
    assert math.isclose(np.sqrt(eta_hat_sq(ParameterSet(lam=0.5), t)), abs(math.cos(t / 2)),
                        abs_tol=1e-12)


def test_nu_hat_at_zero_and_symmetry():
    s = nu_hat(P7, [0.0])
    assert s.value[0] == 1 and s.truncation_error[0] == 0
    t = np.linspace(-40, 40, 81)
    v = nu_hat(P7, t).value
    np.testing.assert_allclose(v, np.conj(v[::-1]), atol=1e-13)
    assert np.all(np.abs(v) <= 1 + nu_hat(P7, t).truncation_error)


def test_nu_hat_truncation_bound_is_sound():
    t = np.linspace(0.5, 500, 100)
    coarse = nu_hat(SQRT, t, tol=1e-6)
    fine = nu_hat(SQRT, t, tol=1e-14)
    assert np.all(np.abs(coarse.value - fine.value) <= coarse.truncation_error + 1e-13)


def test_nu_hat_against_mpmath():
    g = ParameterSet.from_minpoly("-1,-1,1")
    for t in (0.3, 7.0, 123.4):
        with mpmath.workdps(40):
            ref = mpmath.fprod(mpmath.cos(t * g.lam**k / 2) for k in range(1, 200))
        assert abs(abs(nu_hat(g, [t]).value[0]) - abs(float(ref))) < 1e-12


def test_nu_hat_nonconvergent():
    with pytest.raises(NonConvergent):
        nu_hat(ParameterSet(lam=0.999999999), [1e300])


def test_pisot_non_decay():
    """|nu^(pi theta^k)| stays away from 0 at the golden ratio with digits -1, +1."""
    g = ParameterSet.from_minpoly("-1,-1,1", digits=(-1, 1))
    k = np.arange(1, 16)
    vals = np.abs(nu_hat(g, np.pi * g.theta**k).value)
    assert vals.min() >= 0.00661


# -- second moment -----------------------------------------------------------

@pytest.mark.parametrize("params,n", [
    (ParameterSet(lam=0.7), 2),
    (ParameterSet(lam=0.6), 3),
    (ParameterSet(lam=0.55, arity=3), 2),
    (ParameterSet(lam=0.65, digits=(-1, 0, 2), probs=(0.2, 0.5, 0.3)), 2),
])
def test_second_moment_matches_brute_force(params, n):
    t = np.array([0.0, 0.4, 1.3, 5.0, 17.5])
    np.testing.assert_allclose(expected_mu_hat_sq(params, n, t), brute_second_moment(params, n, t),
                               atol=1e-12)


@pytest.mark.parametrize("arity", [2, 3])
@pytest.mark.parametrize("digits", [(0, 1), (-1, 1)])
def test_normalisation(arity, digits):
    p = ParameterSet(lam=0.6, arity=arity, digits=digits)
    for n in range(1, 41):
        assert abs(expected_mu_hat_sq(p, n, 0.0) - 1) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(0.51, 0.95), st.integers(1, 30), st.floats(0, 60), st.integers(2, 4))
def test_second_moment_between_product_and_one(lam, n, t, arity):
    p = ParameterSet(lam=lam, arity=arity)
    e = expected_mu_hat_sq(p, n, t)
    lower = _suffix_products(p, n, [t])[0, 0]
    assert lower - 1e-12 <= e <= 1 + 1e-12


def test_limit_close_to_depth_40():
    t = np.linspace(0, 30, 31)
    np.testing.assert_allclose(expected_mu_hat_sq_limit(P7, t), expected_mu_hat_sq(P7, 40, t),
                               atol=1e-6)


def test_monte_carlo_examples(backend):
    mc = mc_mu_hat_sq(P7, 8, [0.0, 5.0], 10_000, seed=5)
    assert mc.estimate[0] == pytest.approx(1.0) and mc.stderr[0] < 1e-12
    assert 0 <= mc.estimate[1] <= 1
    assert abs(mc.estimate[1] - expected_mu_hat_sq(P7, 8, 5.0)) <= 3 * mc.stderr[1]
    with pytest.raises(InvalidParameters):
        mc_mu_hat_sq(P7, 8, [1.0], 99, seed=1)


# -- upper bound -------------------------------------------------------------

@pytest.mark.filterwarnings("ignore::UserWarning")
def test_upper_bound_trivial_case():
    assert mu_hat_sq_upper_bound(P7, 10, 1, [0.0], tol=1e-12) == pytest.approx(1.0)


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_upper_bound_dominates():
    theta = P7.theta
    for s in range(1, 7):
        t = np.linspace(theta ** (s - 1), theta**s, 25)
        e = expected_mu_hat_sq(P7, 20, t)
        assert np.all(e <= mu_hat_sq_upper_bound(P7, 20, s, t) + 1e-9)


def test_limit_bound_dominates_limit():
    theta = P7.theta
    for s in range(1, 7):
        t = np.linspace(theta ** (s - 1), theta**s, 25)
        assert np.all(expected_mu_hat_sq_limit(P7, t) <= mu_hat_sq_upper_bound(P7, None, s, t) + 1e-9)


def test_upper_bound_warns_outside_block():
    with pytest.warns(UserWarning):
        mu_hat_sq_upper_bound(P7, 20, 2, [100.0])


def test_upper_bound_nonincreasing_in_s():
    t = np.linspace(30, 60, 20)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        b = [mu_hat_sq_upper_bound(SQRT, 30, s, t) for s in range(1, 12)]
    for a, c in zip(b, b[1:]):
        assert np.all(c <= a + 1e-12)


# -- Sobolev norms -----------------------------------------------------------

def test_sobolev_examples():
    est = sobolev_norm(SQRT, 0.0, 1e4)
    assert est.converged and est.value > 0
    g = ParameterSet.from_minpoly("-1,-1,1")
    assert not sobolev_norm(g, 0.0, 1e4).converged
    t, cum = sobolev_profile(P7, 0.5, 50)
    assert cum[0] == 0 and np.all(np.diff(cum) >= 0)


def test_sobolev_nondecreasing_in_t_max():
    vals = [sobolev_norm(SQRT, 0.2, T).value for T in (10, 55.5, 100, 1000, 1234.5)]
    assert vals == sorted(vals)


def test_sobolev_validation():
    with pytest.raises(InvalidParameters):
        sobolev_norm(P7, -1, 10)
    with pytest.raises(InvalidParameters):
        sobolev_norm(P7, 0, 1)


def test_sobolev_comparison_shape():
    """int E|mu^|^2 |t|^2g stays below C1 + C2 int |nu^|^2 |t|^2g on blocks [0, theta^S]."""
    p, gamma = SQRT, 0.1
    c = sobolev_comparison_constants(p, gamma)
    for S in range(2, 16):
        T = p.theta**S
        lhs = sobolev_profile(p, gamma, T, integrand=lambda t: expected_mu_hat_sq_limit(p, t))[1][-1]
        rhs = sobolev_profile(p, gamma, T)[1][-1]
        assert lhs <= c.affine + c.slope * rhs
    with pytest.raises(InvalidParameters):
        sobolev_comparison_constants(ParameterSet(lam=0.45), 0.0)
