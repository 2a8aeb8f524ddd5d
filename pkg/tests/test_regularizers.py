"""Penalty values, prox maps, subgradients, and the regularizer parsers.

Hand-derived numbers carry their derivation in a comment. Cross-checks go
through routes that share no code with the implementation: quadrature of the
penalty derivative, refining grid scans, and the dense prox oracle.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dcopt.regularizers import (
    MCP,
    SCAD,
    L1MinusL2,
    LogPenalty,
    ProxResult,
    TransformedL1,
    _cubic_roots_shifted,
    _select_candidate,
    full_prox,
    make_spec,
    p1_prox,
    p1_weight,
    p2_lipschitz,
    p2_subgrad,
    parse_reg,
    parse_reg_family,
    prox_objective,
    prox_oracle,
    reg_value,
    soft_threshold,
)
from oracles import fd_gradient, grid_min_1d, simpson

SPECS = [
    L1MinusL2(0.8),
    LogPenalty(0.9, 0.4),
    MCP(0.7, 2.5),
    SCAD(0.6, 3.5),
    TransformedL1(0.5, 1.2),
]
SMOOTH_P2 = SPECS[1:]  # families whose P2 gradient has a Lipschitz constant

finite_floats = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)


def total_penalty(spec, x):
    p1, p2 = reg_value(spec, np.atleast_1d(np.asarray(x, dtype=float)))
    return p1 - p2


class TestConstruction:
    @pytest.mark.parametrize(
        "factory",
        [
            lambda: L1MinusL2(-0.1),
            lambda: LogPenalty(1.0, 0.0),
            lambda: LogPenalty(-1.0, 0.5),
            lambda: MCP(1.0, 0.0),
            lambda: MCP(-1.0, 2.0),
            lambda: SCAD(1.0, 2.0),  # theta must exceed 2
            lambda: SCAD(1.0, -1.0),
            lambda: TransformedL1(1.0, 0.0),
            lambda: TransformedL1(-1.0, 1.0),
        ],
    )
    def test_invalid_parameters_raise(self, factory):
        with pytest.raises(ValueError):
            factory()

    def test_zero_weight_allowed(self):
        # degenerate but legal: the penalty vanishes identically
        for spec in (L1MinusL2(0.0), LogPenalty(0.0, 0.5), MCP(0.0, 2.0),
                     SCAD(0.0, 2.5), TransformedL1(0.0, 1.0)):
            x = np.array([1.0, -2.0])
            assert reg_value(spec, x) == (0.0, 0.0)
            assert np.array_equal(p1_prox(spec, x, 1.0), x)
            assert np.array_equal(p2_subgrad(spec, x), np.zeros(2))
            assert np.array_equal(full_prox(spec, x, 1.0).point, x)


class TestWeights:
    def test_p1_weight_hand_values(self):
        assert p1_weight(L1MinusL2(0.6)) == 0.6
        assert p1_weight(LogPenalty(0.6, 0.25)) == pytest.approx(2.4)  # lam/eps
        assert p1_weight(MCP(0.6, 3.0)) == 0.6
        assert p1_weight(SCAD(0.6, 2.5)) == 0.6
        # lam (a+1)/a = 0.6 * 1.5 / 0.5
        assert p1_weight(TransformedL1(0.6, 0.5)) == pytest.approx(1.8)

    def test_p2_lipschitz_hand_values(self):
        assert p2_lipschitz(L1MinusL2(1.0)) is None  # kink at the origin
        assert p2_lipschitz(LogPenalty(1.0, 0.5)) == pytest.approx(4.0)  # lam/eps^2
        assert p2_lipschitz(MCP(1.0, 2.0)) == pytest.approx(0.5)  # 1/theta
        assert p2_lipschitz(SCAD(1.0, 3.0)) == pytest.approx(0.5)  # 1/(theta-1)
        # 2 lam (a+1)/a^2 = 2 * 1 * 2 / 1
        assert p2_lipschitz(TransformedL1(1.0, 1.0)) == pytest.approx(4.0)


class TestRegValue:
    def test_l1_minus_l2_hand(self):
        # ||x||_1 = 7, ||x||_2 = 5 for x = (3, 4)
        p1, p2 = reg_value(L1MinusL2(0.5), np.array([3.0, 4.0]))
        assert p1 == pytest.approx(3.5)
        assert p2 == pytest.approx(2.5)

    def test_log_hand(self):
        # total = lam log(1 + |x|/eps) = log 3 at lam=1, eps=0.5, x=1
        p1, p2 = reg_value(LogPenalty(1.0, 0.5), np.array([1.0]))
        assert p1 == pytest.approx(2.0)
        assert p1 - p2 == pytest.approx(math.log(3.0), abs=1e-12)

    def test_mcp_hand(self):
        # |x| >= theta lam: total = theta lam^2 / 2 = 1 at lam=1, theta=2
        p1, p2 = reg_value(MCP(1.0, 2.0), np.array([5.0]))
        assert p1 == pytest.approx(5.0)
        assert p1 - p2 == pytest.approx(1.0, abs=1e-12)

    def test_scad_hand(self):
        # lam < |x| <= theta lam: P2 = (|x|-lam)^2 / (2 (theta-1)) = 1/4
        p1, p2 = reg_value(SCAD(1.0, 3.0), np.array([2.0]))
        assert p1 == pytest.approx(2.0)
        assert p2 == pytest.approx(0.25, abs=1e-12)

    def test_tl1_hand(self):
        # total = lam (a+1) |x| / (a + |x|) = 1 at lam=a=x=1
        p1, p2 = reg_value(TransformedL1(1.0, 1.0), np.array([1.0]))
        assert p1 == pytest.approx(2.0)
        assert p1 - p2 == pytest.approx(1.0, abs=1e-12)

    def test_value_at_zero(self):
        z = np.zeros(3)
        for spec in SPECS:
            assert reg_value(spec, z) == (0.0, 0.0)

    def test_mcp_total_matches_quadrature(self):
        lam, theta = 0.8, 2.5
        spec = MCP(lam, theta)
        deriv = lambda u: lam * max(0.0, 1.0 - u / (theta * lam))
        for x in (0.5, 1.9, 2.0, 3.7):
            ref = simpson(deriv, 0.0, x)
            assert total_penalty(spec, [x]) == pytest.approx(ref, abs=1e-6)
            assert total_penalty(spec, [-x]) == pytest.approx(ref, abs=1e-6)

    def test_scad_total_matches_quadrature(self):
        lam, theta = 0.7, 3.5
        spec = SCAD(lam, theta)

        def deriv(u):
            if u <= lam:
                return lam
            return max(0.0, (theta * lam - u)) / (theta - 1.0)

        for x in (0.3, 1.2, 2.0, 4.0):
            ref = simpson(deriv, 0.0, x)
            assert total_penalty(spec, [x]) == pytest.approx(ref, abs=1e-6)

    def test_log_total_matches_quadrature(self):
        lam, eps = 0.9, 0.4
        spec = LogPenalty(lam, eps)
        deriv = lambda u: lam / (eps + u)
        for x in (0.2, 1.0, 6.0):
            ref = simpson(deriv, 0.0, x)
            assert total_penalty(spec, [x]) == pytest.approx(ref, abs=1e-8)

    def test_tl1_total_matches_quadrature(self):
        lam, a = 0.5, 1.2
        spec = TransformedL1(lam, a)
        deriv = lambda u: lam * a * (a + 1.0) / (a + u) ** 2
        for x in (0.3, 1.5, 8.0):
            ref = simpson(deriv, 0.0, x)
            assert total_penalty(spec, [x]) == pytest.approx(ref, abs=1e-8)

    def test_l12_closed_form(self, rng):
        spec = L1MinusL2(0.8)
        for _ in range(10):
            x = rng.standard_normal(5) * 3.0
            want = 0.8 * (np.abs(x).sum() - np.linalg.norm(x))
            assert total_penalty(spec, x) == pytest.approx(want, abs=1e-12)


class TestSoftThreshold:
    def test_hand_values(self):
        z = np.array([3.0, -0.5, 0.0, -4.0])
        out = soft_threshold(z, 1.0)
        assert np.allclose(out, [2.0, 0.0, 0.0, -3.0])

    def test_zero_threshold_is_identity(self):
        z = np.array([1.5, -2.5])
        assert np.array_equal(soft_threshold(z, 0.0), z)


class TestP1Prox:
    def test_log_hand_example(self):
        # weight lam/eps = 2, mu = 1: soft threshold by 2
        out = p1_prox(LogPenalty(1.0, 0.5), np.array([5.0, -1.0]), 1.0)
        assert np.allclose(out, [3.0, 0.0])

    def test_l12_hand_example(self):
        # weight lam = 2, mu = 0.5: soft threshold by 1
        out = p1_prox(L1MinusL2(2.0), np.array([3.0, -3.0, 0.5]), 0.5)
        assert np.allclose(out, [2.0, -2.0, 0.0])

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__)
    def test_solves_scalar_prox_problem(self, spec, rng):
        # independent route: refine-scan the scalar objective
        w = p1_weight(spec)
        for _ in range(5):
            z = float(rng.uniform(-4.0, 4.0))
            mu = float(rng.uniform(0.2, 2.0))
            got = float(p1_prox(spec, np.array([z]), mu)[0])
            ref = grid_min_1d(
                lambda u: 0.5 * (u - z) ** 2 + mu * w * abs(u),
                -abs(z) - 1.0, abs(z) + 1.0,
            )
            assert got == pytest.approx(ref, abs=1e-6)

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__)
    @given(z1=finite_floats, z2=finite_floats)
    def test_nonexpansive(self, spec, z1, z2):
        a = p1_prox(spec, np.array([z1]), 0.7)
        b = p1_prox(spec, np.array([z2]), 0.7)
        assert abs(float(a[0] - b[0])) <= abs(z1 - z2) + 1e-12


class TestP2Subgrad:
    def test_l12_hand(self):
        out = p2_subgrad(L1MinusL2(2.0), np.array([3.0, 4.0]))
        assert np.allclose(out, [1.2, 1.6])  # lam x / ||x||
        assert np.array_equal(p2_subgrad(L1MinusL2(2.0), np.zeros(3)), np.zeros(3))

    def test_mcp_hand(self):
        # lam sign(x) min(1, |x|/(theta lam)) at lam=1, theta=2
        out = p2_subgrad(MCP(1.0, 2.0), np.array([1.0, -5.0]))
        assert np.allclose(out, [0.5, -1.0])

    def test_scad_hand(self):
        # sign(x) [min(theta lam, |x|) - lam]_+ / (theta - 1) at lam=1, theta=3
        spec = SCAD(1.0, 3.0)
        out = p2_subgrad(spec, np.array([2.0, 0.5, -4.0]))
        assert np.allclose(out, [0.5, 0.0, -1.0])

    def test_log_hand(self):
        # lam x / (eps (|x| + eps)) at lam=1, eps=0.5, x=0.5
        out = p2_subgrad(LogPenalty(1.0, 0.5), np.array([0.5]))
        assert out[0] == pytest.approx(1.0, abs=1e-12)

    def test_tl1_hand(self):
        # lam (a+1) sign(x) (1/a - a/(a+|x|)^2) = 2 (1 - 1/4) at lam=a=x=1
        out = p2_subgrad(TransformedL1(1.0, 1.0), np.array([1.0]))
        assert out[0] == pytest.approx(1.5, abs=1e-12)

    @pytest.mark.parametrize("spec", SMOOTH_P2, ids=lambda s: type(s).__name__)
    def test_matches_p2_finite_differences(self, spec, rng):
        # away from the origin P2 is smooth; central differences agree
        p2_of = lambda x: reg_value(spec, x)[1]
        for _ in range(5):
            x = rng.uniform(0.3, 4.0, size=4) * rng.choice([-1.0, 1.0], size=4)
            got = p2_subgrad(spec, x)
            ref = fd_gradient(p2_of, x, h=1e-6)
            assert np.allclose(got, ref, atol=2e-6)

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__)
    @given(data=st.data())
    def test_subgradient_inequality(self, spec, data):
        # P2 convex: P2(y) >= P2(x) + <xi, y - x>
        dim = 3
        x = np.array([data.draw(finite_floats) for _ in range(dim)])
        y = np.array([data.draw(finite_floats) for _ in range(dim)])
        xi = p2_subgrad(spec, x)
        p2x = reg_value(spec, x)[1]
        p2y = reg_value(spec, y)[1]
        assert p2y - p2x - float(xi @ (y - x)) >= -1e-10

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__)
    @given(data=st.data())
    def test_p2_midpoint_convexity(self, spec, data):
        dim = 3
        x = np.array([data.draw(finite_floats) for _ in range(dim)])
        y = np.array([data.draw(finite_floats) for _ in range(dim)])
        mid = reg_value(spec, (x + y) / 2.0)[1]
        avg = (reg_value(spec, x)[1] + reg_value(spec, y)[1]) / 2.0
        assert mid <= avg + 1e-10

    @pytest.mark.parametrize("spec", SMOOTH_P2, ids=lambda s: type(s).__name__)
    def test_lipschitz_bound(self, spec, rng):
        lip = p2_lipschitz(spec)
        for _ in range(200):
            x = rng.uniform(-8.0, 8.0, size=4)
            y = rng.uniform(-8.0, 8.0, size=4)
            lhs = float(np.linalg.norm(p2_subgrad(spec, x) - p2_subgrad(spec, y)))
            assert lhs <= lip * float(np.linalg.norm(x - y)) + 1e-10


class TestFullProx:
    def test_l12_scalar_is_identity(self):
        # in one dimension the l1 and l2 norms coincide, the penalty vanishes
        for z in (0.0, 0.3, -7.0):
            out = full_prox(L1MinusL2(1.5), np.array([z]), 2.0)
            assert out.point[0] == pytest.approx(z, abs=1e-12)

    def test_l12_large_z_hand(self):
        # ||z||_inf > lam/L: shift the soft-thresholded point outward
        out = full_prox(L1MinusL2(1.0), np.array([3.0, 0.0]), 1.0)
        assert np.allclose(out.point, [3.0, 0.0], atol=1e-12)

    def test_l12_small_z_is_one_sparse(self):
        # ||z||_inf <= lam/L: keep only the largest coordinate
        out = full_prox(L1MinusL2(1.0), np.array([0.5, 0.3]), 1.0)
        assert np.allclose(out.point, [0.5, 0.0], atol=1e-12)

    def test_mcp_flat_region_identity(self):
        # beyond theta lam the penalty is constant, so the prox is z itself
        out = full_prox(MCP(1.0, 2.0), np.array([5.0]), 1.0)
        assert out.point[0] == pytest.approx(5.0, abs=1e-12)

    def test_mcp_interior_hand(self):
        # candidates at lam=1, theta=2, L=1, z=1.5: phi(1) = 0.875 beats
        # phi(0) = 1.125, interior stationary point (z - lam)/(1 - 1/theta)
        out = full_prox(MCP(1.0, 2.0), np.array([1.5]), 1.0)
        assert out.point[0] == pytest.approx(1.0, abs=1e-10)

    def test_mcp_small_z_snaps_to_zero(self):
        out = full_prox(MCP(1.0, 2.0), np.array([0.5]), 1.0)
        assert out.point[0] == 0.0

    def test_scad_flat_region_identity(self):
        out = full_prox(SCAD(1.0, 3.0), np.array([10.0]), 1.0)
        assert out.point[0] == pytest.approx(10.0, abs=1e-12)

    def test_log_zero_is_fixed_point(self):
        out = full_prox(LogPenalty(1.0, 0.5), np.zeros(2), 1.0)
        assert np.array_equal(out.point, np.zeros(2))

    def test_sign_symmetry(self, rng):
        for spec in SPECS:
            z = rng.uniform(0.1, 5.0, size=4)
            plus = full_prox(spec, z, 1.3).point
            minus = full_prox(spec, -z, 1.3).point
            assert np.allclose(plus, -minus, atol=1e-12)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            full_prox(MCP(1.0, 2.0), np.array([np.nan]), 1.0)
        with pytest.raises(ValueError):
            full_prox(MCP(1.0, 2.0), np.array([np.inf]), 1.0)

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__)
    def test_objective_dominates_anchors(self, spec, rng):
        # the prox objective at the returned point never exceeds the
        # objective at 0 or at z
        for _ in range(20):
            z = rng.standard_normal(3) * rng.uniform(0.1, 5.0)
            ell = float(rng.uniform(0.05, 20.0))
            got = prox_objective(spec, z, ell, full_prox(spec, z, ell).point)
            assert got <= prox_objective(spec, z, ell, np.zeros(3)) + 1e-12
            assert got <= prox_objective(spec, z, ell, z) + 1e-12

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__)
    def test_scalar_matches_grid_scan(self, spec, rng):
        # third route: refine-scan the full scalar prox objective
        for _ in range(4):
            z = float(rng.uniform(-4.0, 4.0))
            ell = float(rng.uniform(0.3, 3.0))
            got = prox_objective(spec, np.array([z]), ell,
                                 full_prox(spec, np.array([z]), ell).point)
            u_ref = grid_min_1d(
                lambda u: prox_objective(spec, np.array([z]), ell, np.array([u])),
                -abs(z) - 2.0, abs(z) + 2.0,
            )
            ref = prox_objective(spec, np.array([z]), ell, np.array([u_ref]))
            assert got <= ref + 1e-8

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__)
    def test_matches_dense_oracle_scalar(self, spec, rng):
        for _ in range(40):
            z = np.array([float(rng.standard_normal() * rng.uniform(0.1, 8.0))])
            ell = float(10.0 ** rng.uniform(-1.5, 1.5))
            closed = prox_objective(spec, z, ell, full_prox(spec, z, ell).point)
            scanned = prox_objective(spec, z, ell, prox_oracle(spec, z, ell).point)
            assert closed <= scanned + 1e-6

    def test_matches_dense_oracle_2d(self, rng):
        for _ in range(8):
            lam = float(10.0 ** rng.uniform(-2.0, 0.3))
            spec = L1MinusL2(lam)
            z = rng.standard_normal(2) * rng.uniform(0.1, 4.0)
            ell = float(10.0 ** rng.uniform(-1.0, 1.0))
            closed = prox_objective(spec, z, ell, full_prox(spec, z, ell).point)
            scanned = prox_objective(spec, z, ell, prox_oracle(spec, z, ell).point)
            assert closed <= scanned + 1e-6


class TestProxOracle:
    def test_returns_result_with_gap(self):
        out = prox_oracle(MCP(1.0, 2.0), np.array([1.5]), 1.0)
        assert isinstance(out, ProxResult)
        assert out.objective_gap_bound >= 0.0
        assert np.all(np.isfinite(out.point))

    def test_never_worse_than_anchors(self, rng):
        # 0 and z are evaluated exactly, so the scan cannot lose to them
        for spec in SPECS:
            z = rng.standard_normal(1) * 3.0
            ell = 0.7
            got = prox_objective(spec, z, ell, prox_oracle(spec, z, ell).point)
            assert got <= prox_objective(spec, z, ell, np.zeros(1)) + 1e-15
            assert got <= prox_objective(spec, z, ell, z) + 1e-15


class TestProxObjective:
    def test_hand_value(self):
        # 0.5 * 2 * ((1-3)^2 + 1) + (2 - sqrt 2) at lam=1
        got = prox_objective(L1MinusL2(1.0), np.array([3.0, 0.0]), 2.0,
                             np.array([1.0, 1.0]))
        assert got == pytest.approx(7.0 - math.sqrt(2.0), abs=1e-12)


class TestSelectCandidate:
    def test_tie_goes_to_smaller_magnitude(self):
        pen0 = lambda u: np.zeros_like(u)
        cands = np.array([[0.0], [1e-13]])
        valid = np.ones((2, 1), dtype=bool)
        got = _select_candidate(np.array([0.0]), 1.0, cands, valid, pen0)
        assert got[0] == 0.0

    def test_invalid_candidates_are_skipped(self):
        pen0 = lambda u: np.zeros_like(u)
        cands = np.array([[0.0], [2.0]])
        valid = np.array([[True], [False]])  # mask out the better candidate
        got = _select_candidate(np.array([2.0]), 1.0, cands, valid, pen0)
        assert got[0] == 0.0

    def test_picks_minimum(self):
        pen0 = lambda u: np.zeros_like(u)
        cands = np.array([[0.0], [2.0]])
        valid = np.ones((2, 1), dtype=bool)
        got = _select_candidate(np.array([2.0]), 1.0, cands, valid, pen0)
        assert got[0] == 2.0


class TestCubicRoots:
    def test_known_triple(self):
        # (u-1)(u-2)(u-3) = u^3 - 6u^2 + 11u - 6
        roots = _cubic_roots_shifted(np.array([-6.0]), np.array([11.0]), np.array([-6.0]))
        assert np.allclose(np.sort(roots[:, 0]), [1.0, 2.0, 3.0], atol=1e-9)

    def test_single_real_root(self):
        # u^3 = 1 has one real root
        roots = _cubic_roots_shifted(np.array([0.0]), np.array([0.0]), np.array([-1.0]))
        finite = roots[np.isfinite(roots[:, 0]), 0]
        assert finite.size == 1
        assert finite[0] == pytest.approx(1.0, abs=1e-12)

    def test_random_coefficients_satisfy_equation(self, rng):
        b2 = rng.uniform(-5.0, 5.0, size=50)
        b1 = rng.uniform(-5.0, 5.0, size=50)
        b0 = rng.uniform(-5.0, 5.0, size=50)
        roots = _cubic_roots_shifted(b2, b1, b0)
        for k in range(3):
            r = roots[k]
            ok = np.isfinite(r)
            res = r[ok] ** 3 + b2[ok] * r[ok] ** 2 + b1[ok] * r[ok] + b0[ok]
            scale = 1.0 + np.abs(r[ok]) ** 3
            assert np.all(np.abs(res) <= 1e-7 * scale)


class TestParsers:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("l1-l2:lambda=5e-4", L1MinusL2(5e-4)),
            ("log:lambda=1e-3,eps=0.5", LogPenalty(1e-3, 0.5)),
            ("mcp:lambda=0.1,theta=5", MCP(0.1, 5.0)),
            ("scad:lambda=0.1,theta=3.7", SCAD(0.1, 3.7)),
            ("tl1:lambda=0.1,a=1", TransformedL1(0.1, 1.0)),
        ],
    )
    def test_parse_reg_roundtrip(self, text, expected):
        assert parse_reg(text) == expected

    @pytest.mark.parametrize(
        "text",
        [
            "huh:lambda=1",
            "l1-l2",
            "l1-l2:lam=1",
            "log:lambda=1",
            "mcp:lambda=1,theta=2,a=3",
            "l1-l2:lambda=xyz",
            "scad:lambda=1,theta=2",
            "l1-l2:lambda=1,lambda=2",
        ],
    )
    def test_parse_reg_rejects(self, text):
        with pytest.raises(ValueError):
            parse_reg(text)

    def test_parse_reg_family_keeps_cli_keys(self):
        family, params = parse_reg_family("log:eps=0.5")
        assert family == "log"
        assert params == {"eps": 0.5}

    def test_parse_reg_family_unknown(self):
        with pytest.raises(ValueError):
            parse_reg_family("nope:eps=1")

    def test_make_spec_maps_cli_names(self):
        spec = make_spec("log", **{"lambda": 1e-3, "eps": 0.5})
        assert spec == LogPenalty(1e-3, 0.5)
        spec = make_spec("tl1", **{"lambda": 0.2, "a": 0.7})
        assert spec == TransformedL1(0.2, 0.7)

    def test_make_spec_rejects_bad_params(self):
        with pytest.raises(ValueError):
            make_spec("mcp", **{"lambda": 0.1})
        with pytest.raises(ValueError):
            make_spec("l1-l2", **{"lambda": 0.1, "eps": 1.0})
