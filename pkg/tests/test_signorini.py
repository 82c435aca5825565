import math

import numpy as np
import pytest

from parmaj import (ContactBoundary, FluxField, InadmissibleFluxError,
                    IntervalDomain, ObstacleViolationError, SpaceTimeBox,
                    SpaceTimeField, SpatialField, boundary_term,
                    signorini_admissible_flux, signorini_error_measure,
                    signorini_majorant)
from parmaj.signorini import (ThinObstacleData, perturbed_member,
                              switching_contact_example)


def _zeros(x, t):
    return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(t)))


class TestContactBoundary:
    def test_dirichlet_part_must_remain(self):
        dom = IntervalDomain(0.0, 1.0)
        with pytest.raises(ValueError, match="Dirichlet"):
            ContactBoundary(domain=dom, contact=(0.0, 1.0))

    def test_contact_must_be_endpoint(self):
        with pytest.raises(ValueError, match="endpoint"):
            ContactBoundary(domain=IntervalDomain(0.0, 1.0), contact=(0.5,))

    def test_normals(self):
        b = ContactBoundary(domain=IntervalDomain(-1.0, 1.0), contact=(-1.0,))
        assert b.normal(-1.0) == -1.0
        assert b.normal(1.0) == 1.0
        assert b.free == (1.0,)


class TestThinObstacleData:
    def test_obstacle_above_initial_datum_rejected(self):
        dom = IntervalDomain(0.0, 1.0)
        box = SpaceTimeBox(dom, 1.0)
        f = SpaceTimeField(_zeros)
        u0 = SpatialField(lambda x: np.zeros_like(np.asarray(x, dtype=float)))
        with pytest.raises(ValueError, match="initial datum"):
            ThinObstacleData(box=box, f=f, u0=u0, C_F=1.0,
                             phi_contact={0.0: 1.0})


class TestFluxAdmissibility:
    def test_zero_flux_admissible(self):
        b = ContactBoundary(domain=IntervalDomain(-1.0, 1.0), contact=(1.0,))
        tau = FluxField(_zeros, _zeros)
        assert signorini_admissible_flux(tau, b, horizon=0.5).admissible

    def test_inward_flux_at_right_endpoint_rejected(self):
        b = ContactBoundary(domain=IntervalDomain(-1.0, 1.0), contact=(1.0,))
        tau = FluxField(lambda x, t: -np.ones(
            np.broadcast_shapes(np.shape(x), np.shape(t))), _zeros)
        rep = signorini_admissible_flux(tau, b, horizon=0.5)
        assert not rep.admissible
        assert rep.worst_value == pytest.approx(-1.0)
        assert rep.endpoint == 1.0

    def test_sign_flips_with_normal_at_left_endpoint(self):
        # tau(-1, t) = -t has outward trace (+t) >= 0 at the left endpoint
        b = ContactBoundary(domain=IntervalDomain(-1.0, 1.0), contact=(-1.0,))
        tau = FluxField(lambda x, t: -np.broadcast_to(
            np.asarray(t, dtype=float),
            np.broadcast_shapes(np.shape(x), np.shape(t))), _zeros)
        assert signorini_admissible_flux(tau, b, horizon=0.5).admissible


class TestBoundaryTerm:
    def _data(self, horizon=0.5):
        dom = IntervalDomain(0.0, 1.0)
        u0 = SpatialField(lambda x: np.asarray(x, dtype=float))
        return ThinObstacleData(box=SpaceTimeBox(dom, horizon),
                                f=SpaceTimeField(_zeros), u0=u0, C_F=2 / math.pi,
                                phi_contact={1.0: 0.0})

    def test_reference_value(self):
        # v(1,t) - phi = 1 and tau.n = t on (0, 1/2): integral is 1/8
        from parmaj import QuadratureConfig
        data = self._data()
        bdry = ContactBoundary(domain=data.box.domain, contact=(1.0,))
        v = SpaceTimeField(
            lambda x, t: np.broadcast_to(np.asarray(x, dtype=float),
                                         np.broadcast_shapes(np.shape(x), np.shape(t))),
            name="ramp")
        tau = FluxField(lambda x, t: np.asarray(x, dtype=float)
                        * np.asarray(t, dtype=float), _zeros)
        val = boundary_term(v, tau, data, bdry, QuadratureConfig())
        assert val == pytest.approx(0.125, rel=1e-12)

    def test_active_contact_kills_term(self, cfg):
        u, tau, data, bdry = switching_contact_example()
        # during contact v - phi = 0; after release tau.n = 0: both factors die
        assert boundary_term(u, tau, data, bdry, cfg) == pytest.approx(0.0,
                                                                       abs=1e-14)

    def test_no_flux_kills_term(self, cfg):
        u, _, data, bdry = switching_contact_example()
        tau0 = FluxField(_zeros, _zeros)
        assert boundary_term(u, tau0, data, bdry, cfg) == 0.0


class TestSwitchingExample:
    def test_interior_residual_vanishes(self, rng):
        u, tau, data, _ = switching_contact_example()
        x = rng.uniform(0.0, 1.0, 3000)
        t = rng.uniform(0.0, 1.0, 3000)
        res = data.f.value(x, t) + tau.div(x, t) - u.d_t(x, t)
        assert np.max(np.abs(res)) < 1e-12

    def test_complementarity_at_contact(self):
        u, tau, data, bdry = switching_contact_example()
        ts = np.linspace(0.0, 1.0, 101)
        vals = u.value(np.zeros_like(ts), ts)
        trace = tau.value(np.zeros_like(ts), ts) * bdry.normal(0.0)
        assert np.min(vals) >= -1e-14          # stays above the thin obstacle
        assert np.min(trace) >= -1e-14         # outflow is nonnegative
        assert np.max(np.abs(vals * trace)) < 1e-14

    def test_zero_at_exact_pair(self, cfg):
        u, tau, data, bdry = switching_contact_example()
        b = signorini_majorant(u, tau, data, bdry, 1.0, cfg)
        assert b.total == pytest.approx(0.0, abs=1e-12)
        assert b.boundary_term == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("amplitude", [0.1, 0.5, 2.0])
    def test_guarantee_for_perturbations(self, cfg, alpha, amplitude):
        u, tau, data, bdry = switching_contact_example()
        v = perturbed_member(u, amplitude)
        lhs = signorini_error_measure(u, v, alpha, data, cfg)
        b = signorini_majorant(v, tau, data, bdry, alpha, cfg)
        assert lhs <= b.total + 1e-8
        assert b.boundary_term >= -1e-12

    def test_boundary_term_nonnegative_at_samples(self):
        u, tau, data, bdry = switching_contact_example()
        v = perturbed_member(u, 1.0)
        ts = np.linspace(0.0, 1.0, 257)
        integrand = (v.value(np.zeros_like(ts), ts) - 0.0) * \
            tau.value(np.zeros_like(ts), ts) * bdry.normal(0.0)
        assert np.min(integrand) >= -1e-14

    def test_inadmissible_flux_raises(self, cfg):
        u, tau, data, bdry = switching_contact_example()
        flipped = FluxField(lambda x, t: -tau.value(x, t),
                            lambda x, t: -tau.div(x, t), regions=tau.regions,
                            t_knots=tau.t_knots)
        # the flipped flux pulls inward during the contact phase
        assert not signorini_admissible_flux(flipped, bdry,
                                             data.box.horizon).admissible
        with pytest.raises(InadmissibleFluxError):
            signorini_majorant(u, flipped, data, bdry, 1.0, cfg)
        # and the boundary term it would produce is negative for a lifted v
        v = perturbed_member(u, 1.0)
        lifted = SpaceTimeField(
            lambda x, t: v.value(x, t) + 0.3 * (1.0 - np.asarray(x, dtype=float)),
            v.grad_x, v.d_t, regions=v.regions, t_knots=v.t_knots)
        assert boundary_term(lifted, flipped, data, bdry, cfg) < 0

    def test_membership_violations_raise(self, cfg):
        u, tau, data, bdry = switching_contact_example()
        below = SpaceTimeField(lambda x, t: u.value(x, t) - 0.2,
                               u.grad_x, u.d_t, regions=u.regions)
        with pytest.raises(ObstacleViolationError):
            signorini_majorant(below, tau, data, bdry, 1.0, cfg)
        nonzero_on_s = SpaceTimeField(
            lambda x, t: u.value(x, t) + 0.2 * np.asarray(x, dtype=float),
            u.grad_x, u.d_t, regions=u.regions)
        with pytest.raises(ObstacleViolationError, match="Dirichlet"):
            signorini_majorant(nonzero_on_s, tau, data, bdry, 1.0, cfg)

    def test_alpha_domain(self, cfg):
        u, tau, data, bdry = switching_contact_example()
        with pytest.raises(ValueError):
            signorini_majorant(u, tau, data, bdry, 0.3, cfg)

    def test_error_measure_weights(self, cfg):
        u, _, data, _ = switching_contact_example()
        v = perturbed_member(u, 1.0)
        m_half = signorini_error_measure(u, v, 0.5, data, cfg)
        m_one = signorini_error_measure(u, v, 1.0, data, cfg)
        # alpha = 1/2 keeps only the final-time term; alpha = 1 adds half of
        # the gradient seminorm
        assert m_half < m_one
