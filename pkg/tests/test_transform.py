import numpy as np
import pytest

from src.analytic.expr import exp, symbols
from src.analytic.field import Field
from src.analytic.harmonic import (
    affine_pair, compose_pairs, cos_pair, exponential_pair, monomial_pair, sinh_pair,
)
from src.catalog import build_catalog
from src.errors import (
    DegenerateInputError, DomainError, ParameterError, PreconditionError, UsageError,
)
from src.transform import (
    SourceSystem, branch, check_homogeneity, conformal_lift, exchange_coupling, exchange_seed_fields,
    homogeneity_residual, lift_system, linear_sink, liouville_shift, reduce_via_harmonic,
    sink_seed_fields, to_pair_coordinates, zero_source,
)
from src.verify import (
    SampleSpec, fast_diffusion_residual, liouville_residual, system_residual, weighted_residual,
)

X, Y = symbols("x y")
PLANE_BOX = {"x": (0.3, 1.0), "y": (0.3, 1.0), "t": (0.1, 3.0)}


def _values(field: Field, pts):
    return field.evaluate_array(pts)


class TestBranch:
    def setup_method(self):
        """Base seed and a sample grid in the plane"""
        self.catalog = build_catalog()
        self.seed = self.catalog.get("base_seed").field
        rng = np.random.default_rng(21)
        self.pts = {"x": rng.uniform(0.3, 1.0, 20), "y": rng.uniform(0.3, 1.0, 20), "t": rng.uniform(0.2, 2.0, 20)}

    def test_identity_pair(self):
        """Branching by F(z) = z reproduces the seed"""
        u = branch(affine_pair(1.0, 0.0), self.seed)
        renamed = {"xi": self.pts["x"], "eta": self.pts["y"], "t": self.pts["t"]}
        assert np.max(np.abs(_values(u, self.pts) - _values(self.seed, renamed))) < 1e-12

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_monomial_branches_solve(self, n):
        """Branches of the base seed by z^n solve the fast diffusion equation"""
        u = branch(monomial_pair(n), self.seed)
        report = fast_diffusion_residual(u, SampleSpec(box=PLANE_BOX, count=200, seed=n))
        assert report.max_rel < 1e-7

    def test_sinh_pair_gives_coth_tan(self):
        """F(z) = sinh z generates the coth/tan solution"""
        u = branch(sinh_pair(), self.seed)
        expected = self.catalog.get("branched.coth_tan").field
        assert np.allclose(_values(u, self.pts), _values(expected, self.pts), rtol=1e-10, atol=0)

    def test_cos_pair_gives_tan_tanh(self):
        """F(z) = cos z generates the tan/tanh solution"""
        u = branch(cos_pair(), self.seed)
        expected = self.catalog.get("branched.tan_tanh").field
        assert np.allclose(_values(u, self.pts), _values(expected, self.pts), rtol=1e-10, atol=0)

    def test_cubic_from_tan_tanh(self):
        """z^3 applied to the tan/tanh solution read in (xi, eta) gives the cubic entry"""
        seed = to_pair_coordinates(self.catalog.get("branched.tan_tanh").field)
        u = branch(monomial_pair(3), seed)
        expected = self.catalog.get("branched.cubic").field
        pts = {k: v * (0.8 if k != "t" else 1.0) for k, v in self.pts.items()}
        keep = ~expected.singular_mask(pts)
        assert np.allclose(_values(u, pts)[keep], _values(expected, pts)[keep], rtol=1e-10, atol=0)

    def test_exponential_from_tan_tanh(self):
        """exp(3z) applied to the tan/tanh solution gives the shipped exponential entry"""
        seed = to_pair_coordinates(self.catalog.get("branched.tan_tanh").field)
        u = branch(exponential_pair(3.0), seed)
        expected = self.catalog.get("branched.exponential").field
        pts = {"x": np.linspace(-1.0, -0.2, 7), "y": np.linspace(-0.4, 0.4, 7), "t": np.full(7, 0.5)}
        keep = ~expected.singular_mask(pts)
        assert np.allclose(_values(u, pts)[keep], _values(expected, pts)[keep], rtol=1e-10, atol=0)

    def test_signature(self):
        """branch needs a seed over (xi, eta, t)"""
        with pytest.raises(UsageError):
            branch(monomial_pair(2), self.catalog.get("branched.tan_tanh").field)


class TestSystems:
    def test_homogeneous_sources(self):
        """Exchange coupling and linear sinks are degree-1 homogeneous"""
        assert check_homogeneity(exchange_coupling()) < 1e-12
        assert check_homogeneity(linear_sink(0.5, 3)) < 1e-12
        assert check_homogeneity(zero_source(2)) == 0.0

    def test_nonlinear_source_rejected(self):
        """f = u^2 fails the homogeneity check"""
        quadratic = SourceSystem("square", 1, lambda u: u ** 2)
        with pytest.raises(PreconditionError) as exc:
            check_homogeneity(quadratic)
        assert exc.value.worst_residual > 1e-9

    def test_homogeneity_residual(self):
        """f(lam u) - lam f(u) and its parameter domain"""
        r = homogeneity_residual(exchange_coupling(), np.array([[1.0], [2.0]]), 3.0)
        assert np.allclose(r, 0.0)
        with pytest.raises(ParameterError):
            homogeneity_residual(exchange_coupling(), np.array([[1.0], [2.0]]), 0.0)

    def test_lifted_exchange_system(self):
        """The lifted exchange system solves the coupled equations"""
        fields = lift_system(monomial_pair(2), exchange_seed_fields(), exchange_coupling())
        spec = SampleSpec(box={"x": (0.3, 1.0), "y": (0.3, 1.0), "t": (0.1, 2.0)}, count=200, seed=8)
        report = system_residual(fields, exchange_coupling(), spec, "exchange")
        assert set(report.components) == {"u1", "u2"}
        assert report.max_rel < 1e-7

    def test_lifted_sink_system(self):
        """The lifted linear-sink system solves the coupled equations"""
        source = linear_sink(0.7, 2)
        fields = lift_system(exponential_pair(1.0), sink_seed_fields(0.7, 2), source)
        spec = SampleSpec(box={"x": (-0.5, 0.5), "y": (-1.0, 1.0), "t": (0.0, 2.0)}, count=200, seed=9)
        assert system_residual(fields, source, spec).max_rel < 1e-7

    def test_size_mismatch(self):
        """Seed count must match the source size"""
        with pytest.raises(UsageError):
            lift_system(monomial_pair(2), exchange_seed_fields()[:1], exchange_coupling())


class TestReduction:
    @pytest.mark.parametrize("eta,box", [
        (Y, {"x": (-1.0, 1.0), "y": (-0.5, 0.5)}),
        (2 * X * Y, {"x": (0.2, 0.5), "y": (0.2, 0.5)}),
        (4 * (X ** 3 * Y - X * Y ** 3), {"x": (0.2, 0.5), "y": (0.2, 0.5)}),
    ])
    def test_trig_cos_reduced(self, eta, box):
        """A one-dimensional family composed with a harmonic function solves the 2D equation"""
        v = build_catalog().get("line.trig_cos")
        u = reduce_via_harmonic(eta, v.field)
        spec = SampleSpec(box={**box, "t": v.domain["t"]}, count=200, seed=10)
        assert fast_diffusion_residual(u, spec).max_rel < 1e-7

    def test_constant_eta(self):
        """A constant harmonic function is degenerate"""
        with pytest.raises(DegenerateInputError):
            reduce_via_harmonic(X * 0 + 2, build_catalog().get("line.trig_sh").field)

    def test_signature(self):
        """Reduction needs a field over (eta, t)"""
        with pytest.raises(UsageError):
            reduce_via_harmonic(Y, build_catalog().get("base_seed").field)


class TestConformalLift:
    def setup_method(self):
        """trig_sh family and the weight exp(x^2 - y^2)"""
        self.v = build_catalog().get("line.trig_sh").field
        self.weight = exp(X ** 2 - Y ** 2)
        self.spec = SampleSpec(box={"x": (0.2, 1.0), "y": (0.2, 1.0), "t": (0.1, 2.0)}, count=300, seed=12)

    def test_weighted_solution(self):
        """The lift solves u_t = f Laplacian(ln u)"""
        u = conformal_lift(self.weight, self.v)
        assert weighted_residual(u, self.weight, self.spec).max_rel < 1e-7

    def test_wrong_weight(self):
        """Checking against twice the weight fails"""
        u = conformal_lift(self.weight, self.v)
        assert weighted_residual(u, 2 * self.weight, self.spec).max_rel > 1e-3

    def test_exp_of_harmonic_accepted(self):
        """f = exp(2xy) passes the precondition automatically"""
        u = conformal_lift(exp(2 * X * Y), self.v)
        assert weighted_residual(u, exp(2 * X * Y), self.spec).max_rel < 1e-7

    def test_constant_weight(self):
        """Constant weight is degenerate"""
        with pytest.raises(DegenerateInputError):
            conformal_lift(X * 0 + 3, self.v)

    def test_non_positive_weight(self):
        """f <= 0 on the sampled box is a domain error"""
        with pytest.raises(DomainError):
            conformal_lift(-exp(X), self.v)

    def test_non_harmonic_log(self):
        """ln(1 + x^2) is not harmonic"""
        with pytest.raises(PreconditionError):
            conformal_lift(1 + X ** 2, self.v)


class TestLiouvilleShift:
    def setup_method(self):
        """liouville.sec read in (xi, eta)"""
        self.entry = build_catalog().get("liouville.sec")
        self.v = to_pair_coordinates(self.entry.field)
        self.lam = self.entry.params["lambda"]

    def test_shift_solves(self):
        """Shift by z^2 preserves the Liouville residual"""
        w = liouville_shift(monomial_pair(2), self.v, self.lam)
        spec = SampleSpec(box={"x": (0.2, 0.6), "y": (0.2, 0.6)}, count=300, seed=13)
        assert liouville_residual(w, self.lam, spec=spec).max_rel < 1e-7

    def test_two_shifts_equal_composed_shift(self):
        """Shifting by P1 then P2 equals one shift by P1 after P2"""
        p1, p2 = monomial_pair(2), exponential_pair(1.0)
        once = liouville_shift(p1, self.v, self.lam)
        twice = liouville_shift(p2, to_pair_coordinates(once), self.lam)
        composed = liouville_shift(compose_pairs(p1, p2), self.v, self.lam)
        pts = {"x": np.linspace(-1.0, -0.5, 9), "y": np.linspace(0.2, 0.6, 9)}
        assert np.allclose(_values(twice, pts), _values(composed, pts), rtol=1e-9, atol=1e-12)

    def test_parameters(self):
        """lambda = 0 and a wrong signature are rejected"""
        with pytest.raises(ParameterError):
            liouville_shift(monomial_pair(2), self.v, 0.0)
        with pytest.raises(UsageError):
            liouville_shift(monomial_pair(2), self.entry.field, self.lam)
