import json

import numpy as np
import pytest
from pydantic import ValidationError

from src.analytic.expr import cos, ln, sin, sqrt, symbols
from src.analytic.field import Field
from src.analytic.singular import SingularSet, floor_band, zero_band
from src.catalog import build_catalog
from src.errors import EmptyReportError, SkippedSample, UsageError
from src.verify import (
    FastDiffusion, Liouville, SampleSpec, equation_for_tag, fast_diffusion_residual, fd_derivative_oracle,
    fd_residual, liouville_residual, reduced_residual, run_sweep, system22_residual,
)

X, Y, T = symbols("x y t")


class TestSampleSpec:
    def test_draw_is_seeded(self):
        """Same seed gives the same samples"""
        spec = SampleSpec(box={"x": (0.0, 1.0), "t": (1.0, 2.0)}, count=10, seed=4)
        a, b = spec.draw(), spec.draw()
        assert np.array_equal(a["x"], b["x"]) and np.array_equal(a["t"], b["t"])
        assert np.all((a["t"] >= 1.0) & (a["t"] <= 2.0))

    def test_invalid(self):
        """count >= 1 and non-degenerate boxes"""
        with pytest.raises(ValidationError):
            SampleSpec(box={"x": (0.0, 1.0)}, count=0)
        with pytest.raises(ValidationError):
            SampleSpec(box={"x": (1.0, 1.0)}, count=5)
        with pytest.raises(ValidationError):
            SampleSpec(box={}, count=5)

    def test_with_count(self):
        """with_count keeps box and seed and validates the new count"""
        spec = SampleSpec(box={"x": (0.0, 1.0)}, count=10, seed=4).with_count(25)
        assert spec.count == 25 and spec.seed == 4 and spec.draw()["x"].size == 25
        with pytest.raises(ValidationError):
            spec.with_count(0)


class TestOracles:
    def setup_method(self):
        """u = 8t / (1 - x^2 - y^2)^2 solves u_t = Laplacian(ln u)"""
        self.u = Field(8 * T / (1 - X ** 2 - Y ** 2) ** 2, ("x", "y", "t"), name="disc")
        self.spec = SampleSpec(box={"x": (0.1, 0.6), "y": (0.1, 0.6), "t": (0.5, 2.0)}, count=200, seed=1)

    def test_exact_solution_passes(self):
        """Residual of an exact solution is at rounding level"""
        report = fast_diffusion_residual(self.u, self.spec)
        assert report.max_rel < 1e-12
        assert report.n_evaluated == 200
        assert report.n_skipped_singular == 0

    def test_perturbation_detected(self):
        """Adding a constant breaks the equation"""
        report = fast_diffusion_residual(self.u.perturbed(0.5), self.spec)
        assert report.max_rel > 1e-4

    def test_finite_difference_agrees(self):
        """The finite-difference residual is small but computed independently"""
        report = fd_residual(FastDiffusion(), self.u, self.spec)
        assert report.equation == "fast2d[fd]"
        assert report.max_rel < 1e-5

    def test_non_positive_samples_skipped(self):
        """Samples with u <= 0 are counted as skipped"""
        u = Field(T * (X - 0.35), ("x", "y", "t"))
        report = run_sweep(FastDiffusion(), u, self.spec)
        assert report.n_skipped_singular > 0
        assert report.n_evaluated + report.n_skipped_singular == 200

    def test_undefined_samples_fail(self):
        """A field that is NaN on part of the box fails even where it solves the equation"""
        u = Field(8 * T / sqrt(1 - X ** 2 - Y ** 2) ** 4, ("x", "y", "t"))
        spec = SampleSpec(box={"x": (0.1, 0.9), "y": (0.1, 0.9), "t": (0.5, 2.0)}, count=200, seed=1)
        report = fast_diffusion_residual(u, spec)
        assert report.n_nonfinite > 0
        assert report.n_evaluated + report.n_skipped_singular + report.n_nonfinite == 200
        assert not report.passed(1e-6)

    def test_declared_singular_set_covers_undefined_samples(self):
        """The same field with its undefined region declared singular passes"""
        g = 1 - X ** 2 - Y ** 2
        u = Field(8 * T / sqrt(g) ** 4, ("x", "y", "t"), SingularSet.of(floor_band(g)))
        spec = SampleSpec(box={"x": (0.1, 0.9), "y": (0.1, 0.9), "t": (0.5, 2.0)}, count=200, seed=1)
        report = fast_diffusion_residual(u, spec)
        assert report.n_nonfinite == 0 and report.n_skipped_singular > 0
        assert report.passed(1e-6)

    def test_all_skipped(self):
        """A box inside the singular set raises EmptyReportError"""
        entry = build_catalog().get("branched.coth_tan")
        spec = SampleSpec(box={"x": (-1e-4, 1e-4), "y": (0.2, 0.4), "t": (0.5, 1.0)}, count=20, seed=1)
        with pytest.raises(EmptyReportError):
            entry.residual(spec)

    def test_missing_variable(self):
        """The box must cover every field variable"""
        with pytest.raises(UsageError):
            fast_diffusion_residual(self.u, SampleSpec(box={"x": (0.1, 0.6), "y": (0.1, 0.6)}, count=5))

    def test_reduced_signature(self):
        """The one-dimensional oracle needs (eta, t)"""
        with pytest.raises(UsageError):
            reduced_residual(self.u, self.spec)

    def test_report_json_is_deterministic(self):
        """Identical runs serialize identically with sorted keys"""
        first = fast_diffusion_residual(self.u, self.spec).to_json()
        second = fast_diffusion_residual(self.u, self.spec).to_json()
        assert first == second
        assert list(json.loads(first)) == sorted(json.loads(first))

    def test_liouville(self):
        """w = -ln cos y solves Laplacian w = exp(2w)"""
        w = Field(-ln(cos(Y)), ("x", "y"))
        spec = SampleSpec(box={"x": (-1.0, 1.0), "y": (-1.0, 1.0)}, count=200, seed=2)
        assert liouville_residual(w, 2.0, spec=spec).max_rel < 1e-12

    def test_liouville_needs_spec(self):
        """liouville_residual without a SampleSpec is a usage error"""
        with pytest.raises(UsageError):
            liouville_residual(Field(-ln(cos(Y)), ("x", "y")), 2.0)

    def test_equation_for_tag(self):
        """Tags map to residual operators"""
        assert isinstance(equation_for_tag("fast1d"), FastDiffusion)
        assert isinstance(equation_for_tag("liouville", {"lambda": 1.0}), Liouville)
        with pytest.raises(UsageError):
            equation_for_tag("system22")


class TestFiniteDifferenceOracle:
    def test_derivatives(self):
        """First and second derivatives of t sin(x)"""
        f = Field(sin(X) * T, ("x", "t"))
        point = {"x": 0.4, "t": 2.0}
        assert fd_derivative_oracle(f, "x", 1, point) == pytest.approx(2 * np.cos(0.4), rel=1e-8)
        assert fd_derivative_oracle(f, "x", 2, point) == pytest.approx(-2 * np.sin(0.4), rel=1e-6)

    def test_singular_stencil(self):
        """A stencil touching the singular set is skipped"""
        f = Field(1 / X, ("x",), SingularSet.of(zero_band(X)))
        with pytest.raises(SkippedSample):
            fd_derivative_oracle(f, "x", 1, {"x": 1e-4})

    def test_bad_order(self):
        """Only orders 1 and 2 exist"""
        with pytest.raises(UsageError):
            fd_derivative_oracle(Field(X, ("x",)), "x", 3, {"x": 0.0})


class TestChargeTransferOracle:
    def test_closed_form_solution(self):
        """u = v = ln(2 / x^2) with constant Phi solves the steady system"""
        u = Field(ln(2 / X ** 2), ("x", "y"))
        v = Field(ln(2 / X ** 2), ("x", "y"))
        phi = Field(X * 0 + 1, ("x", "y"))
        spec = SampleSpec(box={"x": (0.3, 1.0), "y": (0.0, 1.0)}, count=100, seed=3)
        report = system22_residual(u, v, phi, 1.0, 1.0, spec)
        assert set(report.components) == {"r1", "r2", "r3"}
        assert report.max_rel < 1e-12

    def test_mismatched_fields_fail(self):
        """u != v breaks the Phi equation"""
        u = Field(ln(2 / X ** 2), ("x", "y"))
        v = Field(ln(2 / X ** 2) + 0.1, ("x", "y"))
        phi = Field(X * 0 + 1, ("x", "y"))
        spec = SampleSpec(box={"x": (0.3, 1.0), "y": (0.0, 1.0)}, count=100, seed=3)
        report = system22_residual(u, v, phi, 0.0, 0.0, spec)
        assert report.components["r3"].max_rel > 1e-3


class TestCatalogOracles:
    @pytest.mark.parametrize("entry_id", build_catalog().ids())
    def test_exact_and_fd_agree(self, entry_id):
        """Exact and finite-difference residuals agree on pass/fail at 1e-4"""
        entry = build_catalog().get(entry_id)
        spec = entry.sample_spec(count=300, seed=3)
        exact = run_sweep(entry.equation(), entry.field, spec)
        fd = fd_residual(entry.equation(), entry.field, spec)
        assert exact.passed(1e-4) == fd.passed(1e-4)

    @pytest.mark.parametrize("entry_id", build_catalog().ids())
    def test_perturbation_detected(self, entry_id):
        """Adding 1e-2 pushes max_abs above 5e-3"""
        entry = build_catalog().get(entry_id)
        report = run_sweep(entry.equation(), entry.field.perturbed(1e-2), entry.sample_spec(seed=3))
        assert report.max_abs > 5e-3
