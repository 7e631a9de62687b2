import json

import numpy as np
import pandas as pd

from src.analytic.expr import evaluate
from src.analytic.sexpr import parse_sexpr
from src.catalog import build_catalog
from src.cli import main

QUARTIC = "(mul 4 (add (mul (pow (var x) 3) (var y)) (neg (mul (var x) (pow (var y) 3)))))"


def write_json(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


class TestCatalogList:
    def test_lists_every_entry(self, capsys):
        """Default listing holds at least the base seed, branched, families and Liouville entries"""
        code, out = run(capsys, "catalog", "list")
        assert code == 0
        assert len(json.loads(out)) >= 11

    def test_tag_filter(self, capsys):
        """fast1d lists the four one-dimensional families"""
        code, out = run(capsys, "catalog", "list", "--tag", "fast1d")
        assert code == 0
        assert len(json.loads(out)) == 4

    def test_unknown_tag(self, capsys):
        """Unknown tag prints an empty list and exits 0"""
        code, out = run(capsys, "catalog", "list", "--tag", "none")
        assert code == 0
        assert json.loads(out) == []


class TestConstruct:
    def setup_method(self):
        """Points shared by the pointwise comparisons"""
        rng = np.random.default_rng(17)
        self.pts = {"x": rng.uniform(0.2, 0.7, 20), "y": rng.uniform(0.2, 0.7, 20), "t": rng.uniform(0.2, 2.0, 20)}

    def _compare(self, out, entry_id):
        payload = json.loads(out)
        built = evaluate(parse_sexpr(payload["expression"]), self.pts)
        expected = build_catalog().get(entry_id).field.evaluate_array(self.pts)
        assert np.max(np.abs(built - expected) / (1 + np.abs(expected))) < 1e-10
        return payload

    def test_cubic_branch(self, tmp_path, capsys):
        """z^3 applied to the tan/tanh solution matches the cubic entry"""
        recipe = write_json(tmp_path / "cubic.json", {
            "op": "branch", "seed": "branched.tan_tanh", "pair": {"kind": "monomial", "params": {"n": 3}},
        })
        code, out = run(capsys, "construct", "--recipe", recipe)
        assert code == 0
        payload = self._compare(out, "branched.cubic")
        assert payload["equation_tag"] == "fast2d"
        assert payload["variables"] == ["x", "y", "t"]
        assert any("branch" in note for note in payload["provenance"])

    def test_quartic_reduction(self, tmp_path, capsys):
        """trig_sh composed with 4(x^3 y - x y^3) matches the reduced entry"""
        recipe = write_json(tmp_path / "quartic.json", {"op": "reduce", "seed": "line.trig_sh", "eta": QUARTIC})
        code, out = run(capsys, "construct", "--recipe", recipe)
        assert code == 0
        self._compare(out, "reduced.quartic")

    def test_out_file(self, tmp_path, capsys):
        """--out writes the JSON to a file"""
        recipe = write_json(tmp_path / "quartic.json", {"op": "reduce", "seed": "line.trig_sh", "eta": QUARTIC})
        target = tmp_path / "result.json"
        code, out = run(capsys, "construct", "--recipe", recipe, "--out", str(target))
        assert code == 0 and out == ""
        assert json.loads(target.read_text())["equation_tag"] == "fast2d"

    def test_malformed_json(self, tmp_path, capsys):
        """Broken JSON is a configuration error"""
        path = tmp_path / "broken.json"
        path.write_text("{ not json")
        assert main(["construct", "--recipe", str(path)]) == 2

    def test_invalid_recipe(self, tmp_path, capsys):
        """branch without a pair and a missing file both exit 2"""
        recipe = write_json(tmp_path / "bad.json", {"op": "branch", "seed": "base_seed"})
        assert main(["construct", "--recipe", recipe]) == 2
        assert main(["construct", "--recipe", str(tmp_path / "missing.json")]) == 2

    def test_degenerate_eta(self, tmp_path, capsys):
        """A constant eta exits 3"""
        recipe = write_json(tmp_path / "flat.json", {"op": "reduce", "seed": "line.trig_sh", "eta": "2"})
        assert main(["construct", "--recipe", recipe]) == 3


class TestVerify:
    def test_entry_passes(self, capsys):
        """A catalog entry with defaults exits 0"""
        code, out = run(capsys, "verify", "--id", "liouville.sec", "--samples", "200")
        assert code == 0
        report = json.loads(out)
        assert report["n_evaluated"] > 0
        assert report["n_evaluated"] + report["n_skipped_singular"] + report["n_nonfinite"] == 200

    def test_perturbed_entry_fails(self, capsys):
        """--perturb 0.01 exits 1"""
        code, _ = run(capsys, "verify", "--id", "liouville.sec", "--samples", "200", "--perturb", "0.01")
        assert code == 1

    def test_singular_box(self, capsys):
        """A box inside a singular band exits 3"""
        code, _ = run(capsys, "verify", "--id", "branched.coth_tan", "--samples", "50",
                      "--box", "x=-0.0001:0.0001")
        assert code == 3

    def test_bad_box(self, capsys):
        """A malformed --box is a usage error"""
        assert main(["verify", "--id", "base_seed", "--box", "x=1"]) == 2

    def test_unknown_id(self, capsys):
        """Unknown ids are usage errors"""
        assert main(["verify", "--id", "nope"]) == 2

    def test_finite_differences(self, capsys):
        """--fd verifies with finite-difference derivatives"""
        code, out = run(capsys, "verify", "--id", "line.trig_sh", "--samples", "200", "--fd", "--tol", "1e-4")
        assert code == 0
        assert json.loads(out)["equation"] == "fast1d[fd]"

    def test_recipe_target(self, tmp_path, capsys):
        """Recipes are verified on their own sample box"""
        recipe = write_json(tmp_path / "shift.json", {
            "op": "liouville_shift", "seed": "liouville.sec", "pair": {"kind": "monomial", "params": {"n": 2}},
            "sample": {"box": {"x": [0.2, 0.6], "y": [0.2, 0.6]}, "count": 200, "seed": 3},
        })
        code, out = run(capsys, "verify", "--recipe", recipe)
        assert code == 0
        assert json.loads(out)["seed"] == 3

    def test_deterministic(self, capsys):
        """Same seed, byte-identical report"""
        _, first = run(capsys, "verify", "--id", "branched.cubic", "--samples", "300", "--seed", "11")
        _, second = run(capsys, "verify", "--id", "branched.cubic", "--samples", "300", "--seed", "11")
        assert first == second


class TestSolve:
    def test_non_positive_dt(self, tmp_path, capsys):
        """dt <= 0 is a configuration error"""
        config = write_json(tmp_path / "solve.json", {
            "equation": "fast1d", "reference": "line.trig_sh", "domain": {"eta": [-1.0, 1.0]},
            "grid": [17, 33], "t0": 0.5, "T": 0.6, "dt": 0.0,
        })
        assert main(["solve", "--config", config, "--out-dir", str(tmp_path / "out")]) == 2

    def test_reference_mismatch(self, tmp_path, capsys):
        """A liouville reference cannot drive the 1D solver"""
        config = write_json(tmp_path / "solve.json", {
            "equation": "fast1d", "reference": "liouville.sec", "domain": {"eta": [-1.0, 1.0]}, "grid": 17,
        })
        assert main(["solve", "--config", config, "--out-dir", str(tmp_path / "out")]) == 2

    def test_fast1d_study(self, tmp_path, capsys):
        """1D ladder writes a grid and a report with second-order orders"""
        out_dir = tmp_path / "out"
        config = write_json(tmp_path / "solve.json", {
            "equation": "fast1d", "reference": "line.trig_sh", "domain": {"eta": [-1.0, 1.0]},
            "grid": [17, 33], "t0": 0.5, "T": 0.6,
        })
        code, out = run(capsys, "solve", "--config", config, "--out-dir", str(out_dir))
        assert code == 0
        report = json.loads((out_dir / "convergence_report.json").read_text())
        assert report == json.loads(out)
        assert all(1.7 <= p <= 2.3 for p in report["orders"])
        frame = pd.read_csv(out_dir / "grid.csv")
        assert list(frame.columns) == ["x", "y", "value"]
        assert len(frame) == 33

    def test_single_grid(self, tmp_path, capsys):
        """One 2D grid gives a report without orders"""
        out_dir = tmp_path / "out"
        config = write_json(tmp_path / "solve.json", {
            "equation": "fast2d", "reference": "branched.tan_tanh",
            "domain": {"x": [0.2, 0.8], "y": [-0.5, 0.5]}, "grid": 9, "t0": 0.5, "T": 0.6,
        })
        code, _ = run(capsys, "solve", "--config", config, "--out-dir", str(out_dir))
        assert code == 0
        assert json.loads((out_dir / "convergence_report.json").read_text())["orders"] == []
        assert (out_dir / "grid.csv").read_text().splitlines()[0] == "x,y,value"
        assert len(pd.read_csv(out_dir / "grid.csv")) == 81


class TestOde:
    def test_reduction_report(self, capsys):
        """A = -B reports the reduction check"""
        code, out = run(capsys, "ode", "--A", "1", "--B", "-1")
        assert code == 0
        payload = json.loads(out)
        assert payload["reduction"]["confirmed"] == "direct"
        assert 13.0 < payload["self_convergence_ratio"] < 19.0

    def test_blow_up(self, capsys):
        """A blow-up exits 1 with its location"""
        code, out = run(capsys, "ode", "--A", "0.5", "--B", "0.5", "--f0", "3", "--df0", "10",
                        "--eta-range", "0", "10", "--step", "0.001")
        assert code == 1
        assert json.loads(out)["trajectory"]["blew_up"] is True
