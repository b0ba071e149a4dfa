import math
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest

from src.domain.errors import MissingArtifactError
from src.domain.models import SimResult
from src.infrastructure.config import load_config, parse_config, settings
from src.services.experiment_service import (
    CompareReport,
    SweepReport,
    compare,
    selection_heatmap,
    solve,
    sweep,
    train_agent,
)


def _result(protocol, seed, fnd, control=0, counts=None):
    r = SimResult(protocol=protocol, seed=seed, n_nodes=2)
    r.fnd, r.hnd, r.lnd = fnd, fnd, fnd
    r.total_control_packets = control
    r.ch_selection_count = counts or [0, 0]
    return r


class TestReports:

    def test_medians_ignore_unset_values(self):
        report = CompareReport({"leach": [_result("leach", 0, 10), _result("leach", 1, None), _result("leach", 2, 30)]})
        m = report.medians()["leach"]
        assert m["fnd"] == 20.0
        assert m["seeds"] == [0, 1, 2]

    def test_medians_all_unset(self):
        m = CompareReport({"x": [_result("x", 0, None)]}).medians()["x"]
        assert m["fnd"] is None

    def test_selection_heatmap_orientation(self):
        field = SimpleNamespace(x=np.array([10.0, 90.0]), y=np.array([10.0, 90.0]))
        grid = selection_heatmap([_result("p", 0, 1, counts=[2, 6])], [field], 100.0, 2)
        # row 0 is the top of the field
        assert grid.tolist() == [[0.0, 6.0], [2.0, 0.0]]

    def test_selection_heatmap_bins_each_seed_on_its_own_field(self):
        first = SimpleNamespace(x=np.array([10.0, 90.0]), y=np.array([10.0, 90.0]))
        second = SimpleNamespace(x=np.array([90.0, 10.0]), y=np.array([10.0, 90.0]))
        runs = [_result("p", 0, 1, counts=[2, 6]), _result("p", 1, 1, counts=[4, 0])]
        grid = selection_heatmap(runs, [first, second], 100.0, 2)
        # seed 1 node 1 sits bottom-right; bottom-left only holds seed 0 node 1
        assert grid.tolist() == [[0.0, 3.0], [1.0, 2.0]]

    def test_sweep_projection_and_best(self):
        report = SweepReport(rows=[(0.0, 0.0, 1.0, 0, 10), (0.0, 0.0, 2.0, 0, 30), (0.0, 5.0, 1.0, 0, None)])
        grid = report.projection("alpha", "beta", {"alpha": [0.0], "beta": [0.0, 5.0], "gamma": [1.0, 2.0]})
        assert grid[0, 0] == 20.0
        assert math.isnan(grid[0, 1])
        assert report.best() == (0.0, 0.0, 2.0, 0, 30)

    def test_sweep_rows_carry_the_metric(self):
        report = SweepReport(rows=[(0.0, 5.0, 1.0, 2, 44)], metric="hnd")
        assert report.csv_rows() == [[0.0, 5.0, 1.0, 2, "hnd", 44]]


class TestTrainingEntryPoints:

    def test_surrogate_backend_needs_models(self, tmp_path):
        exp = parse_config(
            '[network]\nn_nodes = 10\nk_fraction = 0.2\n[surrogate]\nbackend = "surrogate"\n'
            f'[paths]\nsurrogate_dir = "{tmp_path / "missing"}"\n'
        )
        with pytest.raises(MissingArtifactError, match="train-surrogate"):
            train_agent(exp, tmp_path / "out")

    def test_solve_defaults_k_from_alive_count(self, tmp_path):
        exp = parse_config("[network]\nn_nodes = 10\nk_fraction = 0.2\n")
        state = tmp_path / "s.csv"
        state.write_text("id,x,y,energy\n" + "".join(f"{i},{i * 9},{i * 7 % 100},0.5\n" for i in range(1, 11)))
        sol = solve(exp, state)
        assert len(sol.chs) == 2
        sol.validate(range(1, 11))


REFERENCE_CONFIG = Path(__file__).resolve().parents[2] / "config" / "reference.toml"


@pytest.fixture(scope="module")
def reference_exp(tmp_path_factory):
    out = tmp_path_factory.mktemp("reference")
    exp = load_config(REFERENCE_CONFIG)
    paths = exp.paths.model_copy(update={"policy": str(out / "agent" / "policy.npz")})
    return exp.model_copy(update={"paths": paths}), out


@pytest.fixture(scope="module")
def reference_comparison(reference_exp):
    exp, out = reference_exp
    train_agent(exp, out / "agent")
    return compare(exp, exp.compare.seeds, out / "compare", settings.worker_count())


@pytest.mark.slow
class TestReferenceReproduction:
    """Ten-seed runs of the reference scenario with a 50k-step agent."""

    def test_lifetime_ordering(self, reference_comparison):
        medians = reference_comparison.medians()
        leach, leach_c, rlc = (medians[p]["fnd"] for p in ("leach", "leach-c", "leach-rlc"))
        assert rlc >= leach_c >= leach
        assert 600 <= leach <= 900
        assert 750 <= leach_c <= 1050
        assert 800 <= rlc <= 1100

    def test_control_overhead_per_seed(self, reference_comparison):
        results = reference_comparison.results
        assert all(r.total_control_packets == 0 for r in results["leach"])
        by_seed = {r.seed: r.total_control_packets for r in results["leach-c"]}
        for r in results["leach-rlc"]:
            assert r.total_control_packets < by_seed[r.seed], f"seed {r.seed}"

    def test_sweep_trends(self, reference_exp):
        exp, out = reference_exp
        report = sweep(exp, out / "sweep", settings.worker_count())
        assert report.metric == "fnd"
        assert len(report.rows) == 125

        def mean_fnd(keep):
            return float(np.mean([r[4] for r in report.rows if keep(r) and r[4] is not None]))

        assert mean_fnd(lambda r: r[1] < 30) > mean_fnd(lambda r: r[1] >= 30)
        assert mean_fnd(lambda r: r[0] > 20) > mean_fnd(lambda r: r[0] <= 20)
