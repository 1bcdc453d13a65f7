import json

import numpy as np
import pytest

from qzeno.convergence import refine, rung_config
from qzeno.model import recurrence_time
from qzeno.scenario import ScenarioConfig, preset


def tiny(**kw):
    base = dict(name="tiny", n_k=20, n_w=4, eta_peak=0.2, t_end=30.0)
    base.update(kw)
    return ScenarioConfig(**base)


@pytest.mark.parametrize("density,rng", [((1,), (1,)), ((2,), (1,)), ((), ())])
def test_ladder_needs_two_rungs(density, rng):
    with pytest.raises(ValueError):
        refine(tiny(), density, rng)


def test_ladder_rejects_coarsening_and_mismatch():
    with pytest.raises(ValueError):
        refine(tiny(), (1, 0.5))
    with pytest.raises(ValueError):
        refine(tiny(), (1, 2, 4), (1, 2))


def test_density_rung_doubles_recurrence_time():
    base = preset("fig3-a")
    r = rung_config(base, 1, 2)
    assert (r.n_k, r.n_w) == (200, 200)
    assert r.k_max == base.k_max
    assert r.recurrence_time == pytest.approx(2 * base.recurrence_time)
    assert base.recurrence_time == pytest.approx(314.159, abs=1e-2)
    assert r.kernel_amplitude == pytest.approx(base.kernel_amplitude / 2)
    assert r.t_end is None


def test_range_rung_keeps_spacing():
    base = tiny()
    r = rung_config(base, 2, 1)
    assert r.photon_grid.spacing == pytest.approx(base.photon_grid.spacing)
    assert r.photon_grid.bandwidth == pytest.approx(2 * base.photon_grid.bandwidth)
    assert r.k_min == base.k_min
    assert r.t_end == base.t_end


def test_report_structure():
    report = refine(tiny(t_end=30.0), (1, 2))
    assert [r.density_factor for r in report.rungs] == [1, 2]
    for r in report.rungs:
        assert r.recurrence_time == pytest.approx(2 * np.pi / r.spacing)
        assert r.status == "ok"
        assert r.max_norm_drift < 1e-8
    data = json.loads(report.to_json())
    assert len(data["deviations"]) == 1
    # the plateau window lies beyond t_end, so there is nothing to compare
    assert not report.passed


def test_failed_rung_is_reported():
    # stable for the base band, unstable once the band doubles
    report = refine(tiny(dt=0.15, t_end=0.3), (1,), (1, 2))
    assert [r.status for r in report.rungs] == ["ok", "failed"]
    assert "dt" in report.rungs[1].error
    assert not report.passed


def test_transient_tracks_bandwidth():
    """Transient duration is ~1/bandwidth within a factor of 2 across a range ladder."""
    report = refine(preset("ks-fig2-eta10").replace(t_end=10.0), (1,), (1, 2))
    times = [r.transient_time for r in report.rungs]
    for r in report.rungs:
        assert 0.5 <= r.transient_time * r.bandwidth <= 2.0
    assert times[1] < times[0]


@pytest.mark.slow
def test_range_ladder_plateau_shift():
    report = refine(preset("ks-fig2-eta10"), (1,), (1, 2))
    assert all(r.status == "ok" for r in report.rungs)
    assert report.final_deviation < 0.01


@pytest.mark.slow
@pytest.mark.acceptance
def test_density_ladder_stabilizes(runs):
    report = runs.density_ladder()
    d = report.deviations
    assert all(b <= 1.1 * a for a, b in zip(d, d[1:]))
    assert report.final_deviation < 0.01
