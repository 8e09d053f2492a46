import csv
import io
import json
import math

import numpy as np
import pytest

from mechent.exceptions import ParameterError
from mechent.params import REF_KAPPA, REF_MECH_FREQ, PhysicalParams, ReducedParams, thermal_occupancy
from mechent.pipeline import evaluate
from mechent.sweep import (
    PRESET_IDS,
    RESULT_COLUMNS,
    Axis,
    SweepSpec,
    figure_preset,
    reproduce_figure,
    resolve_fields,
    run_sweep,
)

BASE = ReducedParams.symmetric(cooperativity=62.5, squeezing=1.0, occupancy=0.5)


class TestAxis:
    @pytest.mark.parametrize("kw", [dict(count=1), dict(min=1.0, max=1.0),
                                    dict(min=2.0, max=1.0), dict(scale="log", min=0.0),
                                    dict(scale="cubic"), dict(count=2.5)])
    def test_rejects(self, kw):
        with pytest.raises(ParameterError):
            Axis("squeezing", **kw)

    def test_log_grid(self):
        g = Axis("cooperativity", 1.0, 100.0, 3, "log").grid()
        np.testing.assert_allclose(g, [1.0, 10.0, 100.0])

    def test_explicit_values(self):
        assert Axis("squeezing", values=[0, 1]).grid().tolist() == [0.0, 1.0]


class TestSpec:
    def test_unknown_axis(self):
        with pytest.raises(ParameterError):
            SweepSpec(BASE, (Axis("colour"),))

    def test_axis_count(self):
        with pytest.raises(ParameterError):
            SweepSpec(BASE, ())
        ax = Axis("squeezing")
        with pytest.raises(ParameterError):
            SweepSpec(BASE, (ax, Axis("gain_ratio"), Axis("occupancy")))
        with pytest.raises(ParameterError):
            SweepSpec(BASE, (ax, ax))

    def test_unknown_column(self):
        with pytest.raises(ParameterError):
            SweepSpec(BASE, (Axis("squeezing"),), columns=("E_N", "colour"))

    def test_negative_values_rejected(self):
        spec = SweepSpec(BASE, (Axis("squeezing", -1.0, 1.0, 5),))
        with pytest.raises(ParameterError):
            resolve_fields(spec)

    def test_physical_axis(self):
        base = PhysicalParams.symmetric(squeezing=1.0, temperature=42e-6)
        spec = SweepSpec(base, (Axis("power", 0.1e-3, 0.3e-3, 3),))
        table = run_sweep(spec)
        assert table.data["stable"].all()
        ref = evaluate(base.replace(power1=0.3e-3, power2=0.3e-3)).log_negativity
        assert table.data["E_N"][-1] == pytest.approx(ref, rel=1e-9)

    def test_temperature_axis_reduced(self):
        spec = SweepSpec(BASE, (Axis("temperature", values=(42e-6,)),))
        flds, _ = resolve_fields(spec)
        assert flds["n1"][0] == pytest.approx(thermal_occupancy(REF_MECH_FREQ, 42e-6))


def test_matches_pointwise():
    spec = SweepSpec(BASE, (Axis("gain_ratio", 0.0, 0.45, 4), Axis("pump_phase_pi", 0.0, 1.0, 3)))
    table = run_sweep(spec)
    en = table.grid("E_N")
    for i, g in enumerate(spec.axes[0].grid()):
        for j, t in enumerate(spec.axes[1].grid()):
            p = BASE.replace(gain=g * REF_KAPPA, pump_phase=t * math.pi)
            assert en[i, j] == pytest.approx(evaluate(p).log_negativity, rel=1e-9, abs=1e-14)


def test_stability_masking():
    spec = SweepSpec(BASE, (Axis("gain_ratio", 0.3, 0.7, 41),))
    table = run_sweep(spec)
    st = table.data["stable"]
    assert st.any() and not st.all()
    assert np.isnan(table.data["E_N"][~st]).all()
    assert np.isfinite(table.data["E_N"][st]).all()
    for row in csv.reader(l for l in table.to_csv().splitlines() if not l.startswith("#")):
        if row[1] == "false":
            assert row[RESULT_COLUMNS.index("E_N") + 1] == ""
            assert row[RESULT_COLUMNS.index("entangled") + 1] == ""


def test_empty_stable_region_warns():
    spec = SweepSpec(BASE, (Axis("gain_ratio", 0.6, 0.7, 3),))
    with pytest.warns(RuntimeWarning):
        table = run_sweep(spec)
    assert table.warnings and "# warning:" in table.to_csv()


def test_csv_format():
    spec = SweepSpec(BASE, (Axis("squeezing", 0.0, 1.0, 3),), columns=("stable", "E_N"))
    text = run_sweep(spec, preset=None).to_csv()
    lines = text.splitlines()
    assert lines[0].startswith("# mechent ")
    prov = json.loads(lines[2][len("# config: "):])
    assert prov["sweep"]["axes"][0]["name"] == "squeezing"
    rows = list(csv.reader(io.StringIO("\n".join(lines[3:]))))
    assert rows[0] == ["squeezing [1]", "stable [bool]", "E_N [nats]"]
    assert len(rows) == 4


def test_deterministic_and_jobs_invariant():
    spec = SweepSpec(BASE, (Axis("gain_ratio", 0.0, 0.55, 30), Axis("squeezing", 0.0, 2.0, 7)))
    a = run_sweep(spec).to_csv()
    assert run_sweep(spec).to_csv() == a
    par = SweepSpec(spec.base, spec.axes, spec.columns, spec.mech_freq, jobs=4)
    b = run_sweep(par).to_csv()
    # only the recorded jobs count differs
    assert a.replace('"jobs": 1', '"jobs": 4') == b


def test_summary():
    s = run_sweep(SweepSpec(BASE, (Axis("gain_ratio", 0.0, 0.45, 10),))).summary()
    assert s["points"] == 10 and s["stable_points"] == 10
    assert s["argmax"]["gain_ratio"] == pytest.approx(0.45)


@pytest.mark.parametrize("fig", PRESET_IDS)
def test_presets_build(fig):
    p = figure_preset(fig, points=5)
    assert p.spec.shape[1] == 5 or p.spec.shape[0] == 5


def test_unknown_preset():
    with pytest.raises(ParameterError):
        figure_preset("fig9")


def test_fig2_fixed_values():
    base = figure_preset("fig2").spec.base
    assert base.cooperativity == pytest.approx(62.5)
    assert base.squeezing == 1.0 and base.n1 == 0.5


@pytest.mark.parametrize("fig", PRESET_IDS)
def test_signatures_small_grid(fig):
    res = reproduce_figure(fig, points=41)
    assert res.checks and res.passed, [c.as_dict() for c in res.checks]
    assert res.summary()["all_passed"]
