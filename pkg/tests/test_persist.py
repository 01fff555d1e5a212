import random
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given

from strategies import traces
from tiletuner.harness import Budget, EvalRecord, SyntheticObjective, TuningTrace, run_tuning
from tiletuner.persist import (
    TraceParseError,
    best_of,
    format_config,
    parse_config,
    parse_trace,
    read_trace,
    render_summary,
    render_trace,
    summarize,
    write_trace,
)
from tiletuner.plots import plot_min, plot_trace, render_min_plot, render_trace_plot
from tiletuner.space import build_space

LU_LARGE = build_space("lu", "large")
SVG = "{http://www.w3.org/2000/svg}"


def synthetic_trace(kind="grid", n=100, seed=0):
    return run_tuning(kind, LU_LARGE, SyntheticObjective(LU_LARGE), Budget(n), seed,
                      simulated_clock=True, reproducible=True)


def make_trace(runtimes, tuner="random"):
    best, recs = float("inf"), []
    for i, rt in enumerate(runtimes):
        best = min(best, rt)
        recs.append(EvalRecord(i, (i + 1, 1), rt, float(i), best))
    return TuningTrace("lu", "large", tuner, 0, recs, float(len(runtimes)))


def test_config_fields():
    assert format_config((40, 50)) == "P0=40|P1=50"
    assert parse_config("P0=40|P1=50") == (40, 50)
    with pytest.raises(ValueError):
        parse_config("P1=40")


def test_roundtrip_file(tmp_path):
    tr = synthetic_trace()
    write_trace(tr, tmp_path / "t.csv")
    assert read_trace(tmp_path / "t.csv") == tr


def test_roundtrip_empty(tmp_path):
    tr = TuningTrace("mm3", "mini", "bayesopt", 3)
    write_trace(tr, tmp_path / "e.csv")
    assert read_trace(tmp_path / "e.csv") == tr


def test_byte_stable(tmp_path):
    tr = synthetic_trace("bayesopt")
    a = write_trace(tr, tmp_path / "a.csv").read_bytes()
    b = write_trace(read_trace(tmp_path / "a.csv"), tmp_path / "b.csv").read_bytes()
    assert a == b


def test_trace_columns():
    text = render_trace(make_trace([2.0, 1.0]))
    rows = [l for l in text.splitlines() if not l.startswith("#")]
    assert rows[0] == "eval_index,config,runtime_s,elapsed_s,best_so_far_s,status"
    assert rows[1] == "0,P0=1|P1=1,2,0,2,ok"


@given(traces())
def test_roundtrip_property(tr):
    assert parse_trace(render_trace(tr)) == tr


def test_parse_error_line_numbers():
    good = render_trace(make_trace([3.0, 2.0])).splitlines()
    bad = good.copy()
    bad[-1] = "1,P0=2|P1=1,oops,1,2,ok"
    with pytest.raises(TraceParseError) as exc:
        parse_trace("\n".join(bad))
    assert exc.value.lineno == len(bad)
    with pytest.raises(TraceParseError) as exc:
        parse_trace("not a trace")
    assert exc.value.lineno == 1
    truncated = good[:-1] + ["1,P0=2|P1=1,2"]
    with pytest.raises(TraceParseError):
        parse_trace("\n".join(truncated))


def test_best_of():
    assert best_of(make_trace([4.0])) == ((1, 1), 4.0)
    assert best_of(make_trace([5.0, 4.0, 3.0])) == ((3, 1), 3.0)
    assert best_of(make_trace([2.0, 1.0, 1.0])) == ((2, 1), 1.0)
    with pytest.raises(ValueError):
        best_of(make_trace([]))


def test_best_of_grid_exhaustive():
    tr = synthetic_trace("grid", n=400)
    assert best_of(tr) == ((40, 40), 1.0)


def test_best_of_order_invariant():
    tr = synthetic_trace("random", n=50, seed=2)
    shuffled = TuningTrace(**{**tr.__dict__, "records": random.Random(0).sample(tr.records, 50)})
    assert best_of(shuffled) == best_of(tr)


def test_summarize():
    a = synthetic_trace("random", 30)
    s = summarize([a])
    assert len(s.rows) == 1
    assert s.rows[0].best_runtime_s == min(r.runtime_s for r in a.records)
    s2 = summarize([a, a])
    assert s2.rows[0] == s2.rows[1]
    text = render_summary(s2)
    assert text.count("[random]") == 2 and "evals = 30" in text
    with pytest.raises(ValueError):
        summarize([])


def count_markers(svg):
    root = ET.fromstring(svg)
    return root, len(root.findall(f".//{SVG}circle"))


def test_plot_single_point(tmp_path):
    path = plot_trace([make_trace([1.5])], tmp_path / "p.svg")
    root, markers = count_markers(path.read_text())
    assert markers == 1
    assert len(root.findall(f".//{SVG}g[@class='series']")) == 1


def test_plot_series_per_tuner(tmp_path):
    trs = [synthetic_trace(k, 20) for k in ("random", "grid", "bayesopt")]
    svg = render_trace_plot(trs)
    root, markers = count_markers(svg)
    assert markers == 60
    assert [g.get("data-tuner") for g in root.iter(f"{SVG}g")] == ["random", "grid", "bayesopt"]
    labels = {t.text for t in root.iter(f"{SVG}text")}
    assert {"elapsed time (s)", "runtime (s)"} <= labels
    assert "script" not in svg


def test_plot_min(tmp_path):
    s = summarize([synthetic_trace(k, 20) for k in ("random", "grid")])
    root = ET.fromstring(plot_min(s, tmp_path / "m.svg").read_text())
    bars = root.findall(f".//{SVG}rect[@class='bar']")
    assert [b.get("data-tuner") for b in bars] == ["random", "grid"]


def test_plot_errors(tmp_path):
    with pytest.raises(ValueError):
        render_trace_plot([])
    with pytest.raises(OSError):
        plot_trace([make_trace([1.0])], tmp_path / "missing" / "dir" / "p.svg")
