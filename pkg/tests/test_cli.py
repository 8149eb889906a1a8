import numpy as np
import pytest

from conftest import assert_slices_close
from taxelfield.cli import main
from taxelfield.fieldio import read_field
from taxelfield.ingest import parse_points
from taxelfield.synthetic import write_points

CONFIG = """\
# tiny city
grid_min_x = -2000
grid_min_y = -2000
grid_max_x = 2000
grid_max_y = 2000
cell_size = 200
slot_duration = 600
horizon_start = 1351814400
horizon_end = 1351818000
bandwidth = 400
fleet_size = 6
duration = 3000
interval = 30
extent = 1500
"""


@pytest.fixture
def work(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(CONFIG)
    out = tmp_path / "out"
    assert main(["gen", "--config", str(cfg), "--out", str(out), "--seed", "7"]) == 0
    return cfg, out


def _run(cfg, out, *args):
    return main([args[0], "--config", str(cfg), "--out", str(out), *args[1:]])


def test_build_writes_expected_slices(work, capsys):
    cfg, out = work
    assert _run(cfg, out, "build", "--input", str(out / "points.csv")) == 0
    field = read_field(out / "field.vkdf")
    assert len(field) == 6  # one hour in 10 minute slots
    assert not all(sl.is_zero() for sl in field)
    summary = (out / "build_summary.txt").read_text()
    assert "slices = 6" in summary and "vectors_built = " in summary
    assert "# effective config" in capsys.readouterr().out


def test_missing_input_names_key(work, capsys):
    cfg, out = work
    assert _run(cfg, out, "build") == 1
    assert "input" in capsys.readouterr().err


def test_missing_input_file_is_data_error(work, capsys):
    cfg, out = work
    assert _run(cfg, out, "build", "--input", str(out / "nope.csv")) == 2


def test_zero_cell_size_names_key(work, capsys):
    cfg, out = work
    code = _run(cfg, out, "build", "--input", str(out / "points.csv"), "--set", "cell_size=0")
    assert code == 1
    assert "cell_size" in capsys.readouterr().err


def test_unknown_key_and_bad_usage(work, capsys):
    cfg, out = work
    assert _run(cfg, out, "build", "--set", "cel_size=5") == 1
    assert "cel_size" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_update_with_empty_corpus_is_byte_identical(work, tmp_path):
    cfg, out = work
    assert _run(cfg, out, "build", "--input", str(out / "points.csv")) == 0
    before = (out / "field.vkdf").read_bytes()
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert _run(cfg, out, "update", "--input", str(empty)) == 0
    assert (out / "field.vkdf").read_bytes() == before


def test_build_then_update_equals_union_build(work, tmp_path):
    cfg, out = work
    points, _ = parse_points((out / "points.csv").read_bytes())
    cut = np.median(points.timestamp)
    parts = {}
    for name, mask in (("a", points.timestamp < cut), ("b", points.timestamp >= cut)):
        path = tmp_path / f"{name}.csv"
        with open(path, "w", newline="") as fh:
            write_points(points[np.flatnonzero(mask)], fh)
        parts[name] = path
    inc, full = tmp_path / "inc", tmp_path / "full"
    assert _run(cfg, inc, "build", "--input", str(parts["a"])) == 0
    assert _run(cfg, inc, "update", "--input", str(parts["b"])) == 0
    assert _run(cfg, full, "build", "--input", str(out / "points.csv")) == 0
    a, b = read_field(inc / "field.vkdf"), read_field(full / "field.vkdf")
    assert len(a) == len(b)
    for x, y in zip(a, b):
        assert_slices_close(x, y)
        assert x.contributing_vector_count == y.contributing_vector_count


def test_update_refuses_mismatched_bandwidth(work, capsys):
    cfg, out = work
    assert _run(cfg, out, "build", "--input", str(out / "points.csv")) == 0
    before = (out / "field.vkdf").read_bytes()
    code = _run(cfg, out, "update", "--input", str(out / "points.csv"), "--set", "bandwidth=500")
    assert code == 1
    err = capsys.readouterr().err
    assert "stored=400.0" in err and "configured=500.0" in err
    assert (out / "field.vkdf").read_bytes() == before


def test_project_zero_field(work, tmp_path):
    cfg, out = work
    quiet = tmp_path / "quiet.csv"
    quiet.write_text("vehicle_id,timestamp,lon,lat,status\n")
    assert _run(cfg, out, "build", "--input", str(quiet)) == 0
    assert _run(cfg, out, "project", "--poi", "hub,0,0") == 0
    files = sorted(p.name for p in out.iterdir() if p.name.startswith(("profile_", "delay_")))
    assert files == ["delay_hub.csv", "profile_hub.csv"]
    rows = [l for l in (out / "profile_hub.csv").read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == "slot_index,slot_start,inbound,outbound,net"
    assert all(r.split(",")[2:] == ["0.0", "0.0", "0.0"] for r in rows[1:])
    delay = [l for l in (out / "delay_hub.csv").read_text().splitlines() if not l.startswith("#")]
    assert delay[1].endswith(",undefined")


def test_project_five_pois_and_config_echo(work):
    cfg, out = work
    assert _run(cfg, out, "build", "--input", str(out / "points.csv")) == 0
    pois = [f"p{k},{100 * k},{-50 * k}" for k in range(5)]
    args = ["project"] + [a for p in pois for a in ("--poi", p)]
    assert _run(cfg, out, *args) == 0
    profiles = sorted(out.glob("profile_*.csv"))
    assert len(profiles) == 5
    text = profiles[0].read_text()
    assert "# bandwidth = 400.0" in text and "# cell_size = 200.0" in text


def test_project_without_poi_fails(work, capsys):
    cfg, out = work
    assert _run(cfg, out, "build", "--input", str(out / "points.csv")) == 0
    assert _run(cfg, out, "project") == 1
    assert "poi" in capsys.readouterr().err


def test_project_corrupt_field_is_data_error(work):
    cfg, out = work
    (out / "field.vkdf").write_bytes(b"\x01\x00\x00\x00JUNK")
    assert _run(cfg, out, "project", "--poi", "a,0,0") == 2


def test_end_to_end_determinism(work, tmp_path):
    cfg, _ = work
    d = tmp_path / "run"
    outputs = []
    for _ in range(2):
        assert main(["gen", "--config", str(cfg), "--out", str(d), "--seed", "3"]) == 0
        assert _run(cfg, d, "build", "--input", str(d / "points.csv")) == 0
        assert _run(cfg, d, "project", "--poi", "a,10,20") == 0
        assert _run(cfg, d, "baseline", "--input", str(d / "points.csv"), "--poi", "a,10,20") == 0
        outputs.append([(d / n).read_bytes() for n in
                        ("points.csv", "field.vkdf", "profile_a.csv", "delay_a.csv", "baseline_a.csv")])
    assert outputs[0] == outputs[1]


def test_bench_writes_reports(work):
    cfg, out = work
    code = _run(cfg, out, "bench", "--input", str(out / "points.csv"), "--poi", "a,0,0",
                "--set", "repetitions=3")
    assert code == 0
    kv = (out / "bench_report.txt").read_text()
    assert "speedup = " in kv and "projection_samples = " in kv
    assert (out / "bench_report.csv").read_text().startswith("measurement,repetition,seconds")
