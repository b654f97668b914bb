import io

import numpy as np
import pytest

from dvstrack import cli
from dvstrack.eventio import read_events


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def ball_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim") / "ball.txt"
    assert run("simulate", "ball", "--duration-s", 0.3, "--out", out) == 0
    return out


def test_simulate_writes_events_and_manifest(ball_file):
    stream = read_events(ball_file.read_bytes())
    assert len(stream) > 0
    kv = cli.read_manifest(str(ball_file) + ".manifest")
    assert kv["command"] == "simulate" and kv["scene"] == "ball"
    assert kv["theta"] == "0.1"


def test_simulate_aedat_matches_text(tmp_path, ball_file):
    out = tmp_path / "ball.aedat"
    assert run("simulate", "ball", "--duration-s", 0.3, "--format", "aedat", "--out", out) == 0
    a = read_events(out.read_bytes())
    b = read_events(ball_file.read_bytes())
    assert np.array_equal(a.t, b.t) and np.array_equal(a.x, b.x) and np.array_equal(a.p, b.p)


def test_track_output_format(tmp_path, ball_file):
    out = tmp_path / "traj.csv"
    assert run("track", "--input", ball_file, "--bbox", "33,90,15,15", "--out", out,
               "--render", tmp_path / "frames") == 0
    lines = out.read_text().splitlines()
    assert lines[0] == cli.TRAJECTORY_HEADER
    recs = cli.parse_trajectory(out.read_bytes())
    assert len(recs) == 30
    assert recs[0].bbox == (33, 90, 15, 15)
    ppm = (tmp_path / "frames" / "bin_00000.ppm").read_bytes()
    assert ppm.startswith(b"P6\n128 128\n255\n")
    assert len(ppm) == len(b"P6\n128 128\n255\n") + 128 * 128 * 3
    assert len(list((tmp_path / "frames").iterdir())) == 30


def test_render_ppm_box_outline():
    from dvstrack.events import SpikeCountFrame
    from dvstrack.tracker import BoundingBox

    frame = SpikeCountFrame(np.zeros((10, 12), dtype=np.int64), 0, 0)
    data = cli.render_ppm(frame, BoundingBox(2, 3, 4, 5))
    header = b"P6\n12 10\n255\n"
    rgb = np.frombuffer(data[len(header):], dtype=np.uint8).reshape(10, 12, 3)
    red = (rgb == [255, 0, 0]).all(axis=2)
    assert red.sum() == 2 * 4 + 2 * 5 - 4
    assert red[3, 2] and red[7, 5] and not red[5, 3]


def test_replay_is_byte_identical(tmp_path, ball_file):
    out = tmp_path / "traj.csv"
    assert run("track", "--input", ball_file, "--bbox", "33,90,15,15", "--out", out) == 0
    again = tmp_path / "again.csv"
    assert run("replay", str(out) + ".manifest", "--out", again) == 0
    assert out.read_bytes() == again.read_bytes()

    sim2 = tmp_path / "sim2.txt"
    assert run("replay", str(ball_file) + ".manifest", "--out", sim2) == 0
    assert sim2.read_bytes() == ball_file.read_bytes()


def test_bench_reports(ball_file, capsys):
    assert run("bench", "--input", ball_file, "--bbox", "33,90,15,15", "--reps", 1) == 0
    kv = dict(line.split("=") for line in capsys.readouterr().out.split())
    assert int(kv["bins"]) == 30
    assert float(kv["bins_per_second"]) > 0
    assert float(kv["data_reduction_ratio"]) == pytest.approx(float(kv["mean_events_per_bin"]) / 128**2, rel=1e-5)


def test_missing_input_exit_2(tmp_path, capsys):
    assert run("track", "--input", tmp_path / "nope.txt", "--bbox", "1,1,5,5", "--out", tmp_path / "o") == 2
    assert "nope.txt" in capsys.readouterr().err


def test_malformed_input_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("t_us,x,y,p\n0,1,2,7\n")
    assert run("track", "--input", bad, "--bbox", "1,1,5,5", "--out", tmp_path / "o") == 2
    assert "line 2" in capsys.readouterr().err


def test_empty_stream_exit_4(tmp_path):
    empty = tmp_path / "empty.txt"
    empty.write_text("t_us,x,y,p\n")
    assert run("track", "--input", empty, "--bbox", "1,1,5,5", "--out", tmp_path / "o") == 4


def test_unwritable_output_exit_3(tmp_path, ball_file):
    out = tmp_path / "missing_dir" / "traj.csv"
    assert run("track", "--input", ball_file, "--bbox", "33,90,15,15", "--out", out) == 3
    assert not out.exists()


def test_bad_bbox_exit_2(tmp_path, ball_file):
    assert run("track", "--input", ball_file, "--bbox", "120,120,15,15", "--out", tmp_path / "o") == 2
    with pytest.raises(SystemExit) as exc:
        run("track", "--input", ball_file, "--bbox", "1,2,3", "--out", tmp_path / "o")
    assert exc.value.code == 2


def test_invalid_scene_exit_2(tmp_path):
    assert run("simulate", "ball", "--radius", 100, "--out", tmp_path / "x.txt") == 2


def test_no_partial_file_on_failure(tmp_path, monkeypatch):
    out = tmp_path / "f.bin"
    out.write_bytes(b"old")

    real_fdopen = cli.os.fdopen

    class Failing(io.RawIOBase):
        def __init__(self, fd, mode):
            self.fh = real_fdopen(fd, mode)

        def write(self, data):
            raise OSError(28, "No space left on device")

        def __exit__(self, *a):
            self.fh.close()

    monkeypatch.setattr(cli.os, "fdopen", lambda fd, mode: Failing(fd, mode))
    with pytest.raises(cli.CliError) as exc:
        cli.atomic_write(out, b"new contents")
    assert exc.value.status == 3
    assert out.read_bytes() == b"old"
    assert [p.name for p in tmp_path.iterdir()] == ["f.bin"]
