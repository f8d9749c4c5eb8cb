import io
import json
import os
import socket
import subprocess
import sys
import time

import pytest

from cosentinel.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def frames(tmp_path, capsys):
    path = tmp_path / "frames.txt"
    assert main(["simulate", "--sigma", "0", "--out", str(path)]) == 0
    capsys.readouterr()
    return path


class TestClassify:
    def test_very_dangerous(self, capsys):
        code, out, _ = run(["classify", "89.79"], capsys)
        assert code == 0
        assert out.splitlines() == [
            "VeryDanger15",
            "Very dangerous if inhalation of more than 15 minutes, will make it difficult to breathe",
            "0 min",
        ]

    def test_safe(self, capsys):
        code, out, _ = run(["classify", "8"], capsys)
        assert code == 0 and out.splitlines()[0] == "Safe" and out.splitlines()[2] == "480 min"

    @pytest.mark.parametrize("arg", ["-3", "nan", "abc", "inf"])
    def test_invalid(self, arg, capsys):
        code, out, err = run(["classify", arg], capsys)
        assert code == 2
        assert out == ""
        assert "usage:" in err


class TestUsage:
    @pytest.mark.parametrize("argv", [
        [],
        ["frobnicate"],
        ["report"],
        ["report", "--store", "x", "--bogus"],
        ["report", "--store", "x", "--format", "xml"],
        ["report", "--store", "x", "--recommend-min-band", "Dangerous"],
        ["ingest", "--store", "x"],
        ["ingest", "--store", "x", "--in", "a", "--listen", "9"],
        ["simulate", "--days", "0"],
        ["simulate", "--sigma", "-1"],
        ["simulate", "--per-bucket", "zero"],
        ["simulate", "--start-date", "March"],
    ])
    def test_exit_2(self, argv, capsys):
        code, out, err = run(argv, capsys)
        assert code == 2
        assert out == ""
        assert "usage:" in err

    def test_bad_tz_env(self, monkeypatch, frames, tmp_path, capsys):
        monkeypatch.setenv("COSENTINEL_TZ_OFFSET_MIN", "seven")
        code, _, err = run(["ingest", "--in", str(frames), "--store", str(tmp_path / "s.jsonl")], capsys)
        assert code == 2 and "COSENTINEL_TZ_OFFSET_MIN" in err


class TestOperationalErrors:
    def test_missing_store(self, tmp_path, capsys):
        code, out, err = run(["report", "--store", str(tmp_path / "none.jsonl")], capsys)
        assert code == 1 and out == "" and "not found" in err

    def test_missing_input(self, tmp_path, capsys):
        code, _, err = run(["ingest", "--in", str(tmp_path / "none"), "--store", str(tmp_path / "s")], capsys)
        assert code == 1

    def test_bad_sites_file(self, tmp_path, frames, capsys):
        sites = tmp_path / "sites.csv"
        sites.write_text("site_id,name,lat,lng\nA,a,0,0\nA,a,0,0\n")
        code, _, err = run(["ingest", "--in", str(frames), "--sites", str(sites),
                            "--store", str(tmp_path / "s.jsonl")], capsys)
        assert code == 1 and "duplicate" in err

    def test_empty_registry_for_ingest(self, tmp_path, frames, capsys):
        sites = tmp_path / "sites.csv"
        sites.write_text("site_id,name,lat,lng\n")
        code, _, err = run(["ingest", "--in", str(frames), "--sites", str(sites),
                            "--store", str(tmp_path / "s.jsonl")], capsys)
        assert code == 1 and "empty" in err


class TestPipeline:
    def test_simulate_ingest_report(self, frames, tmp_path, capsys):
        store = tmp_path / "s.jsonl"
        code, out, err = run(["ingest", "--in", str(frames), "--store", str(store)], capsys)
        assert code == 0 and out == ""
        assert "accepted=450 rejected=0" in err
        code, out, _ = run(["report", "--store", str(store)], capsys)
        assert code == 0
        assert "49.59656" in out
        assert "SITE-BINTANGALAM, SITE-UNSIKA, SITE-SKYBRIDGE, SITE-UBP" in out

    def test_report_csv_and_figure(self, frames, tmp_path, capsys):
        store = tmp_path / "s.jsonl"
        main(["ingest", "--in", str(frames), "--store", str(store)])
        fig = tmp_path / "report.png"
        out_csv = tmp_path / "report.csv"
        code, out, _ = run(["report", "--store", str(store), "--format", "csv", "--out", str(out_csv),
                            "--figure", str(fig), "--recommend-min-band", "VeryDanger15"], capsys)
        assert code == 0 and out == ""
        text = out_csv.read_text()
        assert text.startswith("site_id,bucket,mean_ppm,count,band,description\n")
        assert "Afternoon,49.59656,5,Danger30Heart" in text
        assert text.rstrip().endswith("SITE-BINTANGALAM,VeryDanger15")
        assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_export_geojson(self, frames, tmp_path, capsys):
        store = tmp_path / "s.jsonl"
        main(["ingest", "--in", str(frames), "--store", str(store)])
        out = tmp_path / "map.geojson"
        code, _, _ = run(["export-geojson", "--store", str(store), "--out", str(out)], capsys)
        assert code == 0
        doc = json.loads(out.read_text())
        assert len(doc["features"]) == 5

    def test_stdin_route_matches_file_route(self, frames, tmp_path, capsys, monkeypatch):
        main(["ingest", "--in", str(frames), "--store", str(tmp_path / "a.jsonl")])
        monkeypatch.setattr(sys, "stdin", io.TextIOWrapper(io.BytesIO(frames.read_bytes())))
        assert main(["ingest", "--in", "-", "--store", str(tmp_path / "b.jsonl")]) == 0
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_simulate_stdout(self, frames, capsys):
        code, out, _ = run(["simulate", "--sigma", "0"], capsys)
        assert code == 0
        assert out == frames.read_text()

    def test_seeded_noise_reproducible(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--seed", "9", "--days", "2", "--per-bucket", "3", "--out", str(a)])
        main(["simulate", "--seed", "9", "--days", "2", "--per-bucket", "3", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()
        assert len(a.read_text().splitlines()) == 5 * 3 * 2 * 3

    def test_tz_env_fallback(self, tmp_path, monkeypatch, capsys):
        # simulate at UTC+7, ingest at UTC: every reading shifts out of its window or bucket
        main(["simulate", "--sigma", "0", "--days", "1", "--out", str(tmp_path / "f")])
        monkeypatch.setenv("COSENTINEL_TZ_OFFSET_MIN", "0")
        main(["ingest", "--in", str(tmp_path / "f"), "--store", str(tmp_path / "s.jsonl")])
        buckets = {json.loads(line)["bucket"] for line in (tmp_path / "s.jsonl").read_text().splitlines()}
        assert "Other" in buckets


def test_real_pipe(tmp_path):
    env = dict(os.environ)
    sim = subprocess.run([sys.executable, "-m", "cosentinel", "simulate", "--sigma", "0", "--out", "-"],
                         capture_output=True, check=True, env=env)
    ing = subprocess.run([sys.executable, "-m", "cosentinel", "ingest", "--in", "-",
                          "--store", str(tmp_path / "pipe.jsonl")],
                         input=sim.stdout, capture_output=True, env=env)
    assert ing.returncode == 0, ing.stderr
    (tmp_path / "frames").write_bytes(sim.stdout)
    subprocess.run([sys.executable, "-m", "cosentinel", "ingest", "--in", str(tmp_path / "frames"),
                    "--store", str(tmp_path / "file.jsonl")], check=True, env=env, capture_output=True)
    assert (tmp_path / "pipe.jsonl").read_bytes() == (tmp_path / "file.jsonl").read_bytes()


def test_listen(tmp_path, frames):
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    store = tmp_path / "net.jsonl"
    proc = subprocess.Popen([sys.executable, "-m", "cosentinel", "ingest", "--listen", str(port),
                             "--max-connections", "2", "--store", str(store)],
                            stderr=subprocess.PIPE)
    try:
        lines = frames.read_bytes().splitlines(keepends=True)
        deadline = time.time() + 10
        while True:
            try:
                conn = socket.create_connection(("127.0.0.1", port))
                break
            except ConnectionRefusedError:
                if time.time() > deadline:
                    raise
                time.sleep(0.05)
        with conn:
            conn.sendall(b"".join(lines[:200]))
        with socket.create_connection(("127.0.0.1", port)) as conn:
            conn.sendall(b"".join(lines[200:]))
        _, err = proc.communicate(timeout=20)
    finally:
        proc.kill()
    assert proc.returncode == 0
    assert b"accepted=450 rejected=0" in err
    assert len(store.read_text().splitlines()) == 450
