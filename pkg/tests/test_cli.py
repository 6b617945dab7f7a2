"""Command-line workflows, exit codes, and secret hygiene."""

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from semstego.cli import (
    EXIT_AGENT,
    EXIT_DECODE,
    EXIT_INPUT,
    EXIT_NO_CAPACITY,
    EXIT_OK,
    main,
)

KEY_HEX = "aa" * 32


@pytest.fixture
def workdir(tmp_path, tree, corpus_lines, monkeypatch):
    """A directory with tree, corpus, and config ready to go."""
    from semstego.semantic_space import save_tree

    save_tree(tree, tmp_path / "tree.json")
    (tmp_path / "corpus.txt").write_text("\n".join(corpus_lines) + "\n", encoding="utf-8")
    config = {
        "tree": str(tmp_path / "tree.json"),
        "distribution": str(tmp_path / "dist.json"),
        "mode": "mock",
        "seed": 5,
        "key_hex": KEY_HEX,
    }
    (tmp_path / "config.json").write_text(json.dumps(config), encoding="utf-8")
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run(args):
    return main([str(a) for a in args])


def build_dist(workdir):
    assert run(["build-dist", "corpus.txt", "tree.json", "-o", "dist.json"]) == EXIT_OK


def test_build_dist_counts_match_hand_tally(tmp_path, tree, capsys):
    from semstego.semantic_space import save_tree

    save_tree(tree, tmp_path / "tree.json")
    corpus = tmp_path / "toy.txt"
    corpus.write_text(
        "I saw Paris\nI saw Paris\nthe doctor waved\nnothing at all\n", encoding="utf-8"
    )
    out = tmp_path / "d.json"
    assert run(["build-dist", corpus, tmp_path / "tree.json", "-o", out]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["total"] == 4
    counts = {tuple(sorted(e["type"].items())): e["count"] for e in doc["entries"]}
    assert counts[(("Location/City/Paris", 1),)] == 2
    assert counts[(("Person/Professional/doctor", 1),)] == 1
    assert counts[()] == 1  # zero-entity line gives the empty type mass
    assert "entropy" in capsys.readouterr().out


def test_build_dist_empty_corpus_exit_2(workdir):
    (workdir / "empty.txt").write_text("", encoding="utf-8")
    assert run(["build-dist", "empty.txt", "tree.json", "-o", "d.json"]) == EXIT_INPUT


def test_build_dist_missing_file_exit_2(workdir):
    assert run(["build-dist", "nope.txt", "tree.json", "-o", "d.json"]) == EXIT_INPUT


def test_encode_decode_round_trip(workdir, capsys):
    build_dist(workdir)
    secret = bytes(range(64))
    (workdir / "msg.bin").write_bytes(secret)
    assert run(["--config", "config.json", "encode", "msg.bin", "run/stego.txt"]) == EXIT_OK
    assert (workdir / "run/stego.txt.traces.json").exists()
    out = capsys.readouterr().out
    assert "bits/sentence" in out
    assert run(["--config", "config.json", "decode", "run/stego.txt", "out.bin"]) == EXIT_OK
    assert (workdir / "out.bin").read_bytes() == secret


def test_encode_deterministic_given_config_and_seed(workdir):
    build_dist(workdir)
    (workdir / "msg.bin").write_bytes(b"determinism!")
    assert run(["--config", "config.json", "encode", "msg.bin", "a.txt"]) == EXIT_OK
    assert run(["--config", "config.json", "encode", "msg.bin", "b.txt"]) == EXIT_OK
    assert (workdir / "a.txt").read_text() == (workdir / "b.txt").read_text()


def test_decode_wrong_key_exit_5(workdir):
    build_dist(workdir)
    (workdir / "msg.bin").write_bytes(b"right key only")
    assert run(["--config", "config.json", "encode", "msg.bin", "s.txt"]) == EXIT_OK
    cfg = json.loads((workdir / "config.json").read_text())
    cfg["key_hex"] = "bb" * 32
    (workdir / "wrong.json").write_text(json.dumps(cfg), encoding="utf-8")
    assert run(["--config", "wrong.json", "decode", "s.txt", "out.bin"]) == EXIT_DECODE


def test_encode_no_capacity_exit_3(workdir):
    (workdir / "mono.txt").write_text("Paris\n" * 10, encoding="utf-8")
    assert run(["build-dist", "mono.txt", "tree.json", "-o", "dist.json"]) == EXIT_OK
    (workdir / "msg.bin").write_bytes(b"x")
    assert run(["--config", "config.json", "encode", "msg.bin", "s.txt"]) == EXIT_NO_CAPACITY


def test_live_mode_without_api_key_exit_4(workdir, monkeypatch):
    build_dist(workdir)
    cfg = json.loads((workdir / "config.json").read_text())
    cfg["mode"] = "live"
    cfg["agent"] = {
        "endpoint_url": "https://example.invalid/v1/chat",
        "model_name": "m",
        "api_key_env": "DEFINITELY_UNSET_KEY",
    }
    (workdir / "live.json").write_text(json.dumps(cfg), encoding="utf-8")
    monkeypatch.delenv("DEFINITELY_UNSET_KEY", raising=False)
    (workdir / "msg.bin").write_bytes(b"x")
    assert run(["--config", "live.json", "encode", "msg.bin", "s.txt"]) == EXIT_AGENT


def test_missing_key_exit_2(workdir, monkeypatch):
    build_dist(workdir)
    cfg = json.loads((workdir / "config.json").read_text())
    del cfg["key_hex"]
    (workdir / "nokey.json").write_text(json.dumps(cfg), encoding="utf-8")
    monkeypatch.delenv("SEMSTEGO_KEY", raising=False)
    (workdir / "msg.bin").write_bytes(b"x")
    assert run(["--config", "nokey.json", "encode", "msg.bin", "s.txt"]) == EXIT_INPUT


def test_key_from_environment(workdir, monkeypatch):
    build_dist(workdir)
    cfg = json.loads((workdir / "config.json").read_text())
    del cfg["key_hex"]
    (workdir / "envkey.json").write_text(json.dumps(cfg), encoding="utf-8")
    monkeypatch.setenv("SEMSTEGO_KEY", KEY_HEX)
    (workdir / "msg.bin").write_bytes(b"env sourced")
    assert run(["--config", "envkey.json", "encode", "msg.bin", "s.txt"]) == EXIT_OK
    assert run(["--config", "envkey.json", "decode", "s.txt", "o.bin"]) == EXIT_OK
    assert (workdir / "o.bin").read_bytes() == b"env sourced"


def test_attack_deterministic(workdir, capsys):
    build_dist(workdir)
    (workdir / "msg.bin").write_bytes(b"attack me")
    run(["--config", "config.json", "encode", "msg.bin", "s.txt"])
    assert run(["--config", "config.json", "attack", "s.txt", "-o", "a1.txt",
                "--kind", "swap"]) == EXIT_OK
    assert run(["--config", "config.json", "attack", "s.txt", "-o", "a2.txt",
                "--kind", "swap"]) == EXIT_OK
    assert (workdir / "a1.txt").read_text() == (workdir / "a2.txt").read_text()


def test_eval_unattacked_run_dsr_one(workdir, capsys):
    build_dist(workdir)
    (workdir / "msg.bin").write_bytes(bytes(48))
    run(["--config", "config.json", "encode", "msg.bin", "run/stego.txt"])
    assert run(["--config", "config.json", "eval", "run"]) == EXIT_OK
    out = capsys.readouterr().out
    report = json.loads((workdir / "run/report.json").read_text())
    for bucket in report["decoding_success_rate"].values():
        assert bucket["rate"] == 1.0
    assert "DSR" in out


def test_eval_reports_type_length_buckets(workdir):
    build_dist(workdir)
    (workdir / "msg.bin").write_bytes(bytes(range(200)))
    run(["--config", "config.json", "encode", "msg.bin", "run/stego.txt"])
    run(["--config", "config.json", "attack", "run/stego.txt", "-o", "run/attacked.txt",
         "--kind", "delete"])
    assert run(["--config", "config.json", "eval", "run"]) == EXIT_OK
    report = json.loads((workdir / "run/report.json").read_text())
    buckets = set(report["decoding_success_rate"])
    assert {"1", "2", "3"} <= buckets  # spread of type lengths like Table rows


def test_eval_missing_ground_truth_exit_2(workdir, capsys):
    build_dist(workdir)
    (workdir / "bare").mkdir()
    assert run(["--config", "config.json", "eval", "bare"]) == EXIT_INPUT


def test_no_key_material_in_outputs(workdir, capsys):
    """The key hex must never appear in stdout or generated files."""
    build_dist(workdir)
    (workdir / "msg.bin").write_bytes(b"hygiene")
    run(["--config", "config.json", "encode", "msg.bin", "run/stego.txt"])
    run(["--config", "config.json", "decode", "run/stego.txt", "o.bin"])
    run(["--config", "config.json", "eval", "run"])
    captured = capsys.readouterr()
    assert KEY_HEX not in captured.out + captured.err
    for path in (workdir / "run").iterdir():
        assert KEY_HEX not in path.read_text(encoding="utf-8")


def test_console_entry_point(workdir):
    proc = subprocess.run(
        [sys.executable, "-m", "semstego", "build-dist", "corpus.txt", "tree.json",
         "-o", "d2.json"],
        capture_output=True, text=True, cwd=workdir,
    )
    assert proc.returncode == EXIT_OK, proc.stderr
    assert "entropy" in proc.stdout
