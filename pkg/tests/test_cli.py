"""Command-line surface: phantom, run, validate, score, ablate, tools,
and the stdio server loop."""

import json
import subprocess
import sys

from ctkit.cli import main


def run_cli(*argv):
    return main(list(argv))


def test_phantom_run_validate_score_ablate(tmp_path, capsys):
    root = tmp_path / "bench"
    assert run_cli("phantom", "--kind", "bench", "--out", str(root), "--cases", "4") == 0
    manifest = root / "manifest.jsonl"
    assert manifest.is_file()

    traj = tmp_path / "traj.jsonl"
    assert run_cli(
        "run", "--tasks", str(manifest), "--data-root", str(root),
        "--agent", "scripted", "--budget", "8", "--out", str(traj),
        "--randomize-seed", "3",
    ) == 0
    assert len(traj.read_text().splitlines()) == 4

    assert run_cli(
        "validate", "--traj", str(traj), "--tasks", str(manifest), "--data-root", str(root)
    ) == 0
    capsys.readouterr()
    assert run_cli("score", "--traj", str(traj), "--tasks", str(manifest)) == 0
    out = capsys.readouterr().out
    assert "Calls" in out and "Name Errors" in out and "Avg." in out

    assert run_cli(
        "ablate", "--disable", "global,detail", "--tasks", str(manifest),
        "--data-root", str(root), "--budget", "8", "--json",
    ) == 0
    out = capsys.readouterr().out
    assert "disabled: detail, global" in out
    machine = json.loads(out.strip().splitlines()[-1])
    assert machine["disabled"] == ["detail", "global"]


def test_validate_flags_tampered_trajectory(tmp_path, capsys):
    root = tmp_path / "bench"
    run_cli("phantom", "--kind", "bench", "--out", str(root), "--cases", "2")
    traj = tmp_path / "traj.jsonl"
    run_cli("run", "--tasks", str(root / "manifest.jsonl"), "--data-root", str(root),
            "--out", str(traj))
    lines = traj.read_text().splitlines()
    record = json.loads(lines[0])
    record["steps"][0]["observation_digest"] = "0" * 64
    lines[0] = json.dumps(record)
    traj.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert run_cli("validate", "--traj", str(traj), "--tasks", str(root / "manifest.jsonl"),
                   "--data-root", str(root)) == 1
    out = capsys.readouterr().out
    assert '"divergent"' in out


def test_tools_listing(capsys):
    assert run_cli("tools") == 0
    listing = json.loads(capsys.readouterr().out)
    assert len(listing) == 24
    assert run_cli("tools", "--categories", "ingestion") == 0
    assert len(json.loads(capsys.readouterr().out)) == 6


def test_phantom_single_volume(tmp_path):
    out = tmp_path / "ramp.nii"
    assert run_cli("phantom", "--kind", "ramp", "--out", str(out), "--dims", "4,4,2") == 0
    from ctkit.volume import parse_nifti

    vol = parse_nifti(out.read_bytes())
    assert vol.dims == (4, 4, 2)
    assert vol.voxels[3, 3, 1] == 31.0


def test_data_root_env_fallback(tmp_path, monkeypatch, capsys):
    root = tmp_path / "bench"
    run_cli("phantom", "--kind", "bench", "--out", str(root), "--cases", "2")
    monkeypatch.setenv("CTKIT_DATA_ROOT", str(root))
    traj = tmp_path / "traj.jsonl"
    assert run_cli("run", "--tasks", str(root / "manifest.jsonl"), "--out", str(traj)) == 0


def test_serve_stdio_subprocess(tmp_path):
    root = tmp_path / "bench"
    run_cli("phantom", "--kind", "bench", "--out", str(root), "--cases", "1")
    session = "\n".join([
        json.dumps({"jsonrpc": "2.0", "id": 1, "method": "initialize"}),
        json.dumps({"jsonrpc": "2.0", "id": 2, "method": "tools/list"}),
        json.dumps({"jsonrpc": "2.0", "id": 3, "method": "tools/call",
                    "params": {"name": "load_data",
                               "arguments": {"path": "cases/vol_000.nii"}}}),
    ]) + "\n"
    proc = subprocess.run(
        [sys.executable, "-m", "ctkit.cli", "serve", "--data-root", str(root)],
        input=session, capture_output=True, text=True, timeout=60,
    )
    lines = proc.stdout.splitlines()
    assert len(lines) == 3
    assert json.loads(lines[0])["result"]["serverInfo"]["name"] == "ctkit"
    assert len(json.loads(lines[1])["result"]["tools"]) == 24
    assert json.loads(lines[2])["result"]["isError"] is False
