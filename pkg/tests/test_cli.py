import json

import pytest

from tmisim import sim
from tmisim.cli import main


def _simulate(tmp_path, *extra):
    out = tmp_path / "run"
    code = main(["simulate", "--seed", "3", "--out", str(out), *extra])
    return code, out


class TestSimulate:
    def test_default_run(self, tmp_path, capsys):
        code, out = _simulate(tmp_path)
        assert code == 0
        for name in (sim.TRANSCRIPT_FILE, sim.CLOUD_DB_FILE,
                     sim.REGISTRY_FILE, sim.OUTCOME_FILE):
            assert (out / name).exists()
        assert "session completed" in capsys.readouterr().out

    def test_deterministic_outputs(self, tmp_path):
        _, out1 = _simulate(tmp_path / "a")
        _, out2 = _simulate(tmp_path / "b")
        assert ((out1 / sim.TRANSCRIPT_FILE).read_bytes()
                == (out2 / sim.TRANSCRIPT_FILE).read_bytes())
        assert ((out1 / sim.CLOUD_DB_FILE).read_bytes()
                == (out2 / sim.CLOUD_DB_FILE).read_bytes())

    def test_missing_config_is_usage_error(self, tmp_path):
        code = main(["simulate", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o")])
        assert code == 2

    def test_unparseable_config_is_malformed(self, tmp_path):
        cfg = tmp_path / "broken.json"
        cfg.write_text("{not json")
        assert main(["simulate", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 3

    def test_bad_schema_is_malformed(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"variant": "Q"}))
        assert main(["simulate", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 3

    def test_fault_abort_exits_one_and_names_step(self, tmp_path, capsys):
        cfg = tmp_path / "fault.json"
        cfg.write_text(json.dumps({
            "seed": 3,
            "faults": [{"target": 2, "action": "tamper", "offset": 4}],
        }))
        code = main(["simulate", "--config", str(cfg),
                     "--out", str(tmp_path / "o")])
        assert code == 1
        err = capsys.readouterr().err
        assert "hup.c_store" in err and "AuthFailure" in err

    def test_usage_error_on_unknown_flag(self, tmp_path, capsys):
        assert main(["simulate", "--bogus"]) == 2


class TestCampaign:
    def test_summary_written(self, tmp_path, capsys):
        code = main(["campaign", "--seeds", "5", "--seed", "50",
                     "--out", str(tmp_path)])
        assert code == 0
        summary = json.loads((tmp_path / "campaign.json").read_text())
        assert summary["sessions"] == 5 and summary["completions"] == 5

    def test_bad_seed_count(self, tmp_path):
        assert main(["campaign", "--seeds", "0"]) == 3


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("artifacts")
    assert main(["simulate", "--seed", "8", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def aborted_artifacts(tmp_path_factory):
    """Artifacts from a session that aborted before anything was stored."""
    out = tmp_path_factory.mktemp("aborted")
    cfg = out / "config.json"
    cfg.write_text(json.dumps({
        "seed": 8, "faults": [{"target": 2, "action": "tamper", "offset": 4}]}))
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 1
    return out


class TestAttack:
    def test_insider_succeeds(self, artifacts, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        code = main(["attack",
                     "--transcript", str(artifacts / sim.TRANSCRIPT_FILE),
                     "--db", str(artifacts / sim.CLOUD_DB_FILE),
                     "--mode", "insider", "--out", str(report_path)])
        assert code == 0
        out = capsys.readouterr().out
        for kind in ("inspection", "sensor", "treatment"):
            assert f"{kind} report" in out
        assert "VIOLATED" in out
        report = json.loads(report_path.read_text())
        assert report["success"] is True
        assert len(report["opened"]) == 3

    def test_passive_zero_openings(self, artifacts, capsys):
        code = main(["attack",
                     "--transcript", str(artifacts / sim.TRANSCRIPT_FILE),
                     "--mode", "passive"])
        assert code == 0
        out = capsys.readouterr().out
        assert "HOLDS" in out and "opened" not in out

    def test_insider_on_aborted_session_vacuous(self, aborted_artifacts, capsys):
        code = main(["attack",
                     "--transcript", str(aborted_artifacts / sim.TRANSCRIPT_FILE),
                     "--db", str(aborted_artifacts / sim.CLOUD_DB_FILE),
                     "--mode", "insider"])
        assert code == 0
        out = capsys.readouterr().out
        assert "HOLDS" in out and "not-applicable" in out

    def test_missing_file_usage_error(self, tmp_path):
        assert main(["attack", "--transcript", str(tmp_path / "nope.jsonl"),
                     "--mode", "passive"]) == 2

    def test_insider_requires_db(self, artifacts):
        assert main(["attack",
                     "--transcript", str(artifacts / sim.TRANSCRIPT_FILE),
                     "--mode", "insider"]) == 2

    def test_malformed_db(self, artifacts, tmp_path):
        bad = tmp_path / "bad_db.jsonl"
        bad.write_text("definitely not json\n")
        assert main(["attack",
                     "--transcript", str(artifacts / sim.TRANSCRIPT_FILE),
                     "--db", str(bad), "--mode", "insider"]) == 3


class TestVerify:
    def test_reference_transcript_passes(self, artifacts, capsys):
        code = main(["verify",
                     "--transcript", str(artifacts / sim.TRANSCRIPT_FILE)])
        assert code == 0
        assert "FAILED" not in capsys.readouterr().out

    def test_flipped_byte_names_failed_check(self, artifacts, tmp_path, capsys):
        data = bytearray((artifacts / sim.TRANSCRIPT_FILE).read_bytes())
        # flip one hex digit inside the E2 ciphertext body on line 3
        lines = bytes(data).split(b"\n")
        target = bytearray(lines[2])
        pos = target.find(b'"body":"') + 12
        target[pos] = ord("0") if target[pos] != ord("0") else ord("1")
        lines[2] = bytes(target)
        flipped = tmp_path / "flipped.jsonl"
        flipped.write_bytes(b"\n".join(lines))
        code = main(["verify", "--transcript", str(flipped),
                     "--registry", str(artifacts / sim.REGISTRY_FILE)])
        assert code == 1
        out = capsys.readouterr().out
        assert "FAILED: e2_opens" in out

    def test_truncated_transcript_malformed(self, artifacts, tmp_path):
        data = (artifacts / sim.TRANSCRIPT_FILE).read_bytes()
        truncated = tmp_path / "truncated.jsonl"
        truncated.write_bytes(data[:len(data) // 2])
        assert main(["verify", "--transcript", str(truncated)]) == 3

    def test_missing_transcript_usage_error(self, tmp_path):
        assert main(["verify", "--transcript", str(tmp_path / "nope")]) == 2

    def test_verify_without_registry_still_checks_digests(self, artifacts,
                                                          tmp_path, capsys):
        # copy the transcript away from its registry sibling
        alone = tmp_path / "transcript.jsonl"
        alone.write_bytes((artifacts / sim.TRANSCRIPT_FILE).read_bytes())
        assert main(["verify", "--transcript", str(alone)]) == 0

    def test_replayed_transcript_flagged(self, tmp_path, capsys):
        out = tmp_path / "replay"
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({
            "seed": 8, "faults": [{"target": 0, "action": "replay"}]}))
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        code = main(["verify", "--transcript", str(out / sim.TRANSCRIPT_FILE)])
        assert code == 1
        assert "sequence" in capsys.readouterr().out


def test_no_arguments_is_usage_error():
    assert main([]) == 2
