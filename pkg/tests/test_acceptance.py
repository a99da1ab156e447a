"""Acceptance suite.

One test per criterion; each prints a single PASS/FAIL line (run with
``pytest tests/test_acceptance.py -v -s`` to see them live). The seeded
campaign (criteria 1-6) is executed once and shared.
"""

import dataclasses
import hashlib

import pytest

from tmisim import adversary as adv
from tmisim import primitives as pr
from tmisim.cli import main as cli_main
from tmisim.sim import (
    CLOUD_DB_FILE,
    FaultInjection,
    ScenarioConfig,
    TRANSCRIPT_FILE,
    iter_campaign,
    run_full_session,
)
from tmisim.verifier import verify_transcript

SESSIONS_PER_VARIANT = 500  # 1000 total across the two variants
ABORT_SEED = 4242           # the fixed-seed session for criterion 7


def _criterion(number, name, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} - {detail}")
    assert ok, f"criterion {number} ({name}): {detail}"


@pytest.fixture(scope="module")
def campaign():
    """Run 1000 seeded sessions (500 per variant) once; fold all counters."""
    c = {
        "sessions": 0,
        "completed": 0,
        "keys_agree": 0,
        "reports_match": 0,
        "inspection_recovered": 0,
        "bundle_recovered": 0,
        "treatment_recovered": 0,
        "verdict_violated": 0,
        "passive_clean": 0,
        "offline_verified": 0,
        "offline_sampled": 0,
    }
    for variant, base_seed in (("A", 10_000), ("B", 20_000)):
        base = ScenarioConfig(seed=base_seed, variant=variant)
        for i, outcome in enumerate(iter_campaign(base, SESSIONS_PER_VARIANT)):
            cfg = outcome.config
            c["sessions"] += 1
            if not outcome.completed:
                continue
            c["completed"] += 1

            keys = outcome.session_keys
            c["keys_agree"] += (keys["sk_hc"] == keys["sk_ch"] is not None
                                and keys["sk_pc"] == keys["sk_cp"] is not None
                                and keys["sk_dc"] == keys["sk_cd"] is not None)

            m_h, m_b, m_d = outcome.recovered_reports
            c["reports_match"] += (m_h.payload == cfg.payload_m_h
                                   and m_b.payload == cfg.payload_m_b
                                   and m_h.patient == m_b.patient == cfg.id_p
                                   and m_d.kind == "treatment")

            view = adv.InsiderView.from_outcome(outcome)
            got = adv.insider_reveal_inspection(view)
            c["inspection_recovered"] += (got.payload == cfg.payload_m_h)
            pair = adv.insider_reveal_patient_bundle(view)
            c["bundle_recovered"] += (pair[0].payload == cfg.payload_m_h
                                      and pair[1].payload == cfg.payload_m_b)
            triple = adv.insider_reveal_treatment_bundle(view)
            c["treatment_recovered"] += (triple == outcome.recovered_reports)

            c["verdict_violated"] += (
                adv.check_report_confidentiality(outcome) == adv.VERDICT_VIOLATED)

            passive = adv.passive_eavesdrop_attempt(
                adv.PassiveView.from_outcome(outcome))
            c["passive_clean"] += (len(passive.opened) == 0)

            if i % 25 == 0:  # independent offline recheck on a sample
                registry = {
                    "id_h": cfg.id_h, "id_d": cfg.id_d, "variant": variant,
                    "delta_t_ms": cfg.delta_t_ms, "tick_ms": cfg.tick_ms,
                    "pk_h": outcome.directory.pk_h,
                    "pk_p": outcome.directory.pk_p,
                    "pk_d": outcome.directory.pk_d,
                }
                results = verify_transcript(outcome.transcript, registry)
                c["offline_sampled"] += 1
                c["offline_verified"] += all(r.ok for r in results)
    return c


def test_criterion_1_happy_path_completeness(campaign):
    total = campaign["sessions"]
    ok = (total == 2 * SESSIONS_PER_VARIANT
          and campaign["completed"] == total
          and campaign["keys_agree"] == total
          and campaign["reports_match"] == total
          and campaign["offline_verified"] == campaign["offline_sampled"] > 0)
    _criterion(1, "happy-path completeness", ok,
               f"{campaign['completed']}/{total} sessions completed with all "
               f"digest checks, signatures, key agreement, and report "
               f"round-trips ({campaign['offline_sampled']} offline-verified)")


def test_criterion_2_insider_recovers_inspection(campaign):
    total = campaign["completed"]
    ok = campaign["inspection_recovered"] == total > 0
    _criterion(2, "insider inspection-report recovery", ok,
               f"{campaign['inspection_recovered']}/{total} sessions, both variants")


def test_criterion_3_insider_recovers_patient_bundle(campaign):
    total = campaign["completed"]
    ok = campaign["bundle_recovered"] == total > 0
    _criterion(3, "insider patient-bundle recovery", ok,
               f"{campaign['bundle_recovered']}/{total} sessions, both variants")


def test_criterion_4_insider_recovers_all_reports(campaign):
    total = campaign["completed"]
    ok = campaign["treatment_recovered"] == total > 0
    _criterion(4, "insider full-report recovery", ok,
               f"{campaign['treatment_recovered']}/{total} sessions, both variants")


def test_criterion_5_confidentiality_verdict(campaign):
    total = campaign["completed"]
    ok = campaign["verdict_violated"] == total > 0
    _criterion(5, "report-confidentiality verdict", ok,
               f"VIOLATED on {campaign['verdict_violated']}/{total} completed sessions")


def test_criterion_6_passive_negative_control(campaign):
    total = campaign["completed"]
    ok = campaign["passive_clean"] == total > 0
    _criterion(6, "passive eavesdropper control", ok,
               f"zero successful decryptions in {campaign['passive_clean']}/{total} sessions")


# ── criterion 7: abort coverage ─────────────────────────────────────────

# receiving step and expected untouched cloud state per tamper target
_TAMPER_TARGETS = {
    1: ("hup", "h_upload"), 2: ("hup", "c_store"),
    4: ("pup", "p_upload"), 5: ("pup", "c_store"),
    7: ("tp", "d_prescribe"), 8: ("tp", "c_store"),
    10: ("cp", "p_collect"), 11: ("cp", "c_store"),
}


def _cloud_state_untouched(outcome, target):
    """The fields the aborted step would have written must be absent."""
    if target in (1, 2):
        return outcome.cloud_db == []
    record = outcome.cloud_db[0]
    if target in (4, 5):
        return (record.c_p is None and record.sig_p is None
                and outcome.session_keys["sk_cp"] is None)
    if target in (7, 8):
        return (record.c_p is not None and record.c_d is None
                and record.sig_d is None
                and outcome.session_keys["sk_cd"] is None)
    return record.c_d is not None and record.c_e is None


def test_criterion_7_abort_coverage():
    base = ScenarioConfig(seed=ABORT_SEED)
    reference = run_full_session(base)
    assert reference.completed

    injected = detected = 0
    for target, (phase, step) in sorted(_TAMPER_TARGETS.items()):
        payload = reference.transcript[target].payload
        ct_name = next(n for n, k in payload.FIELDS if k == "ciphertext")
        length = len(getattr(payload, ct_name).encode())
        for offset in range(length):
            fault = FaultInjection(target=target, action="tamper", offset=offset)
            outcome = run_full_session(
                dataclasses.replace(base, faults=(fault,)))
            injected += 1
            detected += (not outcome.completed
                         and outcome.abort.message_index == target
                         and (outcome.abort.phase, outcome.abort.step) == (phase, step)
                         and _cloud_state_untouched(outcome, target))

    replays_ok = 0
    for target in range(12):
        fault = FaultInjection(target=target, action="replay")
        outcome = run_full_session(dataclasses.replace(base, faults=(fault,)))
        injected += 1
        replays_ok += (outcome.completed
                       and outcome.replay_rejections == [(target, "StaleTimestamp")])
    detected += replays_ok

    ok = detected == injected and replays_ok == 12
    _criterion(7, "abort coverage", ok,
               f"{detected}/{injected} injected faults detected "
               f"({injected - 12} single-byte tampers, 12 stale replays)")


# ── criterion 8: primitive properties ───────────────────────────────────

def test_criterion_8_primitive_properties():
    rng = pr.SeededRng(88, "acceptance")

    dh_ok = 0
    for _ in range(100):
        a, b = pr.random_scalar(rng), pr.random_scalar(rng)
        left = pr.shared_point(a, pr.ec_base_mul(b))
        right = pr.shared_point(b, pr.ec_base_mul(a))
        dh_ok += (left == right)

    mask_ok = 0
    for _ in range(1000):
        sn, digest = pr.random_scalar(rng), rng.take(32)
        mask_ok += (pr.unmask_serial(pr.mask_serial(sn, digest), digest) == sn)

    key = pr.derive_key(hashlib.sha256(b"acceptance").digest())
    plaintext = b"exhaustive tamper target"
    ct = pr.sym_encrypt(key, plaintext, rng)
    cipher_ok = pr.sym_decrypt(key, ct) == plaintext
    raw = ct.encode()
    flips_detected = 0
    for offset in range(len(raw)):
        tampered = bytearray(raw)
        tampered[offset] ^= 0x01
        try:
            pr.sym_decrypt(key, pr.Ciphertext.decode(bytes(tampered)))
        except pr.AuthFailure:
            flips_detected += 1

    sig_ok = 0
    previous = None
    for _ in range(100):
        kp = pr.KeyPair.generate(rng)
        digest = rng.take(32)
        sig = pr.sign(kp.private, digest)
        good = pr.verify(kp.public, digest, sig)
        cross = previous is not None and pr.verify(previous.public, digest, sig)
        wrong_digest = pr.verify(kp.public, rng.take(32), sig)
        sig_ok += good and not cross and not wrong_digest
        previous = kp

    ok = (dh_ok == 100 and mask_ok == 1000 and cipher_ok
          and flips_detected == len(raw) and sig_ok == 100)
    _criterion(8, "primitive properties", ok,
               f"DH {dh_ok}/100, mask {mask_ok}/1000, "
               f"tamper {flips_detected}/{len(raw)}, signatures {sig_ok}/100")


# ── criterion 9: determinism of the CLI ─────────────────────────────────

def test_criterion_9_cli_determinism(tmp_path):
    out1, out2 = tmp_path / "one", tmp_path / "two"
    code1 = cli_main(["simulate", "--seed", "123", "--out", str(out1)])
    code2 = cli_main(["simulate", "--seed", "123", "--out", str(out2)])
    t1 = (out1 / TRANSCRIPT_FILE).read_bytes()
    t2 = (out2 / TRANSCRIPT_FILE).read_bytes()
    db1 = (out1 / CLOUD_DB_FILE).read_bytes()
    db2 = (out2 / CLOUD_DB_FILE).read_bytes()
    ok = code1 == code2 == 0 and t1 == t2 and db1 == db2 and len(t1) > 0
    _criterion(9, "deterministic artifacts", ok,
               f"two identical runs produced byte-identical transcripts "
               f"({len(t1)} bytes) and database exports")
