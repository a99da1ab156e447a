"""Adversaries and property checkers.

The interesting attacker here is the privileged cloud insider: it reads
the cloud's database rows and the session values the cloud legitimately
computed, plus all public-channel traffic - and nothing else. From the
database fields alone it can rebuild the symmetric keys the medical
reports are encrypted under and open every report ciphertext, which is
exactly the confidentiality failure this harness demonstrates.

The passive eavesdropper is the negative control: given only the public
channel it can form candidate keys only from what is visible there
(masked serials, timestamps, ciphertext framing), and every
authenticated decryption it attempts fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .actors import CloudRecord, computing_key_digest
from .errors import AttackFailed, AuthFailure
from .messages import (
    CHANNEL_PUBLIC,
    MedicalReport,
    Transcript,
    decode_report_bundle,
    serialize,
)
from .primitives import Scalar, derive_key, sym_decrypt

VERDICT_HOLDS = "HOLDS"
VERDICT_VIOLATED = "VIOLATED"

REVEAL_RECOVERED = "recovered"
REVEAL_FAILED = "failed"
REVEAL_NOT_APPLICABLE = "not-applicable"


@dataclass
class InsiderView:
    """What a privileged cloud insider can read: db rows, public traffic,
    and the cloud's own session values. No other party's secrets."""

    cloud_db: list
    public_messages: list
    cloud_session: dict

    @classmethod
    def from_outcome(cls, outcome) -> "InsiderView":
        return cls(
            cloud_db=list(outcome.cloud_db),
            public_messages=list(outcome.transcript.public_messages()),
            cloud_session=dict(outcome.cloud_session),
        )


@dataclass
class PassiveView:
    """A wire eavesdropper: public-channel messages only."""

    public_messages: list

    @classmethod
    def from_outcome(cls, outcome) -> "PassiveView":
        return cls(public_messages=list(outcome.transcript.public_messages()))

    @classmethod
    def from_transcript(cls, transcript: Transcript) -> "PassiveView":
        return cls(public_messages=list(transcript.public_messages()))


@dataclass
class AttackReport:
    mode: str
    derived_keys: list = field(default_factory=list)   # (name, hex) pairs
    opened: list = field(default_factory=list)         # per-ciphertext results
    reveals: dict = field(default_factory=dict)        # step -> status
    details: dict = field(default_factory=dict)        # step -> failure detail
    verdicts: dict = field(default_factory=dict)
    attempts: int = 0
    success: bool = False

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "derived_keys": [list(k) for k in self.derived_keys],
            "opened": list(self.opened),
            "reveals": dict(sorted(self.reveals.items())),
            "details": dict(sorted(self.details.items())),
            "verdicts": dict(sorted(self.verdicts.items())),
            "attempts": self.attempts,
            "success": self.success,
        }

    def to_text(self) -> str:
        lines = [f"attack mode: {self.mode}", f"attempts: {self.attempts}"]
        for name, hexkey in self.derived_keys:
            lines.append(f"derived key {name}: {hexkey}")
        for entry in self.opened:
            lines.append(f"opened {entry['ciphertext']}:")
            for rep in entry["reports"]:
                lines.append(f"  {rep['kind']} report for {rep['patient']}: "
                             f"{rep['payload']}")
        for step, status in sorted(self.reveals.items()):
            lines.append(f"reveal {step}: {status}")
        for prop, verdict in sorted(self.verdicts.items()):
            lines.append(f"property {prop}: {verdict}")
        lines.append(f"success: {self.success}")
        return "\n".join(lines) + "\n"


def _report_json(report: MedicalReport) -> dict:
    return {"kind": report.kind, "patient": report.patient.hex(),
            "payload": report.payload.hex()}


def _single_record(view: InsiderView) -> CloudRecord:
    if not view.cloud_db:
        raise AttackFailed("cloud database is empty; nothing was stored")
    return view.cloud_db[0]


def _insider_key_candidates(view: InsiderView, record: CloudRecord):
    """Both report-key derivations the database makes possible."""
    candidates = []
    id_h = view.cloud_session.get("id_h")
    if id_h is not None:
        candidates.append(("h(id_p||id_h||nid)",
                           computing_key_digest(record.id_p, id_h, record.nid)))
    id_d = view.cloud_session.get("appointments", {}).get(record.id_p)
    if id_d is not None:
        candidates.append(("h(id_p||id_d||sn)",
                           computing_key_digest(record.id_p, id_d,
                                                record.sn.to_bytes())))
    return candidates


def _open_bundle(candidates, ciphertext, expected: int):
    for name, digest in candidates:
        try:
            data = sym_decrypt(derive_key(digest), ciphertext)
        except AuthFailure:
            continue
        return name, decode_report_bundle(data, expected)
    raise AttackFailed("no derivable key opens the ciphertext")


def insider_reveal_inspection(view: InsiderView) -> MedicalReport:
    """Recover the hospital's inspection report from the database row."""
    record = _single_record(view)
    if record.c_h is None:
        raise AttackFailed("record has no inspection ciphertext")
    id_h = view.cloud_session.get("id_h")
    if id_h is None:
        raise AttackFailed("hospital identity not present in cloud state")
    key = computing_key_digest(record.id_p, id_h, record.nid)
    try:
        data = sym_decrypt(derive_key(key), record.c_h)
    except AuthFailure as exc:
        raise AttackFailed(f"inspection ciphertext did not open: {exc}") from None
    return decode_report_bundle(data, 1)[0]


def insider_reveal_patient_bundle(view: InsiderView):
    """Recover (inspection, sensor) reports from the upload ciphertext."""
    record = _single_record(view)
    if record.c_p is None:
        raise AttackFailed("patient upload has not completed")
    _, reports = _open_bundle(_insider_key_candidates(view, record),
                              record.c_p, 2)
    return reports


def insider_reveal_treatment_bundle(view: InsiderView):
    """Recover all three reports from the treatment ciphertext."""
    record = _single_record(view)
    if record.c_d is None:
        raise AttackFailed("treatment phase has not completed")
    _, reports = _open_bundle(_insider_key_candidates(view, record),
                              record.c_d, 3)
    return reports


_REVEALS = (
    ("inspection", insider_reveal_inspection, "C_H"),
    ("patient_bundle", insider_reveal_patient_bundle, "C_P"),
    ("treatment_bundle", insider_reveal_treatment_bundle, "C_D"),
)


def insider_attack(view: InsiderView) -> AttackReport:
    """Run every applicable reveal and render the confidentiality verdict."""
    report = AttackReport(mode="insider")
    record = view.cloud_db[0] if view.cloud_db else None
    if record is not None:
        for name, digest in _insider_key_candidates(view, record):
            report.derived_keys.append((name, derive_key(digest).hex()))
    any_recovered = False
    any_failed = False
    for step, reveal, ct_name in _REVEALS:
        report.attempts += 1
        try:
            result = reveal(view)
        except AttackFailed as exc:
            applicable = record is not None and getattr(
                record, {"C_H": "c_h", "C_P": "c_p", "C_D": "c_d"}[ct_name]
            ) is not None
            report.reveals[step] = (REVEAL_FAILED if applicable
                                    else REVEAL_NOT_APPLICABLE)
            if applicable:
                any_failed = True
                report.details[step] = str(exc)
            continue
        reports = result if isinstance(result, tuple) else (result,)
        report.opened.append({"ciphertext": ct_name,
                              "reports": [_report_json(r) for r in reports]})
        report.reveals[step] = REVEAL_RECOVERED
        any_recovered = True
    report.verdicts["report_confidentiality"] = (
        VERDICT_VIOLATED if any_recovered else VERDICT_HOLDS)
    report.success = any_recovered and not any_failed
    return report


def check_report_confidentiality(outcome) -> str:
    """VIOLATED iff some principal outside {P, H, D} recovers a report.

    Evaluated constructively: run the insider reveals against the
    outcome's insider view. A session that stored nothing holds
    vacuously.
    """
    view = InsiderView.from_outcome(outcome)
    if not view.cloud_db:
        return VERDICT_HOLDS
    for _step, reveal, _ct in _REVEALS:
        try:
            reveal(view)
            return VERDICT_VIOLATED
        except AttackFailed:
            continue
    return VERDICT_HOLDS


def passive_eavesdrop_attempt(view: PassiveView, extra_material=()) -> AttackReport:
    """Try every decryption the public channel alone can key.

    Candidate keys come from public scalar fields (the masked serials),
    timestamps, and ciphertext authentication tags; `extra_material`
    injects leaked values so tests can prove the harness would notice a
    success.
    """
    report = AttackReport(mode="passive")
    candidates = []
    ciphertexts = []
    for index, message in enumerate(view.public_messages):
        payload = message.payload
        mname = type(payload).__name__
        for fname, kind in payload.FIELDS:
            value = getattr(payload, fname)
            if kind == "scalar":
                candidates.append((f"{mname}[{index}].{fname}", value))
            elif kind == "timestamp":
                candidates.append((f"{mname}[{index}].{fname}", Scalar(value)))
            elif kind == "ciphertext":
                ciphertexts.append((f"{mname}[{index}].{fname}", value))
                candidates.append((f"{mname}[{index}].{fname}.tag", value.tag))
    for i, material in enumerate(extra_material):
        candidates.append((f"leaked[{i}]", material))
    report.derived_keys = [(name, derive_key(value).hex())
                           for name, value in candidates]
    for ct_name, ct in ciphertexts:
        for key_name, material in candidates:
            report.attempts += 1
            try:
                plaintext = sym_decrypt(derive_key(material), ct)
            except AuthFailure:
                continue
            report.opened.append({"ciphertext": ct_name, "key": key_name,
                                  "plaintext": plaintext.hex(),
                                  "reports": []})
    report.verdicts["report_confidentiality"] = (
        VERDICT_VIOLATED if report.opened else VERDICT_HOLDS)
    report.success = bool(report.opened)
    return report


def scan_anonymity(transcript, id_p: bytes):
    """Indices of public-channel messages exposing the patient identity.

    Looks for the identity's canonical hex in each serialized message;
    every byte field is hex-encoded on the wire, so a cleartext
    occurrence in any public field surfaces as a substring hit.
    """
    needle = id_p.hex().encode()
    findings = []
    for index, message in enumerate(transcript):
        if message.channel != CHANNEL_PUBLIC:
            continue
        if needle in serialize(message):
            findings.append(index)
    return findings
