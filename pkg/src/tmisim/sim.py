"""Deterministic session orchestrator.

Wires the four actors through the dual channel, drives a simulated
millisecond clock (no step ever reads wall-clock time), records every
transmission in a Transcript, and applies fault injections (ciphertext
tampering, delivery delay, stale replay). A given ScenarioConfig always
produces byte-identical artifacts.

Artifact layout written by :func:`write_artifacts`:

    transcript.jsonl   one JSON object per transmission
    cloud_db.jsonl     cloud records plus the cloud's session values
    registry.json      public out-of-band material (ids, public keys)
    outcome.json       completion/abort summary, session keys, reports
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .actors import Cloud, CloudRecord, Directory, Doctor, Hospital, Patient, VARIANTS
from .errors import ProtocolError
from .messages import (
    MedicalReport,
    Transcript,
    make_channel_message,
)
from .primitives import Ciphertext, GroupPoint, KeyPair, Scalar, SeededRng

DEFAULT_DELTA_T_MS = 2000
DEFAULT_TICK_MS = 10

FAULT_TAMPER = "tamper"
FAULT_DELAY = "delay"
FAULT_REPLAY = "replay"


@dataclass(frozen=True)
class FaultInjection:
    """One adversarial intervention on one transmission.

    tamper: XOR one byte (at `offset`) of the target's ciphertext field.
    delay:  advance the clock by `delay_ms` extra before delivery.
    replay: after the session, re-deliver the target to its receiver
            once its timestamp has gone stale.
    """

    target: int
    action: str
    offset: int = 0
    delay_ms: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 1
    delta_t_ms: int = DEFAULT_DELTA_T_MS
    tick_ms: int = DEFAULT_TICK_MS
    variant: str = "A"
    id_p: bytes = b"patient-001"
    id_h: bytes = b"hospital-01"
    id_d: bytes = b"doctor-07"
    nid: bytes = b"nid-4242"
    payload_m_h: bytes = b"inspection: all clear"
    payload_m_b: bytes = b"sensor: hr=72 spo2=98"
    faults: tuple = ()

    def validate(self) -> None:
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.delta_t_ms <= 0 or self.tick_ms <= 0:
            raise ValueError("delta_t_ms and tick_ms must be positive")
        for name in ("id_p", "id_h", "id_d", "nid"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        ids = {self.id_p, self.id_h, self.id_d}
        if len(ids) != 3:
            raise ValueError("actor identities must be distinct")
        for fault in self.faults:
            if fault.action not in (FAULT_TAMPER, FAULT_DELAY, FAULT_REPLAY):
                raise ValueError(f"unknown fault action {fault.action!r}")
            if not 0 <= fault.target < 12:
                raise ValueError("fault target must be a message index 0..11")


@dataclass(frozen=True)
class AbortInfo:
    phase: str
    step: str
    error: str
    message_index: int


@dataclass
class SessionOutcome:
    config: ScenarioConfig
    directory: Directory
    transcript: Transcript
    cloud_db: list
    cloud_session: dict
    session_keys: dict
    recovered_reports: Optional[tuple]
    replay_rejections: list = field(default_factory=list)
    abort: Optional[AbortInfo] = None

    @property
    def completed(self) -> bool:
        return self.abort is None


# receiving step for each wire message type: (phase, step name, actor attr, method)
_RECEIVE = {
    "HupMsg1": ("hup", "c_challenge", "cloud", "hup_challenge"),
    "HupMsg2": ("hup", "h_upload", "hospital", "hup_upload"),
    "HupMsg3": ("hup", "c_store", "cloud", "hup_store"),
    "PupMsg1": ("pup", "c_respond", "cloud", "pup_respond"),
    "PupMsg2": ("pup", "p_upload", "patient", "pup_upload"),
    "PupMsg3": ("pup", "c_store", "cloud", "pup_store"),
    "TpMsg1": ("tp", "c_respond", "cloud", "tp_respond"),
    "TpMsg2": ("tp", "d_prescribe", "doctor", "tp_prescribe"),
    "TpMsg3": ("tp", "c_store", "cloud", "tp_store"),
    "CpMsg1": ("cp", "c_respond", "cloud", "cp_respond"),
    "CpMsg2": ("cp", "p_collect", "patient", "cp_collect"),
    "CpMsg3": ("cp", "c_store", "cloud", "cp_store"),
}


def _tampered(payload, offset: int):
    ct_fields = [name for name, kind in payload.FIELDS if kind == "ciphertext"]
    if not ct_fields:
        raise ValueError(f"{type(payload).__name__} carries no ciphertext to tamper")
    name = ct_fields[0]
    raw = bytearray(getattr(payload, name).encode())
    raw[offset % len(raw)] ^= 0x01
    return dataclasses.replace(payload, **{name: Ciphertext.decode(bytes(raw))})


class _Session:
    def __init__(self, cfg: ScenarioConfig):
        cfg.validate()
        self.cfg = cfg
        master = SeededRng(cfg.seed, "session")
        kp_h = KeyPair.generate(master.fork("keypair/H"))
        kp_p = KeyPair.generate(master.fork("keypair/P"))
        kp_d = KeyPair.generate(master.fork("keypair/D"))
        self.directory = Directory(cfg.id_h, cfg.id_d,
                                   kp_h.public, kp_p.public, kp_d.public)
        m_h = MedicalReport("inspection", cfg.id_p, cfg.payload_m_h)
        m_b = MedicalReport("sensor", cfg.id_p, cfg.payload_m_b)
        common = {"delta_t_ms": cfg.delta_t_ms}
        self.hospital = Hospital(self.directory, kp_h, id_p=cfg.id_p, nid=cfg.nid,
                                 report=m_h, rng=master.fork("rng/H"), **common)
        self.patient = Patient(self.directory, kp_p, id_p=cfg.id_p, nid=cfg.nid,
                               report=m_b, variant=cfg.variant,
                               rng=master.fork("rng/P"), **common)
        self.doctor = Doctor(self.directory, kp_d, variant=cfg.variant,
                             rng=master.fork("rng/D"), **common)
        self.cloud = Cloud(appointments={cfg.id_p: cfg.id_d},
                           rng=master.fork("rng/C"), **common)
        self.now = 0
        self.transcript = Transcript()
        self.recovered = None
        self.replay_rejections = []
        self.abort: Optional[AbortInfo] = None
        self._phase = self._step = ""
        self._faults = {}
        for fault in cfg.faults:
            self._faults.setdefault(fault.target, []).append(fault)

    # one transmission: record what goes on the wire (post-fault), then
    # advance the clock before the receiving side runs
    def _transmit(self, payload):
        index = len(self.transcript)
        extra = 0
        for fault in self._faults.get(index, ()):
            if fault.action == FAULT_TAMPER:
                payload = _tampered(payload, fault.offset)
            elif fault.action == FAULT_DELAY:
                extra += fault.delay_ms
        self.transcript.append(make_channel_message(payload, self.now))
        self.now += self.cfg.tick_ms + extra
        return payload

    def _receive(self, payload):
        phase, step, actor, method = _RECEIVE[type(payload).__name__]
        self._phase, self._step = phase, step
        return getattr(getattr(self, actor), method)(payload, self.now)

    def run(self) -> SessionOutcome:
        try:
            self._run_phases()
        except ProtocolError as exc:
            self.abort = AbortInfo(self._phase, self._step,
                                   type(exc).__name__, len(self.transcript) - 1)
        self._run_replays()
        keys = {
            "sk_hc": self.hospital.sk_hc, "sk_ch": self.cloud.sk_ch,
            "sk_pc": self.patient.sk_pc, "sk_cp": self.cloud.sk_cp,
            "sk_dc": self.doctor.sk_dc, "sk_cd": self.cloud.sk_cd,
        }
        return SessionOutcome(
            config=self.cfg,
            directory=self.directory,
            transcript=self.transcript,
            cloud_db=list(self.cloud.db.values()),
            cloud_session=self.cloud.session_values(),
            session_keys=keys,
            recovered_reports=self.recovered,
            replay_rejections=self.replay_rejections,
            abort=self.abort,
        )

    def _run_phases(self):
        self._phase, self._step = "hup", "h_init"
        msg = self._receive(self._transmit(self.hospital.hup_init(self.now)))
        msg = self._receive(self._transmit(msg))
        self._receive(self._transmit(msg))

        self._phase, self._step = "pup", "p_request"
        msg = self._receive(self._transmit(self.patient.pup_request(self.now)))
        msg = self._receive(self._transmit(msg))
        self._receive(self._transmit(msg))

        self._phase, self._step = "tp", "d_request"
        msg = self._receive(self._transmit(self.doctor.tp_request(self.now)))
        msg = self._receive(self._transmit(msg))
        self._receive(self._transmit(msg))

        self._phase, self._step = "cp", "p_request"
        msg = self._receive(self._transmit(self.patient.cp_request(self.now)))
        reply, reports = self._receive(self._transmit(msg))
        self.recovered = reports
        self._receive(self._transmit(reply))

    def _run_replays(self):
        replays = [f for faults in self._faults.values() for f in faults
                   if f.action == FAULT_REPLAY]
        for fault in sorted(replays, key=lambda f: f.target):
            if fault.target >= len(self.transcript):
                continue  # session aborted before the target was sent
            original = self.transcript[fault.target]
            stale_at = original.sent_at + self.cfg.delta_t_ms + 1
            if self.now < stale_at:
                self.now = stale_at
            self.transcript.append(dataclasses.replace(original, sent_at=self.now))
            try:
                self._receive(original.payload)
            except ProtocolError as exc:
                self.replay_rejections.append((fault.target, type(exc).__name__))
            else:
                self.replay_rejections.append((fault.target, None))


def run_full_session(cfg: ScenarioConfig) -> SessionOutcome:
    """Execute HUP, PUP, TP, CP in order, stopping at the first abort."""
    return _Session(cfg).run()


@dataclass
class CampaignStats:
    sessions: int
    completions: int
    aborts_by_error: dict
    aborts_by_step: dict
    key_agreements: int
    reports_recovered: int
    first_seed: int
    variant: str

    def to_dict(self) -> dict:
        return {
            "sessions": self.sessions,
            "completions": self.completions,
            "aborts_by_error": dict(sorted(self.aborts_by_error.items())),
            "aborts_by_step": dict(sorted(self.aborts_by_step.items())),
            "key_agreements": self.key_agreements,
            "reports_recovered": self.reports_recovered,
            "first_seed": self.first_seed,
            "variant": self.variant,
        }


def iter_campaign(base: ScenarioConfig, n_seeds: int):
    """Yield outcomes for n_seeds consecutive seeds, in seed order."""
    if n_seeds < 1:
        raise ValueError("n_seeds must be at least 1")
    for i in range(n_seeds):
        yield run_full_session(dataclasses.replace(base, seed=base.seed + i))


def run_campaign(base: ScenarioConfig, n_seeds: int) -> CampaignStats:
    stats = CampaignStats(sessions=0, completions=0, aborts_by_error={},
                          aborts_by_step={}, key_agreements=0,
                          reports_recovered=0, first_seed=base.seed,
                          variant=base.variant)
    for outcome in iter_campaign(base, n_seeds):
        stats.sessions += 1
        if outcome.completed:
            stats.completions += 1
        else:
            stats.aborts_by_error[outcome.abort.error] = (
                stats.aborts_by_error.get(outcome.abort.error, 0) + 1)
            step = f"{outcome.abort.phase}.{outcome.abort.step}"
            stats.aborts_by_step[step] = stats.aborts_by_step.get(step, 0) + 1
        keys = outcome.session_keys
        if all(keys[a] is not None and keys[a] == keys[b]
               for a, b in (("sk_hc", "sk_ch"), ("sk_pc", "sk_cp"), ("sk_dc", "sk_cd"))):
            stats.key_agreements += 1
        if outcome.recovered_reports is not None:
            stats.reports_recovered += 1
    return stats


# ── config file round trip ──────────────────────────────────────────────

def config_to_dict(cfg: ScenarioConfig) -> dict:
    return {
        "seed": cfg.seed,
        "delta_t_ms": cfg.delta_t_ms,
        "tick_ms": cfg.tick_ms,
        "variant": cfg.variant,
        "ids": {
            "patient": cfg.id_p.decode("utf-8"),
            "hospital": cfg.id_h.decode("utf-8"),
            "doctor": cfg.id_d.decode("utf-8"),
            "nid": cfg.nid.decode("utf-8"),
        },
        "payloads": {
            "m_h": cfg.payload_m_h.hex(),
            "m_b": cfg.payload_m_b.hex(),
        },
        "faults": [
            {"target": f.target, "action": f.action,
             "offset": f.offset, "delay_ms": f.delay_ms}
            for f in cfg.faults
        ],
    }


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    base = ScenarioConfig()
    try:
        ids = data.get("ids", {})
        payloads = data.get("payloads", {})
        faults = tuple(
            FaultInjection(target=int(f["target"]), action=str(f["action"]),
                           offset=int(f.get("offset", 0)),
                           delay_ms=int(f.get("delay_ms", 0)))
            for f in data.get("faults", ())
        )
        cfg = ScenarioConfig(
            seed=int(data.get("seed", base.seed)),
            delta_t_ms=int(data.get("delta_t_ms", base.delta_t_ms)),
            tick_ms=int(data.get("tick_ms", base.tick_ms)),
            variant=str(data.get("variant", base.variant)),
            id_p=ids.get("patient", base.id_p.decode()).encode("utf-8"),
            id_h=ids.get("hospital", base.id_h.decode()).encode("utf-8"),
            id_d=ids.get("doctor", base.id_d.decode()).encode("utf-8"),
            nid=ids.get("nid", base.nid.decode()).encode("utf-8"),
            payload_m_h=bytes.fromhex(payloads["m_h"]) if "m_h" in payloads
            else base.payload_m_h,
            payload_m_b=bytes.fromhex(payloads["m_b"]) if "m_b" in payloads
            else base.payload_m_b,
            faults=faults,
        )
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ValueError(f"bad config: {exc}") from None
    cfg.validate()
    return cfg


def load_config(path: str) -> ScenarioConfig:
    with open(path, "rb") as fh:
        try:
            data = json.loads(fh.read())
        except ValueError as exc:
            raise ValueError(f"config is not valid JSON: {exc}") from None
    return config_from_dict(data)


# ── artifact (de)serialization ──────────────────────────────────────────

def _ct_json(ct: Ciphertext) -> dict:
    return {"nonce": ct.nonce.hex(), "body": ct.body.hex(), "tag": ct.tag.hex()}


def _ct_from_json(data: dict) -> Ciphertext:
    return Ciphertext(nonce=bytes.fromhex(data["nonce"]),
                      body=bytes.fromhex(data["body"]),
                      tag=bytes.fromhex(data["tag"]))


def record_to_dict(record: CloudRecord) -> dict:
    out = {
        "type": "cloud_record",
        "nid": record.nid.hex(),
        "id_p": record.id_p.hex(),
        "sn": record.sn.to_bytes().hex(),
        "sig_h": record.sig_h.hex(),
        "c_h": _ct_json(record.c_h),
    }
    for name in ("sig_p", "sig_d"):
        value = getattr(record, name)
        out[name] = value.hex() if value is not None else None
    for name in ("c_p", "c_d", "c_e"):
        value = getattr(record, name)
        out[name] = _ct_json(value) if value is not None else None
    return out


def record_from_dict(data: dict) -> CloudRecord:
    try:
        return CloudRecord(
            nid=bytes.fromhex(data["nid"]),
            id_p=bytes.fromhex(data["id_p"]),
            sn=Scalar.from_bytes(bytes.fromhex(data["sn"])),
            sig_h=bytes.fromhex(data["sig_h"]),
            c_h=_ct_from_json(data["c_h"]),
            sig_p=bytes.fromhex(data["sig_p"]) if data.get("sig_p") else None,
            c_p=_ct_from_json(data["c_p"]) if data.get("c_p") else None,
            sig_d=bytes.fromhex(data["sig_d"]) if data.get("sig_d") else None,
            c_d=_ct_from_json(data["c_d"]) if data.get("c_d") else None,
            c_e=_ct_from_json(data["c_e"]) if data.get("c_e") else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad cloud record: {exc}") from None


def _session_value_json(value):
    if isinstance(value, Scalar):
        return {"scalar": value.to_bytes().hex()}
    if isinstance(value, (bytes, bytearray)):
        return {"bytes": bytes(value).hex()}
    if isinstance(value, int):
        return {"int": value}
    if isinstance(value, dict):
        return {"map": {k.hex(): v.hex() for k, v in value.items()}}
    raise TypeError(f"cannot export session value of type {type(value).__name__}")


def _session_value_from_json(data):
    if "scalar" in data:
        return Scalar.from_bytes(bytes.fromhex(data["scalar"]))
    if "bytes" in data:
        return bytes.fromhex(data["bytes"])
    if "int" in data:
        return int(data["int"])
    if "map" in data:
        return {bytes.fromhex(k): bytes.fromhex(v) for k, v in data["map"].items()}
    raise ValueError("unrecognised session value")


def session_values_to_dict(values: dict) -> dict:
    return {"type": "cloud_session_state",
            "values": {k: _session_value_json(v) for k, v in sorted(values.items())}}


def session_values_from_dict(data: dict) -> dict:
    return {k: _session_value_from_json(v) for k, v in data["values"].items()}


def cloud_db_to_jsonl(outcome: SessionOutcome) -> bytes:
    lines = [json.dumps(record_to_dict(r), sort_keys=True, separators=(",", ":"))
             for r in outcome.cloud_db]
    lines.append(json.dumps(session_values_to_dict(outcome.cloud_session),
                            sort_keys=True, separators=(",", ":")))
    return ("\n".join(lines) + "\n").encode()


def cloud_db_from_jsonl(data: bytes):
    """Parse a db export into (records, session_values)."""
    records, session = [], {}
    for line in data.splitlines():
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except ValueError as exc:
            raise ValueError(f"bad db line: {exc}") from None
        if obj.get("type") == "cloud_record":
            records.append(record_from_dict(obj))
        elif obj.get("type") == "cloud_session_state":
            session = session_values_from_dict(obj)
        else:
            raise ValueError(f"unknown db line type {obj.get('type')!r}")
    return records, session


def registry_to_dict(outcome: SessionOutcome) -> dict:
    d = outcome.directory
    return {
        "id_h": d.id_h.hex(),
        "id_d": d.id_d.hex(),
        "pk_h": d.pk_h.encode().hex(),
        "pk_p": d.pk_p.encode().hex(),
        "pk_d": d.pk_d.encode().hex(),
        "variant": outcome.config.variant,
        "delta_t_ms": outcome.config.delta_t_ms,
        "tick_ms": outcome.config.tick_ms,
    }


def registry_from_dict(data: dict) -> dict:
    try:
        return {
            "id_h": bytes.fromhex(data["id_h"]),
            "id_d": bytes.fromhex(data["id_d"]),
            "pk_h": GroupPoint.decode(bytes.fromhex(data["pk_h"])),
            "pk_p": GroupPoint.decode(bytes.fromhex(data["pk_p"])),
            "pk_d": GroupPoint.decode(bytes.fromhex(data["pk_d"])),
            "variant": str(data["variant"]),
            "delta_t_ms": int(data["delta_t_ms"]),
            "tick_ms": int(data["tick_ms"]),
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad registry: {exc}") from None


def outcome_to_dict(outcome: SessionOutcome) -> dict:
    reports = None
    if outcome.recovered_reports is not None:
        reports = [{"kind": r.kind, "patient": r.patient.hex(),
                    "payload": r.payload.hex()} for r in outcome.recovered_reports]
    return {
        "seed": outcome.config.seed,
        "variant": outcome.config.variant,
        "completed": outcome.completed,
        "abort": dataclasses.asdict(outcome.abort) if outcome.abort else None,
        "session_keys": {k: (v.hex() if v is not None else None)
                         for k, v in sorted(outcome.session_keys.items())},
        "recovered_reports": reports,
        "replay_rejections": [list(r) for r in outcome.replay_rejections],
        "records_stored": len(outcome.cloud_db),
        "messages": len(outcome.transcript),
    }


TRANSCRIPT_FILE = "transcript.jsonl"
CLOUD_DB_FILE = "cloud_db.jsonl"
REGISTRY_FILE = "registry.json"
OUTCOME_FILE = "outcome.json"


def write_artifacts(outcome: SessionOutcome, outdir: str) -> None:
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, TRANSCRIPT_FILE), "wb") as fh:
        fh.write(outcome.transcript.to_jsonl())
    with open(os.path.join(outdir, CLOUD_DB_FILE), "wb") as fh:
        fh.write(cloud_db_to_jsonl(outcome))
    for name, payload in ((REGISTRY_FILE, registry_to_dict(outcome)),
                          (OUTCOME_FILE, outcome_to_dict(outcome))):
        with open(os.path.join(outdir, name), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
