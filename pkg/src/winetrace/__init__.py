"""Deterministic simulator of a permissioned-ledger wine anti-counterfeiting system."""

from .consortium import (
    CentralizedBaseline,
    ChainSettings,
    Consortium,
    MemberSpec,
    Scenario,
    StageCosts,
    default_scenario,
    form_consortium,
    run_scenario,
)
from .crypto import KeyPair, KeyVault, generate_keypair, recover_address, sign
from .errors import ValidationFailed, WinetraceError
from .records import RejectionReason, WinePedigree, WineRecord, decode, encode
from .registry import Registry, Role
from .store import ContentStore, content_hash
from .validation import NfcTag, ValidationResult, three_layer_validate

__all__ = [
    "CentralizedBaseline",
    "ChainSettings",
    "Consortium",
    "ContentStore",
    "KeyPair",
    "KeyVault",
    "MemberSpec",
    "NfcTag",
    "Registry",
    "RejectionReason",
    "Role",
    "Scenario",
    "StageCosts",
    "ValidationFailed",
    "ValidationResult",
    "WinePedigree",
    "WineRecord",
    "WinetraceError",
    "content_hash",
    "decode",
    "default_scenario",
    "encode",
    "form_consortium",
    "generate_keypair",
    "recover_address",
    "run_scenario",
    "sign",
    "three_layer_validate",
]
