"""The wine registry contract as a deterministic state machine.

Methods mirror the deployed contract: a member registry guarded by the
consortium administrator, a per-wine record registry with role modifiers and
``require``-style checks, and proxy-style upgrades that swap the
implementation version without touching storage.

Every state-changing method authenticates its caller with a recoverable
signature over the method name followed by its arguments in declared order
(fixed-width encodings, so the concatenation is unambiguous).
"""

from __future__ import annotations

import copy
import enum
from dataclasses import asdict, dataclass, field
from typing import Callable

from .canonical import canonical_json, hex32, key_of
from .crypto import is_address, recover_address
from .errors import (
    AlreadyRegistered,
    DuplicateWine,
    InvalidSignature,
    NonMonotonicVersion,
    ReapplicationDetected,
    SignatureMismatch,
    Unauthorized,
    UnknownMember,
    UnknownWine,
    WinetraceError,
)
from .ledger.chain import Receipt, Transaction, payload_bytes
from .ledger.gas import DEFAULT_SCHEDULE, GasSchedule, SlotWrites, tx_gas
from .store import parse_hash


class Role(str, enum.Enum):
    WINEMAKER = "WINEMAKER"
    SUPPLY_CHAIN_PARTICIPANT = "SUPPLY_CHAIN_PARTICIPANT"
    WINE_CONSUMER = "WINE_CONSUMER"
    CONSORTIUM_ADMIN = "CONSORTIUM_ADMIN"


@dataclass
class RecordSlot:
    content_hash: str
    tag_key: str
    write_count: int
    owner: str
    creator: str


@dataclass
class RegistryState:
    admin: str
    version: int = 1
    members: dict[str, Role] = field(default_factory=dict)
    records: dict[str, RecordSlot] = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {
            "admin": self.admin,
            "version": self.version,
            "members": {a: r.value for a, r in sorted(self.members.items())},
            "records": {k: asdict(s) for k, s in sorted(self.records.items())},
        }

    def digest(self) -> str:
        return hex32(canonical_json(self.to_doc()))


@dataclass(frozen=True)
class GasReceipt:
    method: str
    gas: int
    tx_hash: str
    block_number: int | None = None


# -- method table: storage footprint and event shape ------------------------

CREATE = "createWineRecord"
APPEND = "appendWineRecord"
TRANSFER = "transferRecord"
REPLACE_TAG = "replaceTag"
REGISTER = "registerMember"
UPGRADE = "upgradeContract"

# method -> (new slots, reset slots, event topics, event data bytes)
METHOD_SLOTS: dict[str, tuple[int, int, int, int]] = {
    REGISTER: (1, 0, 2, 32),
    CREATE: (4, 0, 3, 64),
    APPEND: (0, 2, 2, 64),
    TRANSFER: (0, 1, 3, 0),
    REPLACE_TAG: (0, 2, 2, 32),
    UPGRADE: (0, 1, 1, 32),
}


def transaction_gas(method: str, args: dict, schedule: GasSchedule = DEFAULT_SCHEDULE) -> int:
    try:
        new, reset, topics, data = METHOD_SLOTS[method]
    except KeyError:
        raise ValueError(f"unknown contract method {method!r}") from None
    return tx_gas(
        SlotWrites(new, reset, payload_bytes(method, args), events=1, event_topics=topics, event_data_bytes=data),
        schedule,
    )


def make_transaction(sender: str, method: str, args: dict) -> Transaction:
    return Transaction.create(sender, method, args, transaction_gas(method, args))


# -- signed messages ---------------------------------------------------------


def _b32(hexstr: str) -> bytes:
    raw = bytes.fromhex(hexstr.removeprefix("0x"))
    if len(raw) != 32:
        raise ValueError("expected a 32-byte key")
    return raw


def _addr(address: str) -> bytes:
    if not is_address(address):
        raise UnknownMember(f"malformed address {address!r}")
    return bytes.fromhex(address[2:])


def signed_message(method: str, *parts: str | int) -> bytes:
    """Method name, then each argument in declared order at fixed width."""
    out = [method.encode("ascii"), b"\x00"]
    for part in parts:
        if isinstance(part, int):
            out.append(part.to_bytes(8, "big"))
        elif part.startswith("0x") and len(part) == 66:
            out.append(_b32(part))
        elif part.startswith("0x") and len(part) == 42:
            out.append(_addr(part))
        else:
            out.append(part.encode("ascii"))
    return b"".join(out)


def create_message(wine_key: str, tag_key: str, content_hash: str) -> bytes:
    return signed_message(CREATE, wine_key, tag_key, content_hash)


def append_message(wine_key: str, content_hash: str, expected_write_count: int) -> bytes:
    return signed_message(APPEND, wine_key, content_hash, expected_write_count)


def transfer_message(wine_key: str, new_owner: str) -> bytes:
    return signed_message(TRANSFER, wine_key, new_owner)


def replace_tag_message(wine_key: str, new_tag_key: str) -> bytes:
    return signed_message(REPLACE_TAG, wine_key, new_tag_key)


def wine_key_of(wine_id: str) -> str:
    return key_of(wine_id)


def tag_key_of(tag_id: str) -> str:
    return key_of(tag_id)


# -- the contract ------------------------------------------------------------


class Registry:
    """Contract storage plus its method dispatch.

    Methods raise guard errors and leave state untouched on failure: every
    check runs before the first write.
    """

    def __init__(self, admin: str, version: int = 1) -> None:
        self.state = RegistryState(admin=admin, version=version, members={admin: Role.CONSORTIUM_ADMIN})

    def copy(self) -> "Registry":
        return copy.deepcopy(self)

    # modifiers / requires
    def _role(self, caller: str) -> Role:
        role = self.state.members.get(caller)
        if role is None:
            raise Unauthorized(f"{caller} is not a registered member")
        return role

    def _only(self, caller: str, *roles: Role) -> None:
        if self._role(caller) not in roles:
            raise Unauthorized(f"{caller} lacks role {'/'.join(r.value for r in roles)}")

    def _slot(self, wine_key: str) -> RecordSlot:
        slot = self.state.records.get(wine_key)
        if slot is None:
            raise UnknownWine(wine_key)
        return slot

    @staticmethod
    def _require_signer(message: bytes, sig: str, caller: str) -> None:
        try:
            signer = recover_address(message, bytes.fromhex(sig.removeprefix("0x")))
        except (InvalidSignature, ValueError) as exc:
            raise SignatureMismatch(f"signature invalid: {exc}") from exc
        if signer != caller:
            raise SignatureMismatch(f"signature recovers to {signer}, caller is {caller}")

    # state-changing methods ---------------------------------------------

    def register_member(self, caller: str, address: str, role: Role | str) -> list[dict]:
        role = Role(role)
        self._only(caller, Role.CONSORTIUM_ADMIN)
        if role is Role.CONSORTIUM_ADMIN:
            raise Unauthorized("administrators are not registered in bulk")
        _addr(address)
        if address in self.state.members:
            raise AlreadyRegistered(address)
        self.state.members[address] = role
        return [{"event": "MemberRegistered", "sender": caller, "member": address, "role": role.value}]

    def create_wine_record(self, caller: str, wine_key: str, tag_key: str, content_hash: str, sig: str) -> list[dict]:
        self._only(caller, Role.WINEMAKER)
        parse_hash(content_hash)
        self._require_signer(create_message(wine_key, tag_key, content_hash), sig, caller)
        if wine_key in self.state.records:
            raise DuplicateWine(wine_key)
        self.state.records[wine_key] = RecordSlot(content_hash, tag_key, 1, caller, caller)
        return [{"event": "RecordCreated", "sender": caller, "wine_key": wine_key,
                 "content_hash": content_hash, "write_count": 1}]

    def append_wine_record(
        self, caller: str, wine_key: str, new_content_hash: str, expected_write_count: int, sig: str
    ) -> list[dict]:
        role = self._role(caller)
        slot = self._slot(wine_key)
        if caller != slot.owner and role is not Role.SUPPLY_CHAIN_PARTICIPANT:
            raise Unauthorized(f"{caller} may not append to {wine_key}")
        parse_hash(new_content_hash)
        self._require_signer(append_message(wine_key, new_content_hash, expected_write_count), sig, caller)
        if expected_write_count != slot.write_count:
            raise ReapplicationDetected(f"write count {expected_write_count} != on-chain {slot.write_count}")
        slot.content_hash = new_content_hash
        slot.write_count += 1
        return [{"event": "RecordAppended", "sender": caller, "wine_key": wine_key,
                 "content_hash": new_content_hash, "write_count": slot.write_count}]

    def transfer_record(self, caller: str, wine_key: str, new_owner: str, sig: str) -> list[dict]:
        role = self._role(caller)
        slot = self._slot(wine_key)
        if caller != slot.owner:
            raise Unauthorized(f"{caller} does not own {wine_key}")
        self._require_signer(transfer_message(wine_key, new_owner), sig, caller)
        target = self.state.members.get(new_owner)
        if target is None:
            raise UnknownMember(new_owner)
        if target is Role.WINE_CONSUMER and role is not Role.SUPPLY_CHAIN_PARTICIPANT:
            raise Unauthorized("only supply-chain participants hand wine to consumers")
        if target is Role.CONSORTIUM_ADMIN:
            raise Unauthorized("the administrator does not hold wine")
        slot.owner = new_owner
        return [{"event": "RecordTransferred", "sender": caller, "wine_key": wine_key, "new_owner": new_owner}]

    def replace_tag(self, caller: str, wine_key: str, new_tag_key: str, sig: str) -> list[dict]:
        self._only(caller, Role.WINEMAKER)
        slot = self._slot(wine_key)
        if caller != slot.creator:
            raise Unauthorized(f"only the creating winemaker may replace the tag of {wine_key}")
        self._require_signer(replace_tag_message(wine_key, new_tag_key), sig, caller)
        slot.tag_key = new_tag_key
        slot.write_count += 1
        return [{"event": "TagReplaced", "sender": caller, "wine_key": wine_key, "write_count": slot.write_count}]

    def upgrade_contract(self, caller: str, new_version: int) -> list[dict]:
        self._only(caller, Role.CONSORTIUM_ADMIN)
        if caller != self.state.admin:
            raise Unauthorized("only the deploying administrator upgrades")
        if new_version <= self.state.version:
            raise NonMonotonicVersion(f"{new_version} <= {self.state.version}")
        self.state.version = new_version
        return [{"event": "Upgraded", "sender": caller, "version": new_version}]

    # read-only ------------------------------------------------------------

    def validate_on_chain(self, wine_key: str, tag_key: str, content_hash: str, write_count: int) -> bool:
        slot = self._slot(wine_key)
        return (slot.tag_key, slot.content_hash, slot.write_count) == (tag_key, content_hash, write_count)

    def slot(self, wine_key: str) -> RecordSlot:
        return copy.copy(self._slot(wine_key))

    def role_of(self, address: str) -> Role | None:
        return self.state.members.get(address)

    def digest(self) -> str:
        return self.state.digest()

    # transaction dispatch -------------------------------------------------

    def _dispatch(self) -> dict[str, Callable[..., list[dict]]]:
        # every implementation version exposes the same ABI over the same storage
        return {
            REGISTER: lambda s, a: self.register_member(s, a["address"], a["role"]),
            CREATE: lambda s, a: self.create_wine_record(s, a["wine_key"], a["tag_key"], a["content_hash"], a["sig"]),
            APPEND: lambda s, a: self.append_wine_record(
                s, a["wine_key"], a["content_hash"], a["expected_write_count"], a["sig"]
            ),
            TRANSFER: lambda s, a: self.transfer_record(s, a["wine_key"], a["new_owner"], a["sig"]),
            REPLACE_TAG: lambda s, a: self.replace_tag(s, a["wine_key"], a["tag_key"], a["sig"]),
            UPGRADE: lambda s, a: self.upgrade_contract(s, a["version"]),
        }

    def apply(self, tx: Transaction, block_number: int, strict: bool = False) -> Receipt:
        """Execute ``tx``. A failed call reverts: state untouched, receipt marks
        the error. ``strict`` re-raises instead."""
        handler = self._dispatch().get(tx.method)
        try:
            if handler is None:
                raise ValueError(f"unknown method {tx.method!r}")
            events = handler(tx.sender, tx.args)
        except (WinetraceError, KeyError, TypeError, ValueError) as exc:
            if strict:
                raise
            return Receipt(tx.hash, False, type(exc).__name__)
        return Receipt(tx.hash, True, None, tuple(events))


# -- transaction builders ------------------------------------------------------


def register_tx(caller: str, address: str, role: Role) -> Transaction:
    return make_transaction(caller, REGISTER, {"address": address, "role": Role(role).value})


def create_tx(caller: str, wine_key: str, tag_key: str, content_hash: str, sig: bytes) -> Transaction:
    return make_transaction(
        caller, CREATE, {"wine_key": wine_key, "tag_key": tag_key, "content_hash": content_hash, "sig": sig.hex()}
    )


def append_tx(caller: str, wine_key: str, content_hash: str, expected_write_count: int, sig: bytes) -> Transaction:
    return make_transaction(
        caller,
        APPEND,
        {"wine_key": wine_key, "content_hash": content_hash, "expected_write_count": expected_write_count,
         "sig": sig.hex()},
    )


def transfer_tx(caller: str, wine_key: str, new_owner: str, sig: bytes) -> Transaction:
    return make_transaction(caller, TRANSFER, {"wine_key": wine_key, "new_owner": new_owner, "sig": sig.hex()})


def replace_tag_tx(caller: str, wine_key: str, new_tag_key: str, sig: bytes) -> Transaction:
    return make_transaction(caller, REPLACE_TAG, {"wine_key": wine_key, "tag_key": new_tag_key, "sig": sig.hex()})


def upgrade_tx(caller: str, version: int) -> Transaction:
    return make_transaction(caller, UPGRADE, {"version": version})
