"""MAC layer: per-user Reed-Solomon erasure coding, message recovery and
MAC-layer bridging over stored lone PNC equations.

A message of ``L`` packets is spread over up to ``n_max`` packets with a
systematic RS code over GF(2^8): packet ``i`` is the evaluation at point
``i - 1`` of the degree < L polynomial that interpolates the message chunks,
applied column-wise (one byte column at a time). Any ``L`` distinct packets
recover the message.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from . import gf256
from .phy import DecodedEquation, phy_bridge

log = logging.getLogger(__name__)

MAX_PACKETS = 256


@dataclass(frozen=True)
class Message:
    user: str
    msg_id: int
    data: bytes
    n_packets: int  # L_s

    def __post_init__(self):
        if self.n_packets < 1 or len(self.data) % self.n_packets:
            raise ValueError(f"{len(self.data)} bytes do not split into {self.n_packets} packets")

    @property
    def packet_bytes(self) -> int:
        return len(self.data) // self.n_packets

    def chunks(self) -> np.ndarray:
        return np.frombuffer(self.data, dtype=np.uint8).reshape(self.n_packets, -1)


@lru_cache(maxsize=None)
def generator_matrix(n_packets: int, n_max: int) -> np.ndarray:
    """(n_max, L) systematic generator: Vandermonde rows times the inverse of its top block."""
    if not 1 <= n_packets <= n_max <= MAX_PACKETS:
        raise ValueError(f"need 1 <= L <= n_max <= {MAX_PACKETS}, got L={n_packets}, n_max={n_max}")
    vander = np.array([[gf256.power(x, j) for j in range(n_packets)] for x in range(n_max)],
                      dtype=np.uint8)
    gen = gf256.matmul(vander, gf256.mat_inv(vander[:n_packets]))
    gen.setflags(write=False)
    return gen


def rs_encode(msg: Message, index: int, n_max: int) -> np.ndarray:
    """Packet ``index`` (1-based) of the message's RS stream as a uint8 array."""
    if not 1 <= index <= n_max:
        raise IndexError(f"packet index {index} outside 1..{n_max}")
    chunks = msg.chunks()
    if index <= msg.n_packets:
        return chunks[index - 1].copy()
    gen = generator_matrix(msg.n_packets, n_max)
    return gf256.matmul(gen[index - 1: index], chunks)[0]


def rs_encode_all(msg: Message, n_max: int) -> np.ndarray:
    """All n_max packets, shape (n_max, packet_bytes)."""
    return gf256.matmul(generator_matrix(msg.n_packets, n_max), msg.chunks())


def rs_decode(packets: Mapping[int, np.ndarray] | Iterable[tuple[int, np.ndarray]], n_packets: int,
              n_max: int, user: str = "", msg_id: int = 0) -> Message | None:
    """Recover the message from any ``n_packets`` distinct indices; ``None`` if too few.

    Repeated indices count once.
    """
    items = packets.items() if isinstance(packets, Mapping) else packets
    distinct: dict[int, np.ndarray] = {}
    for idx, payload in items:
        distinct.setdefault(int(idx), np.asarray(payload, dtype=np.uint8))
    if len(distinct) < n_packets:
        return None
    idx = sorted(distinct)[:n_packets]
    rows = np.stack([distinct[i] for i in idx])
    if idx == list(range(1, n_packets + 1)):
        data = rows
    else:
        gen = generator_matrix(n_packets, n_max)
        data = gf256.matmul(gf256.mat_inv(gen[np.array(idx) - 1]), rows)
    return Message(user, msg_id, data.tobytes(), n_packets)


# ---------------------------------------------------------------------------
# receiver state and bridging

@dataclass(frozen=True)
class Coord:
    """Which RS packets of which message an unknown carried in a slot."""

    user: str
    msg_id: int
    indices: tuple[int, ...]


@dataclass(frozen=True)
class RecoveredPacket:
    user: str
    msg_id: int
    index: int
    payload: np.ndarray = field(repr=False)


@dataclass
class UserRx:
    user: str
    n_packets: int
    n_max: int
    msg_id: int = 0
    packets: dict[int, np.ndarray] = field(default_factory=dict)
    decoded: dict[int, Message] = field(default_factory=dict)

    def start(self, msg_id: int) -> None:
        self.msg_id = msg_id
        self.packets = {}


@dataclass
class SlotRecord:
    coords: tuple[Coord, ...]
    equations: list[DecodedEquation]


class EquationStore:
    """Receiver-side MAC state: packets gathered per user and lone equations per slot."""

    def __init__(self, users: Mapping[str, tuple[int, int]]):
        # users: name -> (L, n_max)
        self.users = {u: UserRx(u, L, n) for u, (L, n) in users.items()}
        self.slots: dict[int, SlotRecord] = {}
        self.decoded_log: list[Message] = []

    def start_message(self, user: str, msg_id: int) -> None:
        self.users[user].start(msg_id)

    def is_live(self, user: str, msg_id: int) -> bool:
        rx = self.users[user]
        return rx.msg_id == msg_id and msg_id not in rx.decoded

    def deliver(self, user: str, msg_id: int, index: int, payload: np.ndarray) -> tuple[bool, Message | None]:
        """Add one native packet. Returns (was new, message if it just became decodable)."""
        rx = self.users[user]
        if not self.is_live(user, msg_id) or index in rx.packets:
            return False, None
        rx.packets[index] = np.asarray(payload, dtype=np.uint8)
        if len(rx.packets) < rx.n_packets:
            return True, None
        msg = rs_decode(rx.packets, rx.n_packets, rx.n_max, user, msg_id)
        rx.decoded[msg_id] = msg
        self.decoded_log.append(msg)
        return True, msg

    def deliver_unknown(self, coord: Coord, payload: np.ndarray) -> tuple[list[RecoveredPacket], list[Message]]:
        """Deliver a native unknown, splitting it into its RS packets."""
        parts = np.split(np.asarray(payload, dtype=np.uint8), len(coord.indices))
        new, done = [], []
        for index, part in zip(coord.indices, parts):
            added, msg = self.deliver(coord.user, coord.msg_id, index, part)
            if added:
                new.append(RecoveredPacket(coord.user, coord.msg_id, index, part))
            if msg is not None:
                done.append(msg)
        return new, done

    def store(self, slot: int, coords: tuple[Coord, ...], equations: list[DecodedEquation]) -> None:
        """Keep a slot's unresolved equations, dropping any whose unknowns are all settled."""
        keep = []
        for eq in equations:
            live = [j for j, c in enumerate(eq.coeffs) if c]
            if any(self.is_live(coords[j].user, coords[j].msg_id) for j in live):
                keep.append(eq)
        if keep:
            self.slots[slot] = SlotRecord(coords, keep)

    def purge(self, user: str, msg_id: int) -> int:
        """Drop equations touching an abandoned message; returns how many went."""
        dropped = 0
        for slot in list(self.slots):
            rec = self.slots[slot]
            keep = [eq for eq in rec.equations if not _touches(eq, rec.coords, user, msg_id)]
            dropped += len(rec.equations) - len(keep)
            if keep:
                rec.equations = keep
            else:
                del self.slots[slot]
        return dropped

    def slots_referencing(self, user: str, msg_id: int) -> list[int]:
        return [s for s, rec in self.slots.items()
                if any(c.user == user and c.msg_id == msg_id for c in rec.coords)]

    def n_equations(self) -> int:
        return sum(len(r.equations) for r in self.slots.values())


def _touches(eq: DecodedEquation, coords, user: str, msg_id: int) -> bool:
    return any(c and coords[j].user == user and coords[j].msg_id == msg_id for j, c in enumerate(eq.coeffs))


def mac_bridge(store: EquationStore, newly_decoded: Message) -> list[RecoveredPacket]:
    """Substitute a decoded message into stored equations and cascade to a fixed point.

    The decoded message is re-encoded, its packets are XORed out of every
    stored equation that references it, and each touched slot is re-eliminated.
    Natives that fall out go to their users; any message that becomes
    decodable is queued and bridged in turn.
    """
    recovered: list[RecoveredPacket] = []
    queue = deque([newly_decoded])
    regenerated: dict[tuple[str, int], np.ndarray] = {}
    while queue:
        msg = queue.popleft()
        key = (msg.user, msg.msg_id)
        if key in regenerated:
            continue
        rx = store.users[msg.user]
        regenerated[key] = rs_encode_all(msg, rx.n_max)
        packets = regenerated[key]
        for slot in store.slots_referencing(*key):
            rec = store.slots.pop(slot)
            substituted = []
            for eq in rec.equations:
                mask, payload = eq.mask, eq.payload
                for j, c in enumerate(eq.coeffs):
                    coord = rec.coords[j]
                    if c and (coord.user, coord.msg_id) == key:
                        payload = payload ^ np.concatenate([packets[i - 1] for i in coord.indices])
                        mask &= ~(1 << j)
                if mask:
                    coeffs = tuple((mask >> j) & 1 for j in range(len(eq.coeffs)))
                    substituted.append(DecodedEquation(coeffs, payload, slot=slot, source=eq.source))
            outcome = phy_bridge(substituted)
            for j, payload in outcome.natives.items():
                new, done = store.deliver_unknown(rec.coords[j], payload)
                recovered.extend(new)
                queue.extend(done)
            store.store(slot, rec.coords, outcome.unresolved)
    return recovered
