"""Collaboration scenarios: role assignment and advisory chunk ownership.

Four scenarios, always for groups of three editors:

A. parallel: everyone corrects everywhere, no delay
B. delayed: audio delays of 0, 10 and 20 seconds by join order
C. chunked: paragraph ownership rotates through all three editors
D. mixed: two correctors rotate, the third proofreads on a 10 s delay

Ownership is advisory only; the session never rejects an edit because it
falls outside the editor's chunk.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class ScenarioKind(str, Enum):
    A = "A"  # parallel
    B = "B"  # delayed
    C = "C"  # chunked
    D = "D"  # mixed


CORRECTOR = "corrector"
PROOFREADER = "proofreader"

#: Ownership value meaning "the whole document".
OWN_ALL = "all"

GROUP_SIZE = 3


class WrongGroupSize(ValueError):
    pass


class NonContiguousParagraph(ValueError):
    pass


@dataclass(frozen=True)
class RoleAssignment:
    user: int
    audio_delay_s: float
    role: str = CORRECTOR
    ownership: str | int = OWN_ALL  # OWN_ALL or a rotation slot index

    def to_dict(self) -> dict:
        return {
            "user": self.user,
            "audio_delay_s": self.audio_delay_s,
            "role": self.role,
            "ownership": self.ownership,
        }


def assign_roles(kind: ScenarioKind, users: list[int]) -> list[RoleAssignment]:
    """Deterministic role assignment by user join order."""
    if len(users) != GROUP_SIZE or len(set(users)) != GROUP_SIZE:
        raise WrongGroupSize(f"need exactly {GROUP_SIZE} distinct users, got {users}")
    if 0 in users:
        raise WrongGroupSize("author id 0 is reserved for the system")
    kind = ScenarioKind(kind)
    if kind is ScenarioKind.A:
        return [RoleAssignment(u, 0.0) for u in users]
    if kind is ScenarioKind.B:
        return [RoleAssignment(u, d) for u, d in zip(users, (0.0, 10.0, 20.0))]
    if kind is ScenarioKind.C:
        return [RoleAssignment(u, 0.0, ownership=slot) for slot, u in enumerate(users)]
    return [
        RoleAssignment(users[0], 0.0, ownership=0),
        RoleAssignment(users[1], 0.0, ownership=1),
        RoleAssignment(users[2], 10.0, role=PROOFREADER),
    ]


def rotation_members(assignments: list[RoleAssignment]) -> list[int]:
    """Users participating in chunk rotation, in slot order."""
    slotted = [a for a in assignments if isinstance(a.ownership, int)]
    return [a.user for a in sorted(slotted, key=lambda a: a.ownership)]


@dataclass
class ChunkMap:
    """Advisory paragraph ownership; entry k owns paragraph k."""
    members: tuple[int, ...]
    owners: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"members": list(self.members), "owners": list(self.owners)}


def advance_rotation(chunk_map: ChunkMap, new_paragraph_index: int) -> ChunkMap:
    if new_paragraph_index != len(chunk_map.owners):
        raise NonContiguousParagraph(
            f"expected paragraph {len(chunk_map.owners)}, got {new_paragraph_index}")
    owner = chunk_map.members[new_paragraph_index % len(chunk_map.members)]
    return ChunkMap(chunk_map.members, chunk_map.owners + [owner])


def chunk_owner(chunk_map: ChunkMap | None, doc_position: int,
                paragraph_index_of) -> int | str:
    """Owner of the paragraph containing doc_position; advisory only."""
    if chunk_map is None or not chunk_map.members:
        return OWN_ALL
    paragraph = paragraph_index_of(doc_position)
    if paragraph is None:
        return OWN_ALL
    if paragraph < len(chunk_map.owners):
        return chunk_map.owners[paragraph]
    return chunk_map.members[paragraph % len(chunk_map.members)]
