"""
Actantial model types: the six actant roles and their actors
"""

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence, Tuple

_WHITESPACE = re.compile(r"\s+")


class ActantRole(Enum):
    """The six actants in canonical order; the order drives every concatenation"""

    SUBJECT = "Subject"
    OBJECT = "Object"
    SENDER = "Sender"
    RECEIVER = "Receiver"
    HELPER = "Helper"
    OPPONENT = "Opponent"

    @property
    def code(self) -> str:
        return self.value[:2]

    @property
    def index(self) -> int:
        return ROLES.index(self)

    @classmethod
    def from_label(cls, label: str) -> Optional["ActantRole"]:
        key = label.strip().casefold()
        for role in cls:
            if role.value.casefold() == key:
                return role
        return None


ROLES: Tuple[ActantRole, ...] = tuple(ActantRole)


class RelationAxis(Enum):
    """Greimas' three relations; descriptive only"""

    DESIRE = "desire"
    COMMUNICATION = "communication"
    POWER = "power"

    @property
    def roles(self) -> Tuple[ActantRole, ...]:
        return _AXIS_ROLES[self]


_AXIS_ROLES = {
    RelationAxis.DESIRE: (ActantRole.SUBJECT, ActantRole.OBJECT),
    RelationAxis.COMMUNICATION: (ActantRole.SENDER, ActantRole.OBJECT, ActantRole.RECEIVER),
    RelationAxis.POWER: (ActantRole.HELPER, ActantRole.OPPONENT, ActantRole.SUBJECT),
}


def normalize_actor(text: str) -> str:
    """Trim and collapse internal whitespace"""
    return _WHITESPACE.sub(" ", text).strip()


def actor_key(text: str, casefold: bool = True) -> str:
    """Comparison key used for counting and syncretism detection"""
    normalized = normalize_actor(text)
    return normalized.casefold() if casefold else normalized


def role_pair_name(pair: Tuple[ActantRole, ActantRole]) -> str:
    return f"{pair[0].value}-{pair[1].value}"


def role_codes(roles: Iterable[ActantRole]) -> str:
    return "".join(role.code for role in sorted(roles, key=lambda r: r.index))


@dataclass(frozen=True)
class ActantialModel:
    """Actors per role; the primary actor of a role is its first actor"""

    actors: Mapping[ActantRole, Tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        cleaned: Dict[ActantRole, Tuple[str, ...]] = {}
        for role in ROLES:
            names = (normalize_actor(a) for a in self.actors.get(role, ()))
            cleaned[role] = tuple(name for name in names if name)
        object.__setattr__(self, "actors", cleaned)

    def primary(self, role: ActantRole) -> Optional[str]:
        names = self.actors[role]
        return names[0] if names else None

    @property
    def primaries(self) -> Dict[ActantRole, Optional[str]]:
        return {role: self.primary(role) for role in ROLES}

    def is_missing(self, role: ActantRole) -> bool:
        return not self.actors[role]

    @classmethod
    def from_primaries(cls, **primaries: Optional[str]) -> "ActantialModel":
        """Build a model from keyword primaries, e.g. subject="Israel" """
        actors: Dict[ActantRole, Sequence[str]] = {}
        for name, actor in primaries.items():
            role = ActantRole.from_label(name)
            if role is None:
                raise ValueError(f"unknown actant role {name!r}")
            actors[role] = (actor,) if actor else ()
        return cls(actors=actors)

    def to_dict(self) -> Dict[str, Any]:
        return {role.value: list(self.actors[role]) for role in ROLES}

    @classmethod
    def from_dict(cls, data: Mapping[str, Sequence[str]]) -> "ActantialModel":
        actors = {}
        for label, names in data.items():
            role = ActantRole.from_label(label)
            if role is not None:
                actors[role] = tuple(names)
        return cls(actors=actors)
