"""Transmission-mode representation and candidate-set generation.

A mode assigns each antenna port a served user index (1-based) or 0 for
off. Two generation strategies are provided: exhaustive enumeration of
every admissible assignment, and the reduced nearest-user construction
whose candidate count depends only on the number of ports.
"""

from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CapacityError
from .geometry import PathlossMatrix

# Exhaustive enumeration refuses to materialize more than this many
# raw assignment vectors.
IDEAL_ENUMERATION_BUDGET = 10_000_000


class DegenerateGeometryWarning(UserWarning):
    """A geometry's nearest-user map sends every port to one user."""


@dataclass(frozen=True)
class TransmissionMode:
    """Port-to-user assignment vector with derived support sets.

    ``assignment[j]`` is the user served by port j (0 = port off). User
    indices are 1-based to match the rendered labels; port indices in the
    derived sets are 0-based column indices into the pathloss matrix.
    """

    assignment: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.assignment:
            raise ValueError("assignment must be non-empty")
        if any(u < 0 or u != int(u) for u in self.assignment):
            raise ValueError(f"assignment entries must be integers >= 0, "
                             f"got {self.assignment}")
        object.__setattr__(self, "assignment", tuple(int(u) for u in self.assignment))

    @cached_property
    def support_sets(self) -> dict[int, frozenset[int]]:
        """Ports serving each active user: {user: {port indices}}."""
        sets: dict[int, set[int]] = {}
        for port, user in enumerate(self.assignment):
            if user != 0:
                sets.setdefault(user, set()).add(port)
        return {user: frozenset(ports) for user, ports in sets.items()}

    @cached_property
    def active_ports(self) -> frozenset[int]:
        return frozenset(port for port, user in enumerate(self.assignment) if user != 0)

    @cached_property
    def complements(self) -> dict[int, frozenset[int]]:
        """Interfering ports per active user: active ports serving others."""
        return {user: self.active_ports - ports
                for user, ports in self.support_sets.items()}

    @property
    def n_active_users(self) -> int:
        return len(self.support_sets)

    @property
    def n_active_ports(self) -> int:
        return len(self.active_ports)

    @property
    def label(self) -> str:
        """Render as ``[u1 u2 ... uN]``, the format used in CSV and logs."""
        return "[" + " ".join(str(u) for u in self.assignment) + "]"

    @classmethod
    def from_label(cls, text: str) -> "TransmissionMode":
        body = text.strip()
        if body.startswith("[") and body.endswith("]"):
            body = body[1:-1]
        try:
            entries = tuple(int(tok) for tok in body.split())
        except ValueError as exc:
            raise ValueError(f"cannot parse mode label {text!r}") from exc
        if not entries:
            raise ValueError(f"cannot parse mode label {text!r}")
        return cls(entries)


class Origin(enum.Enum):
    IDEAL = "ideal"
    MIN_DISTANCE = "min-distance"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class CandidateSet:
    modes: tuple[TransmissionMode, ...]
    origin: Origin

    def __post_init__(self) -> None:
        assignments = [m.assignment for m in self.modes]
        if len(set(assignments)) != len(assignments):
            raise ValueError("duplicate modes in candidate set")
        if self.origin is Origin.IDEAL:
            # The exhaustive set never serves one user with fewer than all
            # ports; the reduced set may (shared nearest users), but keeps
            # at least two active ports.
            for m in self.modes:
                if m.n_active_users == 0:
                    raise ValueError("all-off mode not admissible")
                if (m.n_active_users == 1
                        and m.n_active_ports < len(m.assignment)):
                    raise ValueError(f"partial-port single-user mode {m.label} "
                                     "not admissible")
        elif self.origin is Origin.MIN_DISTANCE:
            for m in self.modes:
                if m.n_active_users == 0:
                    raise ValueError("all-off mode not admissible")
                if (m.n_active_users == 1 and m.n_active_ports == 1
                        and len(m.assignment) > 1):
                    raise ValueError(f"single-port mode {m.label} not admissible")

    def __len__(self) -> int:
        return len(self.modes)

    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.modes)


def ideal_count(n_ports: int, n_users: int) -> int:
    """Closed-form size of the exhaustive candidate set.

    All (K+1)^N assignments, minus the all-off vector, minus single-user
    assignments that leave at least one port off (K*(2^N - 2) of them):
    serving one user with fewer than all N ports never beats using all N.
    """
    if n_ports < 1 or n_users < 1:
        raise ValueError("n_ports and n_users must be >= 1")
    return (n_users + 1) ** n_ports - n_users * (2 ** n_ports - 2) - 1


def min_distance_count(n_ports: int) -> int:
    """Closed-form size of the nearest-user candidate set: 2^N - N."""
    if n_ports < 1:
        raise ValueError("n_ports must be >= 1")
    return 2 ** n_ports - n_ports


def enumerate_ideal(n_ports: int, n_users: int,
                    budget: int = IDEAL_ENUMERATION_BUDGET) -> CandidateSet:
    """Every admissible assignment, in lexicographic order.

    Excluded: the all-off vector, and single-active-user assignments with
    any port off. Raises CapacityError when (K+1)^N exceeds ``budget``.
    """
    raw_size = (n_users + 1) ** n_ports
    if raw_size > budget:
        raise CapacityError(
            f"(K+1)^N = {raw_size} assignment vectors exceeds the enumeration "
            f"budget of {budget} for N={n_ports}, K={n_users}")
    out = []
    for assignment in itertools.product(range(n_users + 1), repeat=n_ports):
        active_users = {u for u in assignment if u != 0}
        if not active_users:
            continue
        n_active_ports = sum(1 for u in assignment if u != 0)
        if len(active_users) == 1 and n_active_ports < n_ports:
            continue
        out.append(TransmissionMode(assignment))
    return CandidateSet(modes=tuple(out), origin=Origin.IDEAL)


def nearest_user_assignment(pathloss: PathlossMatrix) -> tuple[int, ...]:
    """Per-port nearest user (1-based); distance ties go to the lowest index."""
    return tuple(int(np.argmin(pathloss.distances[:, j])) + 1
                 for j in range(pathloss.distances.shape[1]))


def enumerate_min_distance(pathloss: PathlossMatrix) -> CandidateSet:
    """Reduced candidate set built from the nearest-user base mode.

    Starting from the mode where each port serves its nearest user, every
    port on/off mask with more than one active port is kept; masks leaving
    a single port on are dropped, and one single-user mode serving the
    globally closest user with all ports is appended instead. Size is
    2^N - N whenever the appended mode is not already present (it can
    coincide with a mask result when every port shares one nearest user).
    """
    distances = pathloss.distances
    n_users, n_ports = distances.shape
    base = nearest_user_assignment(pathloss)

    seen: set[tuple[int, ...]] = set()
    for mask in range(1, 2 ** n_ports):
        candidate = tuple(base[j] if (mask >> j) & 1 else 0
                          for j in range(n_ports))
        if sum(1 for u in candidate if u != 0) > 1:
            seen.add(candidate)

    # Globally closest (user, port) pair; row-major argmin breaks ties
    # toward the lowest user index.
    i_star = int(np.unravel_index(np.argmin(distances), distances.shape)[0]) + 1
    single = (i_star,) * n_ports
    if single in seen:
        warnings.warn(
            "degenerate geometry: every port shares one nearest user, so the "
            "appended single-user mode duplicates a mask result and the "
            "candidate set is smaller than 2^N - N",
            DegenerateGeometryWarning, stacklevel=2)
    seen.add(single)

    ordered = tuple(TransmissionMode(a) for a in sorted(seen))
    return CandidateSet(modes=ordered, origin=Origin.MIN_DISTANCE)
