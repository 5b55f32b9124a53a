"""Cell layout, antenna-port placement, user drops, and pathloss gains."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

Coord = tuple[float, float]

# Ring radius of the circular port layout, as a fraction of cell radius.
RING_RADIUS_FACTOR = math.sqrt(3.0 / 7.0)

# Pathloss d**-p diverges for a user on top of a port; distances are
# clamped below at this value (in the same units as cell_radius).
MIN_DISTANCE = 0.01


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


@dataclass(frozen=True)
class Scenario:
    """Static problem description: counts, powers, and coordinates.

    ``user_positions`` may be None for a template scenario whose users
    are drawn later by :func:`drop_users_uniform`; every other field is
    fixed at construction. Port positions default to the circular layout.
    """

    n_ports: int
    n_users: int
    cell_radius: float
    pathloss_exponent: float
    tx_power: float
    noise_power: float = 1.0
    port_ring_radius: float | None = None
    port_positions: tuple[Coord, ...] | None = None
    user_positions: tuple[Coord, ...] | None = None

    def __post_init__(self) -> None:
        if self.n_ports < 1 or self.n_users < 1:
            raise ConfigError("n_ports and n_users must be >= 1")
        for name in ("cell_radius", "pathloss_exponent", "tx_power", "noise_power"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be strictly positive")
        if self.port_ring_radius is None:
            object.__setattr__(self, "port_ring_radius",
                               RING_RADIUS_FACTOR * self.cell_radius)
        if self.port_positions is None:
            object.__setattr__(self, "port_positions",
                               default_port_layout(self.n_ports, self.cell_radius,
                                                   self.port_ring_radius))
        elif len(self.port_positions) != self.n_ports:
            raise ConfigError(f"expected {self.n_ports} port positions, "
                              f"got {len(self.port_positions)}")
        if self.user_positions is not None:
            if len(self.user_positions) != self.n_users:
                raise ConfigError(f"expected {self.n_users} user positions, "
                                  f"got {len(self.user_positions)}")
            for x, y in self.user_positions:
                if math.hypot(x, y) > self.cell_radius * (1.0 + 1e-12):
                    raise ConfigError(f"user position ({x}, {y}) lies outside "
                                      f"the cell of radius {self.cell_radius}")

    @property
    def snr(self) -> float:
        """Transmit SNR = tx_power / noise_power (linear)."""
        return self.tx_power / self.noise_power

    def with_tx_power(self, tx_power: float) -> "Scenario":
        return replace(self, tx_power=tx_power)

    def with_snr_db(self, snr_db: float) -> "Scenario":
        return replace(self, tx_power=db_to_linear(snr_db) * self.noise_power)

    def with_users(self, user_positions: tuple[Coord, ...]) -> "Scenario":
        return replace(self, user_positions=tuple(user_positions))


@dataclass(frozen=True)
class PathlossMatrix:
    """Per-(user, port) Euclidean distances and large-scale gains d**-p."""

    distances: np.ndarray  # shape (K, N)
    gains: np.ndarray      # shape (K, N), distance**-pathloss_exponent


def default_port_layout(n_ports: int, cell_radius: float,
                        ring_radius: float | None = None) -> tuple[Coord, ...]:
    """Ports evenly spaced on a ring, port j at angle 2*pi*(j-1)/N."""
    if n_ports < 1:
        raise ConfigError("n_ports must be >= 1")
    r = RING_RADIUS_FACTOR * cell_radius if ring_radius is None else ring_radius
    angles = 2.0 * math.pi * np.arange(n_ports) / n_ports
    return tuple((float(r * math.cos(a)), float(r * math.sin(a))) for a in angles)


def pathloss_matrix(scenario: Scenario) -> PathlossMatrix:
    """Distances and gains for every (user, port) pair.

    Distances are clamped below at MIN_DISTANCE before exponentiation so
    gains stay finite even for a user coincident with a port.
    """
    if scenario.user_positions is None:
        raise ConfigError("scenario has no user positions; drop users first")
    users = np.asarray(scenario.user_positions, dtype=float)   # (K, 2)
    ports = np.asarray(scenario.port_positions, dtype=float)   # (N, 2)
    diffs = users[:, None, :] - ports[None, :, :]
    distances = np.maximum(np.hypot(diffs[..., 0], diffs[..., 1]), MIN_DISTANCE)
    gains = distances ** (-scenario.pathloss_exponent)
    distances.setflags(write=False)
    gains.setflags(write=False)
    return PathlossMatrix(distances=distances, gains=gains)


def drop_users_uniform(template: Scenario, seed) -> Scenario:
    """Scenario with K user positions drawn i.i.d. uniform on the cell disc.

    Radius is sampled as R*sqrt(u) with u uniform so the density is
    uniform in area; deterministic for a given seed.
    """
    rng = np.random.default_rng(seed)
    k = template.n_users
    radii = template.cell_radius * np.sqrt(rng.random(k))
    angles = 2.0 * math.pi * rng.random(k)
    positions = tuple((float(r * math.cos(a)), float(r * math.sin(a)))
                      for r, a in zip(radii, angles))
    return template.with_users(positions)


# --- scenario config files -------------------------------------------------
#
# Flat key = value text. Position lists are semicolon-separated x,y pairs:
#     user_positions = -3,-2.5; 3,3.5
# tx_power_dB is converted to linear transmit power on load.

_REQUIRED_KEYS = ("n_ports", "n_users", "cell_radius", "pathloss_exponent",
                  "tx_power_dB", "noise_power")
_OPTIONAL_KEYS = ("port_ring_radius", "user_positions", "port_positions")


def _parse_positions(value: str, key: str) -> tuple[Coord, ...]:
    pairs = []
    for chunk in value.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ConfigError(f"{key}: expected 'x,y' pairs separated by ';', "
                              f"got {chunk!r}")
        try:
            pairs.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ConfigError(f"{key}: non-numeric coordinate in {chunk!r}") from exc
    if not pairs:
        raise ConfigError(f"{key}: no coordinate pairs found")
    return tuple(pairs)


def parse_scenario_config(text: str) -> Scenario:
    """Build a Scenario from flat key = value configuration text."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _REQUIRED_KEYS and key not in _OPTIONAL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    missing = [key for key in _REQUIRED_KEYS if key not in raw]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")

    try:
        n_ports = int(raw["n_ports"])
        n_users = int(raw["n_users"])
        cell_radius = float(raw["cell_radius"])
        pathloss_exponent = float(raw["pathloss_exponent"])
        tx_power = db_to_linear(float(raw["tx_power_dB"]))
        noise_power = float(raw["noise_power"])
    except ValueError as exc:
        raise ConfigError(f"non-numeric value in config: {exc}") from exc

    ring = float(raw["port_ring_radius"]) if "port_ring_radius" in raw else None
    ports = (_parse_positions(raw["port_positions"], "port_positions")
             if "port_positions" in raw else None)
    users = (_parse_positions(raw["user_positions"], "user_positions")
             if "user_positions" in raw else None)
    return Scenario(n_ports=n_ports, n_users=n_users, cell_radius=cell_radius,
                    pathloss_exponent=pathloss_exponent, tx_power=tx_power,
                    noise_power=noise_power, port_ring_radius=ring,
                    port_positions=ports, user_positions=users)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_scenario_config(text)
