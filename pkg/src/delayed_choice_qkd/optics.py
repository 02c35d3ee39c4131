"""Single-photon optics on the two spatial routes of a Mach-Zehnder layout.

A photon is a normalized amplitude pair over routes ``2a`` and ``2b`` (or
``LOST``).  Alice's beam splitter ``U_S`` maps input port 1 onto the two
routes; Bob's splitter ``U_S'`` maps the routes onto the detector ports.  The
phase convention is fixed so that ``U_S' @ U_S == I``:

    U_S  = 1/sqrt(2) [[1,  i], [ i, 1]]
    U_S' = 1/sqrt(2) [[1, -i], [-i, 1]]

With both splitters in, the photon always exits towards detector 1; with
Bob's splitter out, route ``2a`` lights detector 1 and route ``2b`` lights
detector 2.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

NORM_TOL = 1e-12

_H = 1.0 / math.sqrt(2.0)

#: Alice's splitter, (port 1, port 2) -> (route a, route b).
U_S = np.array([[_H, 1j * _H], [1j * _H, _H]], dtype=complex)
#: Bob's splitter, (route a, route b) -> (detector 1, detector 2).
U_S_PRIME = np.array([[_H, -1j * _H], [-1j * _H, _H]], dtype=complex)


class Route(enum.Enum):
    A = "a"
    B = "b"

    @property
    def bit(self) -> int:
        return 0 if self is Route.A else 1


class DetectionEvent(enum.Enum):
    DETECTOR1 = "det1"
    DETECTOR2 = "det2"
    NO_CLICK = "no_click"


@dataclass(frozen=True)
class PhotonState:
    """Normalized amplitudes on route a and route b."""

    amp_a: complex
    amp_b: complex

    def __post_init__(self):
        a, b = complex(self.amp_a), complex(self.amp_b)
        if not (cmath.isfinite(a) and cmath.isfinite(b)):
            raise ValueError(f"non-finite amplitude in ({a}, {b})")
        norm = abs(a) ** 2 + abs(b) ** 2
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: |a|^2 + |b|^2 = {norm!r}")
        object.__setattr__(self, "amp_a", a)
        object.__setattr__(self, "amp_b", b)

    def as_array(self) -> np.ndarray:
        return np.array([self.amp_a, self.amp_b], dtype=complex)

    def isclose(self, other: "PhotonState | _Lost", atol: float = NORM_TOL) -> bool:
        if not isinstance(other, PhotonState):
            return False
        return abs(self.amp_a - other.amp_a) <= atol and abs(self.amp_b - other.amp_b) <= atol


class _Lost:
    """Sentinel for a photon absorbed in transit."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "LOST"

    def __reduce__(self):
        return (_Lost, ())


LOST = _Lost()

State = Union[PhotonState, _Lost]


@dataclass(frozen=True)
class OutcomeDistribution:
    p_det1: float
    p_det2: float
    p_noclick: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p_det1, self.p_det2, self.p_noclick)

    def probability(self, event: DetectionEvent) -> float:
        return {
            DetectionEvent.DETECTOR1: self.p_det1,
            DetectionEvent.DETECTOR2: self.p_det2,
            DetectionEvent.NO_CLICK: self.p_noclick,
        }[event]


def apply_unitary(u: np.ndarray, state: State) -> State:
    """Apply a 2x2 unitary to a present state; ``LOST`` passes through."""
    if state is LOST:
        return LOST
    # scalar arithmetic: a 2x2 numpy matmul per round dominates the runtime
    u00, u01, u10, u11 = complex(u[0, 0]), complex(u[0, 1]), complex(u[1, 0]), complex(u[1, 1])
    a, b = state.amp_a, state.amp_b
    return PhotonState(u00 * a + u01 * b, u10 * a + u11 * b)


_ROUTE_STATES = {Route.A: PhotonState(1 + 0j, 0j), Route.B: PhotonState(0j, 1 + 0j)}


def prepare_route(route: Route) -> PhotonState:
    return _ROUTE_STATES[route]


_PORT1 = _ROUTE_STATES[Route.A]
_SPLITTER_STATE = apply_unitary(U_S, _PORT1)


def alice_splitter_state() -> PhotonState:
    """Photon injected at port 1 of Alice's inserted splitter."""
    return _SPLITTER_STATE


def apply_bob_splitter(state: State) -> State:
    """Insert Bob's splitter; afterwards mode a feeds detector 1, mode b detector 2."""
    return apply_unitary(U_S_PRIME, state)


def check_probability(p: float, name: str = "probability") -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p!r}")
    return p


def apply_loss(state: State, p_loss: float, rng: np.random.Generator) -> State:
    """Absorb the photon with probability ``p_loss``.

    One uniform draw is consumed per call, including for ``LOST`` inputs, so
    the stream position never depends on the physics.
    """
    check_probability(p_loss, "p_loss")
    u = rng.random()
    if state is LOST or u < p_loss:
        return LOST
    return state


def measure_detectors(state: State, rng: np.random.Generator) -> DetectionEvent:
    u = rng.random()
    if state is LOST:
        return DetectionEvent.NO_CLICK
    pa, pb = abs(state.amp_a) ** 2, abs(state.amp_b) ** 2
    # scaled by the norm so an exact zero amplitude can never be sampled
    if u * (pa + pb) < pa:
        return DetectionEvent.DETECTOR1
    return DetectionEvent.DETECTOR2


def exact_distribution(state: State) -> OutcomeDistribution:
    if state is LOST:
        return OutcomeDistribution(0.0, 0.0, 1.0)
    return OutcomeDistribution(abs(state.amp_a) ** 2, abs(state.amp_b) ** 2, 0.0)
