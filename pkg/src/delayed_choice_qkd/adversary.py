"""Intercept-resend eavesdroppers acting on the photon between Alice and Bob."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .optics import (
    LOST,
    U_S_PRIME,
    PhotonState,
    State,
    apply_unitary,
    check_probability,
)

_U_S_PRIME_DAG = U_S_PRIME.conj().T


class MeasBasis(enum.Enum):
    ROUTE = "route"
    INTERFERENCE = "interference"


@dataclass(frozen=True)
class EveStrategy:
    """``basis=None`` means no eavesdropper."""

    basis: Optional[MeasBasis] = None
    p_intercept: float = 0.0

    def __post_init__(self):
        check_probability(self.p_intercept, "p_intercept")
        if self.basis is None and self.p_intercept != 0.0:
            raise ValueError("a passive strategy cannot have p_intercept > 0")
        object.__setattr__(self, "p_intercept", float(self.p_intercept))

    @classmethod
    def none(cls) -> "EveStrategy":
        return cls()

    @classmethod
    def intercept_resend(cls, basis: MeasBasis | str, p_intercept: float = 1.0) -> "EveStrategy":
        return cls(MeasBasis(basis), p_intercept)

    @classmethod
    def parse(cls, text: str) -> "EveStrategy":
        """Parse ``none`` or ``intercept:<route|interference>:<p>``."""
        text = text.strip().lower()
        if text == "none":
            return cls.none()
        parts = text.split(":")
        if len(parts) != 3 or parts[0] != "intercept":
            raise ValueError(f"bad eve strategy {text!r}; expected none or intercept:<route|interference>:<p>")
        try:
            basis = MeasBasis(parts[1])
        except ValueError:
            raise ValueError(f"unknown measurement basis {parts[1]!r}") from None
        try:
            p = float(parts[2])
        except ValueError:
            raise ValueError(f"bad intercept probability {parts[2]!r}") from None
        return cls(basis, p)

    @property
    def active(self) -> bool:
        return self.basis is not None and self.p_intercept > 0.0

    def __str__(self) -> str:
        if self.basis is None:
            return "none"
        return f"intercept:{self.basis.value}:{self.p_intercept!r}"


@dataclass(frozen=True)
class EveRecord:
    intercepted: bool
    basis: Optional[MeasBasis] = None
    outcome_bit: Optional[int] = None

    def __post_init__(self):
        if self.intercepted != (self.basis is not None) or self.intercepted != (self.outcome_bit is not None):
            raise ValueError("basis and outcome_bit must be set exactly when intercepted")


NOT_INTERCEPTED = EveRecord(False)


def _collapse(state: PhotonState, u: float) -> tuple[int, PhotonState]:
    pa = abs(state.amp_a) ** 2
    pb = abs(state.amp_b) ** 2
    if u * (pa + pb) < pa:
        return 0, PhotonState(1 + 0j, 0j)
    return 1, PhotonState(0j, 1 + 0j)


def eve_intervene(
    state: State, strategy: EveStrategy, rng: np.random.Generator
) -> tuple[State, EveRecord]:
    """Let Eve act on the in-flight photon.

    Two uniforms are always drawn (intercept coin, measurement outcome) when
    the strategy is active, so the stream layout does not depend on the
    photon.  Route-basis outcome 0 means route a; interference-basis outcome
    0 means the port that Bob's splitter sends to detector 1.
    """
    if not strategy.active:
        return state, NOT_INTERCEPTED
    coin, u = rng.random(), rng.random()
    if state is LOST or coin >= strategy.p_intercept:
        return state, NOT_INTERCEPTED

    if strategy.basis is MeasBasis.ROUTE:
        bit, out = _collapse(state, u)
    else:
        bit, collapsed = _collapse(apply_unitary(U_S_PRIME, state), u)
        out = apply_unitary(_U_S_PRIME_DAG, collapsed)
    return out, EveRecord(True, strategy.basis, bit)
