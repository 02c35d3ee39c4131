"""Exact ground truth by enumerating every measurement branch.

Amplitudes live in Q(sqrt 2)(i): both splitters have entries in
{1/sqrt2, +-i/sqrt2} and every state reachable by the protocol stays in that
field, so outcome probabilities come out as exact numbers and "never" means
an exact zero.  Nothing here samples, and nothing here reuses the
floating-point optics used by the simulator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .adversary import EveStrategy, MeasBasis
from .protocol import AliceChoice, BobChoice

Rational = Union[int, Fraction]


@dataclass(frozen=True)
class Surd:
    """The real number ``p + q*sqrt(2)`` with rational ``p`` and ``q``."""

    p: Fraction = Fraction(0)
    q: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "p", Fraction(self.p))
        object.__setattr__(self, "q", Fraction(self.q))

    @classmethod
    def coerce(cls, x: "Surd | Rational") -> "Surd":
        return x if isinstance(x, Surd) else cls(Fraction(x))

    def __add__(self, other):
        o = Surd.coerce(other)
        return Surd(self.p + o.p, self.q + o.q)

    __radd__ = __add__

    def __neg__(self):
        return Surd(-self.p, -self.q)

    def __sub__(self, other):
        return self + (-Surd.coerce(other))

    def __rsub__(self, other):
        return Surd.coerce(other) - self

    def __mul__(self, other):
        o = Surd.coerce(other)
        return Surd(self.p * o.p + 2 * self.q * o.q, self.p * o.q + self.q * o.p)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not supported")
        out, base = Surd(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Surd(other)
        if not isinstance(other, Surd):
            return NotImplemented
        return self.p == other.p and self.q == other.q

    def __hash__(self):
        return hash((self.p, self.q))

    @property
    def is_rational(self) -> bool:
        return self.q == 0

    def as_fraction(self) -> Fraction:
        if not self.is_rational:
            raise ValueError(f"{self} is irrational")
        return self.p

    def __float__(self):
        return float(self.p) + float(self.q) * 2.0 ** 0.5

    def __str__(self):
        if self.is_rational:
            return str(self.p)
        return f"{self.p} + {self.q}*sqrt(2)"


INV_SQRT2 = Surd(0, Fraction(1, 2))


@dataclass(frozen=True)
class Amp:
    """Exact complex amplitude ``re + i*im``."""

    re: Surd = Surd()
    im: Surd = Surd()

    def __add__(self, o: "Amp") -> "Amp":
        return Amp(self.re + o.re, self.im + o.im)

    def __mul__(self, o: "Amp") -> "Amp":
        return Amp(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    def conj(self) -> "Amp":
        return Amp(self.re, -self.im)

    def abs2(self) -> Surd:
        return self.re * self.re + self.im * self.im


ZERO = Amp()
ONE = Amp(Surd(1))
Matrix = tuple[tuple[Amp, Amp], tuple[Amp, Amp]]
Vector = tuple[Amp, Amp]

_R = Amp(INV_SQRT2)
_I = Amp(Surd(), INV_SQRT2)
_MI = Amp(Surd(), -INV_SQRT2)

ALICE_SPLITTER: Matrix = ((_R, _I), (_I, _R))
BOB_SPLITTER: Matrix = ((_R, _MI), (_MI, _R))


def matvec(m: Matrix, v: Vector) -> Vector:
    return (m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1])


def dagger(m: Matrix) -> Matrix:
    return ((m[0][0].conj(), m[1][0].conj()), (m[0][1].conj(), m[1][1].conj()))


BASIS: tuple[Vector, Vector] = ((ONE, ZERO), (ZERO, ONE))


def alice_state(alice: AliceChoice) -> Vector:
    if alice is AliceChoice.SPLITTER_IN:
        return matvec(ALICE_SPLITTER, BASIS[0])
    return BASIS[0] if alice is AliceChoice.ROUTE_A else BASIS[1]


@dataclass(frozen=True)
class CellDistribution:
    """Exact outcome law of one configuration cell.

    ``joint`` maps ``(eve_bit, event)`` to probability, where ``eve_bit`` is
    ``None`` when Eve did not measure and ``event`` is one of ``"det1"``,
    ``"det2"``, ``"no_click"``.
    """

    p_det1: Surd
    p_det2: Surd
    p_noclick: Surd
    joint: tuple[tuple[tuple[Optional[int], str], Surd], ...]

    def as_floats(self) -> tuple[float, float, float]:
        return (float(self.p_det1), float(self.p_det2), float(self.p_noclick))

    def joint_dict(self) -> dict[tuple[Optional[int], str], Surd]:
        return dict(self.joint)


@dataclass(frozen=True)
class ConfigCell:
    alice: AliceChoice
    bob: BobChoice
    eve: EveStrategy = EveStrategy()


def _exact(p: float) -> Fraction:
    return Fraction(p)


def enumerate_cell(cell: ConfigCell, p_loss: Rational | float = 0) -> CellDistribution:
    """Branch on loss, Eve's coin, Eve's outcome and Bob's detector exactly."""
    pl = Fraction(p_loss)
    # branch = (weight, eve_bit, state or None when lost)
    branches: list[tuple[Surd, Optional[int], Optional[Vector]]] = [
        (Surd(1) - pl, None, alice_state(cell.alice))
    ]
    if pl:
        branches.append((Surd(pl), None, None))

    eve = cell.eve
    if eve.basis is not None and eve.p_intercept > 0:
        pi = _exact(eve.p_intercept)
        if eve.basis is MeasBasis.ROUTE:
            to_meas, from_meas = None, None
        else:
            to_meas, from_meas = BOB_SPLITTER, dagger(BOB_SPLITTER)
        after = []
        for w, _, v in branches:
            if v is None:
                after.append((w, None, None))
                continue
            if pi != 1:
                after.append((w * (1 - pi), None, v))
            rotated = v if to_meas is None else matvec(to_meas, v)
            for k in (0, 1):
                pk = rotated[k].abs2()
                if pk == 0:
                    continue
                out = BASIS[k] if from_meas is None else matvec(from_meas, BASIS[k])
                after.append((w * pi * pk, k, out))
        branches = after

    joint: dict[tuple[Optional[int], str], Surd] = {}
    for w, bit, v in branches:
        if v is None:
            key = (bit, "no_click")
            joint[key] = joint.get(key, Surd()) + w
            continue
        if cell.bob is BobChoice.SPLITTER_IN:
            v = matvec(BOB_SPLITTER, v)
        for k, name in ((0, "det1"), (1, "det2")):
            pk = v[k].abs2()
            if pk == 0:
                continue
            key = (bit, name)
            joint[key] = joint.get(key, Surd()) + w * pk

    def total(name: str) -> Surd:
        return sum((p for (b, e), p in joint.items() if e == name), Surd())

    ordered = tuple(sorted(joint.items(), key=lambda kv: (-1 if kv[0][0] is None else kv[0][0], kv[0][1])))
    return CellDistribution(total("det1"), total("det2"), total("no_click"), ordered)


def _p_det2_given_click(eve: EveStrategy) -> Surd:
    d = enumerate_cell(ConfigCell(AliceChoice.SPLITTER_IN, BobChoice.SPLITTER_IN, eve))
    return d.p_det2


def detection_probability(eve: EveStrategy, n_both: int) -> Surd:
    """Chance that ``n_both`` clicked both-splitter rounds show a detector-2 click."""
    if n_both < 0:
        raise ValueError(f"n_both must be non-negative, got {n_both}")
    return Surd(1) - (Surd(1) - _p_det2_given_click(eve)) ** n_both


def key_error_rate(eve: EveStrategy) -> Surd:
    """P(alice_bit != bob_bit) on key rounds, routes a and b equally likely."""
    err = Surd()
    for alice, bit in ((AliceChoice.ROUTE_A, 0), (AliceChoice.ROUTE_B, 1)):
        d = enumerate_cell(ConfigCell(alice, BobChoice.SPLITTER_OUT, eve))
        wrong = d.p_det2 if bit == 0 else d.p_det1
        err = err + Fraction(1, 2) * wrong
    return err


def eve_route_information(eve: EveStrategy) -> Surd:
    """P(Eve's outcome bit equals Alice's route bit) over key-round preparations.

    Counts only intercepted rounds, weighted by the interception chance, so
    the value is ``p_intercept`` for a perfect route spy and
    ``p_intercept / 2`` for a spy that learns nothing.
    """
    hit = Surd()
    for alice, bit in ((AliceChoice.ROUTE_A, 0), (AliceChoice.ROUTE_B, 1)):
        d = enumerate_cell(ConfigCell(alice, BobChoice.SPLITTER_OUT, eve))
        hit = hit + Fraction(1, 2) * sum((p for (b, _), p in d.joint if b == bit), Surd())
    return hit


STANDARD_P_GRID = (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(1))


def standard_strategies() -> list[EveStrategy]:
    out = [EveStrategy.none()]
    for basis in MeasBasis:
        for p in STANDARD_P_GRID:
            out.append(EveStrategy(basis, float(p)))
    return out


def standard_cells() -> list[ConfigCell]:
    return [
        ConfigCell(a, b, eve)
        for eve in standard_strategies()
        for a in AliceChoice
        for b in BobChoice
    ]


def _num(x: Surd):
    return str(x.p) if x.is_rational else str(x)


def cell_table(p_loss: Rational = 0) -> list[dict]:
    """Every standard cell with exact probabilities, as JSON-ready rows."""
    rows = []
    for cell in standard_cells():
        d = enumerate_cell(cell, p_loss)
        rows.append(
            {
                "alice": cell.alice.value,
                "bob": cell.bob.value,
                "eve": str(cell.eve),
                "p_det1": _num(d.p_det1),
                "p_det2": _num(d.p_det2),
                "p_noclick": _num(d.p_noclick),
            }
        )
    return rows


def cell_table_json(p_loss: Rational = 0) -> str:
    return json.dumps({"p_loss": str(Fraction(p_loss)), "cells": cell_table(p_loss)}, indent=2) + "\n"
