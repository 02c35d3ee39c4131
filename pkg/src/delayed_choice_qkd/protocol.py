"""Honest Alice and Bob: round generation, announcements, sifting, the
interference check, and key extraction.

Randomness is organised in fixed-size chunks of rounds.  Chunk ``k`` of a
session seeded with ``seed`` draws from its own PCG64 stream derived from
``SeedSequence(seed, spawn_key=(0, k))``, so a session produces the same
transcript whether its chunks run serially or in worker processes.
"""

from __future__ import annotations

import csv
import enum
import json
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.stats import binomtest

from .adversary import EveRecord, EveStrategy, eve_intervene
from .optics import (
    DetectionEvent,
    Route,
    alice_splitter_state,
    apply_bob_splitter,
    apply_loss,
    check_probability,
    measure_detectors,
    prepare_route,
)

CHUNK_SIZE = 1024
DEFAULT_ALPHA = 1e-6

_ROUND_STREAM = 0
_COMPARISON_STREAM = 1


class AliceChoice(enum.Enum):
    SPLITTER_IN = "splitter_in"
    ROUTE_A = "route_a"
    ROUTE_B = "route_b"

    @property
    def splitter_in(self) -> bool:
        return self is AliceChoice.SPLITTER_IN

    @property
    def route(self) -> Optional[Route]:
        return _SENT_ROUTE.get(self)

    @classmethod
    def send(cls, route: Route) -> "AliceChoice":
        return cls.ROUTE_A if route is Route.A else cls.ROUTE_B


_SENT_ROUTE = {AliceChoice.ROUTE_A: Route.A, AliceChoice.ROUTE_B: Route.B}


class BobChoice(enum.Enum):
    SPLITTER_IN = "in"
    SPLITTER_OUT = "out"

    @property
    def splitter_in(self) -> bool:
        return self is BobChoice.SPLITTER_IN


class Disposition(enum.Enum):
    DISCARDED = "discarded"
    CHECK_ONLY_ONE = "check_only_one"
    CHECK_BOTH = "check_both"
    KEY_ROUND = "key_round"


def classify(alice_splitter_in: bool, bob_splitter_in: bool, clicked: bool) -> Disposition:
    """Disposition of a round from public information only."""
    if not clicked:
        return Disposition.DISCARDED
    if alice_splitter_in and bob_splitter_in:
        return Disposition.CHECK_BOTH
    if alice_splitter_in or bob_splitter_in:
        return Disposition.CHECK_ONLY_ONE
    return Disposition.KEY_ROUND


@dataclass(frozen=True)
class RoundRecord:
    index: int
    alice: AliceChoice
    bob: BobChoice
    event: DetectionEvent
    disposition: Disposition
    alice_bit: Optional[int] = None
    bob_bit: Optional[int] = None
    eve_note: Optional[EveRecord] = None

    def __post_init__(self):
        clicked = self.event is not DetectionEvent.NO_CLICK
        if self.disposition is not classify(self.alice.splitter_in, self.bob.splitter_in, clicked):
            raise ValueError(f"round {self.index}: disposition {self.disposition} inconsistent with announcements")
        if (self.alice_bit is None) != self.alice.splitter_in:
            raise ValueError(f"round {self.index}: alice_bit must be set exactly for route rounds")
        if (self.bob_bit is None) != (self.disposition is not Disposition.KEY_ROUND):
            raise ValueError(f"round {self.index}: bob_bit must be set exactly for key rounds")

    @property
    def clicked(self) -> bool:
        return self.event is not DetectionEvent.NO_CLICK


@dataclass(frozen=True)
class CheckRounds:
    only_one: tuple[RoundRecord, ...] = ()
    both: tuple[RoundRecord, ...] = ()


@dataclass(frozen=True)
class VerifyConfig:
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")


@dataclass(frozen=True)
class VerificationReport:
    n_both: int
    n_both_det2: int
    n_one: int
    n_one_det1: int
    p_value_uniform: float
    both_clean: bool
    accepted: bool
    alpha: float = DEFAULT_ALPHA


@dataclass(frozen=True)
class SiftedKey:
    bits: tuple[int, ...] = ()
    source_indices: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.bits) != len(self.source_indices):
            raise ValueError("bits and source_indices differ in length")

    def __len__(self) -> int:
        return len(self.bits)

    def bitstring(self) -> str:
        return "".join(map(str, self.bits))


@dataclass(frozen=True)
class KeyComparison:
    """Optional public comparison of a random subset of sifted key bits.

    Not part of the interference-only protocol; reports flag it when used.
    Compared bits are removed from both keys.
    """

    fraction: float
    n_compared: int
    n_mismatch: int

    @property
    def error_rate(self) -> Optional[float]:
        return self.n_mismatch / self.n_compared if self.n_compared else None


def draw_choices(n: int, rng: np.random.Generator) -> list[tuple[AliceChoice, BobChoice]]:
    """Draw ``n`` independent (Alice, Bob) setting pairs.

    Alice inserts her splitter with probability 1/2 and otherwise sends route
    a or b with equal odds; Bob inserts his splitter with probability 1/2.
    """
    if n < 1:
        raise ValueError(f"need at least one round, got n={n}")
    u = rng.random((n, 3))
    out = []
    for ua, ur, ub in u.tolist():
        if ua < 0.5:
            alice = AliceChoice.SPLITTER_IN
        else:
            alice = AliceChoice.ROUTE_A if ur < 0.5 else AliceChoice.ROUTE_B
        bob = BobChoice.SPLITTER_IN if ub < 0.5 else BobChoice.SPLITTER_OUT
        out.append((alice, bob))
    return out


def run_round(
    choices: tuple[AliceChoice, BobChoice],
    eve: Optional[EveStrategy],
    p_loss: float,
    rng: np.random.Generator,
    index: int = 0,
) -> RoundRecord:
    """Prepare, lose, intercept, analyse and detect one photon."""
    alice, bob = choices
    eve = eve or EveStrategy.none()
    if alice.splitter_in:
        state = alice_splitter_state()
    else:
        state = prepare_route(alice.route)
    state = apply_loss(state, p_loss, rng)
    state, note = eve_intervene(state, eve, rng)
    if bob.splitter_in:
        state = apply_bob_splitter(state)
    event = measure_detectors(state, rng)

    disposition = classify(alice.splitter_in, bob.splitter_in, event is not DetectionEvent.NO_CLICK)
    alice_bit = None if alice.splitter_in else alice.route.bit
    bob_bit = None
    if disposition is Disposition.KEY_ROUND:
        bob_bit = 0 if event is DetectionEvent.DETECTOR1 else 1
    return RoundRecord(
        index, alice, bob, event, disposition, alice_bit, bob_bit, note if eve.active else None
    )


def sift(records: Iterable[RoundRecord]) -> tuple[CheckRounds, list[RoundRecord]]:
    """Drop no-click rounds and split the rest into check and key rounds.

    The split is recomputed from the announced splitter settings and the
    click/no-click flag, never from routes or detector identities.
    """
    one, both, key = [], [], []
    for rec in records:
        d = classify(rec.alice.splitter_in, rec.bob.splitter_in, rec.clicked)
        if d is Disposition.CHECK_BOTH:
            both.append(rec)
        elif d is Disposition.CHECK_ONLY_ONE:
            one.append(rec)
        elif d is Disposition.KEY_ROUND:
            key.append(rec)
    return CheckRounds(tuple(one), tuple(both)), key


def verify(checks: CheckRounds, config: VerifyConfig = VerifyConfig()) -> VerificationReport:
    """Bob's interference check.

    Any detector-2 click with both splitters in rejects outright.  The
    one-splitter rounds are tested for a fair detector-1/detector-2 split
    with a two-sided exact binomial test at level ``config.alpha``.
    """
    n_both = len(checks.both)
    n_both_det2 = sum(r.event is DetectionEvent.DETECTOR2 for r in checks.both)
    n_one = len(checks.only_one)
    n_one_det1 = sum(r.event is DetectionEvent.DETECTOR1 for r in checks.only_one)
    p_value = binomtest(n_one_det1, n_one, 0.5).pvalue if n_one else 1.0
    p_value = min(1.0, float(p_value))
    both_clean = n_both_det2 == 0
    return VerificationReport(
        n_both=n_both,
        n_both_det2=n_both_det2,
        n_one=n_one,
        n_one_det1=n_one_det1,
        p_value_uniform=p_value,
        both_clean=both_clean,
        accepted=both_clean and p_value >= config.alpha,
        alpha=config.alpha,
    )


def extract_key(key_rounds: Sequence[RoundRecord]) -> tuple[SiftedKey, SiftedKey]:
    """Alice reads bits off her routes (a=0, b=1), Bob off his detectors (1=0, 2=1)."""
    for rec in key_rounds:
        if rec.disposition is not Disposition.KEY_ROUND:
            raise ValueError(f"round {rec.index} is not a key round ({rec.disposition.value})")
    idx = tuple(r.index for r in key_rounds)
    alice = SiftedKey(tuple(r.alice.route.bit for r in key_rounds), idx)
    bob = SiftedKey(
        tuple(0 if r.event is DetectionEvent.DETECTOR1 else 1 for r in key_rounds), idx
    )
    return alice, bob


def compare_key_subset(
    alice: SiftedKey, bob: SiftedKey, fraction: float, rng: np.random.Generator
) -> tuple[KeyComparison, SiftedKey, SiftedKey]:
    """Publicly compare a random ``fraction`` of key positions and discard them."""
    check_probability(fraction, "compare_key_fraction")
    n = len(alice)
    if len(bob) != n:
        raise ValueError("keys differ in length")
    mask = rng.random(n) < fraction if n else np.zeros(0, dtype=bool)
    compared = np.flatnonzero(mask).tolist()
    mismatch = sum(alice.bits[i] != bob.bits[i] for i in compared)
    keep = np.flatnonzero(~mask).tolist()

    def _keep(k: SiftedKey) -> SiftedKey:
        return SiftedKey(tuple(k.bits[i] for i in keep), tuple(k.source_indices[i] for i in keep))

    return KeyComparison(float(fraction), len(compared), int(mismatch)), _keep(alice), _keep(bob)


def chunk_rng(seed: int, chunk: int, stream: int = _ROUND_STREAM) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, chunk))))


def _run_chunk(args: tuple[int, int, int, int, EveStrategy, float]) -> list[RoundRecord]:
    seed, chunk, start, size, eve, p_loss = args
    rng = chunk_rng(seed, chunk)
    choices = draw_choices(size, rng)
    return [run_round(c, eve, p_loss, rng, start + i) for i, c in enumerate(choices)]


def run_rounds(
    n: int, eve: Optional[EveStrategy], p_loss: float, seed: int, workers: int = 1
) -> list[RoundRecord]:
    """Generate the full transcript of ``n`` rounds, serially or in processes."""
    if n < 1:
        raise ValueError(f"need at least one round, got n={n}")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    check_probability(p_loss, "p_loss")
    eve = eve or EveStrategy.none()
    jobs = [
        (seed, k, start, min(CHUNK_SIZE, n - start), eve, p_loss)
        for k, start in enumerate(range(0, n, CHUNK_SIZE))
    ]
    if workers <= 1 or len(jobs) == 1:
        parts = map(_run_chunk, jobs)
        return [r for part in parts for r in part]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return [r for part in pool.map(_run_chunk, jobs) for r in part]


def run_cell(
    alice: AliceChoice,
    bob: BobChoice,
    eve: Optional[EveStrategy],
    n: int,
    seed: int,
    p_loss: float = 0.0,
) -> Counter:
    """Simulate ``n`` rounds with fixed settings.

    Returns a tally keyed by ``(eve_outcome_bit, event)``; the bit is
    ``None`` for rounds Eve left alone.
    """
    rng = chunk_rng(seed, 0)
    tally: Counter = Counter()
    for i in range(n):
        rec = run_round((alice, bob), eve, p_loss, rng, i)
        note = rec.eve_note
        tally[(note.outcome_bit if note is not None else None, rec.event)] += 1
    return tally


CELLS: tuple[tuple[AliceChoice, BobChoice], ...] = tuple(
    (a, b) for a in AliceChoice for b in BobChoice
)


@dataclass
class SessionReport:
    n: int
    seed: int
    p_loss: float
    eve: EveStrategy
    alpha: float
    verification: VerificationReport
    accepted: bool
    records: list[RoundRecord] = field(repr=False)
    alice_key: Optional[SiftedKey] = None
    bob_key: Optional[SiftedKey] = None
    key_comparison: Optional[KeyComparison] = None
    compare_key_fraction: Optional[float] = None
    n_key_rounds: int = 0
    sifted_agreement: Optional[float] = None

    def counts(self) -> dict[str, int]:
        c = Counter(r.disposition for r in self.records)
        return {d.value: c.get(d, 0) for d in Disposition}

    def cell_counts(self) -> dict[str, dict[str, int]]:
        """Detector tallies per (Alice setting, Bob setting) cell."""
        c = Counter((r.alice, r.bob, r.event) for r in self.records)
        return {
            f"{a.value}/{b.value}": {e.value: c.get((a, b, e), 0) for e in DetectionEvent}
            for a, b in CELLS
        }

    def n_intercepted(self) -> int:
        return sum(1 for r in self.records if r.eve_note is not None and r.eve_note.intercepted)

    def to_dict(self) -> dict:
        v = self.verification
        return {
            "config": {
                "n": self.n,
                "seed": self.seed,
                "p_loss": self.p_loss,
                "eve": str(self.eve),
                "alpha": self.alpha,
                "compare_key_fraction": self.compare_key_fraction,
            },
            "verification": {
                "n_both": v.n_both,
                "n_both_det2": v.n_both_det2,
                "n_one": v.n_one,
                "n_one_det1": v.n_one_det1,
                "p_value_uniform": v.p_value_uniform,
                "both_clean": v.both_clean,
                "accepted": v.accepted,
            },
            "key_comparison": None
            if self.key_comparison is None
            else {
                "enabled": True,
                "fraction": self.key_comparison.fraction,
                "n_compared": self.key_comparison.n_compared,
                "n_mismatch": self.key_comparison.n_mismatch,
                "error_rate": self.key_comparison.error_rate,
            },
            "accepted": self.accepted,
            "counts": self.counts(),
            "cell_counts": self.cell_counts(),
            "n_key_rounds": self.n_key_rounds,
            "n_intercepted": self.n_intercepted(),
            "sifted_agreement": self.sifted_agreement,
            "key_length": None if self.alice_key is None else len(self.alice_key),
            "alice_key": None if self.alice_key is None else self.alice_key.bitstring(),
            "bob_key": None if self.bob_key is None else self.bob_key.bitstring(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def run_session(
    n: int,
    eve: Optional[EveStrategy] = None,
    p_loss: float = 0.0,
    seed: int = 0,
    *,
    alpha: float = DEFAULT_ALPHA,
    compare_key_fraction: Optional[float] = None,
    workers: int = 1,
) -> SessionReport:
    """Run the whole exchange: rounds, announcements, sifting, check, key.

    Keys are released only when the session is accepted.  With
    ``compare_key_fraction`` set, a random subset of sifted bits is also
    compared in public and any mismatch rejects the session.
    """
    config = VerifyConfig(alpha)
    eve = eve or EveStrategy.none()
    records = run_rounds(n, eve, p_loss, seed, workers)
    checks, key_rounds = sift(records)
    report = verify(checks, config)
    alice, bob = extract_key(key_rounds)
    agreement = (
        sum(x == y for x, y in zip(alice.bits, bob.bits)) / len(alice) if len(alice) else None
    )

    comparison = None
    accepted = report.accepted
    if compare_key_fraction is not None:
        comparison, alice, bob = compare_key_subset(
            alice, bob, compare_key_fraction, chunk_rng(seed, 0, _COMPARISON_STREAM)
        )
        accepted = accepted and comparison.n_mismatch == 0

    return SessionReport(
        n=n,
        seed=seed,
        p_loss=float(p_loss),
        eve=eve,
        alpha=alpha,
        verification=report,
        accepted=accepted,
        records=records,
        alice_key=alice if accepted else None,
        bob_key=bob if accepted else None,
        key_comparison=comparison,
        compare_key_fraction=compare_key_fraction,
        n_key_rounds=len(key_rounds),
        sifted_agreement=agreement,
    )


TRANSCRIPT_COLUMNS = (
    "index",
    "alice_choice",
    "alice_route",
    "bob_choice",
    "event",
    "disposition",
    "alice_bit",
    "bob_bit",
)


def transcript_rows(records: Iterable[RoundRecord]) -> Iterable[tuple]:
    for r in records:
        yield (
            r.index,
            "splitter_in" if r.alice.splitter_in else "route_send",
            "" if r.alice.route is None else r.alice.route.value,
            r.bob.value,
            r.event.value,
            r.disposition.value,
            "" if r.alice_bit is None else r.alice_bit,
            "" if r.bob_bit is None else r.bob_bit,
        )


def write_transcript(records: Iterable[RoundRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRANSCRIPT_COLUMNS)
        w.writerows(transcript_rows(records))
