"""Exit criteria.  Each test logs one PASS/FAIL line shown in the pytest summary.

All statistical checks are binomial 5-sigma bounds; a cell whose exact
probability is 0 or 1 has zero variance and must therefore match exactly.
"""

import time
from contextlib import contextmanager
from fractions import Fraction

import pytest
from scipy.stats import fisher_exact

from delayed_choice_qkd import oracle
from delayed_choice_qkd.adversary import EveStrategy, MeasBasis
from delayed_choice_qkd.optics import DetectionEvent
from delayed_choice_qkd.oracle import ConfigCell, Surd, enumerate_cell
from delayed_choice_qkd.protocol import AliceChoice, BobChoice, run_cell, run_session, write_transcript

from _bounds import describe, within_sigma
from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance

N_CELL = 100_000
SI, RA, RB = AliceChoice.SPLITTER_IN, AliceChoice.ROUTE_A, AliceChoice.ROUTE_B
IN, OUT = BobChoice.SPLITTER_IN, BobChoice.SPLITTER_OUT
D1, D2 = DetectionEvent.DETECTOR1, DetectionEvent.DETECTOR2
ROUTE1 = EveStrategy(MeasBasis.ROUTE, 1.0)
INTERF1 = EveStrategy(MeasBasis.INTERFERENCE, 1.0)


@contextmanager
def criterion(number: int, title: str):
    notes: list[str] = []
    try:
        yield notes
    except BaseException:
        ACCEPTANCE_LINES.append(f"FAIL  criterion {number}: {title}  {'; '.join(notes)}")
        raise
    ACCEPTANCE_LINES.append(f"PASS  criterion {number}: {title}  {'; '.join(notes)}")


def events(tally):
    out = {}
    for (_, e), c in tally.items():
        out[e] = out.get(e, 0) + c
    return out


def test_1_honest_both_splitters_deterministic():
    with criterion(1, "honest both-splitters cell never fires detector 2") as notes:
        start = time.perf_counter()
        tally = events(run_cell(SI, IN, None, N_CELL, seed=101))
        elapsed = time.perf_counter() - start
        notes.append(f"det2={tally.get(D2, 0)}/{N_CELL}, {elapsed:.2f}s")
        assert tally.get(D2, 0) == 0 and tally[D1] == N_CELL

        exact = enumerate_cell(ConfigCell(SI, IN))
        assert exact.p_det2 == Surd(0) and exact.p_det2.p == 0 and exact.p_det2.q == 0
        assert exact.p_det1 == 1
        notes.append("oracle p_det2 == 0 exactly")
        assert elapsed < 5.0


@pytest.mark.parametrize("seed, alice, bob", [(201, SI, OUT), (202, RA, IN), (203, RB, IN)])
def test_2_one_splitter_cells_equal_probability(seed, alice, bob):
    with criterion(2, f"one-splitter cell {alice.value}/{bob.value} is fair") as notes:
        tally = events(run_cell(alice, bob, None, N_CELL, seed=seed))
        det1 = tally.get(D1, 0)
        notes.append(describe(det1, N_CELL, 0.5))
        assert within_sigma(det1, N_CELL, 0.5)


@pytest.mark.parametrize("p_loss", [0.0, 0.3])
def test_3_key_yield(p_loss):
    with criterion(3, f"key yield at p_loss={p_loss}") as notes:
        n = 100_000
        rep = run_session(n, None, p_loss, seed=303)
        p = (1 - p_loss) / 4
        notes.append(describe(len(rep.alice_key), n, p))
        assert rep.accepted
        assert within_sigma(len(rep.alice_key), n, p)


def test_4_honest_keys_agree():
    with criterion(4, "honest keys identical over 50 seeds") as notes:
        lengths = []
        for seed in range(50):
            rep = run_session(4000, None, 0.0, seed=seed)
            assert rep.accepted, f"seed {seed} rejected"
            assert rep.alice_key.bits == rep.bob_key.bits, f"seed {seed} keys differ"
            lengths.append(len(rep.alice_key))
        notes.append(f"50/50 equal, key lengths {min(lengths)}..{max(lengths)}")


def test_5_route_spy_detected():
    with criterion(5, "route-basis intercept-resend detected") as notes:
        tally = events(run_cell(SI, IN, ROUTE1, N_CELL, seed=505))
        det2 = tally.get(D2, 0)
        notes.append("both-cell " + describe(det2, N_CELL, 0.5))
        assert within_sigma(det2, N_CELL, 0.5)

        rejected = sum(not run_session(400, ROUTE1, 0.0, seed=s).accepted for s in range(1000))
        notes.append(f"rejected {rejected}/1000 sessions (n=400)")
        assert rejected >= 999


@pytest.mark.parametrize("p", [Fraction(1, 4), Fraction(1, 2), Fraction(1)])
def test_6_detection_linear_in_intercept_probability(p):
    seed = 600 + int(4 * p)
    with criterion(6, f"both-cell det2 rate = p/2 at p={p}") as notes:
        eve = EveStrategy(MeasBasis.ROUTE, float(p))
        assert enumerate_cell(ConfigCell(SI, IN, eve)).p_det2 == p / 2
        det2 = events(run_cell(SI, IN, eve, N_CELL, seed=seed)).get(D2, 0)
        notes.append(describe(det2, N_CELL, float(p / 2)))
        assert within_sigma(det2, N_CELL, float(p / 2))


def _cell_id(cell):
    return f"{cell.eve}-{cell.alice.value}-{cell.bob.value}"


GRID = [(7000 + i, c) for i, c in enumerate(oracle.standard_cells())]


@pytest.mark.parametrize("seed, cell", GRID, ids=[_cell_id(c) for _, c in GRID])
def test_7_simulator_matches_oracle(seed, cell):
    """Joint law of (Eve outcome, detector event) against exact enumeration."""
    with criterion(7, f"oracle agreement {_cell_id(cell)}") as notes:
        tally = run_cell(cell.alice, cell.bob, cell.eve, N_CELL, seed=seed)
        exact = enumerate_cell(cell).joint_dict()
        keys = set(exact) | {(b, e.value) for b, e in tally}
        worst = 0.0
        for key in sorted(keys, key=str):
            bit, name = key
            count = tally.get((bit, DetectionEvent(name)), 0)
            p = float(exact.get(key, Surd()))
            assert within_sigma(count, N_CELL, p), f"{key}: {describe(count, N_CELL, p)}"
            s = (N_CELL * p * (1 - p)) ** 0.5
            if s:
                worst = max(worst, abs(count - N_CELL * p) / s)
        notes.append(f"{len(keys)} outcomes, max |z|={worst:.2f}")


def test_8_interference_spy_passes_check_but_corrupts_key():
    with criterion(8, "interference-basis spy invisible to the check, key agreement 1/2") as notes:
        for a in AliceChoice:
            for b in BobChoice:
                if a is SI or b is IN:
                    honest = enumerate_cell(ConfigCell(a, b))
                    spied = enumerate_cell(ConfigCell(a, b, INTERF1))
                    assert (honest.p_det1, honest.p_det2) == (spied.p_det1, spied.p_det2)
        assert oracle.key_error_rate(INTERF1) == Fraction(1, 2)

        sessions = 100
        honest_ok = sum(run_session(4000, None, 0.0, seed=8000 + s).accepted for s in range(sessions))
        spied_ok = sum(run_session(4000, INTERF1, 0.0, seed=8000 + s).accepted for s in range(sessions))
        _, p_same = fisher_exact([[honest_ok, sessions - honest_ok], [spied_ok, sessions - spied_ok]])
        notes.append(f"accepted honest {honest_ok}/{sessions}, spied {spied_ok}/{sessions}, Fisher p={p_same:.3g}")
        assert p_same >= 0.01

        rep = run_session(100_000, INTERF1, 0.0, seed=808)
        assert rep.accepted
        m = len(rep.alice_key)
        agree = sum(x == y for x, y in zip(rep.alice_key.bits, rep.bob_key.bits))
        notes.append("key agreement " + describe(agree, m, 0.5))
        assert within_sigma(agree, m, 0.5)


def test_9_replay_serial_and_parallel(tmp_path):
    with criterion(9, "byte-identical reports, serial vs parallel") as notes:
        eve = EveStrategy(MeasBasis.ROUTE, 0.25)
        serial = run_session(20_000, eve, 0.1, seed=909, workers=1)
        parallel = run_session(20_000, eve, 0.1, seed=909, workers=4)
        again = run_session(20_000, eve, 0.1, seed=909, workers=1)
        assert serial.to_json().encode() == parallel.to_json().encode() == again.to_json().encode()
        paths = []
        for i, rep in enumerate((serial, parallel)):
            p = tmp_path / f"t{i}.csv"
            write_transcript(rep.records, p)
            paths.append(p)
        assert paths[0].read_bytes() == paths[1].read_bytes()
        notes.append(f"{len(serial.to_json())} report bytes and transcripts identical")
