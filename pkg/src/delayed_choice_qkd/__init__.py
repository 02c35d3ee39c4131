"""Simulator for key distribution built on the delayed-choice interferometer."""

from .adversary import EveRecord, EveStrategy, MeasBasis, eve_intervene
from .optics import (
    LOST,
    U_S,
    U_S_PRIME,
    DetectionEvent,
    OutcomeDistribution,
    PhotonState,
    Route,
    alice_splitter_state,
    apply_bob_splitter,
    apply_loss,
    exact_distribution,
    measure_detectors,
    prepare_route,
)
from .protocol import (
    AliceChoice,
    BobChoice,
    Disposition,
    RoundRecord,
    SessionReport,
    SiftedKey,
    VerificationReport,
    VerifyConfig,
    draw_choices,
    extract_key,
    run_round,
    run_session,
    sift,
    verify,
)

__version__ = "0.1.0"
