# Delayed choice in the interferometer
# ------------------------------------
# A single photon enters Alice's beam splitter at port 1. Whether the two
# routes recombine depends only on whether Bob puts his splitter in front of
# the detectors, a choice made after the photon has already left Alice.

import numpy as np

from delayed_choice_qkd.optics import (
    U_S,
    U_S_PRIME,
    Route,
    alice_splitter_state,
    apply_bob_splitter,
    exact_distribution,
    measure_detectors,
    prepare_route,
)

np.set_printoptions(precision=4, suppress=True)

# The two splitters are inverse to one another under the chosen phases.
print("U_S' @ U_S =\n", U_S_PRIME @ U_S)

# %% Four arrangements, exact detector probabilities (det1, det2, no-click)
arrangements = {
    "splitter in, Bob in ": apply_bob_splitter(alice_splitter_state()),
    "splitter in, Bob out": alice_splitter_state(),
    "route 2a,   Bob in  ": apply_bob_splitter(prepare_route(Route.A)),
    "route 2a,   Bob out ": prepare_route(Route.A),
    "route 2b,   Bob out ": prepare_route(Route.B),
}
for name, state in arrangements.items():
    print(name, np.round(exact_distribution(state).as_tuple(), 12))

# %% Sampling the detectors agrees with the exact numbers
rng = np.random.default_rng(0)
clicks = [measure_detectors(alice_splitter_state(), rng).value for _ in range(10_000)]
print("splitter in, Bob out, 10k photons:", {k: clicks.count(k) for k in set(clicks)})
