# An honest key exchange
# ----------------------
# Alice and Bob run n rounds, announce their splitter settings, drop the
# rounds where nothing clicked, check the interference statistics, and keep
# the rounds where both splitters were out.

from delayed_choice_qkd import run_session

rep = run_session(20_000, p_loss=0.2, seed=42)

v = rep.verification
print("dispositions:", rep.counts())
print(f"both-splitters rounds: {v.n_both}, detector-2 clicks there: {v.n_both_det2}")
print(f"one-splitter rounds: {v.n_one}, detector-1 share {v.n_one_det1 / v.n_one:.4f}, p = {v.p_value_uniform:.3g}")
print("accepted:", rep.accepted)

# Expected yield is n (1 - p_loss) / 4 = 4000.
print("key length:", len(rep.alice_key), "keys equal:", rep.alice_key == rep.bob_key)
print("first 64 bits:", rep.alice_key.bitstring()[:64])

# %% The same session, serialised
print(rep.to_json()[:400], "...")
