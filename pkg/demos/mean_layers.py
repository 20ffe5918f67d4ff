"""Peel mean biclusters off a simulated matrix one layer at a time.

Scenario 3 stacks two overlapping blocks with opposite signs.  The first
layer should be the strong positive block; after its rows are shifted back
to the outside mean the second block becomes the dominant signal.
"""
import numpy as np

from scbiclust import BiclustConfig, fit_sequence, rng_stream, standardize
from scbiclust.simulation import generate, score

rng = rng_stream(11)
sim = generate(3, rng)
print("data", sim.data.shape)

seq = fit_sequence(standardize(sim.data), BiclustConfig(), rng)
print("stopped:", seq.stopped_reason, "after", len(seq.layers), "layers")

for k, U in enumerate(seq.layers, start=1):
    rep = score(U, sim.scenario, sim.scenario.target_for_layer(k))
    print(f"layer {k}: rows {U.rows.min()}-{U.rows.max()} ({U.rows.size}), "
          f"cols {U.cols.min()}-{U.cols.max()} ({U.cols.size}), "
          f"KS p={U.ks_p_value:.2e}, matched {rep.identification}")

# the residual has no block left: column means inside the old blocks match the rest
R = seq.residual.values
print("residual |mean| inside first block:", np.abs(R[:40, :40].mean()).round(3))
