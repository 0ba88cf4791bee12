"""How the smoothing parameter trades equal-width against equal-count bins.

On skewed data, alpha near zero reproduces quantile binning (every bin holds
the same number of points, edges crowd into the dense region) while a huge
alpha reproduces uniform binning (equally spaced edges, wildly uneven
counts).  The default alpha=1 lands in between.  Also demonstrates the
bin -> value inverse used at sampling time.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from umtr import fit_bins, sample_within_bin, transform
from umtr.rng import stream

rng = np.random.default_rng(0)
column = rng.exponential(size=2000)  # heavy right tail

fig, axes = plt.subplots(3, 1, figsize=(7, 6), sharex=True)
for ax, alpha in zip(axes, [1e-6, 1.0, 1e6]):
    spec = fit_bins(column, 12, alpha=alpha)
    counts = np.bincount(transform(spec, column), minlength=spec.n_bins)
    print(f"alpha={alpha:<8g} edges[1:4]={np.round(spec.edges[1:4], 3)} "
          f"counts min/max = {counts.min()}/{counts.max()}")
    ax.hist(column, bins=80, color="lightgray")
    for e in spec.edges:
        ax.axvline(e, color="tab:red", lw=0.8)
    ax.set_ylabel(f"alpha={alpha:g}")
fig.tight_layout()
fig.savefig("binning_tour.png", dpi=120)
print("wrote binning_tour.png")

# Round trip: a sampled value always falls back into its bin.
spec = fit_bins(column, 12, alpha=1.0)
sampler = stream(0, 60)
ks = [int(sampler.integers(spec.n_bins)) for _ in range(5)]
vals = [sample_within_bin(spec, k, sampler) for k in ks]
print("bin -> uniform value -> bin:",
      [(k, round(v, 3), int(transform(spec, v))) for k, v in zip(ks, vals)])
