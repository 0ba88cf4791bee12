"""Round-trip workflow on a plain CSV file with missing cells.

Builds a small mixed-type table (continuous measurements plus a label
column), writes it with NA holes, loads it back, fits a model, imputes 5
completions, and saves the model for later reuse.  Everything here goes
through the file-based interfaces, mirroring what the `umtr` command line
does under the hood.
"""

import tempfile
from pathlib import Path

import numpy as np

from umtr import EngineConfig, TreeParams, engine, load_csv, load_model, save_csv

workdir = Path(tempfile.mkdtemp(prefix="umtr_demo_"))
csv_path = workdir / "widgets.csv"

rng = np.random.default_rng(4)
lines = ["weight,size,grade"]
for _ in range(120):
    grade = rng.choice(["a", "b"])
    weight = rng.normal(10 if grade == "a" else 14, 1.0)
    size = 0.5 * weight + rng.normal(0, 0.4)
    w = "" if rng.random() < 0.15 else f"{weight:.3f}"
    s = "NA" if rng.random() < 0.15 else f"{size:.3f}"
    lines.append(f"{w},{s},{grade}")
csv_path.write_text("\n".join(lines) + "\n")

data = load_csv(csv_path)
print("schema:", [(name, kind.kind) for name, kind in data.schema])
print(f"{(~data.mask).sum()} missing cells out of {data.mask.size}")

config = EngineConfig(seed=4, k_dup=10, trees=TreeParams(rounds=40))
model = engine.fit(data, config)

completions = engine.impute(model, data, m=5, seed=4)
for i, comp in enumerate(completions):
    save_csv(comp, workdir / f"widgets_imputed_{i}.csv")
print(f"wrote 5 completions to {workdir}")

model_path = workdir / "widgets.umtr"
model.save(model_path)
reloaded = load_model(model_path)
fresh = engine.generate(reloaded, 5, seed=0)
print("5 generated rows from the reloaded model:")
for i in range(5):
    w, s, g = fresh.values[i]
    print(f"  weight {w:6.2f}  size {s:5.2f}  grade {fresh.labels[2][int(g)]}")
