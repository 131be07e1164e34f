"""Write a noisy rank-2 tensor to disk and recover it through the CLI."""

import tempfile
from pathlib import Path

import numpy as np

from cpaltls import io
from cpaltls.cli import main
from cpaltls.synthesis import random_init

rng = np.random.default_rng(3)
truth = random_init((10, 9, 8), 2, rng)
x = truth.full() + 1e-6 * rng.standard_normal(truth.shape)

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "noisy.txt"
    io.write_tensor(path, x)
    main(["decompose", "--input", str(path), "--rank", "2", "--output", tmp,
          "--max-iters", "500"])
    model = io.read_model(Path(tmp) / "noisy-model.txt")
    print("recovered weights", np.sort(np.abs(model.weights)))
