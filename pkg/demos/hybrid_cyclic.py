"""Compare coherence-reduced warm starts on the cyclic rank-3 tensor.

For each omega the run does 25 reduced sweeps and then 25 regular sweeps;
the final relative error is printed per seed.
"""

from cpaltls.experiments import OMEGA_GRID, run_preset

print("seed  " + "  ".join(f"w={w:.2f}   " for w in OMEGA_GRID))
for seed in range(5):
    results = run_preset("hybrid-cyclic", seeds=(seed,))
    finals = [r.trace.relative_errors[-1] for r in results]
    print(f"{seed:4d}  " + "  ".join(f"{e:.3e}" for e in finals))
