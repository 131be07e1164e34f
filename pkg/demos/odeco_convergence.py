"""Watch parallel alternating least squares converge on an odeco tensor.

Prints epsilon per sweep for one order-3 and one order-4 instance together
with the fitted order of convergence.
"""

import numpy as np

from cpaltls.diagnostics import estimate_order
from cpaltls.errors import InsufficientDataError
from cpaltls.experiments import run_preset

for preset in ("odeco3", "odeco4"):
    (result,) = run_preset(preset, seeds=(0,))
    eps = result.trace.epsilons
    print(f"{preset} (kappa {result.metadata['kappa']:.1f}): eps = "
          + np.array2string(eps, precision=2))
    try:
        print(f"  fitted order {estimate_order(eps):.2f}")
    except InsufficientDataError as err:
        print(f"  too few values above the rounding floor to fit an order ({err})")
