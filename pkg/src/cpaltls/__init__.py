"""CP tensor decompositions by alternating least squares.

Serial and parallel CP-ALS sweeps, SVD-based coherence reduction, instance
generators for convergence studies, and diagnostics (angle errors, order of
convergence estimates, bound checks, perturbation lemma oracles).
"""

from .altls import AltLSState, StoppingRule, fast_error, run, step_parallel, step_serial
from .coherence import HybridSchedule, coherence_reduce, run_hybrid, step_reduced
from .diagnostics import (
    BoundCheck,
    ConvergenceTrace,
    TraceRecord,
    coherence,
    epsilon_metric,
    estimate_order,
    kappa,
    match_components,
    sin_angle,
    theorem_bound_check,
    weight_error,
)
from .errors import (
    DegenerateComponentError,
    DegenerateInputError,
    DimensionError,
    InsufficientDataError,
    ParseError,
    PreconditionError,
    RankDeficiencyWarning,
)
from .lemmas import LEMMA_IDS, LemmaReport, lemma_oracle, run_lemma_suite
from .model import KruskalModel
from .synthesis import (
    GeneratorSpec,
    Instance,
    gen_cyclic,
    gen_identity_counterexample,
    gen_ideco,
    gen_odeco,
    restart_until_converged,
)
from .tensor import (
    hadamard,
    inner_product,
    khatri_rao,
    kronecker,
    kruskal_reconstruct,
    matricize,
)

__version__ = "0.1.0"
