"""Ground-truth instances and initializations for convergence experiments.

Every generator is a pure function of its spec and seed. Random draws for
different purposes (weights, factors, incoherence, initial perturbation) come
from independent substreams of one :class:`numpy.random.SeedSequence`, so
changing one scale never shifts the other draws.
"""

from dataclasses import dataclass, field

import numpy as np

from .altls import StoppingRule, run
from .diagnostics import coherence, kappa
from .errors import DimensionError
from .model import KruskalModel
from .tensor import as_tensor

KINDS = ("odeco", "ideco", "cyclic", "identity-matrix")

# substream offsets
WEIGHTS, FACTORS, INCOHERENCE, INIT, EXTRA = range(5)


def substream(seed, purpose, index=0):
    """Independent generator for ``(seed, purpose, index)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), purpose, index]))


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str = "odeco"
    order: int = 3
    extents: tuple = (20,)
    rank: int = 10
    incoherence_scale: float = 0.0
    init_perturbation_scale: float = 1e-2
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        extents = tuple(int(e) for e in self.extents)
        if len(extents) == 1 and self.order > 1:
            extents = extents * self.order
        object.__setattr__(self, "extents", extents)
        if len(extents) != self.order:
            raise DimensionError(f"{len(extents)} extents for order {self.order}")
        if self.rank < 1:
            raise ValueError("rank must be at least 1")
        if self.incoherence_scale < 0 or self.init_perturbation_scale < 0:
            raise ValueError("scales must be nonnegative")


@dataclass
class Instance:
    """A synthesized problem: tensor, ground truth, starting point, metadata."""

    tensor: np.ndarray
    truth: KruskalModel
    init: KruskalModel
    metadata: dict = field(default_factory=dict)


def _normalize(a):
    return a / np.linalg.norm(a, axis=0)


def orthonormal_columns(rng, rows, cols):
    """First ``cols`` columns of the Q factor of a Gaussian ``rows x rows`` matrix."""
    q, _ = np.linalg.qr(rng.standard_normal((rows, rows)))
    return q[:, :cols]


def perturb(factors, scale, seed, purpose):
    """Add ``scale``-sized Gaussian noise to each factor and renormalize."""
    if scale == 0:
        return tuple(f.copy() for f in factors)
    return tuple(
        _normalize(f + scale * substream(seed, purpose, n).standard_normal(f.shape))
        for n, f in enumerate(factors)
    )


def _orthogonal_truth(spec):
    if spec.rank > min(spec.extents):
        raise DimensionError(
            f"rank {spec.rank} exceeds the smallest extent {min(spec.extents)}"
        )
    weights = substream(spec.seed, WEIGHTS).standard_normal(spec.rank)
    factors = tuple(
        orthonormal_columns(substream(spec.seed, FACTORS, n), extent, spec.rank)
        for n, extent in enumerate(spec.extents)
    )
    return weights, factors


def _finish(spec, truth):
    init = KruskalModel(
        np.ones(spec.rank), perturb(truth.factors, spec.init_perturbation_scale, spec.seed, INIT)
    )
    metadata = {
        "kind": spec.kind,
        "seed": spec.seed,
        "mu": max(coherence(f) for f in truth.factors),
        "kappa": kappa(truth.weights),
    }
    return Instance(truth.full(), truth, init, metadata)


def gen_odeco(spec):
    """Orthogonally decomposable instance plus a perturbed start.

    The initial weights are ones; only the factor directions matter to the
    solver.
    """
    if spec.kind != "odeco":
        raise ValueError("gen_odeco needs kind='odeco'")
    weights, factors = _orthogonal_truth(spec)
    return _finish(spec, KruskalModel(weights, factors))


def gen_ideco(spec):
    """Incoherently decomposable instance: orthonormal factors nudged off orthogonality."""
    if spec.kind != "ideco":
        raise ValueError("gen_ideco needs kind='ideco'")
    weights, factors = _orthogonal_truth(spec)
    if spec.incoherence_scale > 0:
        factors = perturb(factors, spec.incoherence_scale, spec.seed, INCOHERENCE)
    return _finish(spec, KruskalModel(weights, factors))


def gen_cyclic(seed, size=10):
    """``a1 o a2 o a3 + a2 o a3 o a1 + a3 o a1 o a2`` with uniform ``[0, 1)`` vectors.

    Returns the tensor together with its exact rank-3 Kruskal model.
    """
    a = substream(seed, FACTORS).random((size, 3))
    factors = (a, a[:, [1, 2, 0]], a[:, [2, 0, 1]])
    truth = KruskalModel(np.ones(3), factors)
    return truth.full(), truth


def random_init(shape, rank, rng):
    """Gaussian factors with normalized columns (uniform on the unit sphere)."""
    factors = tuple(_normalize(rng.standard_normal((extent, rank))) for extent in shape)
    return KruskalModel(np.ones(rank), factors)


def gen_identity_counterexample(rank, seed=0):
    """The order-2 tensor ``I_R`` with a random invertible normalized start."""
    if rank < 2:
        raise ValueError("rank must be at least 2")
    x = as_tensor(np.eye(rank))
    rng = substream(seed, INIT)
    while True:
        init = random_init((rank, rank), rank, rng)
        if all(np.linalg.cond(f) < 1e3 for f in init.factors):
            return x, init


@dataclass
class RestartResult:
    model: KruskalModel
    trace: object
    restarts_used: int
    converged: bool


def error_drop_test(factor=10.0, within=10, floor=1e-12):
    """Default convergence test: the relative error falls ``factor``-fold
    within ``within`` iterations, or drops below ``floor``."""

    def test(trace):
        errs = trace.relative_errors[: within + 1]
        return bool(np.any(errs[1:] <= max(errs[0] / factor, floor)))

    return test


def restart_until_converged(x, gen_init, radius_test=None, max_restarts=10, seed=0,
                            variant="parallel", rule=None):
    """Rerun CP-ALS from fresh random starts until ``radius_test`` passes.

    ``gen_init(rng)`` returns a normalized starting model; restart ``i`` gets a
    generator from substream ``i`` of ``seed``. With ``max_restarts == 0`` no
    run is made and the result reports no convergence.
    """
    radius_test = error_drop_test() if radius_test is None else radius_test
    rule = StoppingRule(max_iterations=10, error_change_tol=0.0) if rule is None else rule
    model = trace = None
    for i in range(max_restarts):
        init = gen_init(substream(seed, EXTRA, i))
        model, trace = run(x, init, variant, rule, use_direct_error=True)
        if radius_test(trace):
            return RestartResult(model, trace, i + 1, True)
    return RestartResult(model, trace, max_restarts, False)
