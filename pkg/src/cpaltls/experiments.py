"""Preset convergence experiments, each producing one trace per seed (and omega).

Presets
-------
odeco3, odeco4
    Orthogonally decomposable order-3/order-4 tensors, ``I = 20``, ``R = 10``,
    initial factors perturbed at scale ``1e-2``; parallel sweeps by default.
ideco3, ideco4
    As above with factors nudged off orthogonality at scale ``1e-2``.
weights
    The odeco3 and ideco3 runs, written as one file each, for studying the
    squared-weight error next to ``epsilon``.
hybrid-cyclic
    Cyclic rank-3 tensor of size 10, random start, ``25`` coherence-reduced
    sweeps followed by ``25`` regular sweeps for each ``omega`` in
    ``{0, 0.25, 0.5, 0.75, 1}``.
counterexample-n2
    The identity matrix as an order-2 tensor with a random start; parallel
    sweeps cycle with period two.
"""

import os
from dataclasses import dataclass, field, replace
from typing import Optional

from . import io
from .altls import StoppingRule, run
from .coherence import HybridSchedule, run_hybrid
from .synthesis import (
    INIT,
    GeneratorSpec,
    gen_cyclic,
    gen_identity_counterexample,
    gen_ideco,
    gen_odeco,
    random_init,
    substream,
)

PRESETS = ("odeco3", "odeco4", "ideco3", "ideco4", "weights", "hybrid-cyclic",
           "counterexample-n2")
OMEGA_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)

_GENERATED = {
    "odeco3": (GeneratorSpec("odeco", 3, (20,), 10, 0.0, 1e-2),
               StoppingRule(max_iterations=20, error_change_tol=0.0, epsilon_floor=1e-12)),
    "odeco4": (GeneratorSpec("odeco", 4, (20,), 10, 0.0, 1e-2),
               StoppingRule(max_iterations=20, error_change_tol=0.0, epsilon_floor=1e-12)),
    "ideco3": (GeneratorSpec("ideco", 3, (20,), 10, 1e-2, 1e-2),
               StoppingRule(max_iterations=100, error_change_tol=0.0, epsilon_floor=1e-13)),
    "ideco4": (GeneratorSpec("ideco", 4, (20,), 10, 1e-2, 1e-2),
               StoppingRule(max_iterations=100, error_change_tol=0.0, epsilon_floor=1e-13)),
}
GENERATORS = {"odeco": gen_odeco, "ideco": gen_ideco}


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one batch of runs.

    Exactly one of ``spec`` (synthetic instances) and ``input_path`` (a
    tensor file) is set.
    """

    subcommand: str = "experiment"
    spec: Optional[GeneratorSpec] = None
    input_path: Optional[str] = None
    variant: str = "parallel"
    rule: StoppingRule = field(default_factory=StoppingRule)
    schedule: Optional[HybridSchedule] = None
    seeds: tuple = (0,)
    output: str = "."

    def __post_init__(self):
        if (self.spec is None) == (self.input_path is None):
            raise ValueError("set exactly one of spec and input_path")
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ValueError("need at least one seed")


@dataclass
class RunResult:
    """One finished run: where it goes, its trace and final model."""

    filename: str
    trace: object
    model: object
    metadata: dict


def preset_config(preset, seeds=(0,), output=".", *, rank=None, variant=None,
                  max_iterations=None, tol=None, omega=None, reduced_iterations=None,
                  regular_iterations=None):
    """Build the :class:`ExperimentConfig` for ``preset`` with optional overrides."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    base = {"weights": "odeco3", "hybrid-cyclic": None, "counterexample-n2": None}.get(
        preset, preset)
    if base is not None:
        spec, rule = _GENERATED[base]
    elif preset == "hybrid-cyclic":
        spec = GeneratorSpec("cyclic", 3, (10,), 3, 0.0, 0.0)
        rule = StoppingRule(max_iterations=25, error_change_tol=0.0)
    else:
        spec = GeneratorSpec("identity-matrix", 2, (2,), 2, 0.0, 0.0)
        rule = StoppingRule(max_iterations=20, error_change_tol=0.0)
    if rank is not None:
        extents = (rank,) if preset == "counterexample-n2" else spec.extents
        spec = replace(spec, rank=rank, extents=extents)
    rule = StoppingRule(
        rule.max_iterations if max_iterations is None else max_iterations,
        rule.error_change_tol if tol is None else tol,
        rule.epsilon_floor,
    )
    schedule = None
    if preset == "hybrid-cyclic":
        schedule = HybridSchedule(
            1.0 if omega is None else omega,
            25 if reduced_iterations is None else reduced_iterations,
            rule.max_iterations if regular_iterations is None else regular_iterations,
        )
        variant = "serial"
    return ExperimentConfig("experiment", spec=spec, variant=variant or "parallel",
                            rule=rule, schedule=schedule, seeds=seeds, output=output)


def _generated_run(preset, spec, variant, rule, seed):
    instance = GENERATORS[spec.kind](replace(spec, seed=seed))
    model, trace = run(instance.tensor, instance.init, variant, rule,
                       truth=instance.truth, use_direct_error=True)
    meta = {"preset": preset, "variant": variant, "order": spec.order,
            "extent": spec.extents[0], "rank": spec.rank, **instance.metadata}
    return RunResult(f"{preset}-seed{seed}.csv", trace, model, meta)


def run_preset(preset, seeds=(0,), omegas=None, **overrides):
    """Run ``preset`` for every seed; returns a list of :class:`RunResult`.

    ``omegas`` replaces the hybrid-cyclic grid (an ``omega`` override alone
    selects that single value); the other keyword arguments are passed to
    :func:`preset_config`.
    """
    config = preset_config(preset, seeds, **overrides)
    if omegas is None and overrides.get("omega") is not None:
        omegas = (overrides["omega"],)
    results = []
    for seed in config.seeds:
        if preset in _GENERATED:
            results.append(_generated_run(preset, config.spec, config.variant, config.rule,
                                          seed))
        elif preset == "weights":
            for base in ("odeco3", "ideco3"):
                sub = preset_config(base, (seed,), **overrides)
                res = _generated_run(base, sub.spec, sub.variant, sub.rule, seed)
                res.filename = f"weights-{base}-seed{seed}.csv"
                res.metadata["preset"] = "weights"
                results.append(res)
        elif preset == "hybrid-cyclic":
            results.extend(_hybrid_runs(config, seed, omegas))
        else:
            results.append(_counterexample_run(config, seed))
    return results


def _hybrid_runs(config, seed, omegas=None):
    x, truth = gen_cyclic(seed, config.spec.extents[0])
    init = random_init(x.shape, truth.rank, substream(seed, INIT))
    omegas = OMEGA_GRID if omegas is None else omegas
    out = []
    for omega in omegas:
        schedule = replace(config.schedule, omega=float(omega))
        model, trace = run_hybrid(x, init, schedule, config.rule, truth=truth,
                                  pairing="greedy", use_direct_error=True)
        meta = {"preset": "hybrid-cyclic", "seed": seed, "variant": "serial",
                "reduced_iterations": schedule.reduced_iterations,
                "regular_iterations": schedule.regular_iterations}
        out.append(RunResult(f"hybrid-cyclic-seed{seed}-omega{omega:.2f}.csv",
                             trace, model, meta))
    return out


def _counterexample_run(config, seed):
    x, init = gen_identity_counterexample(config.spec.rank, seed)
    model, trace = run(x, init, config.variant, config.rule, use_direct_error=True)
    meta = {"preset": "counterexample-n2", "seed": seed, "variant": config.variant,
            "rank": config.spec.rank}
    return RunResult(f"counterexample-n2-seed{seed}.csv", trace, model, meta)


def write_results(results, output, timestamp=True):
    """Write each result's trace CSV into directory ``output``; returns the paths."""
    os.makedirs(output, exist_ok=True)
    paths = []
    for res in results:
        path = os.path.join(output, res.filename)
        io.write_trace_csv(path, res.trace, timestamp=timestamp, extra_metadata=res.metadata)
        paths.append(path)
    return paths
