"""SVD-based coherence reduction and the hybrid (reduced, then regular) schedule.

A reduced sweep is a serial sweep in which each unnormalized mode update
``A = U S V^T`` is replaced by ``U S^omega V^T`` before it is used. ``omega=1``
leaves the update alone, ``omega=0`` replaces it by the nearest matrix with
orthonormal columns (polar factor).
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .altls import (
    AltLSState,
    StoppingRule,
    _normalize_mode,
    _Recorder,
    check_start,
    mode_update,
    step_serial,
)
from .errors import DegenerateComponentError, RankDeficiencyWarning
from .model import KruskalModel
from .tensor import as_tensor, khatri_rao_except


@dataclass(frozen=True)
class HybridSchedule:
    omega: float = 1.0
    reduced_iterations: int = 0
    regular_iterations: int = 0
    defer_normalization: bool = True

    def __post_init__(self):
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError(f"omega must lie in [0, 1], got {self.omega}")
        if self.reduced_iterations < 0 or self.regular_iterations < 0:
            raise ValueError("iteration counts must be nonnegative")


def coherence_reduce(a_hat, omega):
    """Raise the singular values of ``a_hat`` to the power ``omega``.

    Singular values below ``max(shape) * eps * s_max`` count as zero and stay
    zero for every ``omega`` (so ``0**0`` is taken as ``0``); a
    :class:`RankDeficiencyWarning` is issued when that happens.
    """
    a_hat = np.asarray(a_hat, dtype=np.float64)
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"omega must lie in [0, 1], got {omega}")
    if omega == 1.0:
        return a_hat.copy()
    u, s, vt = np.linalg.svd(a_hat, full_matrices=False)
    cutoff = max(a_hat.shape) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    keep = s > cutoff
    if not keep.all():
        warnings.warn(
            f"rank {int(keep.sum())} < {s.size}: dropping null directions",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    powered = np.zeros_like(s)
    powered[keep] = s[keep] ** omega
    return (u * powered) @ vt


def step_reduced(x, model, state, omega, defer_normalization=True):
    """Serial sweep with coherence-reduced mode updates.

    With ``defer_normalization`` the reduced factors are used unnormalized
    for the rest of the sweep and every factor is normalized once at the end,
    the column norms multiplying into the weights.
    """
    factors = list(model.factors)
    weights = model.weights
    for n in range(len(factors)):
        state.khatri_rao[n] = khatri_rao_except(factors, n)
        reduced = coherence_reduce(mode_update(x, state, n), omega)
        if defer_normalization:
            factors[n] = reduced
        else:
            factors[n], norms = _normalize_mode(reduced, n)
            if n == state.weight_mode:
                weights = norms
        state.grams[n] = factors[n].T @ factors[n]
    if defer_normalization:
        out = KruskalModel(np.ones(model.rank), tuple(factors)).normalized()
        state.grams = [f.T @ f for f in out.factors]
    else:
        out = KruskalModel(weights, tuple(factors))
    state.iteration += 1
    return out, state


def run_hybrid(x, model0, schedule, rule=None, *, truth=None, pairing="identity",
               use_direct_error=False, weight_mode=None, callback=None):
    """``schedule.reduced_iterations`` reduced sweeps, then regular serial sweeps.

    The regular phase runs at most ``schedule.regular_iterations`` sweeps and
    may stop earlier on ``rule``'s error-change or epsilon tests; ``rule``'s
    own ``max_iterations`` is not used. Records carry the phase tags
    ``"init"``, ``"reduced"`` and ``"regular"``.
    """
    rule = StoppingRule(error_change_tol=0.0) if rule is None else rule
    x = as_tensor(x)
    check_start(x, model0)
    state = AltLSState.from_model(model0, weight_mode)
    recorder = _Recorder(x, rule, truth, pairing, use_direct_error, callback)
    recorder.trace.metadata["omega"] = schedule.omega
    model = model0
    recorder.record(0, model, state, "init", state_consistent=False)
    k = 0
    try:
        for _ in range(schedule.reduced_iterations):
            k += 1
            model, state = step_reduced(x, model, state, schedule.omega,
                                        schedule.defer_normalization)
            recorder.record(k, model, state, "reduced", state_consistent=False)
        recorder.trace.metadata["phase_boundary"] = k
        k_start = k
        if schedule.regular_iterations == 0:
            recorder.trace.stop_reason = "schedule"
            return model, recorder.trace
        recorder.rule = StoppingRule(schedule.regular_iterations, rule.error_change_tol,
                                     rule.epsilon_floor)
        while True:
            k += 1
            model, state = step_serial(x, model, state)
            recorder.record(k, model, state, "regular", state_consistent=True)
            reason = recorder.should_stop(k, k_start)
            if reason:
                recorder.trace.stop_reason = reason
                return model, recorder.trace
    except DegenerateComponentError as err:
        raise DegenerateComponentError(err.column, err.mode, k) from None
