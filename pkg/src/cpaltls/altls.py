"""Alternating least squares for CP decompositions.

Two sweep orders are provided:

* ``serial`` -- the classic Gauss-Seidel sweep. Mode ``n`` is solved against
  the factors already refreshed in this sweep for modes ``< n`` and the
  previous ones for modes ``> n``.
* ``parallel`` -- every mode is solved against the previous iterate only, so
  the per-mode solves are independent.

Each mode solve forms ``H = *_{m != n} G_m`` (Hadamard product of the other
Gram matrices) and ``M = X_(n) K`` with ``K`` the Khatri-Rao product of the
other factors, and returns ``M H^+``.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg.lapack import dpocon

from .diagnostics import ConvergenceTrace, TraceRecord, epsilon_metric, weight_error
from .errors import DegenerateComponentError, DimensionError
from .model import KruskalModel
from .tensor import (
    as_tensor,
    frobenius_norm,
    hadamard_except,
    khatri_rao_except,
    matricize,
)

CONDITION_LIMIT = 1e12
VARIANTS = ("serial", "parallel")


@dataclass
class AltLSState:
    """Workspace reused across sweeps.

    ``grams[n]`` is ``A_n^T A_n``; ``khatri_rao[n]``, ``hadamard[n]`` and
    ``mttkrp[n]`` hold the matrices used by the most recent solve of mode
    ``n`` (``None`` before the first one).
    """

    grams: list
    khatri_rao: list
    hadamard: list
    mttkrp: list
    iteration: int = 0
    weight_mode: int = 0
    error_mode: int = 0

    @classmethod
    def from_model(cls, model, weight_mode=None):
        n_modes = model.ndim
        if weight_mode is None:
            weight_mode = default_weight_mode(model.shape)
        return cls(
            grams=[f.T @ f for f in model.factors],
            khatri_rao=[None] * n_modes,
            hadamard=[None] * n_modes,
            mttkrp=[None] * n_modes,
            weight_mode=weight_mode,
            error_mode=n_modes - 1,
        )

    def copy(self):
        def dup(items):
            return [None if m is None else m.copy() for m in items]

        return AltLSState(
            dup(self.grams), dup(self.khatri_rao), dup(self.hadamard), dup(self.mttkrp),
            self.iteration, self.weight_mode, self.error_mode,
        )


@dataclass(frozen=True)
class StoppingRule:
    """When to stop iterating.

    ``error_change_tol`` compares successive relative errors
    ``|X - X_k| / |X|``; ``0`` disables it. ``epsilon_floor`` only applies when
    a ground-truth model is supplied; ``0`` disables it.
    """

    max_iterations: int = 100
    error_change_tol: float = 1e-10
    epsilon_floor: float = 0.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.error_change_tol < 0 or self.epsilon_floor < 0:
            raise ValueError("tolerances must be nonnegative")


def default_weight_mode(shape):
    """Mode whose update sets the weights: the smallest extent, last on ties."""
    shape = np.asarray(shape)
    return int(np.flatnonzero(shape == shape.min())[-1])


def solve_hadamard_system(rhs, h):
    """Return ``rhs @ pinv(h)`` for a symmetric ``h``.

    Uses a Cholesky solve when ``h`` is numerically positive definite with an
    estimated condition number below ``CONDITION_LIMIT``; otherwise falls
    back to an eigendecomposition pseudoinverse that discards eigenvalues
    below ``R * eps * lambda_max``.
    """
    h = 0.5 * (h + h.T)
    try:
        factor = scipy.linalg.cho_factor(h, lower=False, check_finite=False)
        rcond, info = dpocon(factor[0], np.linalg.norm(h, 1))
        if info == 0 and rcond * CONDITION_LIMIT > 1.0:
            return scipy.linalg.cho_solve(factor, rhs.T, check_finite=False).T
    except np.linalg.LinAlgError:
        pass
    vals, vecs = np.linalg.eigh(h)
    cutoff = h.shape[0] * np.finfo(np.float64).eps * max(vals.max(), 0.0)
    keep = vals > cutoff
    inv = (vecs[:, keep] / vals[keep]) @ vecs[:, keep].T
    return rhs @ inv


def mode_update(x, state, n):
    """Unnormalized least-squares update ``X_(n) K_n H_n^+`` for mode ``n``.

    ``state.grams`` and ``state.khatri_rao[n]`` must describe the factors the
    solve is taken against; ``hadamard[n]`` and ``mttkrp[n]`` are filled in.
    """
    h = hadamard_except(state.grams, n)
    m = matricize(x, n) @ state.khatri_rao[n]
    state.hadamard[n] = h
    state.mttkrp[n] = m
    return solve_hadamard_system(m, h)


def normalize_columns(a_hat):
    """Split ``a_hat`` into unit columns and their norms."""
    a_hat = np.asarray(a_hat, dtype=np.float64)
    norms = np.linalg.norm(a_hat, axis=0)
    bad = np.flatnonzero(~(norms > 0) | ~np.isfinite(norms))
    if bad.size:
        raise DegenerateComponentError(int(bad[0]))
    return a_hat / norms, norms


def _normalize_mode(a_hat, n):
    try:
        return normalize_columns(a_hat)
    except DegenerateComponentError as err:
        raise DegenerateComponentError(err.column, mode=n) from None


def step_parallel(x, model, state, mode_order=None):
    """One sweep in which every mode is solved against the previous iterate."""
    factors = model.factors
    n_modes = len(factors)
    state.grams = [f.T @ f for f in factors]
    for n in range(n_modes):
        state.khatri_rao[n] = khatri_rao_except(factors, n)
    new_factors = [None] * n_modes
    weights = model.weights
    for n in (range(n_modes) if mode_order is None else mode_order):
        a, norms = _normalize_mode(mode_update(x, state, n), n)
        new_factors[n] = a
        if n == state.weight_mode:
            weights = norms
    state.iteration += 1
    return KruskalModel(weights, tuple(new_factors)), state


def step_serial(x, model, state):
    """One Gauss-Seidel sweep over modes ``0 .. N-1``."""
    factors = list(model.factors)
    weights = model.weights
    for n in range(len(factors)):
        state.khatri_rao[n] = khatri_rao_except(factors, n)
        a, norms = _normalize_mode(mode_update(x, state, n), n)
        factors[n] = a
        state.grams[n] = a.T @ a
        if n == state.weight_mode:
            weights = norms
    state.iteration += 1
    return KruskalModel(weights, tuple(factors)), state


STEPS = {"serial": step_serial, "parallel": step_parallel}


def refresh_error_terms(x, model, state, n=None):
    """Rebuild the mode-``n`` matrices ``fast_error`` needs from ``model``."""
    n = state.error_mode if n is None else n
    state.grams = [f.T @ f for f in model.factors]
    state.khatri_rao[n] = khatri_rao_except(model.factors, n)
    state.hadamard[n] = hadamard_except(state.grams, n)
    state.mttkrp[n] = matricize(x, n) @ state.khatri_rao[n]
    state.error_mode = n
    return state


def fast_error(x_norm_sq, state, model, n=None):
    """``|X - [[w; A]]|`` from the cached mode-``n`` matrices.

    Needs ``state.mttkrp[n]``, ``state.hadamard[n]`` and ``state.grams[n]``
    built from the factors of ``model``. Cancellation limits the accuracy to
    roughly ``sqrt(machine eps) * |X|``.
    """
    n = state.error_mode if n is None else n
    scaled = model.factors[n] * model.weights
    cross = float(np.sum(state.mttkrp[n] * scaled))
    w = model.weights
    model_sq = float(np.sum(state.hadamard[n] * (state.grams[n] * np.outer(w, w))))
    return float(np.sqrt(max(0.0, x_norm_sq - 2.0 * cross + model_sq)))


def direct_error(x, model):
    return frobenius_norm(x - model.full())


def check_start(x, model):
    if model.shape != x.shape:
        raise DimensionError(f"model shape {model.shape} does not match tensor {x.shape}")
    if not model.is_normalized(tol=1e-10):
        raise ValueError("initial factor columns must be normalized")


class _Recorder:
    """Builds trace records and evaluates the stopping rule."""

    def __init__(self, x, rule, truth, pairing, use_direct_error, callback):
        self.x = x
        self.rule = rule
        self.truth = truth
        self.pairing = pairing
        self.use_direct_error = use_direct_error
        self.callback = callback
        self.x_norm_sq = frobenius_norm(x) ** 2
        self.x_norm = np.sqrt(self.x_norm_sq)
        self.trace = ConvergenceTrace()
        self.start = time.perf_counter()

    def record(self, k, model, state, phase, state_consistent):
        if not state_consistent:
            refresh_error_terms(self.x, model, state)
        fast = fast_error(self.x_norm_sq, state, model)
        err = direct_error(self.x, model) if self.use_direct_error else fast
        scale = self.x_norm if self.x_norm > 0 else 1.0
        rec = TraceRecord(
            iteration=k,
            relative_error=float(err / scale),
            fast_error=fast,
            phase=phase,
            wall_seconds=time.perf_counter() - self.start,
        )
        if self.truth is not None:
            rec.epsilon = epsilon_metric(model, self.truth, self.pairing)
            rec.weight_error = weight_error(model, self.truth, self.pairing)
        self.trace.append(rec)
        if self.callback is not None:
            self.callback(k, model, rec)
        return rec

    def should_stop(self, k, k_start=0):
        rule = self.rule
        recs = self.trace.records
        if k - k_start >= rule.max_iterations:
            return "max_iterations"
        if rule.error_change_tol > 0 and len(recs) >= 2:
            change = abs(recs[-2].relative_error - recs[-1].relative_error)
            if change < rule.error_change_tol:
                return "error_change"
        if self.truth is not None and rule.epsilon_floor > 0:
            if recs[-1].epsilon < rule.epsilon_floor:
                return "epsilon_floor"
        return None


def run(x, model0, variant="serial", rule=None, *, truth=None, pairing="identity",
        use_direct_error=False, weight_mode=None, callback=None):
    """Iterate CP-ALS from ``model0`` until ``rule`` fires.

    Parameters
    ----------
    x : array_like
        Dense tensor to decompose.
    model0 : KruskalModel
        Starting point with unit factor columns.
    variant : {"serial", "parallel"}
    rule : StoppingRule, optional
        Defaults to ``StoppingRule()``.
    truth : KruskalModel, optional
        Ground truth; when given, each record carries ``epsilon`` and
        ``weight_error``.
    pairing : {"identity", "greedy"}
        Component pairing against ``truth``.
    use_direct_error : bool
        Record ``|X - X_k|`` from a full reconstruction instead of the cheap
        expansion (needed when tracking errors below about 1e-8).
    weight_mode : int, optional
        Mode whose column norms become the weights.
    callback : callable, optional
        Called as ``callback(k, model, record)`` after each record.

    Returns
    -------
    model : KruskalModel
    trace : ConvergenceTrace
    """
    if variant not in STEPS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    rule = StoppingRule() if rule is None else rule
    x = as_tensor(x)
    check_start(x, model0)
    step = STEPS[variant]
    state = AltLSState.from_model(model0, weight_mode)
    recorder = _Recorder(x, rule, truth, pairing, use_direct_error, callback)
    model = model0
    recorder.record(0, model, state, "init", state_consistent=False)
    k = 0
    while True:
        k += 1
        try:
            model, state = step(x, model, state)
        except DegenerateComponentError as err:
            raise DegenerateComponentError(err.column, err.mode, k) from None
        recorder.record(k, model, state, "regular", state_consistent=variant == "serial")
        reason = recorder.should_stop(k)
        if reason:
            recorder.trace.stop_reason = reason
            return model, recorder.trace
