"""Convergence metrics, traces and order-of-convergence estimates."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DegenerateInputError,
    DimensionError,
    InsufficientDataError,
    PreconditionError,
)

ORDER_FLOOR = 1e-13


@dataclass
class TraceRecord:
    iteration: int
    relative_error: float
    fast_error: Optional[float] = None
    epsilon: Optional[float] = None
    weight_error: Optional[float] = None
    phase: str = "regular"
    wall_seconds: float = 0.0


@dataclass
class ConvergenceTrace:
    """Per-iteration history of a solver run; record 0 is the initialization."""

    records: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    stop_reason: Optional[str] = None

    def append(self, record):
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValueError("trace iterations must be strictly increasing")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, k):
        return self.records[k]

    def column(self, name):
        """Values of one record field as a float array (``nan`` where unset)."""
        return np.array(
            [np.nan if getattr(r, name) is None else getattr(r, name) for r in self.records],
            dtype=np.float64,
        )

    @property
    def epsilons(self):
        return self.column("epsilon")

    @property
    def relative_errors(self):
        return self.column("relative_error")

    @property
    def weight_errors(self):
        return self.column("weight_error")

    @property
    def iterations(self):
        return np.array([r.iteration for r in self.records])

    @property
    def phase_boundaries(self):
        """Iterations after which the phase tag changes (initial record excluded)."""
        out = []
        for prev, cur in zip(self.records[1:], self.records[2:]):
            if prev.phase != cur.phase:
                out.append(prev.iteration)
        return out


def _unit_columns(a):
    norms = np.linalg.norm(a, axis=0)
    if np.any(norms == 0):
        raise DegenerateInputError("angle undefined for a zero vector")
    return a / norms


def _sines(u, v):
    # sin(theta) = 2ds / (d^2 + s^2), d = |u - v|, s = |u + v| for unit u, v.
    # Exact to ~1e-16 absolute even when theta is tiny, unlike sqrt(1 - cos^2).
    d = np.linalg.norm(u - v, axis=0)
    s = np.linalg.norm(u + v, axis=0)
    return np.clip(2.0 * d * s / (d * d + s * s), 0.0, 1.0)


def sin_angle(u, v):
    """``|sin|`` of the angle between the lines spanned by ``u`` and ``v``."""
    u = np.asarray(u, dtype=np.float64).reshape(-1, 1)
    v = np.asarray(v, dtype=np.float64).reshape(-1, 1)
    if u.shape != v.shape:
        raise DimensionError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")
    return float(_sines(_unit_columns(u), _unit_columns(v))[0])


def column_sines(a, b):
    """Vector of ``sin_angle(a[:, j], b[:, j])`` over columns."""
    # same memory layout for both, so equal columns normalize to equal bits
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return _sines(_unit_columns(a), _unit_columns(b))


def match_components(model, truth):
    """Greedy component pairing by mode-averaged ``|cos|``.

    Returns ``sigma`` with ``sigma[r]`` the model component paired with truth
    component ``r``.
    """
    _check_compatible(model, truth)
    rank = truth.rank
    cos = np.zeros((rank, rank))
    for a, b in zip(model.factors, truth.factors):
        cos += np.abs(_unit_columns(b).T @ _unit_columns(a))
    cos /= model.ndim
    sigma = np.full(rank, -1)
    free_truth = np.ones(rank, dtype=bool)
    free_model = np.ones(rank, dtype=bool)
    for _ in range(rank):
        masked = np.where(free_truth[:, None] & free_model[None, :], cos, -np.inf)
        r, s = np.unravel_index(np.argmax(masked), masked.shape)
        sigma[r] = s
        free_truth[r] = False
        free_model[s] = False
    return sigma


def _check_compatible(model, truth):
    if model.shape != truth.shape or model.rank != truth.rank:
        raise DimensionError(
            f"model {model.shape} rank {model.rank} vs truth {truth.shape} rank {truth.rank}"
        )


def _pairing(model, truth, pairing):
    if pairing == "identity":
        return np.arange(truth.rank)
    if pairing == "greedy":
        return match_components(model, truth)
    raise ValueError(f"unknown pairing {pairing!r}")


def epsilon_metric(model, truth, pairing="identity"):
    """Largest ``|sin|`` angle between paired factor columns over all modes."""
    _check_compatible(model, truth)
    sigma = _pairing(model, truth, pairing)
    return float(max(
        np.max(column_sines(a[:, sigma], b)) for a, b in zip(model.factors, truth.factors)
    ))


def weight_error(model, truth, pairing="identity"):
    """Max-norm error of the squared weights (sign invariant)."""
    _check_compatible(model, truth)
    sigma = _pairing(model, truth, pairing)
    return float(np.max(np.abs(truth.weights ** 2 - model.weights[sigma] ** 2)))


def coherence(a, tol=1e-8):
    """Largest ``|<a_i, a_j>|`` over distinct columns of a column-normalized matrix."""
    a = np.asarray(a, dtype=np.float64)
    norms = np.linalg.norm(a, axis=0)
    if np.any(np.abs(norms - 1.0) > tol):
        raise PreconditionError("coherence needs unit-norm columns")
    if a.shape[1] < 2:
        return 0.0
    gram = np.abs(a.T @ a)
    np.fill_diagonal(gram, 0.0)
    return float(min(gram.max(), 1.0))


def kappa(weights):
    w = np.abs(np.asarray(weights, dtype=np.float64))
    if np.any(w == 0):
        raise DegenerateInputError("kappa undefined with a zero weight")
    return float(w.max() / w.min())


def usable_window(values, floor=ORDER_FLOOR):
    """Leading run of ``values`` that stays at or above ``floor``."""
    values = np.asarray(values, dtype=np.float64)
    below = np.flatnonzero(~(values >= floor))
    stop = below[0] if below.size else values.size
    return values[:stop]


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or x.size != y.size:
        raise InsufficientDataError("need at least two matching points")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def estimate_order(epsilons, floor=ORDER_FLOOR):
    """Empirical order of convergence of a decreasing positive sequence.

    Fits ``log eps_k`` against ``log eps_{k-1}`` over pairs ``k >= 1``, after
    discarding the tail from the first value below ``floor``. At least three
    values must survive.
    """
    window = usable_window(epsilons, floor)
    if window.size < 3:
        raise InsufficientDataError(
            f"only {window.size} values above {floor:g}; need at least 3"
        )
    return loglog_slope(window[:-1], window[1:])


@dataclass(frozen=True)
class BoundCheck:
    """One iteration of :func:`theorem_bound_check`.

    ``saturated`` marks an ``epsilon`` below the floating-point floor, where
    the real-arithmetic bound can no longer be resolved; such iterations are
    reported but never count as violations.
    """

    iteration: int
    hypothesis_holds: bool
    epsilon: float
    bound: float
    saturated: bool = False

    @property
    def margin(self):
        return self.bound - self.epsilon

    @property
    def violated(self):
        return self.hypothesis_holds and not self.saturated and self.epsilon > self.bound


def odeco_bound(previous, kappa_value, rank, order):
    """Right-hand side ``9 kappa sqrt(R) (4 sqrt2 eps_prev)^(N-1)``."""
    return 9.0 * kappa_value * np.sqrt(rank) * (4.0 * np.sqrt(2.0) * previous) ** (order - 1)


def odeco_hypothesis(previous, rank, order):
    return rank * (2.0 * np.sqrt(2.0) * previous) ** (order - 1) <= 1.0 / 3.0


def theorem_bound_check(epsilons, kappa_value, rank, order, floor=ORDER_FLOOR):
    """Check the per-step odeco bound wherever its hypothesis holds.

    Iterations whose hypothesis fails are returned with
    ``hypothesis_holds=False``, and iterations with ``epsilon < floor`` with
    ``saturated=True``; neither counts as a violation. Pass ``floor=0`` for
    the bare inequality.
    """
    eps = np.asarray(epsilons, dtype=np.float64)
    out = []
    for k in range(1, eps.size):
        prev = float(eps[k - 1])
        out.append(BoundCheck(
            iteration=k,
            hypothesis_holds=bool(odeco_hypothesis(prev, rank, order)),
            epsilon=float(eps[k]),
            bound=float(odeco_bound(prev, kappa_value, rank, order)),
            saturated=bool(eps[k] < floor),
        ))
    return out


def weight_bound_check(weight_errors, epsilons, floor=ORDER_FLOOR):
    """Test ``w_k <= C eps_{k-1}`` with ``C = w_1 / eps_0`` fit at ``k = 1``.

    Only pairs whose ``eps_{k-1}`` lies in the usable window (see
    :func:`usable_window`) are checked. Returns ``(C, ok)`` with ``ok`` a
    boolean array over ``k = 1 .. len(window) - 1`` (``ok[0]`` is the fitting
    point and holds trivially).
    """
    w = np.asarray(weight_errors, dtype=np.float64)
    eps = usable_window(epsilons, floor)
    if eps.size < 2 or w.size < 2:
        raise InsufficientDataError("need eps_0 and w_1 to fit the constant")
    if eps[0] == 0:
        raise DegenerateInputError("eps_0 is zero")
    c = w[1] / eps[0]
    stop = min(eps.size + 1, w.size)
    ok = w[1:stop] <= c * eps[: stop - 1] * (1.0 + 1e-12)
    return float(c), ok
