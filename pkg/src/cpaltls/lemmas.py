"""Numeric checks of the matrix perturbation inequalities behind the
convergence analysis.

Each checker takes concrete matrices, derives the lemma's parameters from
them (largest angles, max-norm deviations and so on), evaluates the
hypotheses, and compares every inequality in the lemma. The result is one
:class:`LemmaReport` per call; ``lhs``/``bound`` belong to the tightest part
and every part is listed in ``parts``.

Lemma identifiers:

==============  ==========================================================
A1-innerprod-i  Gram perturbation for paired normalized columns
A2-innerprod-o  off-diagonal column norms against an orthonormal basis
A3-inverse      inverse perturbation for unit-diagonal matrices
A3c-corollary   ``|A^-1 - I|_max`` for a unit-diagonal ``A``
A4-product-o    diagonal/off-diagonal split of a product near ``I``
A5-normalization-o  angle after normalizing ``B V`` (orthonormal ``B``)
A6-product-i    perturbation of a product, general matrices
A7-normalization-i  angle after normalizing ``B V`` (normalized ``B``)
==============  ==========================================================
"""

import csv
from dataclasses import dataclass

import numpy as np

from .diagnostics import column_sines
from .errors import DimensionError
from .tensor import diag_part, norm_max, norm_one_two, offdiag_part

SQRT2 = np.sqrt(2.0)
UNIT_TOL = 1e-12
VIOLATION_TOL = 1e-10


@dataclass(frozen=True)
class LemmaReport:
    lemma_id: str
    hypotheses_hold: bool
    lhs: float
    bound: float
    parts: tuple = ()
    seed: int = None

    @property
    def margin(self):
        return self.bound - self.lhs

    @property
    def violated(self):
        return self.hypotheses_hold and self.margin < -VIOLATION_TOL * max(1.0, self.bound)


def _report(lemma_id, hypotheses, parts):
    def slack(p):
        return (p[2] - p[1]) / max(1.0, abs(p[2]))

    worst = min(parts, key=slack)
    return LemmaReport(lemma_id, bool(hypotheses), float(worst[1]), float(worst[2]),
                       tuple((name, float(l), float(b)) for name, l, b in parts))


def _matrix(a, name):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be a matrix")
    return a


def _square(a, name, n=None):
    a = _matrix(a, name)
    if a.shape[0] != a.shape[1] or (n is not None and a.shape[0] != n):
        raise DimensionError(f"{name} has shape {a.shape}, expected square"
                             + (f" of size {n}" if n is not None else ""))
    return a


def _unit_columns(a):
    return bool(np.all(np.abs(np.linalg.norm(a, axis=0) - 1.0) <= UNIT_TOL))


def _orthonormal_columns(a):
    return bool(norm_max(a.T @ a - np.eye(a.shape[1])) <= UNIT_TOL)


def _unit_diagonal(a):
    return bool(np.all(np.abs(np.diag(a) - 1.0) <= UNIT_TOL))


def innerprod_i(a, b):
    a = _matrix(a, "A")
    b = _matrix(b, "B")
    if a.shape != b.shape:
        raise DimensionError(f"A {a.shape} and B {b.shape} differ")
    hyp = _unit_columns(a) and _unit_columns(b) and np.all(np.sum(a * b, axis=0) >= 0)
    eps = float(np.max(column_sines(a, b)))
    return _report("A1-innerprod-i", hyp, [
        ("a", norm_max(b.T @ a - b.T @ b), SQRT2 * eps),
        ("b", norm_max(a.T @ a - b.T @ b), 2.0 * SQRT2 * eps),
    ])


def innerprod_o(a, b):
    a = _matrix(a, "A")
    b = _matrix(b, "B")
    if a.shape != b.shape:
        raise DimensionError(f"A {a.shape} and B {b.shape} differ")
    hyp = (_unit_columns(a) and _orthonormal_columns(b)
           and np.all(np.sum(a * b, axis=0) >= 0))
    eps = float(np.max(column_sines(a, b)))
    return _report("A2-innerprod-o", hyp, [
        ("", norm_one_two(offdiag_part(b.T @ a)), eps),
    ])


def inverse(a, b, eps=None, eps_prime=None):
    """Inverse perturbation; ``eps``/``eps_prime`` default to their tightest values."""
    a = _square(a, "A")
    b = _square(b, "B", a.shape[0])
    n = a.shape[0]
    eps = norm_max(offdiag_part(a - b)) if eps is None else eps
    eps_prime = norm_max(offdiag_part(b)) if eps_prime is None else eps_prime
    hyp = (_unit_diagonal(a) and _unit_diagonal(b)
           and norm_max(offdiag_part(a - b)) <= eps
           and norm_max(offdiag_part(b)) <= eps_prime
           and (n - 1) * (eps + eps_prime) < 1)
    if not hyp:
        nan = float("nan")
        return _report("A3-inverse", False, [("a", nan, nan)])
    a_inv = np.linalg.inv(a)
    b_inv = np.linalg.inv(b)
    lead = 1.0 - (n - 1) * (eps + eps_prime)
    tail = 1.0 - (n - 1) * eps_prime
    diff = norm_max(a_inv - b_inv)
    return _report("A3-inverse", True, [
        ("a1", diff, eps / (lead * tail)),
        ("a2", diff, eps / lead ** 2),
        ("b", norm_max(b_inv), 1.0 / tail),
        ("c", norm_max(offdiag_part(b_inv)), (n - 1) * eps_prime / tail),
    ])


def inverse_corollary(a, eps=None):
    a = _square(a, "A")
    n = a.shape[0]
    eps = norm_max(offdiag_part(a)) if eps is None else eps
    hyp = _unit_diagonal(a) and norm_max(offdiag_part(a)) <= eps and (n - 1) * eps < 1
    if not hyp:
        nan = float("nan")
        return _report("A3c-corollary", False, [("", nan, nan)])
    lhs = norm_max(np.linalg.inv(a) - np.eye(n))
    return _report("A3c-corollary", True, [("", lhs, eps / (1.0 - (n - 1) * eps))])


def product_o(a, b, eps_a=None, eps_a_prime=None, eps_b=None):
    a = _square(a, "A")
    b = _square(b, "B", a.shape[0])
    n = a.shape[0]
    eye = np.eye(n)
    eps_a = norm_max(diag_part(a) - eye) if eps_a is None else eps_a
    eps_a_prime = norm_one_two(offdiag_part(a)) if eps_a_prime is None else eps_a_prime
    eps_b = norm_max(b - eye) if eps_b is None else eps_b
    hyp = (norm_max(diag_part(a)) <= 1.0
           and norm_max(diag_part(a) - eye) <= eps_a <= 1.0
           and norm_one_two(offdiag_part(a)) <= eps_a_prime
           and norm_max(b - eye) <= eps_b <= 1.0)
    ab = a @ b
    return _report("A4-product-o", hyp, [
        ("a", norm_max(diag_part(ab) - eye),
         1.0 - (1.0 - eps_a) * (1.0 - eps_b) + (n - 1) * eps_a_prime * eps_b),
        ("b", norm_one_two(offdiag_part(ab)),
         np.sqrt(n - 1) * eps_b + eps_a_prime * (1.0 + eps_b) + (n - 1) * eps_a_prime * eps_b),
    ])


def _scaled_mixing(v, weights):
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    if np.any(weights == 0):
        return None, float("inf")
    w = v / weights[:, None]
    kappa = float(np.max(np.abs(weights)) / np.min(np.abs(weights)))
    return w, kappa


def normalization_o(b, v, weights):
    """Angles of ``A = B V`` against ``B`` when ``B`` has orthonormal columns."""
    b = _matrix(b, "B")
    v = _square(v, "V", b.shape[1])
    w, kappa = _scaled_mixing(v, weights)
    if w is None:
        nan = float("nan")
        return _report("A5-normalization-o", False, [("", nan, nan)])
    n = v.shape[0]
    eps = norm_max(diag_part(w) - np.eye(n))
    eps_prime = norm_one_two(offdiag_part(w))
    hyp = _orthonormal_columns(b) and eps < 1.0
    lhs = float(np.max(column_sines(b @ v, b))) if hyp else float("nan")
    bound = kappa * eps_prime / (1.0 - eps) if eps < 1.0 else float("inf")
    return _report("A5-normalization-o", hyp, [("", lhs, bound)])


def product_i(a, a_tilde, b, b_tilde):
    a = _square(a, "A")
    n = a.shape[0]
    a_tilde = _square(a_tilde, "A~", n)
    b = _square(b, "B", n)
    b_tilde = _square(b_tilde, "B~", n)
    eps_a = norm_max(diag_part(a_tilde - a))
    eps_a_prime = norm_max(offdiag_part(a_tilde - a))
    eps_b = norm_max(diag_part(b_tilde - b))
    eps_b_prime = norm_max(offdiag_part(b_tilde - b))
    diff = a_tilde @ b_tilde - a @ b
    bound_a = ((n - 1) * norm_max(offdiag_part(a_tilde)) * eps_b_prime
               + norm_max(diag_part(a_tilde)) * eps_b
               + (n - 1) * norm_max(offdiag_part(b)) * eps_a_prime
               + norm_max(diag_part(b)) * eps_a)
    bound_b = ((n - 1) * norm_max(a_tilde) * eps_b_prime
               + norm_max(offdiag_part(a_tilde)) * eps_b
               + (n - 1) * norm_max(b) * eps_a_prime
               + norm_max(offdiag_part(b)) * eps_a)
    return _report("A6-product-i", True, [
        ("a", norm_max(diag_part(diff)), bound_a),
        ("b", norm_max(offdiag_part(diff)), bound_b),
    ])


def normalization_i(b, v, weights):
    """Angles of ``A = B V`` against ``B`` when ``B`` only has unit columns."""
    b = _matrix(b, "B")
    v = _square(v, "V", b.shape[1])
    w, kappa = _scaled_mixing(v, weights)
    nan = float("nan")
    if w is None:
        return _report("A7-normalization-i", False, [("", nan, nan)])
    n = v.shape[0]
    eps = norm_max(diag_part(w) - np.eye(n))
    eps_prime = norm_max(offdiag_part(w))
    spread = (n - 1) * kappa * eps_prime
    denom = (1.0 - eps) ** 2 - 4.0 * spread - spread ** 2
    hyp = _unit_columns(b) and eps < 1.0 and denom > 0
    if not hyp:
        return _report("A7-normalization-i", False, [("", nan, nan)])
    lhs = float(np.max(column_sines(b @ v, b)))
    return _report("A7-normalization-i", True, [("", lhs, np.sqrt(2.0 / denom) * spread)])


CHECKERS = {
    "A1-innerprod-i": innerprod_i,
    "A2-innerprod-o": innerprod_o,
    "A3-inverse": inverse,
    "A3c-corollary": inverse_corollary,
    "A4-product-o": product_o,
    "A5-normalization-o": normalization_o,
    "A6-product-i": product_i,
    "A7-normalization-i": normalization_i,
}
LEMMA_IDS = tuple(CHECKERS)


def lemma_oracle(lemma_id, *inputs, **params):
    """Dispatch to the checker for ``lemma_id``."""
    try:
        checker = CHECKERS[lemma_id]
    except KeyError:
        raise ValueError(f"unknown lemma {lemma_id!r}") from None
    return checker(*inputs, **params)


# -- random instances satisfying each lemma's hypotheses ---------------------

def _log_uniform(rng, lo, hi):
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def _normalized(a):
    return a / np.linalg.norm(a, axis=0)


def _aligned_pair(rng, n, orthonormal):
    m = n + int(rng.integers(0, 6))
    if orthonormal:
        b = np.linalg.qr(rng.standard_normal((m, n)))[0]
    else:
        b = _normalized(rng.standard_normal((m, n)))
    a = _normalized(b + _log_uniform(rng, 1e-6, 1.0) * rng.standard_normal((m, n)))
    a *= np.where(np.sum(a * b, axis=0) < 0, -1.0, 1.0)
    return a, b


def _offdiag_noise(rng, n, scale):
    noise = rng.uniform(-scale, scale, (n, n))
    np.fill_diagonal(noise, 0.0)
    return noise


def _random_weights(rng, n):
    return rng.choice([-1.0, 1.0], n) * np.exp(rng.uniform(np.log(0.1), np.log(10.0), n))


def _instance_a1(rng, n):
    return _aligned_pair(rng, n, orthonormal=False)


def _instance_a2(rng, n):
    return _aligned_pair(rng, n, orthonormal=True)


def _instance_a3(rng, n):
    total = rng.uniform(0.0, 0.99) / (n - 1)
    split = rng.uniform()
    b = np.eye(n) + _offdiag_noise(rng, n, total * split)
    a = b + _offdiag_noise(rng, n, total * (1.0 - split))
    return a, b


def _instance_a3c(rng, n):
    return (np.eye(n) + _offdiag_noise(rng, n, rng.uniform(0.0, 0.99) / (n - 1)),)


def _instance_a4(rng, n):
    eps_a = rng.uniform(0.0, 1.0)
    a = np.diag(rng.uniform(1.0 - eps_a, 1.0, n)) + _offdiag_noise(rng, n, rng.uniform(0, 1))
    b = np.eye(n) + rng.uniform(-1.0, 1.0, (n, n)) * rng.uniform(0.0, 1.0)
    return a, b


def _instance_a5(rng, n):
    m = n + int(rng.integers(0, 6))
    b = np.linalg.qr(rng.standard_normal((m, n)))[0]
    weights = _random_weights(rng, n)
    eps = rng.uniform(0.0, 0.99)
    w = np.diag(1.0 + rng.uniform(-eps, eps, n)) + _offdiag_noise(rng, n, _log_uniform(rng, 1e-6, 1.0))
    return b, weights[:, None] * w, weights


def _instance_a6(rng, n):
    a = rng.standard_normal((n, n))
    b = rng.standard_normal((n, n))
    scale = _log_uniform(rng, 1e-6, 1.0)
    return a, a + scale * rng.standard_normal((n, n)), b, b + scale * rng.standard_normal((n, n))


def _instance_a7(rng, n):
    m = n + int(rng.integers(0, 6))
    b = _normalized(rng.standard_normal((m, n)))
    weights = _random_weights(rng, n)
    kappa = np.max(np.abs(weights)) / np.min(np.abs(weights))
    eps = rng.uniform(0.0, 0.9)
    # largest (n-1) kappa eps' keeping (1-eps)^2 - 4t - t^2 positive
    t_max = -2.0 + np.sqrt(4.0 + (1.0 - eps) ** 2)
    eps_prime = rng.uniform(0.0, 0.99) * t_max / ((n - 1) * kappa)
    w = np.diag(1.0 + rng.uniform(-eps, eps, n)) + _offdiag_noise(rng, n, eps_prime)
    return b, weights[:, None] * w, weights


INSTANCES = {
    "A1-innerprod-i": _instance_a1,
    "A2-innerprod-o": _instance_a2,
    "A3-inverse": _instance_a3,
    "A3c-corollary": _instance_a3c,
    "A4-product-o": _instance_a4,
    "A5-normalization-o": _instance_a5,
    "A6-product-i": _instance_a6,
    "A7-normalization-i": _instance_a7,
}


def instance_seed(seed, lemma_id, index):
    """Seed of instance ``index`` for ``lemma_id`` in a suite run with ``seed``."""
    ss = np.random.SeedSequence([int(seed), LEMMA_IDS.index(lemma_id), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def random_instance(lemma_id, rng, size=None):
    """Inputs for ``lemma_id`` that satisfy its hypotheses by construction."""
    n = int(rng.integers(2, 11)) if size is None else size
    return INSTANCES[lemma_id](rng, n)


def run_lemma_suite(instances_per_lemma, seed=0, lemma_ids=LEMMA_IDS):
    """Check every lemma on ``instances_per_lemma`` random inputs (sizes 2..10)."""
    if instances_per_lemma < 1:
        raise ValueError("need at least one instance per lemma")
    reports = []
    for lemma_id in lemma_ids:
        for i in range(instances_per_lemma):
            s = instance_seed(seed, lemma_id, i)
            inputs = random_instance(lemma_id, np.random.default_rng(s))
            rep = lemma_oracle(lemma_id, *inputs)
            reports.append(LemmaReport(rep.lemma_id, rep.hypotheses_hold, rep.lhs,
                                       rep.bound, rep.parts, s))
    return reports


CSV_FIELDS = ("lemma_id", "seed", "hypotheses_hold", "lhs", "bound", "margin")


def write_reports_csv(reports, path_or_file):
    def _write(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for r in reports:
            writer.writerow([r.lemma_id, "" if r.seed is None else r.seed,
                             int(r.hypotheses_hold), repr(r.lhs), repr(r.bound),
                             repr(r.margin)])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)
