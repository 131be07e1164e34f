"""Dense tensor primitives.

Tensors are plain :class:`numpy.ndarray` objects of float64. The *logical*
layout is colexicographic (first index fastest): mode-``n`` matricization
orders the fibres colexicographically in the remaining indices, and the file
formats in :mod:`cpaltls.io` store values in that order. Arrays created by this
package are Fortran-ordered so that the mode-0 unfolding is a view.

Modes are 0-based throughout, matching numpy axes.
"""

from functools import reduce

import numpy as np

from .errors import DimensionError

MAX_ORDER = 8


def as_tensor(x):
    """Return ``x`` as a Fortran-ordered float64 array, validating its shape."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim < 1:
        raise DimensionError("a tensor needs at least one mode")
    if x.ndim > MAX_ORDER:
        raise DimensionError(f"tensor order {x.ndim} exceeds {MAX_ORDER}")
    if any(extent < 1 for extent in x.shape):
        raise DimensionError(f"every extent must be positive, got {x.shape}")
    return np.asfortranarray(x)


def from_colex(shape, values):
    """Build a tensor from a flat sequence stored first-index-fastest."""
    shape = tuple(int(s) for s in shape)
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size != int(np.prod(shape)):
        raise DimensionError(
            f"{values.size} values do not fill a tensor of shape {shape}"
        )
    return as_tensor(values.reshape(shape, order="F"))


def to_colex(x):
    """Flatten ``x`` first-index-fastest."""
    return np.asarray(x).ravel(order="F")


def inner_product(x, y):
    """Frobenius inner product of two equally shaped tensors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.vdot(x, y))


def frobenius_norm(x):
    return float(np.sqrt(max(inner_product(x, x), 0.0)))


def khatri_rao(a, b):
    """Column-wise Kronecker product.

    Row ``i * J + j`` of the result holds ``a[i, k] * b[j, k]``, so column
    ``k`` equals ``np.kron(a[:, k], b[:, k])``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError("khatri_rao expects two matrices")
    if a.shape[1] != b.shape[1]:
        raise DimensionError(
            f"column counts differ: {a.shape[1]} vs {b.shape[1]}"
        )
    rows = a.shape[0] * b.shape[0]
    return np.einsum("ik,jk->ijk", a, b).reshape(rows, a.shape[1])


def khatri_rao_all(matrices):
    """Khatri-Rao product of ``matrices`` in the order given.

    Evaluated right to left, so ``khatri_rao_all([A3, A2, A1])`` forms
    ``A3 (.) (A2 (.) A1)`` and the last matrix's row index varies fastest.
    """
    matrices = list(matrices)
    if not matrices:
        raise DimensionError("need at least one matrix")
    return reduce(lambda acc, m: khatri_rao(m, acc), reversed(matrices[:-1]),
                  np.asarray(matrices[-1], dtype=np.float64))


def khatri_rao_except(factors, n):
    """Khatri-Rao product of every factor but ``n``, in decreasing mode order.

    Its rows line up with the columns of ``matricize(x, n)``.
    """
    others = [factors[m] for m in reversed(range(len(factors))) if m != n]
    if not others:
        rank = np.asarray(factors[n]).shape[1]
        return np.ones((1, rank))
    return khatri_rao_all(others)


def kronecker(a, b):
    return np.kron(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))


def hadamard(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def hadamard_except(grams, n):
    """Hadamard product of every Gram matrix but the ``n``-th."""
    rank = np.asarray(grams[0]).shape[0]
    out = np.ones((rank, rank))
    for m in reversed(range(len(grams))):
        if m != n:
            out = out * grams[m]
    return out


def matricize(x, n):
    """Mode-``n`` unfolding with fibres in colexicographic order.

    Returns an ``I_n x prod(I_m, m != n)`` matrix. For ``n == 0`` and a
    Fortran-ordered input this is a view.
    """
    x = np.asarray(x, dtype=np.float64)
    if not 0 <= n < x.ndim:
        raise DimensionError(f"mode {n} out of range for order {x.ndim}")
    return np.moveaxis(x, n, 0).reshape(x.shape[n], -1, order="F")


def fold(matrix, n, shape):
    """Inverse of :func:`matricize`."""
    shape = tuple(shape)
    moved = (shape[n],) + shape[:n] + shape[n + 1:]
    return np.asfortranarray(
        np.moveaxis(np.asarray(matrix).reshape(moved, order="F"), 0, n)
    )


def kruskal_reconstruct(model):
    """Dense tensor ``sum_r w_r a1_r o ... o aN_r`` for a Kruskal model.

    ``model`` needs ``weights`` and ``factors`` attributes.
    """
    factors = [np.asarray(f, dtype=np.float64) for f in model.factors]
    weights = np.asarray(model.weights, dtype=np.float64)
    shape = tuple(f.shape[0] for f in factors)
    unfolded = (factors[0] * weights) @ khatri_rao_except(factors, 0).T
    return np.asfortranarray(unfolded.reshape(shape, order="F"))


def _square(a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def diag_part(a):
    a = _square(a)
    return np.diag(np.diag(a))


def offdiag_part(a):
    a = _square(a)
    return a - np.diag(np.diag(a))


def norm_max(a):
    """Largest absolute entry (the (1, inf) operator norm)."""
    a = np.asarray(a, dtype=np.float64)
    return float(np.max(np.abs(a))) if a.size else 0.0


def norm_one_two(a):
    """(1, 2) operator norm: the largest column 2-norm."""
    a = np.asarray(a, dtype=np.float64)
    return float(np.max(np.linalg.norm(a, axis=0))) if a.size else 0.0
