"""Independent checks for the LU corpus, written against numpy and fractions."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from mdl.values import ArrayVal, StructVal


def to_numpy(a: ArrayVal) -> np.ndarray:
    return np.array(a.data, dtype=float).reshape(a.dims, order="F")


def from_numpy(engine, x: np.ndarray) -> ArrayVal:
    return ArrayVal(engine.parse_type("Float64"), tuple(x.shape), [float(v) for v in x.ravel(order="F")])


def replay_pivots(a0, rowpiv, colpiv):
    """P*A0*Q by applying the recorded swaps in order."""
    a = a0.copy()
    for k, (r, c) in enumerate(zip(rowpiv, colpiv)):
        a[[k, r - 1], :] = a[[r - 1, k], :]
        a[:, [k, c - 1]] = a[:, [c - 1, k]]
    return a


def split_lu(f):
    return np.tril(f, -1) + np.eye(f.shape[0]), np.triu(f)


def _unit_lower(f):
    n = f.shape[0]
    out = np.empty_like(f)
    for i in range(n):
        for j in range(n):
            out[i, j] = f[i, j] if i > j else Fraction(int(i == j))
    return out


def lu_residual(a0: np.ndarray, result) -> float:
    """max |P*A0*Q - L*U| for the (A, rowpiv, colpiv) triple returned by the corpus."""
    f, rowpiv, colpiv = result
    lower, upper = split_lu(to_numpy(f))
    pa = replay_pivots(a0, rowpiv.data, colpiv.data)
    return float(np.max(np.abs(pa - lower @ upper)))


def rational_matrix(a: ArrayVal) -> np.ndarray:
    vals = [Fraction(x.fields[0], x.fields[1]) if isinstance(x, StructVal) else Fraction(x) for x in a.data]
    return np.array(vals, dtype=object).reshape(a.dims, order="F")


def exact_residual(a0: np.ndarray, result) -> np.ndarray:
    f, rowpiv, colpiv = result
    fm = rational_matrix(f)
    lower, upper = _unit_lower(fm), np.triu(fm)
    return replay_pivots(a0, rowpiv.data, colpiv.data) - lower.dot(upper)
