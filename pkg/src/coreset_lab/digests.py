"""64-bit FNV-1a digests over canonical serializations.

Digests link coresets to the dataset and reference solution they were
built from, so evaluation cannot silently cross-wire artifacts.
"""
from __future__ import annotations

import numpy as np

from .data import FINITE_MATRIX, Dataset
from .seeding import ApproxSolution

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1


def fnv1a64(payload: bytes) -> int:
    h = _FNV_OFFSET
    for byte in payload:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK
    return h


def digest_hex(payload: bytes) -> str:
    return f"{fnv1a64(payload):016x}"


def canonical_floats(values: np.ndarray) -> str:
    return ",".join(format(v, ".17g") for v in np.asarray(values, dtype=np.float64).reshape(-1))


def dataset_digest(P: Dataset) -> str:
    if P.metric == FINITE_MATRIX:
        body = canonical_floats(P.matrix)
    else:
        body = canonical_floats(P.points)
    if P.weights is not None:
        body += "|w:" + canonical_floats(P.weights)
    return digest_hex(f"{P.metric}|{body}".encode())


def solution_digest(A: ApproxSolution) -> str:
    if A.centers.ndim == 1:
        centers = ",".join(str(int(c)) for c in A.centers)
    else:
        centers = canonical_floats(A.centers)
    labels = ",".join(str(int(v)) for v in A.clustering.assignment)
    return digest_hex(f"{A.metric}|{centers}|{labels}".encode())
