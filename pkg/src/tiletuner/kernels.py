"""Reference and tiled 3mm, LU and Cholesky kernels.

Loop nests are compiled with numba so tile factors change real memory access
patterns. All kernels are single-threaded and float64. Tiled variants keep the
per-element summation order of the reference (k ascending), so their outputs
agree with the reference far below the 1e-10 tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

KERNELS = ("lu", "cholesky", "mm3")
_ALIASES = {"3mm": "mm3", "mm3": "mm3", "lu": "lu", "cholesky": "cholesky"}

ZERO_PIVOT = 1e-300


class NumericalFailure(ArithmeticError):
    """Zero pivot (LU) or non-positive diagonal (Cholesky)."""


def normalize_kernel(kernel: str) -> str:
    try:
        return _ALIASES[kernel.lower()]
    except KeyError:
        raise KeyError(f"unknown kernel {kernel!r}; expected one of lu, cholesky, 3mm") from None


@dataclass(frozen=True)
class ProblemSize:
    kernel: str
    name: str
    dims: dict[str, int] = field(hash=False)


_MM3_DIMS = {
    "mini": (16, 18, 20, 22, 24),
    "small": (80, 90, 100, 110, 120),
    "large": (800, 900, 1000, 1100, 1200),
    "extralarge": (1600, 1800, 2000, 2200, 2400),
}
_SQUARE_N = {"mini": 64, "small": 400, "large": 2000, "extralarge": 4000}

PROBLEM_SIZES: dict[tuple[str, str], ProblemSize] = {}
for _name, _dims in _MM3_DIMS.items():
    PROBLEM_SIZES["mm3", _name] = ProblemSize("mm3", _name, dict(zip("NLMOP", _dims)))
for _k in ("lu", "cholesky"):
    for _name, _n in _SQUARE_N.items():
        PROBLEM_SIZES[_k, _name] = ProblemSize(_k, _name, {"N": _n})

SIZE_NAMES = ("mini", "small", "large", "extralarge")


def get_problem_size(kernel: str, size_name: str) -> ProblemSize:
    kernel = normalize_kernel(kernel)
    try:
        return PROBLEM_SIZES[kernel, size_name]
    except KeyError:
        raise KeyError(f"no problem size {size_name!r} for kernel {kernel}") from None


# ---------------------------------------------------------------- generators


def gen_spd(n: int, seed: int) -> np.ndarray:
    """B*B^T + n*I with B uniform in [0, 1); exactly symmetric."""
    rng = np.random.default_rng(seed)
    b = rng.random((n, n))
    a = b @ b.T
    a = np.tril(a) + np.tril(a, -1).T
    a[np.diag_indices(n)] += n
    return a


def gen_3mm_inputs(dims: dict[str, int], seed: int):
    n, l, m, o, p = (dims[k] for k in "NLMOP")
    rng = np.random.default_rng(seed)
    return rng.random((n, l)), rng.random((l, m)), rng.random((m, o)), rng.random((o, p))


# ---------------------------------------------------------------- 3mm


@numba.njit(cache=True)
def _matmul_naive(a, b):
    n, kk = a.shape
    m = b.shape[1]
    c = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(kk):
                acc += a[i, k] * b[k, j]
            c[i, j] = acc
    return c


@numba.njit(cache=True)
def _matmul_tiled(a, b, ty, tx):
    # for yo, for xo, for k, for yi, for xi
    n, kk = a.shape
    m = b.shape[1]
    c = np.zeros((n, m))
    for yo in range(0, n, ty):
        for xo in range(0, m, tx):
            for k in range(kk):
                for yi in range(yo, yo + ty):
                    aik = a[yi, k]
                    for xi in range(xo, xo + tx):
                        c[yi, xi] += aik * b[k, xi]
    return c


def _check_mm3_shapes(A, B, C, D):
    if A.shape[1] != B.shape[0] or C.shape[1] != D.shape[0] or B.shape[1] != C.shape[0]:
        raise ValueError(
            f"3mm dimension mismatch: A{A.shape} B{B.shape} C{C.shape} D{D.shape}"
        )


def mm3_reference(A, B, C, D) -> np.ndarray:
    """G = (A*B)*(C*D) with naive triple loops."""
    A, B, C, D = (np.ascontiguousarray(x, dtype=np.float64) for x in (A, B, C, D))
    _check_mm3_shapes(A, B, C, D)
    return _matmul_naive(_matmul_naive(A, B), _matmul_naive(C, D))


def _check_factor(f: int, extent: int, label: str) -> int:
    f = int(f)
    if f < 1 or extent % f:
        raise ValueError(f"tile factor {label}={f} does not divide extent {extent}")
    return f


def mm3_tiled(A, B, C, D, config: Sequence[int]) -> np.ndarray:
    """3mm with tile factors (P0, P1) on E, (P2, P3) on F, (P4, P5) on G."""
    A, B, C, D = (np.ascontiguousarray(x, dtype=np.float64) for x in (A, B, C, D))
    _check_mm3_shapes(A, B, C, D)
    if len(config) != 6:
        raise ValueError(f"3mm takes 6 tile factors, got {len(config)}")
    n, m, p = A.shape[0], B.shape[1], D.shape[1]
    extents = (n, m, m, p, n, p)
    f = [_check_factor(v, e, f"P{i}") for i, (v, e) in enumerate(zip(config, extents))]
    E = _matmul_tiled(A, B, f[0], f[1])
    F = _matmul_tiled(C, D, f[2], f[3])
    return _matmul_tiled(E, F, f[4], f[5])


# ---------------------------------------------------------------- LU


@numba.njit(cache=True)
def _lu_polybench(a):
    n = a.shape[0]
    for i in range(n):
        for j in range(i):
            for k in range(j):
                a[i, j] -= a[i, k] * a[k, j]
            a[i, j] /= a[j, j]
        for j in range(i, n):
            for k in range(i):
                a[i, j] -= a[i, k] * a[k, j]
        if abs(a[i, i]) < 1e-300:
            return i
    return -1


@numba.njit(cache=True)
def _lu_blocked(a, by, bx):
    # right-looking, panel width bx; trailing update tiled (by, bx)
    n = a.shape[0]
    for k0 in range(0, n, bx):
        k1 = k0 + bx
        # unblocked panel: columns k0..k1, all rows below
        for k in range(k0, k1):
            piv = a[k, k]
            if abs(piv) < 1e-300:
                return k
            for i in range(k + 1, n):
                a[i, k] /= piv
                lik = a[i, k]
                for j in range(k + 1, k1):
                    a[i, j] -= lik * a[k, j]
        # block row of U right of the panel
        for k in range(k0, k1):
            for i in range(k + 1, k1):
                lik = a[i, k]
                for j in range(k1, n):
                    a[i, j] -= lik * a[k, j]
        # trailing update, loop order io, jo, k, ii, jj
        for io in range(0, n, by):
            ilo = max(io, k1)
            ihi = io + by
            if ilo >= ihi:
                continue
            for jo in range(k1, n, bx):
                for k in range(k0, k1):
                    for i in range(ilo, ihi):
                        lik = a[i, k]
                        for j in range(jo, jo + bx):
                            a[i, j] -= lik * a[k, j]
    return -1


def _split_lu(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    L = np.tril(a, -1)
    np.fill_diagonal(L, 1.0)
    return L, np.triu(a)


def _square(A) -> np.ndarray:
    a = np.array(A, dtype=np.float64, order="C", copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def lu_reference(A) -> tuple[np.ndarray, np.ndarray]:
    """Pivot-free LU in PolyBench row order. Returns unit-lower L and upper U."""
    a = _square(A)
    bad = _lu_polybench(a)
    if bad >= 0:
        raise NumericalFailure(f"zero pivot at step {bad}")
    return _split_lu(a)


def lu_tiled(A, config: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    a = _square(A)
    n = a.shape[0]
    by, bx = (_check_factor(v, n, f"P{i}") for i, v in enumerate(config))
    bad = _lu_blocked(a, by, bx)
    if bad >= 0:
        raise NumericalFailure(f"zero pivot at step {bad}")
    return _split_lu(a)


# ---------------------------------------------------------------- Cholesky


@numba.njit(cache=True)
def _cholesky_polybench(a):
    n = a.shape[0]
    for i in range(n):
        for j in range(i):
            for k in range(j):
                a[i, j] -= a[i, k] * a[j, k]
            a[i, j] /= a[j, j]
        for k in range(i):
            a[i, i] -= a[i, k] * a[i, k]
        if not a[i, i] > 0.0:
            return i
        a[i, i] = np.sqrt(a[i, i])
    return -1


@numba.njit(cache=True)
def _cholesky_blocked(a, by, bx):
    # left-looking over column panels of width bx; update rows tiled by by
    n = a.shape[0]
    for j0 in range(0, n, bx):
        j1 = j0 + bx
        for io in range(0, n, by):
            ilo = max(io, j0)
            ihi = io + by
            if ilo >= ihi:
                continue
            for k in range(j0):
                for i in range(ilo, ihi):
                    lik = a[i, k]
                    for j in range(j0, min(j1, i + 1)):
                        a[i, j] -= lik * a[j, k]
        # unblocked panel
        for j in range(j0, j1):
            for k in range(j0, j):
                ljk = a[j, k]
                for i in range(j, n):
                    a[i, j] -= a[i, k] * ljk
            if not a[j, j] > 0.0:
                return j
            a[j, j] = np.sqrt(a[j, j])
            d = a[j, j]
            for i in range(j + 1, n):
                a[i, j] /= d
    return -1


def cholesky_reference(A) -> np.ndarray:
    a = _square(A)
    bad = _cholesky_polybench(a)
    if bad >= 0:
        raise NumericalFailure(f"non-positive diagonal at step {bad}; input is not SPD")
    return np.tril(a)


def cholesky_tiled(A, config: Sequence[int]) -> np.ndarray:
    a = _square(A)
    n = a.shape[0]
    by, bx = (_check_factor(v, n, f"P{i}") for i, v in enumerate(config))
    bad = _cholesky_blocked(a, by, bx)
    if bad >= 0:
        raise NumericalFailure(f"non-positive diagonal at step {bad}; input is not SPD")
    return np.tril(a)


# ---------------------------------------------------------------- checks


def _rel_max(diff: np.ndarray, ref: np.ndarray) -> float:
    scale = np.max(np.abs(ref)) if ref.size else 0.0
    err = np.max(np.abs(diff)) if diff.size else 0.0
    if scale == 0.0:
        return float(err)
    return float(err / scale)


def residual(kernel: str, inputs, outputs) -> float:
    """Max-norm relative reconstruction error of a kernel's output."""
    kernel = normalize_kernel(kernel)
    if kernel == "lu":
        (A,) = inputs
        L, U = outputs
        return _rel_max(L @ U - A, A)
    if kernel == "cholesky":
        (A,) = inputs
        L = outputs[0] if isinstance(outputs, tuple) else outputs
        return _rel_max(L @ L.T - A, A)
    ref = mm3_reference(*inputs)
    G = outputs[0] if isinstance(outputs, tuple) else outputs
    return _rel_max(G - ref, ref)


REFERENCE = {
    "lu": lambda inputs: lu_reference(*inputs),
    "cholesky": lambda inputs: cholesky_reference(*inputs),
    "mm3": lambda inputs: mm3_reference(*inputs),
}

# looked up at call time so tests can swap in a broken kernel
TILED = {
    "lu": lambda inputs, cfg: lu_tiled(inputs[0], cfg),
    "cholesky": lambda inputs, cfg: cholesky_tiled(inputs[0], cfg),
    "mm3": lambda inputs, cfg: mm3_tiled(*inputs, cfg),
}


@dataclass(frozen=True)
class KernelCase:
    """A kernel at concrete dimensions with a deterministic input seed."""

    size: ProblemSize
    seed: int = 0

    @classmethod
    def of(cls, kernel: str, size_name: str, seed: int = 0) -> "KernelCase":
        return cls(get_problem_size(kernel, size_name), seed)

    @property
    def kernel(self) -> str:
        return self.size.kernel

    def inputs(self) -> tuple[np.ndarray, ...]:
        if self.kernel == "mm3":
            return gen_3mm_inputs(self.size.dims, self.seed)
        return (gen_spd(self.size.dims["N"], self.seed),)

    def run(self, config: Sequence[int], inputs=None):
        if inputs is None:
            inputs = self.inputs()
        return TILED[self.kernel](inputs, tuple(config))

    def reference(self, inputs=None):
        if inputs is None:
            inputs = self.inputs()
        return REFERENCE[self.kernel](inputs)
