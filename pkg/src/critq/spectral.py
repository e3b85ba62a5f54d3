"""Generalized symmetric eigenproblem ``H c = E S c`` in multiprecision.

Strategy:

1. A float64 pass (diagonal scaling + canonical orthogonalization) gives
   approximate eigenpairs of the lowest levels.
2. Each wanted level is refined by shifted inverse iteration
   ``x <- (H - sigma S)^-1 S x`` in flint ball arithmetic at the working
   precision (midpoint solves, no error bounds).
3. A Rayleigh-Ritz step on the refined vectors, done in mpmath, yields the
   eigenvalues.  Ritz values are upper bounds to the pencil's eigenvalues, so
   the variational property survives the projection.

Overlap matrices of correlated exponentials are extremely ill-conditioned.
The condition number is estimated a posteriori from a high-precision solve
with a known right-hand side; if that solve (or any later step) loses too
many bits, the whole computation is repeated at twice the precision, up to a
cap.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import flint
import mpmath
import numpy as np

from .errors import IllConditionedError, ValidationError
from .hamiltonian import flint_precision

log = logging.getLogger(__name__)

# accuracy (bits) that must survive the conditioning test
_MIN_SURVIVING_BITS = 24
_CANONICAL_CUTOFF = 1e-13


@dataclass
class SpectralResult:
    """Lowest ``k`` eigenvalues (hartree, mpmath numbers, ascending) and the
    corresponding coefficient vectors (columns of a float64 array)."""

    eigenvalues: list
    linear_coefficients: np.ndarray
    overlap_condition_estimate: float
    precision_bits: int


def _to_arb_mat(M) -> flint.arb_mat:
    if isinstance(M, flint.arb_mat):
        return M
    if isinstance(M, mpmath.matrix):
        return flint.arb_mat([[_mp_to_arb(M[i, j]) for j in range(M.cols)]
                              for i in range(M.rows)])
    arr = np.asarray(M)
    if arr.dtype == object:
        return flint.arb_mat([[_mp_to_arb(x) for x in row] for row in arr])
    return flint.arb_mat(np.asarray(arr, dtype=np.float64).tolist())


def _mid_float(M: flint.arb_mat) -> np.ndarray:
    return np.array([[float(x.mid()) for x in row] for row in M.tolist()])


def _arb_to_mp(x: flint.arb) -> mpmath.mpf:
    m, e = x.mid().man_exp()
    return mpmath.mpf((int(m), int(e)))


def _mp_to_arb(y) -> flint.arb:
    y = mpmath.mpf(y)
    if not y:
        return flint.arb(0)
    m, e = y.man_exp
    return flint.arb((int(m), int(e)))


def _diag_pow2_scaling(S: np.ndarray) -> np.ndarray:
    d = np.diag(S)
    if np.any(~(d > 0)):
        raise IllConditionedError("overlap matrix has non-positive diagonal entries")
    return np.exp2(-np.round(0.5 * np.log2(d)))


def _approximate_pairs(Hf, Sf, k):
    w, U = np.linalg.eigh(Sf)
    if w[-1] <= 0:
        raise IllConditionedError("overlap matrix is not positive definite")
    keep = w > _CANONICAL_CUTOFF * w[-1]
    X = U[:, keep] / np.sqrt(w[keep])
    e, V = np.linalg.eigh(X.T @ Hf @ X)
    if len(e) < k:
        raise IllConditionedError(
            f"only {len(e)} independent directions survive in double precision, need {k}")
    smallest = max(w[0], w[-1] * np.finfo(float).eps)
    return e[:k], X @ V[:, :k], float(w[-1] / smallest)


def _condition_probe(S: flint.arb_mat, n: int, prec: int) -> float:
    """Estimate cond(S) from the error of an approximate solve of S y = S v."""
    rng = np.random.default_rng(12345)
    v = flint.arb_mat([[float(x)] for x in rng.standard_normal(n)])
    try:
        y = S.solve(S * v, algorithm="approx")
    except ZeroDivisionError:
        return math.inf
    err = max(abs(float((y[i, 0] - v[i, 0]).mid())) for i in range(n))
    ref = max(abs(float(v[i, 0].mid())) for i in range(n))
    if not math.isfinite(err):
        return math.inf
    return max(1.0, err / ref * 2.0 ** prec)


def _rayleigh_ritz(H: flint.arb_mat, S: flint.arb_mat, Y: flint.arb_mat, prec: int):
    m = Y.ncols()
    Yt = Y.transpose()
    Hs = Yt * H * Y
    Ss = Yt * S * Y
    with mpmath.workprec(prec):
        Hm = mpmath.matrix([[_arb_to_mp(Hs[i, j]) for j in range(m)] for i in range(m)])
        Sm = mpmath.matrix([[_arb_to_mp(Ss[i, j]) for j in range(m)] for i in range(m)])
        Hm = (Hm + Hm.T) / 2
        Sm = (Sm + Sm.T) / 2
        try:
            L = mpmath.cholesky(Sm)
        except (ValueError, ZeroDivisionError) as exc:
            raise IllConditionedError("projected overlap matrix is not positive definite") from exc
        Li = mpmath.inverse(L)
        E, Q = mpmath.eigsy(Li * Hm * Li.T)
        order = sorted(range(m), key=lambda i: E[i])
        C = Li.T * Q
        evals = [E[i] for i in order]
        coeffs = [[C[r, i] for i in order] for r in range(m)]
    return evals, coeffs


def _solve_at(H, S, k, prec, max_iter):
    n = H.nrows()
    Hf, Sf = _mid_float(H), _mid_float(S)
    d = _diag_pow2_scaling(Sf)
    Hs_f, Ss_f = Hf * np.outer(d, d), Sf * np.outer(d, d)
    approx, vecs, cond_f = _approximate_pairs(Hs_f, Ss_f, k)

    with flint_precision(prec):
        D = flint.arb_mat(n, n)
        for i in range(n):
            D[i, i] = flint.arb(float(d[i]))
        Hs, Ss = D * H * D, D * S * D  # exact: powers of two

        cond = _condition_probe(Ss, n, prec)
        if math.log2(cond) > prec - _MIN_SURVIVING_BITS:
            raise IllConditionedError(
                f"overlap condition ~{cond:.1e} exceeds {prec}-bit capability")

        Y = flint.arb_mat(vecs.tolist())
        previous = None
        for _ in range(max_iter):
            cols = []
            for level in range(k):
                sigma = float(approx[level]) - 1e-9 * max(1.0, abs(float(approx[level])))
                M = Hs - Ss * flint.arb(sigma)
                x = flint.arb_mat([[Y[r, level]] for r in range(n)])
                try:
                    x = M.solve(Ss * x, algorithm="approx")
                except ZeroDivisionError as exc:
                    raise IllConditionedError("shifted matrix is singular") from exc
                scale = max(abs(float(x[r, 0].mid())) for r in range(n))
                if not (scale > 0 and math.isfinite(scale)):
                    raise IllConditionedError("inverse iteration produced non-finite vectors")
                cols.append(x * flint.arb(1.0 / scale))
            Y = flint.arb_mat([[cols[c][r, 0] for c in range(k)] for r in range(n)])
            evals, coeffs = _rayleigh_ritz(Hs, Ss, Y, prec)
            approx = np.array([float(e) for e in evals])
            with mpmath.workprec(prec):
                Cm = flint.arb_mat([[_mp_to_arb(coeffs[r][c]) for c in range(k)] for r in range(k)])
            Y = Y * Cm
            if previous is not None:
                with mpmath.workprec(prec):
                    change = max(abs(a - b) / max(1, abs(b)) for a, b in zip(evals, previous))
                if change < mpmath.mpf(2) ** (-(prec // 2)):
                    break
            previous = evals
        coeff = np.array([[float(Y[r, c].mid()) * d[r] for c in range(k)] for r in range(n)])
    return evals, coeff, max(cond, cond_f)


def solve_generalized(H, S, k: int = 1, precision_bits: int = 128,
                      max_precision_bits: int = 512, max_iter: int = 6) -> SpectralResult:
    """Lowest ``k`` eigenvalues of ``H c = E S c``.

    ``H`` and ``S`` may be flint ``arb_mat``, mpmath matrices or array-likes.
    If the working precision is insufficient the solve is retried at doubled
    precision up to ``max_precision_bits``.
    """
    H = _to_arb_mat(H)
    S = _to_arb_mat(S)
    n = H.nrows()
    if H.ncols() != n or S.nrows() != n or S.ncols() != n:
        raise ValidationError(f"dimension mismatch: H {H.nrows()}x{H.ncols()}, "
                              f"S {S.nrows()}x{S.ncols()}")
    if not 1 <= k <= n:
        raise ValidationError(f"need 1 <= k <= {n}, got k={k}")
    prec = int(precision_bits)
    if prec < 53:
        raise ValidationError("precision_bits must be at least 53")
    last: Exception | None = None
    while prec <= max_precision_bits:
        try:
            evals, coeff, cond = _solve_at(H, S, k, prec, max_iter)
            return SpectralResult(evals, coeff, cond, prec)
        except IllConditionedError as exc:
            log.info("solve failed at %d bits (%s); doubling precision", prec, exc)
            last = exc
            prec *= 2
    raise IllConditionedError(
        f"generalized eigenproblem unsolvable up to {max_precision_bits} bits: {last}")
