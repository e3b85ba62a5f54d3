"""Matrix elements of the two-electron Hamiltonian in the symmetrized basis.

Conventions: the S-state volume element 8 pi^2 r1 r2 r12 is applied with the
constant 8 pi^2 dropped from every matrix.  An element between symmetrized
functions f and g is ``<f|O|g> + <f|O|Pg>`` (P exchanges the electrons), which
is half of the four-term direct/exchange sum; the factor cancels in the
generalized eigenproblem.

The kinetic energy is used in the symmetric gradient form

    1/2 int (grad1 f . grad1 g + grad2 f . grad2 g)

so that every element is manifestly symmetric in (f, g).
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import flint
import mpmath
import numpy as np

from .basis import BasisFunction, BasisSet
from .ddfloat import DD
from .errors import ValidationError
from .integrals import ExponentTriple, ReciprocalPowers, gamma_from_reciprocals

# precision at or below which elements are evaluated in double-double
DD_ELEMENT_BITS = 128


@contextmanager
def flint_precision(bits: int):
    old = flint.ctx.prec
    flint.ctx.prec = int(bits)
    try:
        yield
    finally:
        flint.ctx.prec = old


def _direct_parts(ai, bi, gi, aj, bj, gj):
    """Overlap, kinetic, nuclear-attraction (per unit Z) and repulsion
    integrals between two unsymmetrized exponentials.  Works elementwise in
    any arithmetic whose inputs have already been lifted to it."""
    A = ai + aj
    B = bi + bj
    C = gi + gj
    inv_p = ReciprocalPowers(B + C)
    inv_q = ReciprocalPowers(A + C)
    inv_s = ReciprocalPowers(A + B)

    def G(l, m, n):
        return gamma_from_reciprocals((l, m, n), inv_p, inv_q, inv_s)

    overlap = G(1, 1, 1)
    attraction = G(0, 1, 1) + G(1, 0, 1)
    repulsion = G(1, 1, 0)
    # r1 r2 r12 * (r1^2 + r12^2 - r2^2) / (2 r1 r12), and its 1<->2 image
    cos1 = (G(2, 1, 0) + G(0, 1, 2) - G(0, 3, 0)) * 0.5
    cos2 = (G(1, 2, 0) + G(1, 0, 2) - G(3, 0, 0)) * 0.5
    radial = ai * aj + bi * bj + gi * gj * 2.0
    kinetic = (radial * overlap + (ai * gj + gi * aj) * cos1 + (bi * gj + gi * bj) * cos2) * 0.5
    return overlap, kinetic, attraction, repulsion


def _symmetrized_parts(ai, bi, gi, aj, bj, gj):
    d = _direct_parts(ai, bi, gi, aj, bj, gj)
    x = _direct_parts(ai, bi, gi, bj, aj, gj)
    return tuple(u + v for u, v in zip(d, x))


def _check(f: BasisFunction) -> BasisFunction:
    f.validate()
    return f


def _scalar_parts(f: BasisFunction, g: BasisFunction, prec: int):
    _check(f), _check(g)
    for x in (f, g):
        ExponentTriple(x.alpha, x.beta, x.a)
    with mpmath.workprec(prec + 16):
        lift = [mpmath.mpf(v) for v in (f.alpha, f.beta, f.a, g.alpha, g.beta, g.a)]
        return _symmetrized_parts(*lift)


def overlap_element(f: BasisFunction, g: BasisFunction, prec: int = 128) -> mpmath.mpf:
    with mpmath.workprec(prec):
        return +_scalar_parts(f, g, prec)[0]


def kinetic_element(f: BasisFunction, g: BasisFunction, prec: int = 128) -> mpmath.mpf:
    with mpmath.workprec(prec):
        return +_scalar_parts(f, g, prec)[1]


def potential_element(f: BasisFunction, g: BasisFunction, Z: float,
                      prec: int = 128) -> mpmath.mpf:
    """``<f| -Z/r1 - Z/r2 + 1/r12 |g>``, symmetrized."""
    if not Z > 0:
        raise ValidationError(f"nuclear charge must be positive, got {Z}")
    _, _, att, rep = _scalar_parts(f, g, prec)
    with mpmath.workprec(prec):
        return +(rep - mpmath.mpf(Z) * att)


@dataclass
class OperatorMatrices:
    """Z-independent pieces of the secular problem: ``H(Z) = T + Vee - Z*Vne``."""

    overlap: flint.arb_mat
    kinetic: flint.arb_mat
    attraction: flint.arb_mat
    repulsion: flint.arb_mat
    precision_bits: int

    @property
    def size(self) -> int:
        return self.overlap.nrows()

    def hamiltonian(self, Z: float) -> flint.arb_mat:
        with flint_precision(self.precision_bits):
            return self.kinetic + self.repulsion - self.attraction * flint.arb(Z)

    def leading(self, n: int) -> "OperatorMatrices":
        """Matrices of the first ``n`` basis functions."""
        def cut(m):
            rows = m.tolist()
            return flint.arb_mat([row[:n] for row in rows[:n]])
        with flint_precision(self.precision_bits):
            return OperatorMatrices(cut(self.overlap), cut(self.kinetic), cut(self.attraction),
                                    cut(self.repulsion), self.precision_bits)


def _dd_to_arb(x: DD, n: int, iu: tuple[np.ndarray, np.ndarray]) -> flint.arb_mat:
    hi = np.zeros((n, n))
    lo = np.zeros((n, n))
    hi[iu] = x.hi
    lo[iu] = x.lo
    hi.T[iu] = x.hi
    lo.T[iu] = x.lo
    return flint.arb_mat(hi.tolist()) + flint.arb_mat(lo.tolist())


def operator_matrices(basis: BasisSet, precision_bits: int = 128) -> OperatorMatrices:
    """Assemble overlap, kinetic, attraction and repulsion matrices.

    Only the upper triangle is evaluated and mirrored, so every matrix is
    exactly symmetric.  Up to ``DD_ELEMENT_BITS`` the elements are computed in
    vectorized double-double (about 106 significant bits); above that each
    element is computed in ball arithmetic at the requested precision.
    """
    basis.validate()
    n = len(basis)
    a, b, g = basis.arrays()
    iu = np.triu_indices(n)
    i, j = iu
    with flint_precision(precision_bits):
        if precision_bits <= DD_ELEMENT_BITS:
            parts = _symmetrized_parts(DD(a[i]), DD(b[i]), DD(g[i]), DD(a[j]), DD(b[j]), DD(g[j]))
            mats = [_dd_to_arb(p, n, iu) for p in parts]
        else:
            mats = [flint.arb_mat(n, n) for _ in range(4)]
            lifted = [(flint.arb(x), flint.arb(y), flint.arb(z)) for x, y, z in zip(a, b, g)]
            for r in range(n):
                for c in range(r, n):
                    vals = _symmetrized_parts(*lifted[r], *lifted[c])
                    for m, v in zip(mats, vals):
                        m[r, c] = v
                        m[c, r] = v
    return OperatorMatrices(*mats, precision_bits=int(precision_bits))


def assemble(basis: BasisSet, Z: float, precision_bits: int = 128):
    """Hamiltonian and overlap matrices ``(H, S)`` as flint ``arb_mat``."""
    if not Z > 0:
        raise ValidationError(f"nuclear charge must be positive, got {Z}")
    ops = operator_matrices(basis, precision_bits)
    return ops.hamiltonian(Z), ops.overlap
