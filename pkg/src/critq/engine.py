"""Variational energies of (Z, e, e) at arbitrary real Z.

The energy at a charge is taken from a nested pair of bases of sizes ``N``
and ``ceil(growth_factor * N)``; the larger basis supplies the energy and the
difference between the two is the accuracy estimate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

from .basis import BasisLayout, ParameterBox, as_layout, generate_basis
from .errors import IllConditionedError, NumericalError, TrustRangeError, ValidationError
from .hamiltonian import DD_ELEMENT_BITS, operator_matrices
from .series import EnergyPoint
from .spectral import SpectralResult, solve_generalized

log = logging.getLogger(__name__)

# Boxes tuned at Z = 1 (basis size 150) and used scaled by Z.  The first box
# describes the compact electron pair, the second the tight/correlated region.
GROUND_LAYOUT = BasisLayout(
    (ParameterBox(0.4308, 1.3624, 0.1578, 1.0496, 0.00145, 0.1670),
     ParameterBox(0.5506, 6.8342, 0.3321, 4.5728, -0.000144, 1.4034)),
    (0.5, 0.5),
)

# The 2 1S level adds boxes for the outer electron, each more diffuse than the
# last, so the basis keeps up as the state spreads out near its threshold.
EXCITED_LAYOUT = BasisLayout(
    GROUND_LAYOUT.boxes + (ParameterBox(0.8, 1.2, 0.02, 0.5, 0.0, 0.3),
                           ParameterBox(0.85, 1.15, 0.005, 0.12, 0.0, 0.08),
                           ParameterBox(0.9, 1.1, 0.001, 0.03, 0.0, 0.02)),
    (0.3, 0.3, 0.15, 0.15, 0.1),
)

GROUND_TRUST_RANGE = (0.95, 4.0)
EXCITED_TRUST_RANGE = (1.05, 2.0)


@dataclass(frozen=True)
class SpectralConfig:
    basis_size: int = 400
    growth_factor: float = 1.5
    precision_bits: int = 128
    max_precision_bits: int = 512
    seed: int = 0
    layout: BasisLayout | None = None  # per unit charge; None selects the default
    scale_with_charge: bool = True
    trust_range: tuple[float, float] | None = None
    optimize: bool = False
    optimize_size: int = 150
    optimize_budget: int = 60

    def validate(self) -> "SpectralConfig":
        if self.basis_size < 1:
            raise ValidationError("basis_size must be >= 1")
        if not self.growth_factor > 1:
            raise ValidationError("growth_factor must exceed 1")
        if self.precision_bits < 64:
            raise ValidationError("precision_bits must be >= 64")
        if self.max_precision_bits < self.precision_bits:
            raise ValidationError("max_precision_bits must be >= precision_bits")
        return self

    def layout_for(self, Z: float, level: int) -> BasisLayout:
        base = self.layout or (GROUND_LAYOUT if level == 1 else EXCITED_LAYOUT)
        return base.scaled(Z) if self.scale_with_charge else base


def _solve_basis(basis, Z: float, k: int, precision_bits: int, max_bits: int,
                 leading: int | None = None) -> tuple[SpectralResult, SpectralResult | None]:
    ops = operator_matrices(basis, precision_bits)
    res = solve_generalized(ops.hamiltonian(Z), ops.overlap, k, precision_bits, max_bits)
    if res.precision_bits > DD_ELEMENT_BITS and precision_bits <= DD_ELEMENT_BITS:
        # the linear algebra needed more bits than the elements carry
        log.info("re-assembling %d functions at %d bits", len(basis), res.precision_bits)
        ops = operator_matrices(basis, res.precision_bits)
        res = solve_generalized(ops.hamiltonian(Z), ops.overlap, k, res.precision_bits, max_bits)
    small = None
    if leading is not None:
        sub = ops.leading(leading)
        small = solve_generalized(sub.hamiltonian(Z), sub.overlap, k,
                                  max(precision_bits, ops.precision_bits), max_bits)
    return res, small


def level_energy(Z: float, layout, N: int, seed: int = 0, level: int = 1,
                 precision_bits: int = 128, max_precision_bits: int = 512):
    """Eigenvalue number ``level`` (1 = ground) for one basis; an mpmath number."""
    basis = generate_basis(layout, N, seed)
    res, _ = _solve_basis(basis, Z, level, precision_bits, max_precision_bits)
    return res.eigenvalues[level - 1]


def _layout_valid(layout: BasisLayout) -> bool:
    try:
        for b in layout.boxes:
            b.validate()
    except ValidationError:
        return False
    return True


def optimize_box(Z: float, N: int, init, budget: int, seed: int = 0, level: int = 1,
                 precision_bits: int = 128, initial_step: float = 0.25,
                 min_step: float = 1e-3):
    """Derivative-free coordinate descent over the box bounds.

    Each trial moves one bound by ``+step`` then ``-step`` times the width of
    its interval; the first improving move is accepted and the sweep goes on
    with the next bound.  A sweep without improvement halves the step.
    ``budget`` counts trial energy evaluations.  Returns the input unchanged
    (same type) when nothing improves.
    """
    if budget < 1:
        raise ValidationError("budget must be >= 1")
    layout = as_layout(init)
    for b in layout.boxes:
        b.validate()

    def energy(lay: BasisLayout) -> float:
        try:
            return float(level_energy(Z, lay, N, seed, level, precision_bits))
        except NumericalError as exc:
            log.debug("trial layout failed: %s", exc)
            return math.inf

    best = energy(layout)
    if not math.isfinite(best):
        raise IllConditionedError("initial box does not give a solvable problem")
    improved_any = False
    used = 0
    step = initial_step
    while used < budget and step >= min_step:
        improved = False
        for bi in range(len(layout.boxes)):
            for c in range(6):
                if used >= budget:
                    break
                bounds = list(layout.boxes[bi].as_tuple())
                width = bounds[c | 1] - bounds[c & ~1]
                for sign in (1.0, -1.0):
                    if used >= budget:
                        break
                    trial = list(bounds)
                    trial[c] += sign * step * width
                    cand = layout.replace_box(bi, ParameterBox(*trial))
                    if not _layout_valid(cand):
                        continue
                    used += 1
                    e = energy(cand)
                    if e < best:
                        best, layout, improved = e, cand, True
                        log.debug("Z=%g box %d bound %d -> %.15g", Z, bi, c, e)
                        break
        improved_any |= improved
        if not improved:
            step *= 0.5
    if not improved_any:
        return init
    if isinstance(init, ParameterBox):
        return layout.boxes[0]
    return layout


def _energy_point(Z: float, config: SpectralConfig, level: int) -> EnergyPoint:
    config.validate()
    layout = config.layout_for(Z, level)
    if config.optimize:
        layout = optimize_box(Z, config.optimize_size, layout, config.optimize_budget,
                              config.seed, level, config.precision_bits)
    n_small = config.basis_size
    n_large = max(n_small + 1, math.ceil(config.growth_factor * n_small))
    basis = generate_basis(layout, n_large, config.seed)
    big, small = _solve_basis(basis, Z, level, config.precision_bits,
                              config.max_precision_bits, leading=n_small)
    e_big = big.eigenvalues[level - 1]
    e_small = small.eigenvalues[level - 1]
    return EnergyPoint(Z=float(Z), E=float(e_big), basis_size=n_large,
                       precision_bits=big.precision_bits,
                       est_error=float(abs(e_small - e_big)))


def _check_trust(Z: float, rng: tuple[float, float]) -> None:
    lo, hi = rng
    if not (lo - 1e-12 <= Z <= hi + 1e-12):
        raise TrustRangeError(f"Z={Z} outside the trusted range [{lo}, {hi}]")


def ground_energy(Z: float, config: SpectralConfig | None = None) -> EnergyPoint:
    config = config or SpectralConfig()
    _check_trust(Z, config.trust_range or GROUND_TRUST_RANGE)
    return _energy_point(Z, config, 1)


def excited_energy(Z: float, config: SpectralConfig | None = None, level: int = 2) -> EnergyPoint:
    """Energy of the ``level``-th singlet S level (Hylleraas-Undheim upper bound)."""
    if level < 2:
        raise ValidationError("excited levels start at 2")
    config = config or SpectralConfig()
    _check_trust(Z, config.trust_range or EXCITED_TRUST_RANGE)
    return _energy_point(Z, config, level)


def with_precision(config: SpectralConfig, bits: int) -> SpectralConfig:
    return replace(config, precision_bits=int(bits),
                   max_precision_bits=max(config.max_precision_bits, int(bits)))
