"""Universal elements of the Drinfeld category truncated at hbar^N:
phi, the associator, the braiding and the fusion element J.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Mapping

from .algebra import (
    LieAlgebraSpec,
    TensorSeries,
    UniversalMorphism,
    casimir_series,
    insert_legs,
    leg,
    series_inverse,
    series_power,
)


class UnsupportedOrderError(ValueError):
    pass


def phi_element(spec: LieAlgebraSpec, order: int = 0) -> TensorSeries:
    """(1/4)[t^{12}, t^{23}] on three legs, hbar-free."""
    t = casimir_series(spec, order)
    t12 = leg(t, 1, 2, m=3)
    t23 = leg(t, 2, 3, m=3)
    return (t12 * t23 - t23 * t12).scale(Fraction(1, 4))


@dataclass(frozen=True)
class TruncatedAssociator:
    spec: LieAlgebraSpec
    order: int
    series: TensorSeries

    def inverse(self) -> TensorSeries:
        return series_inverse(self.series)


def associator_truncate(spec: LieAlgebraSpec, order: int = 2,
                        higher: Mapping[int, TensorSeries] | None = None) -> TruncatedAssociator:
    """1 + hbar^2/6 phi, plus caller-supplied hbar^p parts for p >= 3.

    ``higher`` maps an hbar power to an hbar-free 3-leg series.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    higher = dict(higher or {})
    missing = [p for p in range(3, order + 1) if p not in higher]
    if missing:
        raise UnsupportedOrderError(
            f"no associator coefficients for hbar^{missing}; supply them via `higher`")
    series = TensorSeries.one(spec, 3, order)
    if order >= 2:
        series = series + phi_element(spec, order).scale(Fraction(1, 6), hbar_shift=2)
    for p, part in higher.items():
        if p < 3:
            raise ValueError("only hbar^3 and higher may be supplied")
        if p <= order:
            series = series + part.truncate(order).scale(1, hbar_shift=p)
    return TruncatedAssociator(spec, order, series)


def braiding(spec: LieAlgebraSpec, order: int = 2) -> UniversalMorphism:
    """swap o exp(hbar t^{12} / 2)."""
    t = casimir_series(spec, order)
    elem = TensorSeries.one(spec, 2, order)
    for p in range(1, order + 1):
        elem = elem + series_power(t, p).scale(Fraction(1, 2 ** p * factorial(p)), hbar_shift=p)
    return UniversalMorphism((1, 0), elem)


def _assoc_move(phi: TensorSeries, slots, m: int) -> UniversalMorphism:
    return UniversalMorphism.element_action(insert_legs(phi, slots, m))


def fusion_element_J(spec: LieAlgebraSpec, order: int = 2, associator: TruncatedAssociator | None = None,
                     ) -> TensorSeries:
    """The element J with ((X1 Y1)(X2 Y2)) -> ((X1 X2)(Y1 Y2)) equal to
    (1 (x) s (x) 1) o (J .).  Legs are ordered X1, Y1, X2, Y2.

    Realized by the chain
      ((X1Y1)(X2Y2)) -> (((X1Y1)X2)Y2) -> ((X1(Y1X2))Y2)
        -> ((X1(X2Y1))Y2) -> (((X1X2)Y1)Y2) -> ((X1X2)(Y1Y2))
    where the associativity constraint (AB)C -> A(BC) acts by Phi^{A,B,C}
    and the middle step is the braiding of Y1 past X2.
    """
    assoc = associator or associator_truncate(spec, order)
    Phi = assoc.series
    Phi_inv = assoc.inverse()
    steps = [
        _assoc_move(Phi_inv, [(1, 2), (3,), (4,)], 4),
        _assoc_move(Phi, [(1,), (2,), (3,)], 4),
    ]
    br = braiding(spec, order)
    steps.append(UniversalMorphism((0, 2, 1, 3), insert_legs(br.element, [(2,), (3,)], 4)))
    steps += [
        _assoc_move(Phi_inv, [(1,), (2,), (3,)], 4),
        _assoc_move(Phi, [(1, 2), (3,), (4,)], 4),
    ]
    total = steps[0]
    for s in steps[1:]:
        total = total.then(s)
    if total.permutation != (0, 2, 1, 3):
        raise AssertionError(f"unexpected net permutation {total.permutation}")
    return total.element


def verify_J_coherence(spec: LieAlgebraSpec, order: int = 2, associator: TruncatedAssociator | None = None,
                       J: TensorSeries | None = None) -> TensorSeries:
    """LHS - RHS of
    Phi^{1,3,5} Phi^{2,4,6} J^{13,24,5,6} J^{1,2,3,4} = J^{1,2,35,46} J^{3,4,5,6} Phi^{12,34,56}.
    """
    assoc = associator or associator_truncate(spec, order)
    J = J if J is not None else fusion_element_J(spec, order, assoc)
    Phi = assoc.series
    lhs = (leg(Phi, 1, 3, 5, m=6) * leg(Phi, 2, 4, 6, m=6)
           * leg(J, (1, 3), (2, 4), 5, 6, m=6) * leg(J, 1, 2, 3, 4, m=6))
    rhs = (leg(J, 1, 2, (3, 5), (4, 6), m=6) * leg(J, 3, 4, 5, 6, m=6)
           * leg(Phi, (1, 2), (3, 4), (5, 6), m=6))
    return lhs - rhs
