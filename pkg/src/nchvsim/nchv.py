"""Noncontextual hidden-variable (NCHV) side of the analysis.

An NCHV model assigns every analyzer a predetermined +-1 result for each
phase it may be set to, independent of which other analyzers are read out.
This module evaluates ensemble correlations of such assignments, derives
the algebraic consequences (the forced fourth product, the two inequality
bounds) and checks them by exhaustive enumeration.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationLimitError, ValidationError

# Largest total number of binary assignment choices classical_bound will
# enumerate.  2**24 deterministic models is the supported ceiling.
MAX_ENUMERATION_BITS = 24

# Detection-efficiency threshold at perfect visibility for tests of this
# class.  Quoted constant; no derivation is implemented here.
DETECTION_EFFICIENCY_THRESHOLD = math.sqrt(2.0) / 2.0

# Inputs to inequality combinations may overshoot +-1 by at most this much
# (measured correlations carry statistical noise); nothing is clamped.
CORRELATION_SLACK = 0.05

_OBSERVABLES = ("a", "b", "c")


def _check_phases(name: str, phases: tuple[float, ...]):
    for phi in phases:
        if not math.isfinite(phi):
            raise ValidationError(f"{name} phase {phi!r} is not finite")
    if len(set(phases)) != len(phases):
        raise ValidationError(f"{name} phases must be distinct, got {phases!r}")


@dataclass(frozen=True)
class PhaseGrid:
    """Allowed analyzer phases, one ordered list per observable.

    ``c_phases`` may be empty for two-analyzer scenarios."""

    a_phases: tuple[float, ...]
    b_phases: tuple[float, ...]
    c_phases: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.a_phases or not self.b_phases:
            raise ValidationError("a_phases and b_phases must be non-empty")
        _check_phases("a", self.a_phases)
        _check_phases("b", self.b_phases)
        _check_phases("c", self.c_phases)

    def sizes(self) -> tuple[int, int, int]:
        return (len(self.a_phases), len(self.b_phases), len(self.c_phases))

    def total_bits(self) -> int:
        return sum(self.sizes())


def _check_values(name: str, values: tuple[int, ...]):
    for v in values:
        if v not in (-1, +1):
            raise ValidationError(f"{name} assignment value must be +1 or -1, got {v!r}")


@dataclass(frozen=True)
class HiddenAssignment:
    """Predetermined +-1 results, one per grid phase of each observable."""

    a_values: tuple[int, ...]
    b_values: tuple[int, ...]
    c_values: tuple[int, ...] = ()

    def __post_init__(self):
        _check_values("a", self.a_values)
        _check_values("b", self.b_values)
        _check_values("c", self.c_values)

    def value(self, observable: str, index: int) -> int:
        values = getattr(self, f"{observable}_values", None)
        if values is None:
            raise ValidationError(f"unknown observable {observable!r}")
        return values[index]

    def matches(self, grid: PhaseGrid) -> bool:
        return (
            len(self.a_values),
            len(self.b_values),
            len(self.c_values),
        ) == grid.sizes()


@dataclass(frozen=True)
class Ensemble:
    """Convex mixture of hidden assignments."""

    assignments: tuple[HiddenAssignment, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if not self.assignments:
            raise ValidationError("ensemble must contain at least one assignment")
        if len(self.assignments) != len(self.weights):
            raise ValidationError("one weight per assignment required")
        for w in self.weights:
            if not math.isfinite(w) or w < 0.0:
                raise ValidationError(f"weights must be finite and >= 0, got {w!r}")
        total = math.fsum(self.weights)
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"weights must sum to 1, got {total!r}")

    @classmethod
    def from_runs(cls, assignments: list[HiddenAssignment]) -> Ensemble:
        """Uniform mixture, one weight per recorded run."""
        n = len(assignments)
        if n == 0:
            raise ValidationError("ensemble must contain at least one assignment")
        return cls(tuple(assignments), tuple([1.0 / n] * n))


def _check_ensemble_grid(ensemble: Ensemble, grid: PhaseGrid):
    for assignment in ensemble.assignments:
        if not assignment.matches(grid):
            raise ValidationError(
                "assignment shape does not match the grid "
                f"(grid sizes {grid.sizes()})"
            )


def _check_index(name: str, index: int, size: int):
    if not 0 <= index < size:
        raise ValidationError(
            f"{name} index {index} out of range for {size} grid phases"
        )


def correlation_nchv3(
    ensemble: Ensemble, grid: PhaseGrid, indices: tuple[int, int, int]
) -> float:
    """Ensemble average of a(phi_a)*b(phi_b)*c(phi_c) at the given grid
    indices."""
    _check_ensemble_grid(ensemble, grid)
    ia, ib, ic = indices
    na, nb, nc = grid.sizes()
    _check_index("a", ia, na)
    _check_index("b", ib, nb)
    _check_index("c", ic, nc)
    return math.fsum(
        w * s.a_values[ia] * s.b_values[ib] * s.c_values[ic]
        for s, w in zip(ensemble.assignments, ensemble.weights)
    )


def correlation_nchv2(
    ensemble: Ensemble, grid: PhaseGrid, indices: tuple[int, int]
) -> float:
    """Ensemble average of a(phi_a)*b(phi_b) at the given grid indices."""
    _check_ensemble_grid(ensemble, grid)
    ia, ib = indices
    na, nb, _ = grid.sizes()
    _check_index("a", ia, na)
    _check_index("b", ib, nb)
    return math.fsum(
        w * s.a_values[ia] * s.b_values[ib]
        for s, w in zip(ensemble.assignments, ensemble.weights)
    )


def _check_constraint(value: int):
    if value not in (-1, +1):
        raise ValidationError(f"constraint product must be +1 or -1, got {value!r}")


def ghz_forcing(c1: int, c2: int, c3: int) -> int:
    """Fourth product a*b*c at the quarter-wave phases forced by the three
    perfect-correlation constraints.  Multiplying the constraints squares
    every zero-phase value away, leaving c1*c2*c3."""
    _check_constraint(c1)
    _check_constraint(c2)
    _check_constraint(c3)
    return c1 * c2 * c3


def ghz_forcing_enumerated(c1: int, c2: int, c3: int) -> int:
    """Same forced product, found by filtering all 64 assignments on the
    {0, pi/2}^3 grid.  Raises if the surviving set were not unanimous."""
    _check_constraint(c1)
    _check_constraint(c2)
    _check_constraint(c3)
    products = set()
    for bits in itertools.product((+1, -1), repeat=6):
        a0, a1, b0, b1, cc0, cc1 = bits
        if a0 * b0 * cc1 != c1:
            continue
        if a0 * b1 * cc0 != c2:
            continue
        if a1 * b0 * cc0 != c3:
            continue
        products.add(a1 * b1 * cc1)
    if len(products) != 1:
        raise ValidationError(
            f"constraints ({c1}, {c2}, {c3}) do not force a unique product"
        )
    return products.pop()


@dataclass(frozen=True)
class ExpressionTerm:
    """One signed correlation in an inequality expression.  ``c_index`` is
    None for two-observable correlations."""

    sign: int
    a_index: int
    b_index: int
    c_index: int | None = None

    def __post_init__(self):
        if self.sign not in (-1, +1):
            raise ValidationError(f"term sign must be +1 or -1, got {self.sign!r}")


def chsh_expression() -> tuple[ExpressionTerm, ...]:
    """E(a0,b0) + E(a0,b1) + E(a1,b1) - E(a1,b0) on a 2x2 grid."""
    return (
        ExpressionTerm(+1, 0, 0),
        ExpressionTerm(+1, 0, 1),
        ExpressionTerm(+1, 1, 1),
        ExpressionTerm(-1, 1, 0),
    )


def mermin_expression() -> tuple[ExpressionTerm, ...]:
    """E(a0,b1,c1) - E(a0,b0,c0) - E(a1,b1,c0) - E(a1,b0,c1) on a 2x2x2
    grid."""
    return (
        ExpressionTerm(+1, 0, 1, 1),
        ExpressionTerm(-1, 0, 0, 0),
        ExpressionTerm(-1, 1, 1, 0),
        ExpressionTerm(-1, 1, 0, 1),
    )


def _sign_matrix(n: int) -> np.ndarray:
    """All 2**n sign rows; bit 0 of the row index drives column 0."""
    if n == 0:
        return np.ones((1, 0), dtype=np.int64)
    rows = np.arange(2**n, dtype=np.int64)
    bits = (rows[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1
    return (1 - 2 * bits).astype(np.int64)


def classical_bound(
    expression: tuple[ExpressionTerm, ...] | list[ExpressionTerm], grid: PhaseGrid
) -> float:
    """Maximum of the expression over every deterministic assignment.

    The two smallest observable blocks are enumerated outright; the largest
    block is optimized term-by-term, which is exact because the expression
    is linear in each observable's values once the others are fixed.
    Mixtures cannot exceed deterministic assignments, so this is the NCHV
    bound."""
    if not expression:
        raise ValidationError("expression must contain at least one term")
    na, nb, nc = grid.sizes()
    if grid.total_bits() > MAX_ENUMERATION_BITS:
        raise EnumerationLimitError(
            f"grid has {grid.total_bits()} binary choices; exhaustive "
            f"enumeration supports at most {MAX_ENUMERATION_BITS}"
        )
    for term in expression:
        _check_index("a", term.a_index, na)
        _check_index("b", term.b_index, nb)
        if term.c_index is not None:
            _check_index("c", term.c_index, nc)

    sizes = {"a": na, "b": nb, "c": nc}
    # Optimize the block with the most phases; enumerate the other two.
    free = max(sizes, key=lambda k: sizes[k])
    enum1, enum2 = sorted(k for k in sizes if k != free)

    def part(term: ExpressionTerm, block: str) -> int | None:
        return {"a": term.a_index, "b": term.b_index, "c": term.c_index}[block]

    m1 = _sign_matrix(sizes[enum1])
    m2 = _sign_matrix(sizes[enum2])
    shape = (m1.shape[0], m2.shape[0])
    base = np.zeros(shape, dtype=np.int64)
    per_free = [np.zeros(shape, dtype=np.int64) for _ in range(sizes[free])]
    for term in expression:
        i1 = part(term, enum1)
        i2 = part(term, enum2)
        col1 = m1[:, i1] if i1 is not None else np.ones(shape[0], dtype=np.int64)
        col2 = m2[:, i2] if i2 is not None else np.ones(shape[1], dtype=np.int64)
        slab = term.sign * np.outer(col1, col2)
        k = part(term, free)
        if k is None:
            base += slab
        else:
            per_free[k] += slab
    totals = base.astype(np.float64)
    for slab in per_free:
        totals += np.abs(slab)
    return float(totals.max())


def _check_correlation_input(name: str, value: float):
    if not math.isfinite(value) or abs(value) > 1.0 + CORRELATION_SLACK:
        raise ValidationError(
            f"{name} must lie within [-1.05, 1.05], got {value!r}"
        )


def chsh_value(e1: float, e2: float, e3: float, e4: float) -> float:
    """E(a,b0) + E(a,b1) + E(a',b1) - E(a',b0)."""
    for name, value in zip(("e1", "e2", "e3", "e4"), (e1, e2, e3, e4)):
        _check_correlation_input(name, value)
    return e1 + e2 + e3 - e4


def mermin_value(e1: float, e2: float, e3: float, e4: float) -> float:
    """E(a,b1,c1) - E(a,b0,c0) - E(a',b1,c0) - E(a',b0,c1)."""
    for name, value in zip(("e1", "e2", "e3", "e4"), (e1, e2, e3, e4)):
        _check_correlation_input(name, value)
    return e1 - e2 - e3 - e4


def nchv_lower_bound(
    e_a: float, e_b: float, e_c: float, sigmas: tuple[float, float, float]
) -> tuple[float, float]:
    """Lower bound e_a + e_b + e_c - 2 that any NCHV model puts on the
    fourth correlation, with its quadrature standard error."""
    for name, value in zip(("e_a", "e_b", "e_c"), (e_a, e_b, e_c)):
        if not math.isfinite(value) or abs(value) > 1.0:
            raise ValidationError(f"{name} must lie within [-1, 1], got {value!r}")
    if len(sigmas) != 3:
        raise ValidationError("exactly three sigmas required")
    for s in sigmas:
        if not math.isfinite(s) or s < 0.0:
            raise ValidationError(f"sigmas must be finite and >= 0, got {s!r}")
    bound = e_a + e_b + e_c - 2.0
    sigma = math.sqrt(sum(s * s for s in sigmas))
    return bound, sigma
