"""Quantum model of the two linked interferometric tests.

The source emits a polarization-entangled photon pair.  Photon 1 passes a
polarizing beam splitter (PBS) that transmits H into the lower exit ``d``
and reflects V into the upper exit ``u``, which entangles its path with
both polarizations.  Three dichotomic analyzers follow:

* ``A`` recombines the two paths of photon 1 on a beam splitter with a
  relative phase ``phi_a``; +1 means the photon left through the upper exit.
* ``B`` analyzes the polarization of photon 1 behind a phase plate set to
  ``phi_b`` (fast axis along V).
* ``C`` analyzes the polarization of photon 2 behind a phase plate set to
  ``phi_c`` (fast axis along H).

Triple coincidences follow ``P(A,B,C) = (1 + A*B*C*sin(phi_a+phi_b+phi_c))/8``.

In the event-ready variant, firing ``C = +1`` at ``phi_c = 0`` projects
photon 1 onto a maximally entangled state of its polarization and path
(exits relabeled ``a``/``b`` behind the PBS), and the remaining pair of
analyzers gives ``E(A,B) = sin(phi_a + phi_b)``.

Every probability here is computed from explicit eigenstate projections;
closed-form counterparts are provided separately so tests can confront the
two routes.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import StructureError, ValidationError
from .hilbert import StateVector, TensorSpace, inner, probability, tensor

_INV_SQRT2 = 1.0 / math.sqrt(2.0)

PATH1 = ("path1", ("u", "d"))
POL1 = ("pol1", ("H", "V"))
POL2 = ("pol2", ("H", "V"))
# Exits behind the right PBS in event-ready operation: "a" collects
# transmitted H (the role of "d" above), "b" collects reflected V ("u").
PATH1_EVENTREADY = ("path1", ("a", "b"))

PAIR_SPACE = TensorSpace((POL1, POL2))
TRIPLE_SPACE = TensorSpace((PATH1, POL1, POL2))
EVENTREADY_SPACE = TensorSpace((POL1, PATH1_EVENTREADY))

_PATH_SPACE = TensorSpace((PATH1,))
_POL1_SPACE = TensorSpace((POL1,))
_POL2_SPACE = TensorSpace((POL2,))
_PATH_EVENTREADY_SPACE = TensorSpace((PATH1_EVENTREADY,))

_SIGNS = (+1, -1)


@dataclass(frozen=True)
class PhaseSetting:
    """Analyzer phases in radians.  ``phi_c`` is None in the two-analyzer
    (event-ready) configuration."""

    phi_a: float
    phi_b: float
    phi_c: float | None = None

    def __post_init__(self):
        for name in ("phi_a", "phi_b", "phi_c"):
            value = getattr(self, name)
            if value is None:
                continue
            if not math.isfinite(value):
                raise ValidationError(f"{name} must be finite, got {value!r}")

    def phase_sum(self) -> float:
        total = self.phi_a + self.phi_b
        if self.phi_c is not None:
            total += self.phi_c
        return total

    def canonical(self) -> PhaseSetting:
        """Phases wrapped into [-pi, pi) for reporting; the physics is
        2*pi-periodic so this never changes a probability."""
        return PhaseSetting(
            _wrap(self.phi_a),
            _wrap(self.phi_b),
            None if self.phi_c is None else _wrap(self.phi_c),
        )


def _wrap(phi: float) -> float:
    wrapped = math.remainder(phi, 2.0 * math.pi)
    return -math.pi if wrapped == math.pi else wrapped


@dataclass(frozen=True)
class Outcome:
    """Joint +-1 result of the analyzers; ``c`` is None for two-analyzer runs."""

    a: int
    b: int
    c: int | None = None

    def __post_init__(self):
        for name in ("a", "b", "c"):
            value = getattr(self, name)
            if value is None:
                continue
            if value not in (-1, +1):
                raise ValidationError(f"outcome {name} must be +1 or -1, got {value!r}")

    def product(self) -> int:
        return self.a * self.b * (1 if self.c is None else self.c)


# Fixed enumeration orders; the Monte Carlo sampler and the serializers
# depend on these being stable.
TRIPLE_OUTCOMES = tuple(
    Outcome(a, b, c) for a in _SIGNS for b in _SIGNS for c in _SIGNS
)
PAIR_OUTCOMES = tuple(Outcome(a, b) for a in _SIGNS for b in _SIGNS)


@dataclass(frozen=True)
class DichotomicObservable:
    """A +-1-valued analyzer: a phase plus its two orthonormal eigenstates."""

    kind: str
    phase: float
    plus: StateVector
    minus: StateVector

    def __post_init__(self):
        if not math.isclose(self.plus.norm(), 1.0, abs_tol=1e-12):
            raise ValidationError(f"{self.kind}: +1 eigenstate not normalized")
        if not math.isclose(self.minus.norm(), 1.0, abs_tol=1e-12):
            raise ValidationError(f"{self.kind}: -1 eigenstate not normalized")
        if abs(inner(self.plus, self.minus)) > 1e-12:
            raise ValidationError(f"{self.kind}: eigenstates not orthogonal")

    def eigenstate(self, sign: int) -> StateVector:
        if sign == +1:
            return self.plus
        if sign == -1:
            return self.minus
        raise ValidationError(f"eigenvalue sign must be +1 or -1, got {sign!r}")


def prepare_initial() -> StateVector:
    """Polarization state of the emitted pair, (|V H> + |H V>)/sqrt(2) over
    (pol1, pol2).  The photons' propagation directions are fixed product
    factors and carry no slot."""
    return StateVector.from_terms(
        PAIR_SPACE,
        {("V", "H"): _INV_SQRT2, ("H", "V"): _INV_SQRT2},
    )


def apply_pbs(state: StateVector) -> StateVector:
    """Route photon 1 through the PBS: V reflects into u, H transmits into d.

    Takes a (pol1, pol2) state and returns the path-entangled
    (path1, pol1, pol2) state."""
    if state.space != PAIR_SPACE:
        raise StructureError("apply_pbs expects a state over (pol1, pol2)")
    terms: dict[tuple[str, ...], complex] = {}
    for label in PAIR_SPACE.labels():
        amp = state.amplitude(label)
        if amp == 0:
            continue
        pol1, pol2 = label
        path = "u" if pol1 == "V" else "d"
        terms[(path, pol1, pol2)] = amp
    return StateVector.from_terms(TRIPLE_SPACE, terms)


def ghz_state() -> StateVector:
    """Path-entangled three-factor state behind the PBS."""
    return apply_pbs(prepare_initial())


def _check_phase(phase: float):
    if not math.isfinite(phase):
        raise ValidationError(f"phase must be finite, got {phase!r}")


def _check_sign(sign: int):
    if sign not in (-1, +1):
        raise ValidationError(f"eigenvalue sign must be +1 or -1, got {sign!r}")


def eigenstate_a(phase: float, sign: int) -> StateVector:
    """Beam-splitter eigenstate (i|d> + sign*e^{i phase}|u>)/sqrt(2) on the
    u/d path factor."""
    _check_phase(phase)
    _check_sign(sign)
    return StateVector.from_terms(
        _PATH_SPACE,
        {("u",): sign * cmath.exp(1j * phase) * _INV_SQRT2, ("d",): 1j * _INV_SQRT2},
    )


def eigenstate_b(phase: float, sign: int) -> StateVector:
    """Polarization eigenstate (|H> + sign*e^{i phase}|V>)/sqrt(2) of the
    photon-1 analyzer (plate fast axis along V)."""
    _check_phase(phase)
    _check_sign(sign)
    return StateVector.from_terms(
        _POL1_SPACE,
        {("H",): _INV_SQRT2, ("V",): sign * cmath.exp(1j * phase) * _INV_SQRT2},
    )


def eigenstate_c(phase: float, sign: int) -> StateVector:
    """Polarization eigenstate (|V> + sign*e^{i phase}|H>)/sqrt(2) of the
    photon-2 analyzer (plate fast axis along H)."""
    _check_phase(phase)
    _check_sign(sign)
    return StateVector.from_terms(
        _POL2_SPACE,
        {("V",): _INV_SQRT2, ("H",): sign * cmath.exp(1j * phase) * _INV_SQRT2},
    )


def eigenstate_a_eventready(phase: float, sign: int) -> StateVector:
    """Beam-splitter eigenstate on the relabeled a/b exits:
    (i|a> + sign*e^{i phase}|b>)/sqrt(2)."""
    _check_phase(phase)
    _check_sign(sign)
    return StateVector.from_terms(
        _PATH_EVENTREADY_SPACE,
        {("b",): sign * cmath.exp(1j * phase) * _INV_SQRT2, ("a",): 1j * _INV_SQRT2},
    )


def observable_a(phase: float) -> DichotomicObservable:
    return DichotomicObservable(
        "path-A", phase, eigenstate_a(phase, +1), eigenstate_a(phase, -1)
    )


def observable_b(phase: float) -> DichotomicObservable:
    return DichotomicObservable(
        "polarization-B", phase, eigenstate_b(phase, +1), eigenstate_b(phase, -1)
    )


def observable_c(phase: float) -> DichotomicObservable:
    return DichotomicObservable(
        "polarization-C", phase, eigenstate_c(phase, +1), eigenstate_c(phase, -1)
    )


def _require_triple(setting: PhaseSetting):
    if setting.phi_c is None:
        raise ValidationError("this operation needs all three phases set")


def joint_probability(outcome: Outcome, setting: PhaseSetting) -> float:
    """Triple-coincidence probability by explicit eigenstate projection."""
    _require_triple(setting)
    if outcome.c is None:
        raise ValidationError("triple-coincidence outcome needs a C component")
    eig = tensor(
        tensor(eigenstate_a(setting.phi_a, outcome.a), eigenstate_b(setting.phi_b, outcome.b)),
        eigenstate_c(setting.phi_c, outcome.c),
    )
    return probability(eig, ghz_state())


def joint_probability_closed_form(outcome: Outcome, setting: PhaseSetting) -> float:
    """(1 + A*B*C*sin(phi_a+phi_b+phi_c))/8, the sinusoid the projection
    route must reproduce."""
    _require_triple(setting)
    if outcome.c is None:
        raise ValidationError("triple-coincidence outcome needs a C component")
    return (1.0 + outcome.product() * math.sin(setting.phase_sum())) / 8.0


def correlation_qm3(setting: PhaseSetting) -> float:
    """Expectation of the A*B*C product, summed over all eight outcomes."""
    return sum(o.product() * joint_probability(o, setting) for o in TRIPLE_OUTCOMES)


def eventready_state() -> StateVector:
    """Photon-1 state heralded by C = +1 at phi_c = 0:
    (|V b> + |H a>)/sqrt(2) over (pol1, path1)."""
    return StateVector.from_terms(
        EVENTREADY_SPACE,
        {("V", "b"): _INV_SQRT2, ("H", "a"): _INV_SQRT2},
    )


def conditional_state_after_trigger() -> StateVector:
    """Event-ready state computed the long way: project the full model on
    the trigger eigenstate, renormalize, and relabel the exits (u -> b,
    d -> a).  Must match :func:`eventready_state` within 1e-12."""
    full = ghz_state()
    trigger = eigenstate_c(0.0, +1)
    terms: dict[tuple[str, ...], complex] = {}
    for pol1 in POL1[1]:
        for path in PATH1[1]:
            amp = 0.0 + 0.0j
            for pol2 in POL2[1]:
                amp += trigger.amplitude((pol2,)).conjugate() * full.amplitude(
                    (path, pol1, pol2)
                )
            if amp != 0:
                terms[(pol1, "b" if path == "u" else "a")] = amp
    return StateVector.from_terms(EVENTREADY_SPACE, terms).normalized()


def joint_probability_eventready(outcome: Outcome, setting: PhaseSetting) -> float:
    """Conditioned pair probability by eigenstate projection."""
    if setting.phi_c is not None:
        raise ValidationError("event-ready settings carry no phi_c")
    if outcome.c is not None:
        raise ValidationError("event-ready outcomes carry no C component")
    eig = tensor(
        eigenstate_b(setting.phi_b, outcome.b),
        eigenstate_a_eventready(setting.phi_a, outcome.a),
    )
    return probability(eig, eventready_state())


def joint_probability_eventready_closed_form(outcome: Outcome, setting: PhaseSetting) -> float:
    """(1 + A*B*sin(phi_a+phi_b))/4."""
    if setting.phi_c is not None:
        raise ValidationError("event-ready settings carry no phi_c")
    if outcome.c is not None:
        raise ValidationError("event-ready outcomes carry no C component")
    return (1.0 + outcome.a * outcome.b * math.sin(setting.phi_a + setting.phi_b)) / 4.0


def correlation_qm2(setting: PhaseSetting) -> float:
    """Expectation of the A*B product in the event-ready configuration."""
    return sum(
        o.product() * joint_probability_eventready(o, setting) for o in PAIR_OUTCOMES
    )
