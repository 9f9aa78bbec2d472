"""Analysis pipeline: phase scans, inequality reports, threshold study and
replay of externally measured correlations.

Serialization rules, chosen so identical configurations reproduce identical
bytes: CSV columns are fixed, floats carry 12 significant digits, lines end
with LF; JSON reports sort their keys and keep full float precision.  A
separate text rendering rounds for reading.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import FixtureParseError, SimulationError, ValidationError
from .experiment import (
    PhaseSetting,
    correlation_qm2,
    correlation_qm3,
)
from .montecarlo import (
    CorrelationEstimate,
    NoiseModel,
    estimate_correlation_exp1,
    estimate_correlation_exp2,
    propagate_error,
    sample_counts,
)
from .nchv import (
    PhaseGrid,
    chsh_expression,
    chsh_value,
    classical_bound,
    DETECTION_EFFICIENCY_THRESHOLD,
    mermin_expression,
    mermin_value,
    nchv_lower_bound,
)

SCAN_CSV_HEADER = "phi_a,phi_b,phi_c,E_est,sigma,N_detected,E_analytic"
REPLAY_CSV_HEADER = ("phi_a", "phi_b", "phi_c", "E", "sigma")

QUANTUM_MAX_CHSH = 2.0 * math.sqrt(2.0)
QUANTUM_MAX_MERMIN = 4.0

_HALF = 0.5  # inequality settings in units of pi: 0 and pi/2


@dataclass(frozen=True)
class RunConfig:
    """Everything a simulated run depends on.  Phases in radians."""

    experiment: str
    noise: NoiseModel
    trials_per_setting: int
    seed: int
    phi_a: float
    phi_a_prime: float = 0.0
    phi_b_values: tuple[float, ...] = (0.0,)
    phi_c_values: tuple[float, ...] = ()
    sweep: tuple[float, float, int] | None = None

    def __post_init__(self):
        if self.experiment not in ("exp1", "exp2"):
            raise ValidationError(
                f"experiment must be 'exp1' or 'exp2', got {self.experiment!r}"
            )
        if self.trials_per_setting <= 0:
            raise ValidationError("trials_per_setting must be positive")
        if self.seed < 0:
            raise ValidationError("seed must be a non-negative integer")
        for name in ("phi_a", "phi_a_prime"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        for phi in self.phi_b_values + self.phi_c_values:
            if not math.isfinite(phi):
                raise ValidationError("fixed phase lists must be finite")
        if self.sweep is not None:
            start, stop, steps = self.sweep
            if not (math.isfinite(start) and math.isfinite(stop)):
                raise ValidationError("sweep endpoints must be finite")
            if steps < 1:
                raise ValidationError("sweep needs at least one step")


@dataclass(frozen=True)
class ScanRow:
    phi_a: float
    phi_b: float
    phi_c: float | None
    e_est: float
    sigma: float
    n_detected: int
    e_analytic: float


@dataclass(frozen=True)
class Report:
    """Report payload with fixed top-level structure."""

    config: dict
    estimates: list[dict]
    derived: dict
    verdict: dict


def _setting_seeds(seed: int, n: int) -> list[int]:
    """Per-setting substream seeds, a pure function of the master seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)]


def _analytic(setting: PhaseSetting, noise: NoiseModel) -> float:
    return noise.effective_visibility() * math.sin(setting.phase_sum())


def _estimate(setting: PhaseSetting, config: RunConfig, seed: int) -> CorrelationEstimate:
    counts = sample_counts(setting, config.noise, config.trials_per_setting, seed)
    if setting.phi_c is not None:
        return estimate_correlation_exp1(counts)
    return estimate_correlation_exp2(counts)


def scan_phase(config: RunConfig) -> list[ScanRow]:
    """Fringe scan: sweep phi_a against each fixed analyzer combination."""
    if config.sweep is None:
        raise ValidationError("scan_phase needs a sweep in the configuration")
    if config.experiment == "exp1" and not config.phi_c_values:
        raise ValidationError("exp1 scans need at least one phi_c value")
    if config.experiment == "exp2" and config.phi_c_values:
        raise ValidationError("exp2 scans carry no phi_c values")
    start, stop, steps = config.sweep
    sweep_values = [float(x) for x in np.linspace(start, stop, steps)]
    if config.experiment == "exp1":
        fixed = [(b, c) for b in config.phi_b_values for c in config.phi_c_values]
    else:
        fixed = [(b, None) for b in config.phi_b_values]
    settings = [
        PhaseSetting(phi_a, b, c) for (b, c) in fixed for phi_a in sweep_values
    ]
    seeds = _setting_seeds(config.seed, len(settings))
    rows = []
    for setting, seed in zip(settings, seeds):
        est = _estimate(setting, config, seed)
        canon = setting.canonical()
        rows.append(
            ScanRow(
                canon.phi_a,
                canon.phi_b,
                canon.phi_c,
                est.value,
                est.sigma,
                est.n,
                _analytic(setting, config.noise),
            )
        )
    return rows


def _fmt(value: float) -> str:
    return format(float(value), ".12g")


def scan_csv_text(rows: list[ScanRow]) -> str:
    lines = [SCAN_CSV_HEADER]
    for row in rows:
        phi_c = "" if row.phi_c is None else _fmt(row.phi_c)
        lines.append(
            ",".join(
                (
                    _fmt(row.phi_a),
                    _fmt(row.phi_b),
                    phi_c,
                    _fmt(row.e_est),
                    _fmt(row.sigma),
                    str(row.n_detected),
                    _fmt(row.e_analytic),
                )
            )
        )
    return "\n".join(lines) + "\n"


def write_scan_csv(rows: list[ScanRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(scan_csv_text(rows))


def _config_echo(config: RunConfig) -> dict:
    return {
        "experiment": config.experiment,
        "visibility": config.noise.visibility,
        "efficiency": config.noise.efficiency,
        "background": config.noise.background,
        "trials_per_setting": config.trials_per_setting,
        "seed": config.seed,
        "phi_a": config.phi_a,
        "phi_a_prime": config.phi_a_prime,
    }


def _estimate_entry(est: CorrelationEstimate, analytic: float | None) -> dict:
    canon = est.setting.canonical()
    entry = {
        "phi_a": canon.phi_a,
        "phi_b": canon.phi_b,
        "phi_c": canon.phi_c,
        "value": est.value,
        "sigma": est.sigma,
        "n": est.n,
    }
    if analytic is not None:
        entry["analytic"] = analytic
    return entry


def _significance(value: float, bound: float, sigma: float) -> float | None:
    if sigma <= 0.0:
        return None
    return (abs(value) - bound) / sigma


def _exp1_settings(phi_a: float, phi_a_prime: float) -> list[PhaseSetting]:
    half_pi = math.pi / 2.0
    return [
        PhaseSetting(phi_a, 0.0, 0.0),
        PhaseSetting(phi_a_prime, half_pi, 0.0),
        PhaseSetting(phi_a_prime, 0.0, half_pi),
        PhaseSetting(phi_a, half_pi, half_pi),
    ]


def _exp1_derived(estimates: list[CorrelationEstimate]) -> tuple[dict, dict]:
    e_ing = estimates[:3]
    e_fourth = estimates[3]
    bound, bound_sigma = nchv_lower_bound(
        e_ing[0].value,
        e_ing[1].value,
        e_ing[2].value,
        (e_ing[0].sigma, e_ing[1].sigma, e_ing[2].sigma),
    )
    m = mermin_value(e_fourth.value, e_ing[0].value, e_ing[1].value, e_ing[2].value)
    _, m_sigma = propagate_error(
        [(est.value, est.sigma) for est in [e_fourth] + e_ing], [+1, -1, -1, -1]
    )
    grid = PhaseGrid(
        (estimates[0].setting.phi_a, estimates[1].setting.phi_a),
        (0.0, math.pi / 2.0),
        (0.0, math.pi / 2.0),
    )
    limit = classical_bound(mermin_expression(), grid)
    significance = _significance(m, limit, m_sigma)
    derived = {
        "nchv_lower_bound": bound,
        "nchv_lower_bound_sigma": bound_sigma,
        "fourth_value": e_fourth.value,
        "fourth_sigma": e_fourth.sigma,
        "inequality_value": m,
        "inequality_sigma": m_sigma,
        "classical_bound": limit,
        "quantum_maximum": QUANTUM_MAX_MERMIN,
        "significance": significance,
    }
    violated = abs(m) > limit
    verdict = {
        "violated": violated,
        "summary": _verdict_summary("three-analyzer", m, limit, significance, violated),
    }
    return derived, verdict


def _verdict_summary(
    label: str, value: float, limit: float, significance: float | None, violated: bool
) -> str:
    if not violated:
        return (
            f"{label} inequality satisfied: |{value:.3f}| <= {limit:g}; "
            "no noncontextual model is excluded"
        )
    if significance is None:
        return (
            f"{label} inequality violated: |{value:.3f}| > {limit:g} "
            "(exact, zero statistical uncertainty)"
        )
    return (
        f"{label} inequality violated: |{value:.3f}| > {limit:g} "
        f"by {significance:.1f} standard deviations"
    )


def run_exp1_report(config: RunConfig) -> Report:
    """Simulate the four triple-coincidence settings and report the forced
    lower bound against the measured fourth correlation."""
    if config.experiment != "exp1":
        raise ValidationError("run_exp1_report needs an exp1 configuration")
    settings = _exp1_settings(config.phi_a, config.phi_a_prime)
    seeds = _setting_seeds(config.seed, len(settings))
    estimates = [_estimate(s, config, seed) for s, seed in zip(settings, seeds)]
    entries = [
        _estimate_entry(est, _analytic(est.setting, config.noise)) for est in estimates
    ]
    derived, verdict = _exp1_derived(estimates)
    return Report(_config_echo(config), entries, derived, verdict)


def _exp2_settings(phi_a: float, phi_a_prime: float) -> list[PhaseSetting]:
    half_pi = math.pi / 2.0
    return [
        PhaseSetting(phi_a, 0.0),
        PhaseSetting(phi_a, half_pi),
        PhaseSetting(phi_a_prime, half_pi),
        PhaseSetting(phi_a_prime, 0.0),
    ]


def _exp2_derived(estimates: list[CorrelationEstimate]) -> tuple[dict, dict]:
    values = [est.value for est in estimates]
    s = chsh_value(*values)
    _, s_sigma = propagate_error(
        [(est.value, est.sigma) for est in estimates], [+1, +1, +1, -1]
    )
    grid = PhaseGrid(
        (estimates[0].setting.phi_a, estimates[2].setting.phi_a),
        (0.0, math.pi / 2.0),
    )
    limit = classical_bound(chsh_expression(), grid)
    significance = _significance(s, limit, s_sigma)
    derived = {
        "inequality_value": s,
        "inequality_sigma": s_sigma,
        "classical_bound": limit,
        "quantum_maximum": QUANTUM_MAX_CHSH,
        "significance": significance,
    }
    violated = abs(s) > limit
    verdict = {
        "violated": violated,
        "summary": _verdict_summary("event-ready", s, limit, significance, violated),
    }
    return derived, verdict


def run_exp2_report(config: RunConfig) -> Report:
    """Simulate the four event-ready settings and report the CHSH sum."""
    if config.experiment != "exp2":
        raise ValidationError("run_exp2_report needs an exp2 configuration")
    settings = _exp2_settings(config.phi_a, config.phi_a_prime)
    seeds = _setting_seeds(config.seed, len(settings))
    estimates = [_estimate(s, config, seed) for s, seed in zip(settings, seeds)]
    entries = [
        _estimate_entry(est, _analytic(est.setting, config.noise)) for est in estimates
    ]
    derived, verdict = _exp2_derived(estimates)
    return Report(_config_echo(config), entries, derived, verdict)


def threshold_study(expression: str, resolution: float = 1e-4) -> dict:
    """Scan visibility for the smallest value whose noisy quantum expression
    exceeds the enumerated classical bound."""
    if not 0.0 < resolution <= 0.1:
        raise ValidationError(f"resolution must be in (0, 0.1], got {resolution!r}")
    half_pi = math.pi / 2.0
    quarter_pi = math.pi / 4.0
    if expression == "mermin":
        settings = _exp1_settings(half_pi, 0.0)
        ideal = [correlation_qm3(s) for s in settings]
        amplitude = abs(ideal[3] - ideal[0] - ideal[1] - ideal[2])
        grid = PhaseGrid((half_pi, 0.0), (0.0, half_pi), (0.0, half_pi))
        limit = classical_bound(mermin_expression(), grid)
    elif expression == "chsh":
        settings = _exp2_settings(quarter_pi, -quarter_pi)
        ideal = [correlation_qm2(s) for s in settings]
        signs = [+1, +1, +1, -1]
        amplitude = abs(sum(s * e for s, e in zip(signs, ideal)))
        grid = PhaseGrid((quarter_pi, -quarter_pi), (0.0, half_pi))
        limit = classical_bound(chsh_expression(), grid)
    else:
        raise ValidationError(
            f"expression must be 'chsh' or 'mermin', got {expression!r}"
        )
    steps = int(round(1.0 / resolution))
    visibilities = np.linspace(0.0, 1.0, steps + 1)
    values = visibilities * amplitude
    above = values > limit
    if not above.any():
        raise SimulationError(
            f"{expression} expression never exceeds the classical bound"
        )
    threshold = float(visibilities[int(np.argmax(above))])
    return {
        "expression": expression,
        "classical_bound": limit,
        "quantum_value_at_unit_visibility": float(amplitude),
        "threshold_visibility": threshold,
        "resolution": resolution,
        "efficiency_threshold_quoted": DETECTION_EFFICIENCY_THRESHOLD,
    }


def _parse_float(text: str, line_number: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise FixtureParseError(
            line_number, f"column {column!r}: {text!r} is not a number"
        ) from None
    if not math.isfinite(value):
        raise FixtureParseError(line_number, f"column {column!r}: {text!r} not finite")
    return value


@dataclass(frozen=True)
class ReplayRow:
    line_number: int
    phi_a: float  # units of pi, as written in the fixture
    phi_b: float
    phi_c: float | None
    value: float
    sigma: float


def load_replay_rows(path) -> list[ReplayRow]:
    """Parse a replay fixture.  Phases are in units of pi; phi_c is blank
    for event-ready rows."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise FixtureParseError(1, "empty file; expected a header row") from None
        if tuple(h.strip() for h in header) != REPLAY_CSV_HEADER:
            raise FixtureParseError(
                1, f"expected header {','.join(REPLAY_CSV_HEADER)!r}"
            )
        rows = []
        for line_number, record in enumerate(reader, start=2):
            if not record or all(not field.strip() for field in record):
                continue
            if len(record) != 5:
                raise FixtureParseError(
                    line_number, f"expected 5 columns, found {len(record)}"
                )
            phi_a = _parse_float(record[0], line_number, "phi_a")
            phi_b = _parse_float(record[1], line_number, "phi_b")
            phi_c_text = record[2].strip()
            phi_c = (
                None if phi_c_text == "" else _parse_float(record[2], line_number, "phi_c")
            )
            value = _parse_float(record[3], line_number, "E")
            sigma = _parse_float(record[4], line_number, "sigma")
            if sigma < 0.0:
                raise FixtureParseError(line_number, "sigma must be >= 0")
            rows.append(ReplayRow(line_number, phi_a, phi_b, phi_c, value, sigma))
    if not rows:
        raise FixtureParseError(2, "no data rows")
    return rows


def _near(x: float, target: float) -> bool:
    return abs(x - target) <= 1e-9


def _replay_exp1(rows: list[ReplayRow]) -> tuple[list[dict], dict, dict]:
    slots: dict[tuple[float, float], ReplayRow] = {}
    for row in rows:
        key = None
        for pattern in ((0.0, 0.0), (_HALF, 0.0), (0.0, _HALF), (_HALF, _HALF)):
            if _near(row.phi_b, pattern[0]) and _near(row.phi_c, pattern[1]):
                key = pattern
                break
        if key is None:
            raise FixtureParseError(
                row.line_number,
                "analyzer phases must pair 0 and 0.5 (units of pi); got "
                f"phi_b={row.phi_b!r}, phi_c={row.phi_c!r}",
            )
        if key in slots:
            raise FixtureParseError(
                row.line_number, f"duplicate setting phi_b={key[0]}, phi_c={key[1]}"
            )
        slots[key] = row
    if len(slots) != 4:
        raise FixtureParseError(
            rows[-1].line_number, f"expected four settings, found {len(slots)}"
        )
    ing = [slots[(0.0, 0.0)], slots[(_HALF, 0.0)], slots[(0.0, _HALF)]]
    fourth = slots[(_HALF, _HALF)]
    bound, bound_sigma = nchv_lower_bound(
        ing[0].value, ing[1].value, ing[2].value, tuple(r.sigma for r in ing)
    )
    m = mermin_value(fourth.value, ing[0].value, ing[1].value, ing[2].value)
    _, m_sigma = propagate_error(
        [(r.value, r.sigma) for r in [fourth] + ing], [+1, -1, -1, -1]
    )
    limit = 2.0
    significance = _significance(m, limit, m_sigma)
    entries = [_replay_entry(r) for r in ing + [fourth]]
    derived = {
        "nchv_lower_bound": bound,
        "nchv_lower_bound_sigma": bound_sigma,
        "fourth_value": fourth.value,
        "fourth_sigma": fourth.sigma,
        "inequality_value": m,
        "inequality_sigma": m_sigma,
        "classical_bound": limit,
        "quantum_maximum": QUANTUM_MAX_MERMIN,
        "significance": significance,
    }
    violated = abs(m) > limit
    verdict = {
        "violated": violated,
        "summary": _verdict_summary("three-analyzer", m, limit, significance, violated),
    }
    return entries, derived, verdict


def _replay_exp2(rows: list[ReplayRow]) -> tuple[list[dict], dict, dict]:
    if len(rows) != 4:
        raise FixtureParseError(
            rows[-1].line_number, f"expected four rows, found {len(rows)}"
        )
    phi_a_values: list[float] = []
    for row in rows:
        if not (_near(row.phi_b, 0.0) or _near(row.phi_b, _HALF)):
            raise FixtureParseError(
                row.line_number,
                f"phi_b must be 0 or 0.5 (units of pi), got {row.phi_b!r}",
            )
        if not any(_near(row.phi_a, seen) for seen in phi_a_values):
            phi_a_values.append(row.phi_a)
    if len(phi_a_values) != 2:
        raise FixtureParseError(
            rows[-1].line_number,
            f"expected two distinct phi_a values, found {len(phi_a_values)}",
        )
    first, second = phi_a_values
    slots: dict[tuple[int, float], ReplayRow] = {}
    for row in rows:
        which = 0 if _near(row.phi_a, first) else 1
        b = 0.0 if _near(row.phi_b, 0.0) else _HALF
        key = (which, b)
        if key in slots:
            raise FixtureParseError(
                row.line_number, f"duplicate setting phi_a={row.phi_a}, phi_b={b}"
            )
        slots[key] = row
    ordered = [slots[(0, 0.0)], slots[(0, _HALF)], slots[(1, _HALF)], slots[(1, 0.0)]]
    s = chsh_value(*[r.value for r in ordered])
    _, s_sigma = propagate_error(
        [(r.value, r.sigma) for r in ordered], [+1, +1, +1, -1]
    )
    limit = 2.0
    significance = _significance(s, limit, s_sigma)
    entries = [_replay_entry(r) for r in ordered]
    derived = {
        "inequality_value": s,
        "inequality_sigma": s_sigma,
        "classical_bound": limit,
        "quantum_maximum": QUANTUM_MAX_CHSH,
        "significance": significance,
    }
    violated = abs(s) > limit
    verdict = {
        "violated": violated,
        "summary": _verdict_summary("event-ready", s, limit, significance, violated),
    }
    return entries, derived, verdict


def _replay_entry(row: ReplayRow) -> dict:
    setting = PhaseSetting(
        row.phi_a * math.pi,
        row.phi_b * math.pi,
        None if row.phi_c is None else row.phi_c * math.pi,
    ).canonical()
    return {
        "phi_a": setting.phi_a,
        "phi_b": setting.phi_b,
        "phi_c": setting.phi_c,
        "value": row.value,
        "sigma": row.sigma,
    }


def replay(path) -> Report:
    """Recompute derived quantities from a file of measured correlations.

    No simulation and no randomness: the report config echoes the source
    path and carries no seed."""
    rows = load_replay_rows(path)
    has_c = [row.phi_c is not None for row in rows]
    if all(has_c):
        entries, derived, verdict = _replay_exp1(rows)
        experiment = "exp1"
    elif not any(has_c):
        entries, derived, verdict = _replay_exp2(rows)
        experiment = "exp2"
    else:
        mixed = rows[has_c.index(not has_c[0])]
        raise FixtureParseError(
            mixed.line_number, "rows mix three-analyzer and event-ready settings"
        )
    config = {"mode": "replay", "experiment": experiment, "source": str(path)}
    return Report(config, entries, derived, verdict)


def report_json_text(report: Report) -> str:
    payload = {
        "config": report.config,
        "estimates": report.estimates,
        "derived": report.derived,
        "verdict": report.verdict,
    }
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report_json(report: Report, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(report_json_text(report))


def render_report_text(report: Report) -> str:
    """Human-oriented summary, rounded to measurement precision."""
    out = io.StringIO()
    experiment = report.config.get("experiment", "?")
    out.write(f"experiment: {experiment}\n")
    if "seed" in report.config:
        out.write(
            "visibility={visibility:g} efficiency={efficiency:g} "
            "background={background:g} trials={trials_per_setting} "
            "seed={seed}\n".format(**report.config)
        )
    else:
        out.write(f"replayed from: {report.config.get('source', '?')}\n")
    out.write("settings (phi_a, phi_b, phi_c in radians):\n")
    for entry in report.estimates:
        phi_c = "-" if entry.get("phi_c") is None else f"{entry['phi_c']:+.4f}"
        n = f" n={entry['n']}" if "n" in entry else ""
        out.write(
            f"  ({entry['phi_a']:+.4f}, {entry['phi_b']:+.4f}, {phi_c}): "
            f"E = {entry['value']:+.3f} +- {entry['sigma']:.3f}{n}\n"
        )
    derived = report.derived
    if "nchv_lower_bound" in derived:
        out.write(
            f"noncontextual lower bound on the fourth correlation: "
            f"{derived['nchv_lower_bound']:+.3f} +- {derived['nchv_lower_bound_sigma']:.3f}\n"
        )
        out.write(
            f"measured fourth correlation: {derived['fourth_value']:+.3f} "
            f"+- {derived['fourth_sigma']:.3f}\n"
        )
    out.write(
        f"inequality value: {derived['inequality_value']:+.3f} "
        f"+- {derived['inequality_sigma']:.3f} "
        f"(classical bound {derived['classical_bound']:g}, "
        f"quantum maximum {derived['quantum_maximum']:.3f})\n"
    )
    if derived.get("significance") is not None:
        out.write(f"significance: {derived['significance']:.1f} sigma\n")
    out.write(f"verdict: {report.verdict['summary']}\n")
    return out.getvalue()
