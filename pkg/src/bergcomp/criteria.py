"""Geometric compactness criterion on the bidisc and the cross-checking verdict.

The geometric test asks two questions of a bidisc symbol:

A. does the image of the closed bidisc stay away from the torus, i.e. is
   ``min(|phi_1|, |phi_2|) < 1`` everywhere on the closure;
B. does the closure minus the torus map into the open bidisc, i.e. is
   ``max(|phi_1|, |phi_2|) < 1`` off the torus.

B is tested on the exhaustion sets ``K_eps = {dist(z, torus) >= eps}``,
since its margin may legitimately shrink to zero towards the torus.
"""

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .carleson import MIN_EXPECTED_HITS, CarlesonTrend, required_samples, vanishing_diagnostic
from .kernels import ApproachPath, Trend, kernel_ratio_trace
from .operator import TailTrend, compactness_evidence
from .symbols import Stratum, closure_grid, distance_to_torus, lipschitz_estimate

SCHEMA_VERSION = "1.0"
MARGIN_TOL = 1e-9
DEFAULT_EPSILONS = (0.2, 0.1, 0.05, 0.02)


def _pt(z):
    return [[float(np.real(c)), float(np.imag(c))] for c in np.atleast_1d(z)]


@dataclass(frozen=True)
class ConditionA:
    holds: bool
    margin: float
    witness: np.ndarray
    image: np.ndarray

    def to_dict(self):
        return {
            "holds": self.holds,
            "margin": self.margin,
            "witness": _pt(self.witness),
            "image": _pt(self.image),
        }


@dataclass(frozen=True)
class ConditionB:
    holds: bool
    epsilons: tuple
    margins: dict  # {eps: {stratum name: margin}}
    witness: np.ndarray
    image: np.ndarray

    def worst_margin(self, eps):
        return min(self.margins[eps].values())

    def to_dict(self):
        return {
            "holds": self.holds,
            "margins": {repr(e): m for e, m in self.margins.items()},
            "witness": _pt(self.witness),
            "image": _pt(self.image),
        }


def condition_a(symbol, grid_density=128):
    if symbol.arity != 2:
        raise ValueError("the geometric criterion is for bidisc symbols")
    pts = np.concatenate(list(closure_grid(2, grid_density).values()))
    w = np.abs(symbol(pts))
    vals = w.min(axis=-1)
    k = int(np.argmax(vals))
    margin = 1.0 - float(vals[k])
    return ConditionA(margin > MARGIN_TOL, margin, pts[k], symbol(pts[k]))


def condition_b(symbol, grid_density=128, epsilon_ladder=DEFAULT_EPSILONS):
    if symbol.arity != 2:
        raise ValueError("the geometric criterion is for bidisc symbols")
    eps = tuple(sorted((float(e) for e in epsilon_ladder), reverse=True))
    grid = closure_grid(2, grid_density)
    strata = (Stratum.INTERIOR, Stratum.FACE_1, Stratum.FACE_2)
    data = {}
    for s in strata:
        pts = grid[s]
        data[s] = (pts, np.abs(symbol(pts)).max(axis=-1), distance_to_torus(pts))
    margins = {}
    worst = (-np.inf, -np.inf, None)
    for e in eps:
        margins[e] = {}
        for s in strata:
            pts, val, dist = data[s]
            keep = dist >= e
            if not keep.any():
                continue
            v, d, p = val[keep], dist[keep], pts[keep]
            top = v.max()
            margins[e][s.name] = 1.0 - float(top)
            # among ties take the sample farthest from the torus
            ties = np.nonzero(v >= top - 1e-12)[0]
            k = ties[np.argmax(d[ties])]
            if (v[k], d[k]) > worst[:2]:
                worst = (v[k], d[k], p[k])
    holds = all(min(m.values()) > MARGIN_TOL for m in margins.values())
    witness = worst[2]
    return ConditionB(holds, eps, margins, witness, symbol(witness))


@dataclass(frozen=True)
class GeometricReport:
    condition_a: ConditionA
    condition_b: ConditionB
    lipschitz: object  # LipschitzEstimate

    @property
    def holds(self):
        return self.condition_a.holds and self.condition_b.holds

    def to_dict(self):
        return {
            "A": self.condition_a.to_dict(),
            "B": self.condition_b.to_dict(),
            "lipschitz": _lipschitz_dict(self.lipschitz),
        }


def _lipschitz_dict(lip):
    return {
        "constant": lip.constant if lip.finite else "INFINITE",
        "witness": _pt(lip.witness),
    }


def check_geometric(symbol, grid_density=128, epsilon_ladder=DEFAULT_EPSILONS,
                    lipschitz_density=64):
    """Test both geometric conditions on stratified grids of the closed bidisc."""
    return GeometricReport(
        condition_a(symbol, grid_density),
        condition_b(symbol, grid_density, epsilon_ladder),
        lipschitz_estimate(symbol, lipschitz_density),
    )


class Outcome(str, enum.Enum):
    COMPACT = "COMPACT"
    NOT_COMPACT = "NOT_COMPACT"
    COMPACT_BY_EVIDENCE = "COMPACT_BY_EVIDENCE"
    NOT_COMPACT_BY_EVIDENCE = "NOT_COMPACT_BY_EVIDENCE"
    INAPPLICABLE = "INAPPLICABLE"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class VerdictConfig:
    grid_density: int = 128
    epsilon_ladder: tuple = DEFAULT_EPSILONS
    lipschitz_density: int = 64
    path_k_max: int = 20
    path_angles: int = 4
    face_offsets: tuple = (0.0, 0.5, 0.9)
    r_ladder: tuple = (0.8, 0.4, 0.2, 0.1)
    theta_grid: int = 64
    carleson_samples: int = 200_000
    fixed_radii: tuple = (0.5, 1.0)
    degree_caps: tuple = (4, 6, 8)
    seed: int = 0
    run_carleson: bool = True
    run_spectral: bool = True


def approach_paths(arity, n_angles=4, face_offsets=(0.0, 0.5, 0.9), k_max=20):
    """Radial paths towards torus points and face points (or circle points)."""
    t = 2.0 ** -np.arange(1, k_max + 1)
    ang = np.exp(2j * np.pi * np.arange(n_angles) / n_angles)
    ang = np.round(ang.real, 15) + 1j * np.round(ang.imag, 15)
    targets = []
    if arity == 1:
        fine = np.exp(2j * np.pi * np.arange(4 * n_angles) / (4 * n_angles))
        targets = [np.array([np.round(a.real, 15) + 1j * np.round(a.imag, 15)]) for a in fine]
    else:
        for a in ang:
            for b in ang:
                targets.append(np.array([a, b]))
        for a in ang:
            for q in face_offsets:
                q = q * np.exp(1j * np.pi / 3) if q else 0j
                targets.append(np.array([a, q]))
                targets.append(np.array([q, a]))
    return [ApproachPath.radial(tg, t) for tg in targets]


def _kernel_summary(traces):
    verdicts = [tr.verdict for tr in traces]
    if any(v is Trend.BOUNDED_AWAY for v in verdicts):
        overall = Trend.BOUNDED_AWAY
    elif all(v is Trend.DECAYS_TO_ZERO for v in verdicts):
        overall = Trend.DECAYS_TO_ZERO
    else:
        overall = Trend.INCONCLUSIVE
    return overall


def _carleson_summary(tables):
    trends = [tb.trend() for tb in tables]
    if any(t is CarlesonTrend.NON_VANISHING for t in trends):
        return CarlesonTrend.NON_VANISHING
    if all(t is CarlesonTrend.VANISHING for t in trends):
        return CarlesonTrend.VANISHING
    return CarlesonTrend.INCONCLUSIVE


_AS_BOOL = {
    Outcome.COMPACT: True,
    Outcome.NOT_COMPACT: False,
    Trend.DECAYS_TO_ZERO: True,
    Trend.BOUNDED_AWAY: False,
    CarlesonTrend.VANISHING: True,
    CarlesonTrend.NON_VANISHING: False,
    TailTrend.DECAYING: True,
    TailTrend.FLAT: False,
}


@dataclass
class Verdict:
    symbol_name: str
    verdict: Outcome
    geometric: Outcome
    kernel_ratio: Trend
    carleson: CarlesonTrend | None
    spectral: TailTrend | None
    consistency: str
    explanation: str
    kernel_label: str
    geometric_report: GeometricReport | None = None
    lipschitz: object = None
    traces: list = field(default_factory=list)
    carleson_tables: list = field(default_factory=list)
    spectral_evidence: object = None
    config: VerdictConfig = field(default_factory=VerdictConfig)

    def to_dict(self):
        cfg = asdict(self.config)
        report = {
            "schema_version": SCHEMA_VERSION,
            "package_version": __version__,
            "symbol_name": self.symbol_name,
            "lipschitz": _lipschitz_dict(self.lipschitz),
            "geometric": {
                "outcome": self.geometric.value,
                **(self.geometric_report.to_dict() if self.geometric_report else {}),
            },
            "kernel_ratio": {
                "outcome": self.kernel_ratio.value,
                "label": self.kernel_label,
                "paths": [tr.to_dict() for tr in self.traces],
            },
            "carleson": None
            if self.carleson is None
            else {
                "outcome": self.carleson.value,
                "sweeps": [tb.to_dict() for tb in self.carleson_tables],
            },
            "spectral": None
            if self.spectral_evidence is None
            else self.spectral_evidence.to_dict(),
            "verdict": self.verdict.value,
            "consistency": self.consistency,
            "explanation": self.explanation,
            "seeds": {"carleson": cfg["seed"]},
            "tolerances": {
                "margin": MARGIN_TOL,
                "kernel_decay_final": 1e-3,
                "kernel_decay_exponent": 0.5,
                "kernel_bounded_min": 1e-2,
                "carleson_vanishing_final": 0.1,
                "carleson_non_vanishing_final": 0.5,
                "spectral_tail": 0.1,
                "spectral_plateau": 0.5,
                "spectral_drift": 1e-2,
            },
            "config": _jsonable(cfg),
        }
        return report


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def carleson_sweeps(symbol, config):
    if symbol.arity == 1:
        plan = [("first", float("nan"))]
    else:
        plan = [(s, r) for r in config.fixed_radii for s in ("first", "second")]
        plan.append(("both", float("nan")))
    tables = []
    r_min = min(config.r_ladder)
    for i, (sweep, fixed) in enumerate(plan):
        samples = config.carleson_samples
        if sweep == "both":
            # the smallest product box is tiny; size the batch so that it
            # still expects a few dozen uniform hits
            samples = max(samples, required_samples((r_min, r_min), 2, 4 * MIN_EXPECTED_HITS))
        tables.append(
            vanishing_diagnostic(
                symbol,
                config.r_ladder,
                config.theta_grid,
                samples,
                rng_seed=config.seed + 1000 * i,
                sweep=sweep,
                fixed_r=fixed if math.isfinite(fixed) else 0.5,
            )
        )
    return tables


def aggregate_verdict(symbol, config=None):
    """Run every diagnostic on a symbol and reconcile their answers.

    With a finite Lipschitz estimate the geometric test decides both ways.
    Without it, the geometric conditions still imply compactness, but
    their failure proves nothing; the verdict then rests on the Carleson
    evidence and is reported as ``*_BY_EVIDENCE``.
    """
    config = config or VerdictConfig()
    lip = lipschitz_estimate(symbol, config.lipschitz_density)
    geo_report = None
    notes = []
    if symbol.arity == 2:
        geo_report = GeometricReport(
            condition_a(symbol, config.grid_density),
            condition_b(symbol, config.grid_density, config.epsilon_ladder),
            lip,
        )
        if lip.finite:
            geometric = Outcome.COMPACT if geo_report.holds else Outcome.NOT_COMPACT
            notes.append("geometric criterion applied assuming the sampled Lipschitz bound")
        elif geo_report.holds:
            geometric = Outcome.COMPACT
            notes.append("geometric conditions hold for a continuous symbol: compact")
        else:
            geometric = Outcome.INAPPLICABLE
            notes.append(
                "symbol is not Lipschitz and the geometric conditions fail; for such "
                "symbols failure is not conclusive (sqrt(xi + 1) - 1 is a compact example)"
            )
    else:
        geometric = Outcome.INAPPLICABLE
        notes.append("geometric criterion is for bidisc symbols")

    paths = approach_paths(symbol.arity, config.path_angles, config.face_offsets,
                           config.path_k_max)
    traces = [kernel_ratio_trace(symbol, p) for p in paths]
    kernel = _kernel_summary(traces)
    if lip.finite and symbol.arity == 2:
        label = "criterion (Lipschitz bidisc)"
    elif lip.finite:
        label = "criterion (angular derivative, disc)"
    else:
        label = "necessary-condition evidence"

    tables = carleson_sweeps(symbol, config) if config.run_carleson else []
    carleson = _carleson_summary(tables) if tables else None

    spectral_ev = None
    if config.run_spectral and symbol.is_polynomial:
        spectral_ev = compactness_evidence(symbol, config.degree_caps)
    spectral = spectral_ev.tail_trend if spectral_ev else None

    if geometric in (Outcome.COMPACT, Outcome.NOT_COMPACT):
        final = geometric
    elif symbol.arity == 1 and lip.finite and kernel is not Trend.INCONCLUSIVE:
        # angular-derivative criterion: the disc kernel ratio decides
        final = Outcome.COMPACT if kernel is Trend.DECAYS_TO_ZERO else Outcome.NOT_COMPACT
    elif carleson is CarlesonTrend.VANISHING and kernel is not Trend.BOUNDED_AWAY:
        final = Outcome.COMPACT_BY_EVIDENCE
    elif carleson is CarlesonTrend.NON_VANISHING or kernel is Trend.BOUNDED_AWAY:
        final = Outcome.NOT_COMPACT_BY_EVIDENCE
    else:
        final = Outcome.INCONCLUSIVE

    votes = {
        "geometric": _AS_BOOL.get(geometric),
        "kernel_ratio": _AS_BOOL.get(kernel),
        "carleson": _AS_BOOL.get(carleson),
        "spectral": _AS_BOOL.get(spectral),
    }
    decided = {k: v for k, v in votes.items() if v is not None}
    if len(set(decided.values())) <= 1:
        consistency = "AGREE"
    else:
        consistency = "DISAGREE"
        notes.append(
            "diagnostics disagree: "
            + ", ".join(f"{k}={'compact' if v else 'not compact'}" for k, v in decided.items())
        )
    return Verdict(
        symbol.name, final, geometric, kernel, carleson, spectral, consistency,
        "; ".join(notes), label, geo_report, lip, traces, tables, spectral_ev, config,
    )
