"""Detector-noise model and Monte Carlo error propagation for measured tables.

Noise moves a fraction 1 - gamma of all clicks to a uniformly random
detector: Pi_j -> gamma Pi_j + (1 - gamma)/N * I.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from polpom.infotheory import mutual_information_batch
from polpom.pom import Pom, PomElement

MC_CHUNK = 8192


@dataclass(frozen=True)
class NoiseModel:
    gamma: float
    outcomes: int

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma!r}")
        if self.outcomes < 1:
            raise ValueError("outcomes must be a positive integer")

    @property
    def forbidden_rate(self) -> float:
        """Click probability on a detector the ideal measurement never fires."""
        return (1.0 - self.gamma) / self.outcomes


def noisy_pom(pom: Pom, model: NoiseModel) -> Pom:
    if len(pom) != model.outcomes:
        raise ValueError(f"POM has {len(pom)} outcomes, noise model expects {model.outcomes}")
    flat = (1.0 - model.gamma) / model.outcomes * np.eye(pom.dim)
    return Pom(tuple(PomElement(model.gamma * e.matrix + flat) for e in pom.elements), pom.dim)


def _xlog2(x, y):
    """x * log2(y) with the 0 * log 0 = 0 convention."""
    return 0.0 if x == 0 else x * math.log2(y)


def _mi_closed_form(g: float, n: int) -> float:
    # signed gamma: +g for the states, -g for the antistates
    a = (1.0 + g) / n
    return _xlog2(a, 1.0 + g) + _xlog2(1.0 - a, 1.0 - g / (n - 1))


def mi_states(model: NoiseModel) -> float:
    """Closed-form I(X:Y) for the equiprobable ensemble measured with its own noisy min-error POM."""
    if model.outcomes < 2:
        raise ValueError("need at least two outcomes")
    return _mi_closed_form(model.gamma, model.outcomes)


def mi_antistates(model: NoiseModel) -> float:
    """Same, with the antistates sent in (identical form with gamma -> -gamma)."""
    if model.outcomes < 2:
        raise ValueError("need at least two outcomes")
    return _mi_closed_form(-model.gamma, model.outcomes)


def estimate_gamma(forbidden_rate: float, outcomes: int) -> NoiseModel:
    if outcomes < 1:
        raise ValueError("outcomes must be a positive integer")
    if forbidden_rate < 0:
        raise ValueError(f"forbidden-outcome rate must be nonnegative, got {forbidden_rate!r}")
    if forbidden_rate > 1.0 / outcomes:
        raise ValueError(f"forbidden-outcome rate {forbidden_rate!r} exceeds 1/N = {1.0 / outcomes:g} (gamma would be negative)")
    return NoiseModel(1.0 - outcomes * forbidden_rate, outcomes)


def gamma_sweep(outcomes: int, samples: int) -> list[tuple[float, float, float]]:
    """(gamma, I_states, I_antistates) on a uniform grid over [0, 1]."""
    if samples < 2:
        raise ValueError("gamma sweep needs at least 2 samples")
    out = []
    for g in np.linspace(0.0, 1.0, samples):
        m = NoiseModel(float(g), outcomes)
        out.append((float(g), mi_states(m), mi_antistates(m)))
    return out


@dataclass(frozen=True, eq=False)
class MeasuredDistribution:
    """Measured outcome frequencies, rows = input states, columns = detectors."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 2 or p.size == 0:
            raise ValueError("measured distribution must be a non-empty 2-D table")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("measured probabilities must lie in [0, 1]")
        rows = p.sum(axis=1)
        bad = np.flatnonzero(np.abs(rows - 1.0) > 1e-6)
        if bad.size:
            raise ValueError(f"row {bad[0] + 1} sums to {rows[bad[0]]:.6g}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def normalized(cls, raw) -> "MeasuredDistribution":
        """Rescale each row of raw (nonnegative) readings to sum to one."""
        raw = np.asarray(raw, dtype=float)
        sums = raw.sum(axis=1, keepdims=True)
        if np.any(sums <= 0):
            raise ValueError("a row of readings has no positive entries")
        return cls(raw / sums)


def read_measured_csv(source) -> MeasuredDistribution:
    """Parse a CSV table (optional header row, numeric cells) into a distribution.

    Rows are renormalized so raw detector readings can be fed directly.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.is_file():
            raise FileNotFoundError(f"measured-distribution file not found: {path}")
        text = path.read_text()
    else:
        text = source.read()
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if not rows:
        raise ValueError("CSV is empty")

    def is_number(cell):
        try:
            float(cell)
            return True
        except ValueError:
            return False

    start = 0 if all(is_number(c) for c in rows[0]) else 1
    width = len(rows[0])
    table = []
    for i, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise ValueError(f"CSV row {i}: expected {width} columns, found {len(row)}")
        values = []
        for j, cell in enumerate(row, start=1):
            try:
                values.append(float(cell))
            except ValueError:
                raise ValueError(f"CSV row {i}, column {j}: not a number: {cell!r}") from None
            if values[-1] < 0:
                raise ValueError(f"CSV row {i}, column {j}: negative value {cell!r}")
        table.append(values)
    if not table:
        raise ValueError("CSV has a header but no data rows")
    return MeasuredDistribution.normalized(table)


@dataclass(frozen=True)
class MonteCarloResult:
    point: float
    lower: float
    upper: float
    trials: int
    seed: int

    def to_json(self) -> dict:
        return {"point": self.point, "lower": self.lower, "upper": self.upper, "trials": self.trials, "seed": self.seed}


def monte_carlo_mi(
    measured: MeasuredDistribution,
    priors=None,
    half_width: float = 0.025,
    trials: int = 100_000,
    seed: int = 0,
    percentiles: tuple[float, float] = (16.0, 84.0),
) -> MonteCarloResult:
    """Mutual information of a measured table with a flat +/- half_width error on every entry.

    Each trial adds an independent uniform draw to every entry, clamps to
    [0, 1] and renormalizes rows before evaluating I(X:Y). Trials are drawn
    in fixed-size chunks, each from its own child stream of ``seed``, so the
    result does not depend on how chunks are scheduled.
    """
    if half_width < 0:
        raise ValueError("half_width must be nonnegative")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    probs = measured.probs
    n = probs.shape[0]
    priors = np.full(n, 1.0 / n) if priors is None else np.asarray(priors, dtype=float)
    if priors.shape != (n,) or abs(priors.sum() - 1.0) > 1e-9 or np.any(priors < 0):
        raise ValueError(f"priors must be a distribution over the {n} input states")

    point = float(mutual_information_batch(probs, priors))
    n_chunks = -(-trials // MC_CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    values = []
    for c, child in enumerate(children):
        size = min(MC_CHUNK, trials - c * MC_CHUNK)
        rng = np.random.default_rng(child)
        noise = rng.uniform(-half_width, half_width, size=(size,) + probs.shape)
        sample = np.clip(probs + noise, 0.0, 1.0)
        sums = sample.sum(axis=-1, keepdims=True)
        if np.any(sums <= 0):
            raise ValueError("a perturbed row became all zero; half_width is too large for this table")
        values.append(mutual_information_batch(sample / sums, priors))
    values = np.concatenate(values)
    lower, upper = np.percentile(values, percentiles)
    return MonteCarloResult(point, float(lower), float(upper), int(trials), int(seed))
