"""Shannon entropy, Bayes posteriors and mutual information (all in bits)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from polpom.ensembles import Ensemble
from polpom.polarization import PolarizationState, StokesVector, stokes
from polpom.pom import Pom


def _check_distribution(p, what="priors", tol=1e-9) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{what} must be a non-empty 1-D list of probabilities")
    if np.any(p < -tol) or abs(p.sum() - 1.0) > tol:
        raise ValueError(f"{what} is not a probability distribution: {p.tolist()}")
    return np.clip(p, 0.0, 1.0)


def _xlog2x(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


@dataclass(frozen=True, eq=False)
class ConditionalTable:
    """P(y_j | psi_k): rows are prepared states, columns are outcomes."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 2:
            raise ValueError("conditional table must be 2-D (states x outcomes)")
        if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
            raise ValueError("conditional probabilities must lie in [0, 1]")
        rows = p.sum(axis=1)
        bad = np.flatnonzero(np.abs(rows - 1.0) > 1e-9)
        if bad.size:
            raise ValueError(f"row {bad[0] + 1} sums to {rows[bad[0]]!r}, not 1")
        p = np.clip(p, 0.0, 1.0)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_pom(cls, ensemble: Ensemble, pom: Pom) -> "ConditionalTable":
        if pom.dim != ensemble.dim:
            raise ValueError(f"POM dimension {pom.dim} does not match state dimension {ensemble.dim}")
        v = ensemble.vectors
        probs = np.real(np.einsum("ki,jil,kl->kj", v.conj(), pom.stack, v))
        return cls(np.clip(probs, 0.0, 1.0))

    @property
    def shape(self):
        return self.probs.shape


@dataclass(frozen=True)
class MiReport:
    mutual_info_bits: float
    entropy_bits: float
    conditional_entropy_bits: float

    def to_json(self) -> dict:
        return {
            "mutual_info_bits": self.mutual_info_bits,
            "entropy_bits": self.entropy_bits,
            "conditional_entropy_bits": self.conditional_entropy_bits,
        }


def shannon_entropy(priors) -> float:
    p = _check_distribution(priors)
    return float(-_xlog2x(p).sum())


def posterior(table: ConditionalTable, priors, outcome: int) -> np.ndarray:
    """Bayes update P(psi_k | y_outcome)."""
    p = _check_distribution(priors)
    joint = table.probs[:, outcome] * p
    total = joint.sum()
    if total <= 0:
        raise ValueError(f"outcome {outcome} has zero probability")
    return joint / total


def _conditional_entropy_batch(probs: np.ndarray, priors: np.ndarray) -> np.ndarray:
    # probs (..., N, M); H(X|Y) = -sum_jk P(k, j) log2 P(k | j)
    joint = priors[:, None] * probs
    py = joint.sum(axis=-2)
    return -(_xlog2x(joint).sum(axis=(-2, -1)) - _xlog2x(py).sum(axis=-1))


def mutual_information_batch(probs, priors) -> np.ndarray:
    """I(X:Y) for a stack of conditional tables of shape (..., N, M)."""
    probs = np.asarray(probs, dtype=float)
    priors = np.asarray(priors, dtype=float)
    hx = -_xlog2x(priors).sum()
    mi = hx - _conditional_entropy_batch(probs, priors)
    return np.where((mi < 0) & (mi > -1e-12), 0.0, mi)


def conditional_entropy(table: ConditionalTable, priors) -> float:
    p = _check_distribution(priors)
    if p.size != table.shape[0]:
        raise ValueError(f"{p.size} priors for a table with {table.shape[0]} rows")
    return float(_conditional_entropy_batch(table.probs, p))


def mutual_information_table(table: ConditionalTable, priors) -> MiReport:
    p = _check_distribution(priors)
    if p.size != table.shape[0]:
        raise ValueError(f"{p.size} priors for a table with {table.shape[0]} rows")
    hx = shannon_entropy(p)
    hxy = float(_conditional_entropy_batch(table.probs, p))
    if -1e-12 < hxy < 0:
        hxy = 0.0
    mi = hx - hxy
    if -1e-12 < mi < 0:
        mi = 0.0
    return MiReport(mi, hx, hxy)


def mutual_information(ensemble: Ensemble, pom: Pom) -> MiReport:
    return mutual_information_table(ConditionalTable.from_pom(ensemble, pom), ensemble.priors)


@dataclass(frozen=True)
class VonNeumannResult:
    bits: float
    polar: float
    azimuth: float

    @property
    def axis(self) -> StokesVector:
        return StokesVector(
            math.cos(self.polar),
            math.sin(self.polar) * math.cos(self.azimuth),
            math.sin(self.polar) * math.sin(self.azimuth),
        )

    @property
    def basis(self) -> tuple[PolarizationState, PolarizationState]:
        """The two orthogonal states measured, + axis first."""
        up = PolarizationState(
            math.cos(self.polar / 2), np.exp(1j * self.azimuth) * math.sin(self.polar / 2)
        )
        return up, up.orthogonal()


def _projective_mi(svecs, priors, polar, azimuth):
    polar, azimuth = np.broadcast_arrays(np.asarray(polar, dtype=float), np.asarray(azimuth, dtype=float))
    n = np.stack(
        [np.cos(polar), np.sin(polar) * np.cos(azimuth), np.sin(polar) * np.sin(azimuth)],
        axis=-1,
    )
    plus = 0.5 * (1.0 + n @ svecs.T)  # (..., N)
    plus = np.clip(plus, 0.0, 1.0)
    table = np.stack([plus, 1.0 - plus], axis=-1)  # (..., N, 2)
    return mutual_information_batch(table, priors)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo, hi, tol):
    """Golden-section search for a maximum of f on [lo, hi]."""
    a, b = lo, hi
    c, d = b - _INV_PHI * (b - a), a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def best_von_neumann_mi(ensemble: Ensemble, resolution: int = 721, angle_tol: float = 1e-6) -> VonNeumannResult:
    """Largest I(X:Y) over two-outcome projective measurements on a qubit.

    The measurement axis is scanned on a ``resolution`` (azimuth) by
    ``resolution // 2 + 1`` (polar) grid over the half sphere, then polished
    with alternating golden-section searches. Among equal grid maxima the one
    with the smallest polar angle, then azimuth, wins.
    """
    if ensemble.dim != 2:
        raise ValueError("von Neumann scan is defined for qubit ensembles only")
    svecs = np.array([stokes(PolarizationState.from_vector(v)).array for v in ensemble.vectors])
    priors = np.asarray(ensemble.priors, dtype=float)

    n_az = max(int(resolution), 3)
    n_pol = n_az // 2 + 1
    polar = np.linspace(0.0, math.pi / 2, n_pol)
    azimuth = np.linspace(0.0, 2 * math.pi, n_az)
    grid = _projective_mi(svecs, priors, polar[:, None], azimuth[None, :])
    best = grid.max()
    # row-major order = polar first, then azimuth
    i, j = np.unravel_index(np.flatnonzero(grid >= best - 1e-12)[0], grid.shape)
    t, a = polar[i], azimuth[j]
    dt, da = polar[1] - polar[0], azimuth[1] - azimuth[0]

    def f(tt, aa):
        return float(_projective_mi(svecs, priors, tt, aa))

    value = f(t, a)
    for _ in range(60):
        moved = 0.0
        t_new, v_new = _golden_max(lambda x: f(x, a), t - dt, t + dt, angle_tol * 1e-2)
        if v_new > value:
            moved, t, value = max(moved, abs(t_new - t)), t_new, v_new
        a_new, v_new = _golden_max(lambda x: f(t, x), a - da, a + da, angle_tol * 1e-2)
        if v_new > value:
            moved, a, value = max(moved, abs(a_new - a)), a_new, v_new
        if moved < angle_tol:
            break
    if t < 0:
        t, a = -t, a + math.pi
    return VonNeumannResult(float(value), float(t), float(a % (2 * math.pi)))


ACCESSIBLE_INFO = {
    "trine": math.log2(3 / 2),
    "tetrad": math.log2(4 / 3),
}


def accessible_info_reference(label: str) -> float:
    """Known accessible information of the equiprobable trine/tetrad (tetrad: conjectured)."""
    try:
        return ACCESSIBLE_INFO[label]
    except KeyError:
        raise ValueError(f"no accessible-information reference for '{label}' (known: trine, tetrad)") from None
