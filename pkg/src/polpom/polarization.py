"""Jones calculus for a single polarization qubit.

States are complex amplitude pairs (h, v). Waveplates take the physical
mount angle of the fast axis (anticlockwise from horizontal, looking along
the beam); the Jones matrix is written in terms of twice that angle.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PolarizationState:
    """Normalized pure polarization state ``amp_h|h> + amp_v|v>``."""

    amp_h: complex
    amp_v: complex

    def __post_init__(self):
        object.__setattr__(self, "amp_h", complex(self.amp_h))
        object.__setattr__(self, "amp_v", complex(self.amp_v))
        norm = abs(self.amp_h) ** 2 + abs(self.amp_v) ** 2
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (|h|^2 + |v|^2 = {norm!r})")

    @classmethod
    def from_vector(cls, vec, normalize: bool = False) -> "PolarizationState":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        if vec.shape != (2,):
            raise ValueError(f"expected a 2-component amplitude vector, got shape {vec.shape}")
        if normalize:
            norm = np.linalg.norm(vec)
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            vec = vec / norm
        return cls(vec[0], vec[1])

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.amp_h, self.amp_v], dtype=complex)

    def inner(self, other: "PolarizationState") -> complex:
        """<self|other>"""
        return complex(np.vdot(self.vector, other.vector))

    def fidelity(self, other: "PolarizationState") -> float:
        return abs(self.inner(other)) ** 2

    def canonical(self) -> "PolarizationState":
        """Same state with the first nonzero amplitude made real and positive."""
        vec = self.vector
        lead = vec[0] if abs(vec[0]) > NORM_TOL else vec[1]
        vec = vec * (abs(lead) / lead)
        return PolarizationState(vec[0], vec[1])

    def orthogonal(self) -> "PolarizationState":
        return PolarizationState(-np.conj(self.amp_v), np.conj(self.amp_h))

    def __eq__(self, other):
        if not isinstance(other, PolarizationState):
            return NotImplemented
        return bool(np.allclose(self.canonical().vector, other.canonical().vector, atol=1e-12, rtol=0))

    __hash__ = None

    def to_json(self) -> dict:
        return {
            "h": [self.amp_h.real, self.amp_h.imag],
            "v": [self.amp_v.real, self.amp_v.imag],
        }

    @classmethod
    def from_json(cls, data: dict) -> "PolarizationState":
        try:
            h = complex(*data["h"])
            v = complex(*data["v"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed state object {data!r}: expected {{'h': [re, im], 'v': [re, im]}}") from exc
        return cls(h, v)


H = PolarizationState(1, 0)
V = PolarizationState(0, 1)


@dataclass(frozen=True, eq=False)
class PolarizationOperator:
    """2x2 Jones matrix."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"Jones matrix must be 2x2, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def __matmul__(self, other):
        if isinstance(other, PolarizationOperator):
            return PolarizationOperator(self.entries @ other.entries)
        if isinstance(other, PolarizationState):
            return PolarizationState.from_vector(self.entries @ other.vector)
        return self.entries @ np.asarray(other)

    def apply(self, state: PolarizationState) -> PolarizationState:
        return self @ state

    def is_unitary(self, tol: float = 1e-12) -> bool:
        m = self.entries
        return bool(np.allclose(m.conj().T @ m, np.eye(2), atol=tol, rtol=0))


def half_waveplate(half_angle: float) -> PolarizationOperator:
    phi = 2.0 * (half_angle % math.pi)
    c, s = math.cos(phi), math.sin(phi)
    return PolarizationOperator([[c, s], [s, -c]])


def quarter_waveplate(half_angle: float) -> PolarizationOperator:
    # overall phase exp(3i*pi/4) dropped
    theta = 2.0 * (half_angle % math.pi)
    c, s = math.cos(theta), math.sin(theta)
    return PolarizationOperator(np.array([[c - 1j, s], [s, -c - 1j]]) / math.sqrt(2))


def phase_shift(phase: float) -> PolarizationOperator:
    """Polarization-independent phase, e.g. from an arm's path length."""
    return PolarizationOperator(np.exp(1j * phase) * np.eye(2))


@dataclass(frozen=True)
class StokesVector:
    s1: float
    s2: float
    s3: float

    @property
    def array(self) -> np.ndarray:
        return np.array([self.s1, self.s2, self.s3])

    def dot(self, other: "StokesVector") -> float:
        return float(self.array @ other.array)

    def angle_to(self, other: "StokesVector") -> float:
        """Great-circle angle on the Poincare sphere, radians."""
        return math.acos(max(-1.0, min(1.0, self.dot(other))))


def stokes(state: PolarizationState) -> StokesVector:
    h, v = state.amp_h, state.amp_v
    cross = np.conj(h) * v
    return StokesVector(abs(h) ** 2 - abs(v) ** 2, 2 * cross.real, 2 * cross.imag)


def state_from_angles(beta: float, gamma: float) -> PolarizationState:
    """cos(beta)|h> + exp(i gamma) sin(beta)|v>"""
    return PolarizationState(math.cos(beta), np.exp(1j * gamma) * math.sin(beta))


def angles_from_state(state: PolarizationState) -> tuple[float, float]:
    """Inverse of :func:`state_from_angles`, with beta in [0, pi/2]."""
    c = state.canonical()
    beta = math.atan2(abs(c.amp_v), abs(c.amp_h))
    gamma = float(np.angle(c.amp_v)) if abs(c.amp_v) > NORM_TOL and abs(c.amp_h) > NORM_TOL else 0.0
    return beta, gamma


def prep_sequence(wp2: float, wp3: float, wp4: float) -> PolarizationOperator:
    """Quarter, half, quarter plates in beam order; returns their product."""
    return quarter_waveplate(wp4) @ half_waveplate(wp3) @ quarter_waveplate(wp2)


class PreparationError(RuntimeError):
    pass


_PREP_TOL = 1e-10


def _plate_assignments(theta: float, phi: float):
    # Each candidate places the two closed-form angles on the three plates.
    for t, p in itertools.product((theta, theta + math.pi), (phi, math.pi - phi)):
        yield (-t / 2, p / 2, t / 2)
        yield (-t / 2 + math.pi / 2, -p / 2, t / 2 + math.pi / 2)
        yield (t / 2, (t - p) / 2, t / 2 + math.pi / 2)
        yield (t / 2 + math.pi / 2, (t + p) / 2, t / 2)


def prep_angles(beta: float, gamma: float) -> tuple[float, float]:
    """(theta, phi) with tan(theta) = tan(beta) cos(gamma), sin(phi) = -sin(beta) sin(gamma)."""
    phi = math.asin(max(-1.0, min(1.0, -math.sin(beta) * math.sin(gamma))))
    theta = math.atan2(math.sin(beta) * math.cos(gamma), math.cos(beta))
    return theta, phi


def prepare_state(beta: float, gamma: float) -> tuple[float, float, float]:
    """Mount angles (wp2, wp3, wp4) turning |h> into cos b|h> + e^{ig} sin b|v>.

    wp2 and wp4 are quarter-wave plates and wp3 a half-wave plate, in beam
    order. The two closed-form angles come from
    ``sin(phi) = -sin(beta) sin(gamma)`` and
    ``tan(theta) = tan(beta) cos(gamma)``; which plate carries which angle is
    settled by checking every consistent placement against the target and
    keeping the first hit (smallest total |angle| among hits).
    """
    if abs(math.sin(beta)) < NORM_TOL or abs(math.cos(beta)) < NORM_TOL:
        gamma = 0.0
    target = state_from_angles(beta, gamma)
    theta, phi = prep_angles(beta, gamma)

    hits = []
    for angles in _plate_assignments(theta, phi):
        out = prep_sequence(*angles) @ H
        if out.fidelity(target) >= 1.0 - _PREP_TOL:
            hits.append(angles)
    if not hits:
        raise PreparationError(f"no plate placement reproduces beta={beta!r}, gamma={gamma!r}")
    best = min(hits, key=lambda a: sum(abs(x) for x in a))
    return tuple(float(x) for x in best)
