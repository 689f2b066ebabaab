"""Trine, tetrad and their orthogonal ("anti") ensembles."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from polpom.polarization import PolarizationState

_SQ2 = math.sqrt(2.0)
_SQ3 = math.sqrt(3.0)
_W = np.exp(2j * math.pi / 3)  # e^{2 pi i / 3}


def as_vector(state) -> np.ndarray:
    """Amplitude vector of a PolarizationState or of a raw D-component ket."""
    if isinstance(state, PolarizationState):
        return state.vector
    return np.asarray(state, dtype=complex).reshape(-1)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Pure states with prior probabilities.

    States are normally :class:`PolarizationState`; plain D-component
    vectors are accepted too so the generic-dimension POM code can be
    exercised.
    """

    states: tuple
    priors: tuple
    label: str = "custom"
    _vectors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        states = tuple(self.states)
        if not states:
            raise ValueError("ensemble has no states")
        vecs = [as_vector(s) for s in states]
        if len({v.shape[0] for v in vecs}) != 1:
            raise ValueError("all states must have the same dimension")
        vecs = np.array(vecs)
        norms = np.sum(np.abs(vecs) ** 2, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > 1e-12)
        if bad.size:
            raise ValueError(f"state {bad[0] + 1} is not normalized (norm^2 = {norms[bad[0]]!r})")
        priors = tuple(float(p) for p in self.priors)
        if len(priors) != len(states):
            raise ValueError(f"{len(states)} states but {len(priors)} priors")
        if any(p < 0 for p in priors):
            raise ValueError("priors must be nonnegative")
        if abs(sum(priors) - 1.0) > 1e-12:
            raise ValueError(f"priors sum to {sum(priors)!r}, not 1")
        vecs.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "_vectors", vecs)

    @classmethod
    def uniform(cls, states, label: str = "custom") -> "Ensemble":
        states = tuple(states)
        if not states:
            raise ValueError("ensemble has no states")
        return cls(states, (1.0 / len(states),) * len(states), label)

    @property
    def vectors(self) -> np.ndarray:
        """(N, D) array of kets, one row per state."""
        return self._vectors

    @property
    def dim(self) -> int:
        return self._vectors.shape[1]

    def __len__(self):
        return len(self.states)

    def density_matrices(self) -> np.ndarray:
        v = self._vectors
        return np.einsum("ki,kj->kij", v, v.conj())

    def is_uniform(self, tol: float = 1e-12) -> bool:
        n = len(self.priors)
        return all(abs(p - 1.0 / n) <= tol for p in self.priors)

    def to_json(self) -> dict:
        states = []
        for s in self.states:
            if not isinstance(s, PolarizationState):
                raise ValueError("only qubit ensembles can be serialized")
            states.append(s.to_json())
        return {"label": self.label, "states": states, "priors": list(self.priors)}

    @classmethod
    def from_json(cls, data: dict) -> "Ensemble":
        if not isinstance(data, dict) or "states" not in data:
            raise ValueError("ensemble JSON must be an object with a 'states' list")
        states = [PolarizationState.from_json(s) for s in data["states"]]
        priors = data.get("priors")
        if priors is None:
            priors = [1.0 / len(states)] * len(states)
        return cls(tuple(states), tuple(priors), data.get("label", "custom"))


def _st(h, v) -> PolarizationState:
    return PolarizationState(h, v)


def trine() -> Ensemble:
    return Ensemble.uniform(
        [
            _st(-0.5, -0.5 * _SQ3),
            _st(-0.5, 0.5 * _SQ3),
            _st(1, 0),
        ],
        "trine",
    )


def tetrad() -> Ensemble:
    return Ensemble.uniform(
        [
            _st(-1 / _SQ3, _SQ2 * _W.conjugate() / _SQ3),
            _st(-1 / _SQ3, _SQ2 * _W / _SQ3),
            _st(-1 / _SQ3, _SQ2 / _SQ3),
            _st(1, 0),
        ],
        "tetrad",
    )


def antitrine() -> Ensemble:
    return Ensemble.uniform(
        [
            _st(0.5 * _SQ3, -0.5),
            _st(-0.5 * _SQ3, -0.5),
            _st(0, 1),
        ],
        "antitrine",
    )


def antitetrad() -> Ensemble:
    return Ensemble.uniform(
        [
            _st(-_SQ2 * _W / _SQ3, -1 / _SQ3),
            _st(-_SQ2 * _W.conjugate() / _SQ3, -1 / _SQ3),
            _st(-_SQ2 / _SQ3, -1 / _SQ3),
            _st(0, 1),
        ],
        "antitetrad",
    )


BUILTIN = {
    "trine": trine,
    "tetrad": tetrad,
    "antitrine": antitrine,
    "antitetrad": antitetrad,
}

# the min-error POM whose outcomes the antistates are measured against
PARENT = {"trine": "trine", "antitrine": "trine", "tetrad": "tetrad", "antitetrad": "tetrad"}


def get_ensemble(name: str) -> Ensemble:
    """Built-in ensemble by label, or load one from a JSON file path."""
    if name in BUILTIN:
        return BUILTIN[name]()
    return load_ensemble(name)


def load_ensemble(path) -> Ensemble:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"ensemble file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from exc
    return Ensemble.from_json(data)


def verify_overcomplete(ensemble: Ensemble, dim: int, tol: float = 1e-10) -> bool:
    """True when (dim/N) sum_k |psi_k><psi_k| is the identity."""
    if dim != ensemble.dim:
        raise ValueError(f"dimension mismatch: dim={dim} but states have {ensemble.dim} components")
    n = len(ensemble)
    frame = dim / n * ensemble.density_matrices().sum(axis=0)
    return bool(np.allclose(frame, np.eye(dim), atol=tol, rtol=0))
