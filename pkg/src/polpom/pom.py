"""Probability operator measures: data model, outcome probabilities,
minimum-error construction and the Holevo/Yuen-Kennedy-Lax optimality test.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from polpom.ensembles import Ensemble, as_vector, verify_overcomplete

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PomElement:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"POM element must be square, got shape {m.shape}")
        if not np.allclose(m, m.conj().T, atol=HERMITIAN_TOL, rtol=0):
            raise ValueError("POM element is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        lowest = np.linalg.eigvalsh(m)[0]
        if lowest < -PSD_TOL:
            raise ValueError(f"POM element has negative eigenvalue {lowest!r}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class Pom:
    elements: tuple
    dim: int

    def __post_init__(self):
        elements = tuple(e if isinstance(e, PomElement) else PomElement(e) for e in self.elements)
        if not elements:
            raise ValueError("POM has no elements")
        for j, e in enumerate(elements):
            if e.dim != self.dim:
                raise ValueError(f"element {j + 1} is {e.dim}x{e.dim}, expected {self.dim}x{self.dim}")
        total = sum(e.matrix for e in elements)
        if not np.allclose(total, np.eye(self.dim), atol=COMPLETENESS_TOL, rtol=0):
            dev = np.max(np.abs(total - np.eye(self.dim)))
            raise ValueError(f"POM elements do not sum to the identity (max deviation {dev:.3g})")
        object.__setattr__(self, "elements", elements)

    @classmethod
    def from_matrices(cls, matrices) -> "Pom":
        matrices = [np.asarray(m, dtype=complex) for m in matrices]
        return cls(tuple(PomElement(m) for m in matrices), matrices[0].shape[0])

    def __len__(self):
        return len(self.elements)

    def __getitem__(self, j) -> PomElement:
        return self.elements[j]

    @property
    def stack(self) -> np.ndarray:
        """(M, D, D) array of element matrices."""
        return np.array([e.matrix for e in self.elements])

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "elements": [[[[z.real, z.imag] for z in row] for row in e.matrix] for e in self.elements],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Pom":
        try:
            dim = int(data["dim"])
            mats = [np.array([[complex(*z) for z in row] for row in el]) for el in data["elements"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed POM JSON: {exc}") from exc
        return cls(tuple(PomElement(m) for m in mats), dim)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if not np.allclose(m, m.conj().T, atol=HERMITIAN_TOL, rtol=0):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > 1e-12:
            raise ValueError("density matrix does not have unit trace")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] < -PSD_TOL:
            raise ValueError("density matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def pure(cls, state) -> "DensityMatrix":
        v = as_vector(state)
        return cls(np.outer(v, v.conj()))


def load_pom(path) -> Pom:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"POM file not found: {path}")
    try:
        return Pom.from_json(json.loads(path.read_text()))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from exc


def projector(state, weight: float = 1.0) -> np.ndarray:
    v = as_vector(state)
    return weight * np.outer(v, v.conj())


def outcome_probability(element: PomElement, state) -> float:
    v = as_vector(state)
    if v.shape[0] != element.dim:
        raise ValueError(f"dimension mismatch: state has {v.shape[0]} components, element is {element.dim}x{element.dim}")
    p = float(np.real(np.vdot(v, element.matrix @ v)))
    return min(1.0, max(0.0, p))


def outcome_probabilities(pom: Pom, state) -> np.ndarray:
    return np.array([outcome_probability(e, state) for e in pom.elements])


def min_error_pom(ensemble: Ensemble, dim: int | None = None) -> Pom:
    """Elements (D/N)|psi_k><psi_k| for an equiprobable overcomplete set."""
    dim = ensemble.dim if dim is None else dim
    if not ensemble.is_uniform():
        raise ValueError("min_error_pom needs equal priors")
    if not verify_overcomplete(ensemble, dim):
        raise ValueError(f"ensemble '{ensemble.label}' does not resolve the identity in dimension {dim}")
    w = dim / len(ensemble)
    return Pom(tuple(PomElement(projector(s, w)) for s in ensemble.states), dim)


def _check_counts(pom: Pom, ensemble: Ensemble):
    if len(pom) != len(ensemble):
        raise ValueError(f"POM has {len(pom)} outcomes but ensemble has {len(ensemble)} states")
    if pom.dim != ensemble.dim:
        raise ValueError(f"POM dimension {pom.dim} does not match state dimension {ensemble.dim}")


def error_probability(pom: Pom, ensemble: Ensemble) -> float:
    """1 - sum_k p_k Tr(rho_k Pi_k); outcome k is read as "state k was sent"."""
    _check_counts(pom, ensemble)
    v = ensemble.vectors
    correct = np.real(np.einsum("ki,kij,kj->k", v.conj(), pom.stack, v))
    return float(1.0 - np.dot(ensemble.priors, correct))


def check_optimality(pom: Pom, ensemble: Ensemble, tol: float = 1e-9) -> bool:
    """Test the necessary and sufficient minimum-error conditions.

    (a) Pi_j (p_j rho_j - p_k rho_k) Pi_k = 0 for every pair j, k;
    (b) sum_k p_k rho_k Pi_k - p_j rho_j >= 0 for every j.
    The operator in (b) is Hermitian-symmetrized before its eigenvalues are taken.
    """
    _check_counts(pom, ensemble)
    pis = pom.stack
    weighted = np.asarray(ensemble.priors)[:, None, None] * ensemble.density_matrices()
    n = len(pom)
    for j in range(n):
        for k in range(n):
            lhs = pis[j] @ (weighted[j] - weighted[k]) @ pis[k]
            if np.max(np.abs(lhs)) > tol:
                return False
    lagrange = np.einsum("kij,kjl->il", weighted, pis)
    for j in range(n):
        op = lagrange - weighted[j]
        op = 0.5 * (op + op.conj().T)
        if np.linalg.eigvalsh(op)[0] < -tol:
            return False
    return True


def merge_outcomes(pom: Pom, a: int, b: int) -> Pom:
    """Coarse-grain outcomes a and b into one (placed at position min(a, b))."""
    if a == b:
        raise ValueError("cannot merge an outcome with itself")
    lo, hi = sorted((a, b))
    mats = [e.matrix for e in pom.elements]
    mats[lo] = mats[lo] + mats[hi]
    del mats[hi]
    return Pom(tuple(PomElement(m) for m in mats), pom.dim)
