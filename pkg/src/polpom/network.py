"""Single-photon propagation through the trine and tetrad interferometers.

A state of the apparatus is a set of spatial paths, each carrying an (h, v)
amplitude pair, plus detector registers that permanently absorb whatever is
routed into them. Every component is a lossless linear map, so a network
turns the input qubit into a vector of detector amplitudes; the POM it
realizes on the input follows from the squared magnitudes.

Conventions: polarizing splitters transmit h and deflect v with no
reflection phase; the 50/50 non-polarizing splitter has real 1/sqrt(2)
amplitudes on both outputs and is only fed through one port.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from polpom.ensembles import antitrine, trine
from polpom.polarization import (
    PolarizationState,
    half_waveplate,
    quarter_waveplate,
)
from polpom.pom import Pom, PomElement

ALPHA = math.asin(1.0 / math.sqrt(3.0))
INPUT_PATH = "in"
FINAL = "F"
_POL = {"h": 0, "v": 1}


class NetworkError(ValueError):
    pass


@dataclass
class ModeAmplitudes:
    paths: dict = field(default_factory=dict)
    detectors: dict = field(default_factory=dict)

    @classmethod
    def single(cls, state: PolarizationState, path: str = INPUT_PATH) -> "ModeAmplitudes":
        return cls({path: state.vector.copy()}, {})

    def copy(self) -> "ModeAmplitudes":
        return ModeAmplitudes({k: v.copy() for k, v in self.paths.items()}, dict(self.detectors))

    def norm(self) -> float:
        total = sum(float(np.vdot(a, a).real) for a in self.paths.values())
        total += sum(abs(a) ** 2 for a in self.detectors.values())
        return total

    def path_norm(self) -> float:
        return sum(float(np.vdot(a, a).real) for a in self.paths.values())

    def amplitude(self, path: str, pol: str) -> complex:
        a = self.paths.get(path)
        return 0j if a is None else complex(a[_POL[pol]])

    def vector(self, labels) -> np.ndarray:
        """Detector amplitudes in the given label order (missing ones are 0)."""
        return np.array([self.detectors.get(lab, 0j) for lab in labels], dtype=complex)

    def _take(self, path: str) -> np.ndarray:
        a = self.paths.pop(path, None)
        return np.zeros(2, dtype=complex) if a is None else a

    def _put(self, path: str, amps: np.ndarray):
        if path in self.paths:
            raise NetworkError(f"path '{path}' is already occupied")
        self.paths[path] = amps


# -- components ---------------------------------------------------------------


@dataclass(frozen=True)
class PolarizingSplitter:
    """Two-port PBS: out_t gets h from in_a and v from in_b, out_r the rest.

    ``leakage`` is the power fraction of h that is reflected instead of
    transmitted (0 for the ideal device).
    """

    in_a: str
    out_t: str
    out_r: str
    in_b: str | None = None
    leakage: float = 0.0
    kind = "polarizing-splitter"

    def apply(self, m: ModeAmplitudes):
        a = m._take(self.in_a)
        b = m._take(self.in_b) if self.in_b else np.zeros(2, dtype=complex)
        t, r = math.sqrt(1.0 - self.leakage), math.sqrt(self.leakage)
        m._put(self.out_t, np.array([t * a[0] + r * b[0], b[1]]))
        m._put(self.out_r, np.array([-r * a[0] + t * b[0], a[1]]))


@dataclass(frozen=True)
class NonPolarizingSplitter:
    source: str
    out_t: str
    out_r: str
    kind = "nonpolarizing-splitter"

    def apply(self, m: ModeAmplitudes):
        a = m._take(self.source) / math.sqrt(2.0)
        m._put(self.out_t, a.copy())
        m._put(self.out_r, a.copy())


@dataclass(frozen=True)
class Waveplate:
    path: str
    plate: str  # "half" or "quarter"
    half_angle: float
    kind = "waveplate"

    def __post_init__(self):
        if self.plate not in ("half", "quarter"):
            raise NetworkError(f"unknown waveplate type '{self.plate}'")

    def operator(self):
        return half_waveplate(self.half_angle) if self.plate == "half" else quarter_waveplate(self.half_angle)

    def apply(self, m: ModeAmplitudes):
        if self.path in m.paths:
            m.paths[self.path] = self.operator().entries @ m.paths[self.path]


@dataclass(frozen=True)
class PathPhase:
    path: str
    phase: float
    kind = "relative-phase"

    def apply(self, m: ModeAmplitudes):
        if self.path in m.paths:
            m.paths[self.path] = np.exp(1j * self.phase) * m.paths[self.path]


@dataclass(frozen=True)
class DetectorTap:
    """Route one polarization component of a path into a detector."""

    path: str
    polarization: str
    detector: str
    kind = "detector-tap"

    def __post_init__(self):
        if self.polarization not in _POL:
            raise NetworkError(f"tap polarization must be 'h' or 'v', got '{self.polarization}'")

    def apply(self, m: ModeAmplitudes):
        if self.detector in m.detectors:
            raise NetworkError(f"detector '{self.detector}' is fed twice")
        a = m.paths.get(self.path)
        i = _POL[self.polarization]
        if a is None:
            m.detectors[self.detector] = 0j
            return
        m.detectors[self.detector] = complex(a[i])
        a = a.copy()
        a[i] = 0
        if np.all(a == 0):
            del m.paths[self.path]
        else:
            m.paths[self.path] = a


COMPONENTS = {
    cls.kind: cls for cls in (PolarizingSplitter, NonPolarizingSplitter, Waveplate, PathPhase, DetectorTap)
}


def _natural_key(label: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", label)]


@dataclass(frozen=True, eq=False)
class OpticalNetwork:
    """Ordered components with named checkpoints (stage counts)."""

    stages: tuple
    checkpoints: dict
    label: str = "custom"
    detectors: tuple = field(init=False)

    def __post_init__(self):
        stages = tuple(self.stages)
        object.__setattr__(self, "stages", stages)
        cps = dict(self.checkpoints)
        for name, idx in cps.items():
            if not 0 <= idx <= len(stages):
                raise NetworkError(f"checkpoint {name} points outside the network")
        cps[FINAL] = len(stages)
        object.__setattr__(self, "checkpoints", cps)
        labels = sorted({s.detector for s in stages if isinstance(s, DetectorTap)}, key=_natural_key)
        if not labels:
            raise NetworkError("network has no detectors")
        object.__setattr__(self, "detectors", tuple(labels))
        for basis in (PolarizationState(1, 0), PolarizationState(0, 1)):
            out = propagate(self, basis)
            if out.path_norm() > 1e-12:
                stray = sorted(k for k, v in out.paths.items() if np.any(np.abs(v) > 1e-12))
                raise NetworkError(f"amplitude left undetected on path(s) {stray}")

    @property
    def n_outcomes(self) -> int:
        return len(self.detectors)

    def to_json(self) -> dict:
        stages = []
        marks = {}
        for name, idx in self.checkpoints.items():
            if name != FINAL:
                marks.setdefault(idx, []).append(name)
        for i, s in enumerate(self.stages):
            for name in marks.get(i, []):
                stages.append({"kind": "checkpoint", "name": name})
            stages.append({"kind": s.kind, **asdict(s)})
        for name in marks.get(len(self.stages), []):
            stages.append({"kind": "checkpoint", "name": name})
        return {"label": self.label, "stages": stages}

    @classmethod
    def from_json(cls, data: dict) -> "OpticalNetwork":
        if not isinstance(data, dict) or not isinstance(data.get("stages"), list):
            raise NetworkError("network JSON must be an object with a 'stages' list")
        stages, cps = [], {}
        for pos, raw in enumerate(data["stages"], start=1):
            raw = dict(raw)
            kind = raw.pop("kind", None)
            if kind == "checkpoint":
                cps[raw["name"]] = len(stages)
                continue
            if kind not in COMPONENTS:
                raise NetworkError(f"stage {pos}: unknown component kind {kind!r}")
            try:
                stages.append(COMPONENTS[kind](**raw))
            except TypeError as exc:
                raise NetworkError(f"stage {pos} ({kind}): {exc}") from exc
        return cls(tuple(stages), cps, data.get("label", "custom"))


def load_network(path) -> OpticalNetwork:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"network file not found: {path}")
    try:
        return OpticalNetwork.from_json(json.loads(path.read_text()))
    except json.JSONDecodeError as exc:
        raise NetworkError(f"{path}: invalid JSON ({exc})") from exc


# -- built-in networks ---------------------------------------------------------


def trine_network(wp5_half_angle: float = ALPHA / 2, arm_phase: float = 0.0, leakage: float = 0.0) -> OpticalNetwork:
    """Minimum-error trine measurement: PD1..PD3 flag trine states 1..3.

    ``arm_phase`` is the net phase of the upper arm relative to the lower one
    at recombination. With phase-free splitter reflections the printed stage
    amplitudes need it to be zero.
    """
    stages = [
        PolarizingSplitter(INPUT_PATH, "U", "L"),  # PBS1
        Waveplate("U", "half", wp5_half_angle),  # WP5
        DetectorTap("U", "h", "PD3"),  # PBS2
        Waveplate("L", "half", math.pi / 4),  # WP6: v_L -> h_L
        PathPhase("U", arm_phase),
        PolarizingSplitter("L", "out", "aux", in_b="U", leakage=leakage),  # PBS4
        Waveplate("out", "half", math.pi / 8),  # WP9
        DetectorTap("out", "h", "PD1"),  # PBS6
        DetectorTap("out", "v", "PD2"),
    ]
    if leakage:
        stages += [DetectorTap("aux", "h", "PD4"), DetectorTap("aux", "v", "PD5")]
    return OpticalNetwork(tuple(stages), {"AA": 2, "BB": 4, "CC": 7}, "trine")


def tetrad_network(wp5_half_angle: float = math.pi / 4 + ALPHA / 2, arm_phase: float = math.pi / 2) -> OpticalNetwork:
    """Minimum-error tetrad measurement: PD1..PD4 flag tetrad states 1..4.

    ``arm_phase`` is applied to both arms ahead of the quarter-wave mixer;
    together with the dropped global phase of that plate it gives the mixing
    matrix (1/sqrt2)[[1, i], [i, 1]] on (h_L, v_U).
    """
    stages = (
        NonPolarizingSplitter(INPUT_PATH, "L", "U"),  # NPBS
        Waveplate("U", "half", wp5_half_angle),  # WP5
        DetectorTap("U", "h", "PD3"),
        DetectorTap("L", "h", "PD4"),
        Waveplate("L", "half", math.pi / 4),  # WP6
        PathPhase("L", arm_phase),
        PathPhase("U", arm_phase),
        PolarizingSplitter("L", "out", "aux", in_b="U"),
        Waveplate("out", "quarter", math.pi / 4),  # WP7
        DetectorTap("out", "h", "PD1"),
        DetectorTap("out", "v", "PD2"),
    )
    return OpticalNetwork(stages, {"AA": 2, "BB": 5, "CC": 9}, "tetrad")


def pbs_network() -> OpticalNetwork:
    """A bare polarizing splitter with a detector on each output."""
    stages = (
        PolarizingSplitter(INPUT_PATH, "T", "R"),
        DetectorTap("T", "h", "PD1"),
        DetectorTap("R", "v", "PD2"),
    )
    return OpticalNetwork(stages, {}, "pbs")


BUILTIN_NETWORKS = {"trine": trine_network, "tetrad": tetrad_network, "pbs": pbs_network}


def get_network(name: str) -> OpticalNetwork:
    if name in BUILTIN_NETWORKS:
        return BUILTIN_NETWORKS[name]()
    return load_network(name)


# -- operations -----------------------------------------------------------------


def propagate(network: OpticalNetwork, state: PolarizationState, upto: str = FINAL) -> ModeAmplitudes:
    if upto not in network.checkpoints:
        raise KeyError(f"unknown checkpoint '{upto}' (have {sorted(network.checkpoints)})")
    modes = ModeAmplitudes.single(state)
    for stage in network.stages[: network.checkpoints[upto]]:
        stage.apply(modes)
    return modes


def detector_amplitudes(network: OpticalNetwork, state: PolarizationState) -> np.ndarray:
    return propagate(network, state).vector(network.detectors)


def detection_distribution(network: OpticalNetwork, state: PolarizationState) -> np.ndarray:
    """Detector click probabilities, ordered as ``network.detectors``."""
    return np.abs(detector_amplitudes(network, state)) ** 2


_S = 1 / math.sqrt(2)
_PROBES = (
    PolarizationState(1, 0),
    PolarizationState(0, 1),
    PolarizationState(_S, _S),
    PolarizationState(_S, 1j * _S),
)
_CHECK_PROBES = (
    PolarizationState(_S, -_S),
    PolarizationState(_S, -1j * _S),
    PolarizationState(0.6, 0.8j * np.exp(0.3j)),
)


def effective_pom(network: OpticalNetwork, tol: float = 1e-9) -> Pom:
    """POM realized on the input qubit, rebuilt from four probe-state distributions."""
    p_h, p_v, p_d, p_r = (detection_distribution(network, s) for s in _PROBES)
    mean = 0.5 * (p_h + p_v)
    off = (p_d - mean) + 1j * (mean - p_r)  # <h|Pi|v>
    mats = [np.array([[p_h[j], off[j]], [np.conj(off[j]), p_v[j]]]) for j in range(network.n_outcomes)]
    for s in _CHECK_PROBES:
        v = s.vector
        predicted = np.array([np.real(np.vdot(v, m @ v)) for m in mats])
        residual = np.max(np.abs(predicted - detection_distribution(network, s)))
        if residual > tol:
            raise NetworkError(f"tomographic reconstruction residual {residual:.3g} exceeds {tol:g}")
    try:
        return Pom(tuple(PomElement(m) for m in mats), 2)
    except ValueError as exc:
        raise NetworkError(f"network does not realize a valid POM: {exc}") from exc


def _ideal_trine_table() -> np.ndarray:
    ideal = []
    for k in range(3):
        row = np.full(3, 1 / 6)
        row[k] = 2 / 3
        ideal.append(row)
    for k in range(3):
        row = np.full(3, 0.5)
        row[k] = 0.0
        ideal.append(row)
    return np.array(ideal)


def wp5_sweep(kind: str, half_angles) -> list[tuple[float, float]]:
    """RMS deviation of the 18 trine/antitrine detector probabilities from ideal, per WP5 angle."""
    if kind != "trine":
        raise ValueError(f"WP5 sweep is defined for the trine network, not '{kind}'")
    inputs = trine().states + antitrine().states
    ideal = _ideal_trine_table()
    out = []
    for angle in half_angles:
        net = trine_network(wp5_half_angle=float(angle))
        probs = np.array([detection_distribution(net, s) for s in inputs])
        out.append((float(angle), float(np.sqrt(np.mean((probs - ideal) ** 2)))))
    return out
