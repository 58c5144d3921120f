"""Transfer-matrix algebra for small linear-optical networks.

A network state is a vector of complex beam amplitudes; every optical
element is a dim x dim complex matrix acting on it by left multiplication.
Circuits are ordered element lists in physical order (the first element is
the first one the light meets), so composing a circuit means multiplying
the element matrices right to left.

Lossless elements give unitary transfer matrices; amplitude-transmission
(loss) elements make them sub-unitary, with all singular values <= 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

import numpy as np

HALF_PI = np.pi / 2


@dataclass(frozen=True)
class Splitter:
    """Two-mode beam splitter on modes (j, k).

    chi sets the split ratio (sqrt(T) = cos chi, sqrt(R) = sin chi); alpha
    and theta are the element's internal phases.  The default (alpha, theta)
    = (pi/2, 0) is the symmetric convention with `i` on the off-diagonal.
    """

    j: int
    k: int
    chi: float
    alpha: float = HALF_PI
    theta: float = 0.0


@dataclass(frozen=True)
class Phase:
    """Phase shift by beta on mode j."""

    j: int
    beta: float


@dataclass(frozen=True)
class Loss:
    """Amplitude transmission t in [0, 1] on mode j."""

    j: int
    t: float


@dataclass(frozen=True)
class Mirror:
    """Mirror reflection on mode j, modelled as a pure phase psi."""

    j: int
    psi: float


OpticalElement = Union[Splitter, Phase, Loss, Mirror]


@dataclass(frozen=True)
class CircuitDescription:
    """Ordered element list on `dim` modes, in physical order."""

    dim: int
    elements: tuple

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        for el in self.elements:
            _check_indices(self.dim, el)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "elements": [_element_to_dict(el) for el in self.elements]}

    @classmethod
    def from_dict(cls, data: dict) -> "CircuitDescription":
        return cls(int(data["dim"]), tuple(_element_from_dict(e) for e in data["elements"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CircuitDescription":
        return cls.from_dict(json.loads(text))


def _check_indices(dim: int, el: OpticalElement) -> None:
    if isinstance(el, Splitter):
        if not (0 <= el.j < dim and 0 <= el.k < dim):
            raise IndexError(f"splitter modes ({el.j}, {el.k}) outside 0..{dim - 1}")
        if el.j == el.k:
            raise IndexError(f"splitter needs two distinct modes, got j = k = {el.j}")
    else:
        if not 0 <= el.j < dim:
            raise IndexError(f"element mode {el.j} outside 0..{dim - 1}")


def _element_to_dict(el: OpticalElement) -> dict:
    if isinstance(el, Splitter):
        return {"kind": "splitter", "j": el.j, "k": el.k, "chi": el.chi,
                "alpha": el.alpha, "theta": el.theta}
    if isinstance(el, Phase):
        return {"kind": "phase", "j": el.j, "beta": el.beta}
    if isinstance(el, Loss):
        return {"kind": "loss", "j": el.j, "t": el.t}
    if isinstance(el, Mirror):
        return {"kind": "mirror", "j": el.j, "psi": el.psi}
    raise TypeError(f"not an optical element: {el!r}")


def _element_from_dict(data: dict) -> OpticalElement:
    kind = data.get("kind")
    if kind == "splitter":
        return Splitter(int(data["j"]), int(data["k"]), float(data["chi"]),
                        float(data["alpha"]), float(data["theta"]))
    if kind == "phase":
        return Phase(int(data["j"]), float(data["beta"]))
    if kind == "loss":
        return Loss(int(data["j"]), float(data["t"]))
    if kind == "mirror":
        return Mirror(int(data["j"]), float(data["psi"]))
    raise ValueError(f"unknown element kind: {kind!r}")


def splitter_matrix(dim: int, j: int, k: int, chi: float,
                    alpha: float = HALF_PI, theta: float = 0.0) -> np.ndarray:
    """Transfer matrix of a lossless beam splitter on modes (j, k).

    The 2x2 block on (j, k) is::

        [ cos(chi) e^{i theta}          sin(chi) e^{i (theta + alpha)} ]
        [ -sin(chi) e^{i (theta - alpha)}   cos(chi) e^{i theta}       ]

    and the matrix is the identity on every other mode.
    """
    _check_indices(dim, Splitter(j, k, chi, alpha, theta))
    m = np.eye(dim, dtype=np.complex128)
    c, s = np.cos(chi), np.sin(chi)
    m[j, j] = c * np.exp(1j * theta)
    m[j, k] = s * np.exp(1j * (theta + alpha))
    m[k, j] = -s * np.exp(1j * (theta - alpha))
    m[k, k] = c * np.exp(1j * theta)
    return m


def phase_matrix(dim: int, j: int, beta: float) -> np.ndarray:
    """Diagonal transfer matrix applying phase beta on mode j."""
    _check_indices(dim, Phase(j, beta))
    m = np.eye(dim, dtype=np.complex128)
    m[j, j] = np.exp(1j * beta)
    return m


def loss_matrix(dim: int, j: int, t: float) -> np.ndarray:
    """Diagonal transfer matrix applying amplitude transmission t on mode j."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"amplitude transmission must be in [0, 1], got {t}")
    _check_indices(dim, Loss(j, t))
    m = np.eye(dim, dtype=np.complex128)
    m[j, j] = t
    return m


def element_matrix(dim: int, el: OpticalElement) -> np.ndarray:
    if isinstance(el, Splitter):
        return splitter_matrix(dim, el.j, el.k, el.chi, el.alpha, el.theta)
    if isinstance(el, Phase):
        return phase_matrix(dim, el.j, el.beta)
    if isinstance(el, Loss):
        return loss_matrix(dim, el.j, el.t)
    if isinstance(el, Mirror):
        return phase_matrix(dim, el.j, el.psi)
    raise TypeError(f"not an optical element: {el!r}")


def compose(circuit: CircuitDescription) -> np.ndarray:
    """Total transfer matrix of a circuit.

    Elements are listed in physical order, so the result is
    M_n @ ... @ M_2 @ M_1 acting on column amplitude vectors.
    """
    m = np.eye(circuit.dim, dtype=np.complex128)
    for el in circuit.elements:
        m = element_matrix(circuit.dim, el) @ m
    return m


def apply(matrix: np.ndarray, vector: np.ndarray) -> np.ndarray:
    """Apply a transfer matrix to an amplitude vector."""
    matrix = np.asarray(matrix, dtype=np.complex128)
    vector = np.asarray(vector, dtype=np.complex128)
    if matrix.shape[1] != vector.shape[0]:
        raise ValueError(f"dimension mismatch: {matrix.shape} vs {vector.shape}")
    return matrix @ vector


def equal_up_to_global_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> bool:
    """True iff a = e^{i gamma} b for some single phase gamma.

    The candidate phase is read off at the largest-magnitude entry of b,
    then checked elementwise, so magnitude mismatches also return False.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) <= tol:
        return bool(np.max(np.abs(a)) <= tol)
    gamma = a[idx] / b[idx]
    if abs(gamma) < tol:
        return False
    gamma = gamma / abs(gamma)
    return bool(np.max(np.abs(a - gamma * b)) <= tol)


def equal_up_to_output_phases(a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> bool:
    """True iff a = D b for some diagonal unitary D.

    Within each row the phase of a_jk * conj(b_jk) must be constant over
    entries of significant magnitude, and magnitudes must agree to tol.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if np.max(np.abs(np.abs(a) - np.abs(b))) > tol:
        return False
    for j in range(a.shape[0]):
        sig = (np.abs(a[j]) > tol) & (np.abs(b[j]) > tol)
        if not np.any(sig):
            continue
        ratios = a[j, sig] / b[j, sig]
        ratios = ratios / np.abs(ratios)
        if np.max(np.abs(ratios - ratios[0])) > 10 * tol:
            return False
    return True


def chi_from_split_ratio(transmission: float, reflection: float,
                         tol: float = 1e-9) -> float:
    """Splitter angle from intensity split ratio (sqrt(T) = cos chi)."""
    if abs(transmission + reflection - 1.0) > tol:
        raise ValueError(f"split ratio must satisfy T + R = 1, got T + R = "
                         f"{transmission + reflection}")
    return float(np.arctan2(np.sqrt(reflection), np.sqrt(transmission)))


def unitarity_defect(matrix: np.ndarray) -> float:
    """Max elementwise deviation of M^dagger M from the identity."""
    matrix = np.asarray(matrix, dtype=np.complex128)
    return float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0]))))
