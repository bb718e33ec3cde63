# -*- coding: utf-8 -*-
""" Floquet chain model: couplings, coherent error terms, initial states and seeds

One Floquet period is U = U3 U2 U1 with
    U1 = exp(i pi/2 (1 - epsilon) sum_i X_i)        imperfect global spin flip
    U2 = exp(-i sum_i J_i Z_i Z_i+1)                open-chain Ising layer
    U3 = exp(-i (sum_i b_i Z_i + sum_k c_k P_k))   coherent gate errors
"""
import json
import logging
import zlib
from dataclasses import dataclass, field, replace
from functools import reduce
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from dtc_floquet.errors import InvalidConfigError

logger = logging.getLogger(__name__)

J_MIN = np.pi / 8
J_MAX = 3 * np.pi / 8
DEFAULT_COHERENT_AMPLITUDE = np.pi / 25

INITIAL_KINDS = ["bitstring", "polarized", "neel", "random-bit"]

_PAULI_LETTERS = "IXYZ"
_PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Dominant post-gate Hamiltonian terms of a 3-qubit Floquet step, IXI listed once
_TOMOGRAPHY_TERMS = [
    ("IIX", 0.118),
    ("IIY", 0.085),
    ("IIZ", 0.126),
    ("IXI", 0.023),
    ("IYI", 0.012),
    ("IZI", 0.033),
    ("IZX", 0.038),
    ("IZY", 0.033),
    ("XII", 0.024),
    ("YZI", 0.023),
    ("ZII", 0.037),
    ("ZYI", 0.017),
]


def _tag_key(tag: Union[str, int]) -> int:
    if isinstance(tag, str):
        return zlib.crc32(tag.encode("utf-8"))
    return int(tag)


def derive_seed_sequence(root_seed: int, *tags: Union[str, int]) -> np.random.SeedSequence:
    """Seed sequence of a sub-stream identified by role tags

    Args:
        root_seed (int): experiment root seed
        tags (str or int): role tags, e.g. ("trajectory", 12)

    Returns:
        np.random.SeedSequence: reproducible seed sequence
    """
    return np.random.SeedSequence(
        entropy=int(root_seed), spawn_key=tuple(_tag_key(tag) for tag in tags)
    )


def derive_rng(root_seed: int, *tags: Union[str, int]) -> np.random.Generator:
    return np.random.default_rng(derive_seed_sequence(root_seed, *tags))


def derive_seed(root_seed: int, *tags: Union[str, int]) -> int:
    """64-bit integer seed derived from the root seed and role tags"""
    state = derive_seed_sequence(root_seed, *tags).generate_state(1, dtype=np.uint64)
    return int(state[0])


@dataclass(frozen=True)
class PauliString:
    """Pauli product over the chain, e.g. "IIX" is I_0 I_1 X_2"""

    letters: str

    def __post_init__(self):
        letters = self.letters.upper()
        if not letters or any(letter not in _PAULI_LETTERS for letter in letters):
            raise InvalidConfigError(f"Pauli string {self.letters!r} is not valid!")
        object.__setattr__(self, "letters", letters)

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(letter != "I" for letter in self.letters)

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(i for i, letter in enumerate(self.letters) if letter != "I")

    @property
    def is_diagonal(self) -> bool:
        return all(letter in "IZ" for letter in self.letters)

    @property
    def index(self) -> int:
        """Position in the base-4 ordered Pauli basis (qubit 0 most significant)"""
        return reduce(lambda acc, letter: 4 * acc + _PAULI_LETTERS.index(letter), self.letters, 0)

    @classmethod
    def from_index(cls, index: int, n_qubits: int) -> "PauliString":
        letters = []
        for _ in range(n_qubits):
            index, digit = divmod(index, 4)
            letters.append(_PAULI_LETTERS[digit])
        return cls("".join(reversed(letters)))

    def matrix(self) -> np.ndarray:
        return reduce(np.kron, (_PAULI_MATRICES[letter] for letter in self.letters))

    def sparse_matrix(self) -> sparse.csr_matrix:
        return reduce(
            lambda acc, letter: sparse.kron(acc, _PAULI_MATRICES[letter], format="csr"),
            self.letters[1:],
            sparse.csr_matrix(_PAULI_MATRICES[self.letters[0]]),
        )

    def diagonal(self) -> np.ndarray:
        """+-1 diagonal of a Z-type string in the computational basis"""
        if not self.is_diagonal:
            raise InvalidConfigError(f"{self.letters} is not diagonal")
        return reduce(
            np.kron,
            (np.array([1.0, -1.0]) if letter == "Z" else np.ones(2)
                for letter in self.letters),
        )

    def __str__(self):
        return self.letters


@dataclass(frozen=True)
class ChainConfig:
    """Full definition of the Floquet model on an open chain"""

    n_qubits: int
    epsilon: float
    couplings: Tuple[float, ...]
    z_fields: Tuple[float, ...]
    extra_pauli_terms: Tuple[Tuple[PauliString, float], ...] = field(default=())
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "couplings", tuple(float(j) for j in self.couplings))
        object.__setattr__(self, "z_fields", tuple(float(b) for b in self.z_fields))
        object.__setattr__(
            self,
            "extra_pauli_terms",
            tuple(
                (term if isinstance(term, PauliString) else PauliString(term), float(coeff))
                for term, coeff in self.extra_pauli_terms
            ),
        )
        if int(self.n_qubits) < 1:
            raise InvalidConfigError(f"n_qubits={self.n_qubits} must be positive")
        if not 0.0 <= self.epsilon <= 1.0:
            raise InvalidConfigError(f"epsilon={self.epsilon} is not in [0, 1]")
        if len(self.couplings) != self.n_qubits - 1:
            raise InvalidConfigError(
                f"{len(self.couplings)} couplings for an open chain of {self.n_qubits} qubits"
            )
        if len(self.z_fields) != self.n_qubits:
            raise InvalidConfigError(
                f"{len(self.z_fields)} z fields for {self.n_qubits} qubits"
            )
        for term, _ in self.extra_pauli_terms:
            if term.n_qubits != self.n_qubits:
                raise InvalidConfigError(
                    f"Pauli term {term} does not act on {self.n_qubits} sites"
                )
            if term.weight < 1:
                raise InvalidConfigError("Identity is not a valid coherent error term")

    @property
    def is_ideal(self) -> bool:
        """True when no coherent error term is present (flip and Ising layers only)"""
        return not any(self.z_fields) and not any(c for _, c in self.extra_pauli_terms)

    def with_epsilon(self, epsilon: float) -> "ChainConfig":
        return replace(self, epsilon=float(epsilon))

    def without_errors(self) -> "ChainConfig":
        return replace(self, z_fields=(0.0,) * self.n_qubits, extra_pauli_terms=())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_qubits": self.n_qubits,
            "epsilon": self.epsilon,
            "couplings": list(self.couplings),
            "z_fields": list(self.z_fields),
            "extra_pauli_terms": [[str(t), c] for t, c in self.extra_pauli_terms],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ChainConfig":
        try:
            return cls(
                n_qubits=int(data["n_qubits"]),
                epsilon=float(data["epsilon"]),
                couplings=data["couplings"],
                z_fields=data.get("z_fields", [0.0] * int(data["n_qubits"])),
                extra_pauli_terms=[
                    (PauliString(t), c) for t, c in data.get("extra_pauli_terms", [])
                ],
                seed=int(data.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfigError(f"Chain config document: {exc!r}") from exc

    def to_json(self, filepath: Path) -> None:
        filepath.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def from_json(cls, filepath: Path) -> "ChainConfig":
        return cls.from_dict(json.loads(filepath.read_text()))


@dataclass(frozen=True)
class InitialState:
    """Computational-basis product state; bit 0 is Z=+1"""

    kind: str
    bits: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        if self.kind not in INITIAL_KINDS:
            raise InvalidConfigError(f"Initial state kind {self.kind} not in {INITIAL_KINDS}")
        if any(b not in (0, 1) for b in self.bits):
            raise InvalidConfigError("Initial bits must be 0 or 1")
        if self.kind == "polarized" and len(set(self.bits)) > 1:
            raise InvalidConfigError("Polarized state requires equal bits")
        if self.kind == "neel" and any(
            a == b for a, b in zip(self.bits, self.bits[1:])
        ):
            raise InvalidConfigError("Neel state requires alternating bits")

    @property
    def n_qubits(self) -> int:
        return len(self.bits)

    @property
    def z_signs(self) -> np.ndarray:
        """Ideal <Z_i(0)> of the product state"""
        return 1.0 - 2.0 * np.asarray(self.bits, dtype=float)

    def __str__(self):
        return f"{self.kind}:{''.join(str(b) for b in self.bits)}"


def sample_disorder(n_qubits: int, seed: int, epsilon: float = 0.0) -> ChainConfig:
    """Draw J_i uniformly from [pi/8, 3pi/8] on an open chain

    Args:
        n_qubits (int): chain length, at least 2
        seed (int): disorder seed
        epsilon (float, optional): flip imperfection. Defaults to 0.0.

    Raises:
        InvalidConfigError: if the chain has less than 2 qubits

    Returns:
        ChainConfig: disordered ideal model (no coherent errors)
    """
    if n_qubits < 2:
        raise InvalidConfigError(f"Disorder needs at least 2 qubits, got {n_qubits}")
    couplings = derive_rng(seed, "disorder").uniform(J_MIN, J_MAX, size=n_qubits - 1)
    return ChainConfig(
        n_qubits=n_qubits,
        epsilon=epsilon,
        couplings=tuple(couplings),
        z_fields=(0.0,) * n_qubits,
        seed=seed,
    )


def uniform_disorder(
    n_qubits: int, value: float = np.pi / 4, epsilon: float = 0.0, seed: int = 0
) -> ChainConfig:
    """Clean chain with every coupling equal to the disorder mean"""
    return ChainConfig(
        n_qubits=n_qubits,
        epsilon=epsilon,
        couplings=(value,) * (n_qubits - 1),
        z_fields=(0.0,) * n_qubits,
        seed=seed,
    )


def sample_coherent_errors(
    n_qubits: int, amplitude: float = DEFAULT_COHERENT_AMPLITUDE, seed: int = 0
) -> Tuple[float, ...]:
    """Longitudinal error fields b_i drawn uniformly from [-amplitude, amplitude]"""
    if amplitude < 0:
        raise InvalidConfigError(f"Coherent error amplitude {amplitude} is negative")
    if amplitude == 0:
        return (0.0,) * n_qubits
    fields = derive_rng(seed, "coherent-errors").uniform(-amplitude, amplitude, n_qubits)
    return tuple(float(b) for b in fields)


def make_initial(
    kind: str, n_qubits: int, seed: int = 0, bits: Optional[Sequence[int]] = None
) -> InitialState:
    """Materialize the bits of an initial product state

    Args:
        kind (str): one of bitstring, polarized, neel, random-bit
        n_qubits (int): number of qubits
        seed (int, optional): seed used by random-bit. Defaults to 0.
        bits (Sequence[int], optional): explicit bits for the bitstring kind.

    Returns:
        InitialState: the product state
    """
    if kind == "polarized":
        values: Iterable[int] = [0] * n_qubits
    elif kind == "neel":
        values = [i % 2 for i in range(n_qubits)]
    elif kind == "random-bit":
        values = derive_rng(seed, "initial-bits").integers(0, 2, size=n_qubits)
    elif kind == "bitstring":
        if bits is None or len(bits) != n_qubits:
            raise InvalidConfigError(f"bitstring kind requires {n_qubits} explicit bits")
        values = bits
    else:
        raise InvalidConfigError(f"Initial state kind {kind} not in {INITIAL_KINDS}")
    return InitialState(kind=kind, bits=tuple(int(b) for b in values))


def tomography_reference_terms() -> List[Tuple[PauliString, float]]:
    """Coherent Pauli terms measured by 3-qubit process tomography"""
    return [(PauliString(label), coeff) for label, coeff in _TOMOGRAPHY_TERMS]
