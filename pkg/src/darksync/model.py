"""Spin-chain Hamiltonians and non-local lowering dissipators.

All energies and rates are in units of the decay rate ``gamma``; times are in
units of ``1/gamma``.  The Hamiltonian is the anisotropic Heisenberg (XYZ)
exchange summed over nearest-neighbour bonds::

    H = sum_<j,l> Jx sx_j sx_l + Jy sy_j sy_l + Jz sz_j sz_l

and every dissipator is a weighted sum of single-site lowering operators,
``O = sqrt(rate) * sum_s w_s sigma^-_s``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .operators import EPS_HERM, embed, is_hermitian, pauli

TOPOLOGIES = ("ring", "chain")


def _complex_to_json(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _complex_from_json(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValidationError(f"complex weight must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


@dataclass(frozen=True)
class DissipatorSpec:
    """Jump operator ``sqrt(rate) * sum_s weights[s] * sigma^-_{sites[s]}``."""

    sites: tuple[int, ...]
    weights: tuple[complex, ...] = ()
    rate: float = 1.0

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        weights = tuple(complex(w) for w in self.weights) if self.weights else (1.0 + 0j,) * len(sites)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "rate", float(self.rate))
        errors = []
        if not sites:
            errors.append("sites: at least one site required")
        if len(weights) != len(sites):
            errors.append(f"weights: expected {len(sites)} weights, got {len(weights)}")
        if len(set(sites)) != len(sites):
            errors.append(f"sites: duplicate site in {sites}")
        if not self.rate >= 0:
            errors.append(f"rate: must be >= 0, got {self.rate}")
        if errors:
            raise ValidationError("; ".join(errors), errors)

    def to_dict(self) -> dict:
        return {
            "sites": list(self.sites),
            "weights": [_complex_to_json(w) for w in self.weights],
            "rate": self.rate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DissipatorSpec":
        weights = tuple(_complex_from_json(w) for w in d.get("weights", ()))
        return cls(sites=tuple(d["sites"]), weights=weights, rate=d.get("rate", 1.0))


@dataclass(frozen=True)
class ModelSpec:
    n_spins: int = 4
    jx: float = 1.0
    jy: float = 1.0
    jz: float = 0.9
    gamma: float = 1.0
    topology: str = "ring"
    dissipators: tuple[DissipatorSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "dissipators", tuple(self.dissipators))
        errors = []
        if int(self.n_spins) != self.n_spins or self.n_spins < 2:
            errors.append(f"n_spins: must be an integer >= 2, got {self.n_spins}")
        if not self.gamma > 0:
            errors.append(f"gamma: must be > 0, got {self.gamma}")
        if self.topology not in TOPOLOGIES:
            errors.append(f"topology: must be one of {TOPOLOGIES}, got {self.topology!r}")
        for name in ("jx", "jy", "jz"):
            if not np.isfinite(getattr(self, name)):
                errors.append(f"{name}: must be finite")
        for k, d in enumerate(self.dissipators):
            for s in d.sites:
                if not 1 <= s <= self.n_spins:
                    errors.append(f"dissipators[{k}].sites: site {s} out of range 1..{self.n_spins}")
        if errors:
            raise ValidationError("; ".join(errors), errors)

    @property
    def bonds(self) -> list[tuple[int, int]]:
        """Nearest-neighbour pairs (j, l), 1-based."""
        n = self.n_spins
        pairs = [(j, j + 1) for j in range(1, n)]
        if self.topology == "ring" and n > 2:
            pairs.append((n, 1))
        return pairs

    def to_dict(self) -> dict:
        return {
            "n_spins": self.n_spins,
            "jx": self.jx,
            "jy": self.jy,
            "jz": self.jz,
            "gamma": self.gamma,
            "topology": self.topology,
            "dissipators": [d.to_dict() for d in self.dissipators],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        known = {"n_spins", "jx", "jy", "jz", "gamma", "topology", "dissipators"}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"model: unknown fields {sorted(unknown)}",
                                  [f"model.{k}: unknown field" for k in sorted(unknown)])
        kwargs = {k: d[k] for k in known - {"dissipators"} if k in d}
        diss = tuple(DissipatorSpec.from_dict(x) for x in d.get("dissipators", ()))
        return cls(dissipators=diss, **kwargs)


@dataclass(frozen=True, eq=False)
class Lindbladian:
    """Hamiltonian plus jump operators; the input to every solver."""

    H: np.ndarray
    jumps: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        H = np.array(self.H, dtype=complex)
        jumps = tuple(np.array(o, dtype=complex) for o in self.jumps)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValidationError(f"H must be square, got shape {H.shape}")
        if not is_hermitian(H, EPS_HERM):
            raise ValidationError("H is not Hermitian within tolerance")
        for k, o in enumerate(jumps):
            if o.shape != H.shape:
                raise ValidationError(f"jump {k} has shape {o.shape}, expected {H.shape}")
        for a in (H, *jumps):
            a.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "jumps", jumps)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def n_jumps(self) -> int:
        return len(self.jumps)

    def without_dissipation(self) -> "Lindbladian":
        return Lindbladian(self.H, ())


def build_hamiltonian(spec: ModelSpec) -> np.ndarray:
    n = spec.n_spins
    dim = 2**n
    H = np.zeros((dim, dim), dtype=complex)
    for axis, J in (("x", spec.jx), ("y", spec.jy), ("z", spec.jz)):
        if J == 0:
            continue
        s = pauli(axis)
        for j, l in spec.bonds:
            H += J * (embed(s, j, n) @ embed(s, l, n))
    return H


def build_jumps(spec: ModelSpec) -> list[np.ndarray]:
    n = spec.n_spins
    lower = pauli("minus")
    jumps = []
    for d in spec.dissipators:
        O = np.zeros((2**n, 2**n), dtype=complex)
        for s, w in zip(d.sites, d.weights):
            if not 1 <= s <= n:
                raise ValidationError(f"dissipator site {s} out of range 1..{n}")
            O += w * embed(lower, s, n)
        jumps.append(np.sqrt(d.rate) * O)
    return jumps


def build_lindbladian(spec: ModelSpec) -> Lindbladian:
    return Lindbladian(build_hamiltonian(spec), tuple(build_jumps(spec)))


_PRESET_COUPLINGS = {
    "xxz": (1.0, 1.0, 0.9),
    "xyz": (0.8, 1.0, 0.9),
}


def preset(kind: str, topology: str = "ring", gamma: float = 1.0) -> ModelSpec:
    """Four spins with dissipators on the next-nearest-neighbour pairs (1,3) and (2,4).

    ``xxz``: Jx = Jy = 1, Jz = 0.9.  ``xyz``: Jx = 0.8, Jy = 1, Jz = 0.9.
    The ring topology is the one whose Liouvillian has the +-3.6i pair.
    """
    try:
        jx, jy, jz = _PRESET_COUPLINGS[kind]
    except KeyError:
        raise ValidationError(f"unknown preset {kind!r}; expected one of {sorted(_PRESET_COUPLINGS)}") from None
    diss = (
        DissipatorSpec(sites=(1, 3), rate=gamma),
        DissipatorSpec(sites=(2, 4), rate=gamma),
    )
    return ModelSpec(n_spins=4, jx=jx, jy=jy, jz=jz, gamma=gamma, topology=topology, dissipators=diss)


def total_sz(n_spins: int) -> np.ndarray:
    sz = pauli("z")
    return sum(embed(sz, j, n_spins) for j in range(1, n_spins + 1))
