"""
Multiplicative factors translating score-space measure into label-space measure.

FactorSpec - symbolic description of a factor (l1, lp, high-dimensional lp, 0-1, atoms, unknown).
factor_value(spec, r) - the factor at a score r.
factor_antiderivative(spec, r) - F(r) with F(0) = 0 and F' equal to the factor (continuous factors).
factor_support(spec) - the score space the factor lives on.
factor_atoms(spec) - score atoms and their weights (discrete factors).
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import DomainError, UnsupportedFactorError
from ..special.special_functions import log_gamma


class FactorKind(Enum):
    L1 = "l1"
    LP = "lp"
    LP_HIGH_DIM = "lp-high-dim"
    ZERO_ONE = "zero-one"
    ATOMS = "atoms"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class FactorSupport:
    """
    Score space of a multiplicative factor

    Args:
        lower, float: Lower end of the score space
        upper, float: Upper end of the score space
        measure_kind, str: 'continuous' or 'discrete'
        atoms, tuple: Score atoms when the measure is discrete
    """
    lower: float
    upper: float
    measure_kind: str
    atoms: tuple = ()

    def __post_init__(self):
        if self.lower > self.upper:
            raise DomainError(f"Support lower end {self.lower} exceeds upper end {self.upper}")

    @property
    def is_discrete(self):
        return self.measure_kind == "discrete"

    @property
    def is_unbounded_above(self):
        return math.isinf(self.upper)


@dataclass(frozen=True)
class FactorSpec:
    """
    Symbolic multiplicative factor

    Args:
        kind, FactorKind: The factor family
        p, float: Loss exponent for the lp families (p >= 1)
        m, int: Label dimension for the high-dimensional lp family (m >= 1)
        num_labels, int: Number of labels for the 0-1 family (>= 2)
        atom_values, tuple: Strictly increasing score atoms for the atoms family
        atom_weights, tuple: Non-negative weight per atom for the atoms family
    """
    kind: FactorKind
    p: float = 1.0
    m: int = 1
    num_labels: int = 2
    atom_values: tuple = ()
    atom_weights: tuple = ()

    def __post_init__(self):
        if self.kind in (FactorKind.LP, FactorKind.LP_HIGH_DIM) and not self.p >= 1.0:
            raise DomainError(f"lp factor needs p >= 1, got {self.p}")
        if self.kind == FactorKind.LP_HIGH_DIM and self.m < 1:
            raise DomainError(f"High-dimensional lp factor needs m >= 1, got {self.m}")
        if self.kind == FactorKind.ZERO_ONE and self.num_labels < 2:
            raise DomainError(f"0-1 factor needs at least 2 labels, got {self.num_labels}")
        if self.kind == FactorKind.ATOMS:
            values = np.asarray(self.atom_values, dtype=float)
            weights = np.asarray(self.atom_weights, dtype=float)
            if values.size == 0 or values.shape != weights.shape:
                raise DomainError("Atoms factor needs one weight per atom and at least one atom")
            if np.any(np.diff(values) <= 0):
                raise DomainError("Atom values must be strictly increasing")
            if np.any(weights < 0):
                raise DomainError("Atom weights must be non-negative")

    @classmethod
    def l1(cls):
        return cls(FactorKind.L1)

    @classmethod
    def lp(cls, p):
        return cls(FactorKind.LP, p=float(p))

    @classmethod
    def lp_high_dim(cls, p, m):
        return cls(FactorKind.LP_HIGH_DIM, p=float(p), m=int(m))

    @classmethod
    def zero_one(cls, num_labels):
        return cls(FactorKind.ZERO_ONE, num_labels=int(num_labels))

    @classmethod
    def atoms(cls, values, weights):
        return cls(FactorKind.ATOMS,
                   atom_values=tuple(float(v) for v in values),
                   atom_weights=tuple(float(w) for w in weights))

    @classmethod
    def unknown(cls):
        return cls(FactorKind.UNKNOWN)

    @classmethod
    def parse(cls, text):
        """
        Parse a factor from its command line form

        Args:
            text, str: One of 'l1', 'lp:<p>', 'lp:<p>:<m>', 'zero-one:<L>', 'unknown'

        Returns:
            FactorSpec: The parsed factor
        """
        parts = text.strip().lower().split(":")
        try:
            if parts == ["l1"]:
                return cls.l1()
            if parts == ["unknown"]:
                return cls.unknown()
            if parts[0] == "lp" and len(parts) == 2:
                return cls.lp(float(parts[1]))
            if parts[0] == "lp" and len(parts) == 3:
                return cls.lp_high_dim(float(parts[1]), int(parts[2]))
            if parts[0] == "zero-one" and len(parts) == 2:
                return cls.zero_one(int(parts[1]))
        except ValueError as error:
            raise DomainError(f"Invalid factor '{text}': {error}") from error
        raise DomainError(f"Invalid factor '{text}', expected l1, lp:<p>, lp:<p>:<m>, zero-one:<L> or unknown")

    @property
    def is_known(self):
        return self.kind != FactorKind.UNKNOWN

    @property
    def is_discrete(self):
        return self.kind in (FactorKind.ZERO_ONE, FactorKind.ATOMS)

    def __str__(self):
        if self.kind == FactorKind.LP:
            return f"lp:{self.p:g}"
        if self.kind == FactorKind.LP_HIGH_DIM:
            return f"lp:{self.p:g}:{self.m}"
        if self.kind == FactorKind.ZERO_ONE:
            return f"zero-one:{self.num_labels}"
        if self.kind == FactorKind.ATOMS:
            return f"atoms({len(self.atom_values)})"
        return self.kind.value


def _lp_ball_constant(p, m):
    # Volume of the unit m-dimensional lp ball, (2 Gamma(1/p + 1))^m / Gamma(m/p + 1)
    return math.exp(m * (math.log(2.0) + log_gamma(1.0 / p + 1.0)) - log_gamma(m / p + 1.0))


def _require_known(spec, operation):
    if not spec.is_known:
        raise UnsupportedFactorError(f"{operation} is not available for an unknown multiplicative factor")


def factor_atoms(spec):
    """
    Score atoms and weights of a discrete factor

    Args:
        spec, FactorSpec: A 0-1 or atoms factor

    Returns:
        tuple: (atoms, weights) as numpy arrays
    """
    if spec.kind == FactorKind.ZERO_ONE:
        return np.array([0.0, 1.0]), np.array([1.0, spec.num_labels - 1.0])
    if spec.kind == FactorKind.ATOMS:
        return np.asarray(spec.atom_values, dtype=float), np.asarray(spec.atom_weights, dtype=float)
    raise UnsupportedFactorError(f"Factor {spec} has no score atoms")


def factor_value(spec, r):
    """
    Evaluate the multiplicative factor at a score

    Args:
        spec, FactorSpec: The factor (not unknown)
        r, float: Score inside the factor's support

    Returns:
        float: The factor value (may be +inf for lp at r = 0 when p > 1)
    """
    _require_known(spec, "Factor evaluation")

    if spec.is_discrete:
        atoms, weights = factor_atoms(spec)
        matches = np.flatnonzero(atoms == r)
        if matches.size == 0:
            raise DomainError(f"Score {r} is not an atom of factor {spec}")
        return float(weights[matches[0]])

    if r < 0:
        raise DomainError(f"Factor {spec} is defined for r >= 0, got {r}")

    if spec.kind == FactorKind.L1:
        return 2.0

    exponent = spec.m / spec.p - 1.0 if spec.kind == FactorKind.LP_HIGH_DIM else 1.0 / spec.p - 1.0
    if r == 0 and exponent < 0:
        return math.inf
    if spec.kind == FactorKind.LP:
        return 2.0 * r**exponent / spec.p
    return _lp_ball_constant(spec.p, spec.m) * (spec.m / spec.p) * r**exponent


def factor_antiderivative(spec, r):
    """
    Antiderivative of a continuous factor, vanishing at 0

    Args:
        spec, FactorSpec: An l1, lp or high-dimensional lp factor
        r, float or np.ndarray: Score(s) >= 0, +inf allowed

    Returns:
        float or np.ndarray: F(r)
    """
    if not spec.is_known or spec.is_discrete:
        raise UnsupportedFactorError(f"Factor {spec} has no antiderivative")

    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError(f"Antiderivative of factor {spec} is defined for r >= 0")

    if spec.kind == FactorKind.L1:
        out = 2.0 * r
    elif spec.kind == FactorKind.LP:
        out = 2.0 * np.power(r, 1.0 / spec.p)
    else:
        out = _lp_ball_constant(spec.p, spec.m) * np.power(r, spec.m / spec.p)

    if out.ndim == 0:
        return float(out)
    return out


def factor_support(spec):
    """
    Score space of a factor

    Args:
        spec, FactorSpec: Any factor

    Returns:
        FactorSupport: [0, inf) for the lp families, the atoms for discrete factors,
            and the whole real line for an unknown factor
    """
    if spec.is_discrete:
        atoms, _ = factor_atoms(spec)
        return FactorSupport(float(atoms[0]), float(atoms[-1]), "discrete", tuple(float(a) for a in atoms))
    if spec.kind == FactorKind.UNKNOWN:
        return FactorSupport(-math.inf, math.inf, "continuous")
    return FactorSupport(0.0, math.inf, "continuous")


if __name__ == "__main__":
    # Example usage
    print(factor_value(FactorSpec.lp_high_dim(1, 2), 3.0))  # Output: 12.0
    print(factor_value(FactorSpec.lp_high_dim(2, 2), 3.0))  # Output: 3.14159...
    print(factor_antiderivative(FactorSpec.lp(2), 4.0))  # Output: 4.0
