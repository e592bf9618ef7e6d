"""Kernel families applied to preference signals.

Two argument forms are supported:

* scalar: the kernel applied to the log-probability gap ``z`` (and, for the
  embedding term, to the dot-product ratio ``r = e_x.e_pos / e_x.e_neg``);
* vector: the kernel applied to a pair of embedding vectors.

``embed_kernel`` evaluates the embedding column of the kernelized hybrid loss
from the two dot products. It is the scalar kernel at ``r`` for every family
except Polynomial, whose embedding row is ``((a + c) / (b + c)) ** d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .core import _cho_solve, as_matrix, as_vector, cholesky_spd, sym_spd_eigvals
from .errors import DegenerateRatio, InvalidInput, InvalidKernelForm, RangeUndefined

RANGE_FRACTION = 0.01


@dataclass(frozen=True)
class Identity:
    """Plain DPO: z passes through unchanged, the embedding term is ln r."""

    name = "identity"


@dataclass(frozen=True)
class Polynomial:
    c: float = 1.0
    d: int = 2
    name = "polynomial"

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise InvalidInput(f"polynomial degree must be a positive integer, got {self.d!r}")


@dataclass(frozen=True)
class RBF:
    sigma: float = 1.0
    name = "rbf"

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidInput("RBF sigma must be positive")


@dataclass(frozen=True)
class Spectral:
    """Cosine eigenbasis ``phi_i(z) = cos(i z)`` with decay rates ``lambdas``."""

    lambdas: tuple[float, ...] = (1.0, 0.5)
    name = "spectral"

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(x) for x in self.lambdas))
        if len(self.lambdas) == 0 or any(not lam > 0 for lam in self.lambdas):
            raise InvalidInput("spectral lambdas must be a nonempty list of positive reals")

    @property
    def p(self) -> int:
        return len(self.lambdas)


@dataclass(frozen=True)
class MahalanobisScalar:
    """Shifted Gaussian on the scalar signals: (mu, sigma) for z, (mu', sigma') for r."""

    mu: float = 0.0
    sigma: float = 1.0
    mu_prime: float = 1.0
    sigma_prime: float = 1.0
    name = "mahalanobis"

    def __post_init__(self):
        if not (self.sigma > 0 and self.sigma_prime > 0):
            raise InvalidInput("Mahalanobis sigma and sigma_prime must be positive")


@dataclass(frozen=True, eq=False)
class MahalanobisVector:
    cov: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False)
    name = "mahalanobis_vector"

    def __post_init__(self):
        cov = as_matrix(self.cov, "Sigma")
        cov.setflags(write=False)
        chol = cholesky_spd(cov)
        chol.setflags(write=False)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_chol", chol)

    def solve(self, v: np.ndarray) -> np.ndarray:
        return _cho_solve(self._chol, v)


KernelSpec = Union[Identity, Polynomial, RBF, Spectral, MahalanobisScalar, MahalanobisVector]


@dataclass(frozen=True)
class EffectiveRange:
    r: float
    r_major: float | None = None
    r_minor: float | None = None


def spectral_basis(i: int, z: float, p: int | None = None) -> tuple[float, float]:
    if i < 1 or (p is not None and i > p):
        raise InvalidInput(f"basis index {i} out of range 1..{p}")
    return math.cos(i * z), -i * math.sin(i * z)


def _spectral_value(lambdas, z: float) -> float:
    return math.fsum(math.exp(-lam * z * z) * math.cos(i * z) for i, lam in enumerate(lambdas, 1))


def _spectral_deriv(lambdas, z: float) -> float:
    total = 0.0
    for i, lam in enumerate(lambdas, 1):
        phi, dphi = math.cos(i * z), -i * math.sin(i * z)
        total += math.exp(-lam * z * z) * (-2.0 * lam * z * phi + dphi)
    return total


def scalar_kernel(spec: KernelSpec, z: float) -> float:
    if isinstance(spec, Identity):
        return z
    if isinstance(spec, Polynomial):
        return (z + spec.c) ** spec.d
    if isinstance(spec, RBF):
        return math.exp(-z * z / (2.0 * spec.sigma**2))
    if isinstance(spec, Spectral):
        return _spectral_value(spec.lambdas, z)
    if isinstance(spec, MahalanobisScalar):
        return math.exp(-((z - spec.mu) ** 2) / (2.0 * spec.sigma**2))
    raise InvalidKernelForm(f"{type(spec).__name__} has no scalar form")


def scalar_kernel_deriv(spec: KernelSpec, z: float) -> float:
    """d kappa / dz for the scalar form."""
    if isinstance(spec, Identity):
        return 1.0
    if isinstance(spec, Polynomial):
        return spec.d * (z + spec.c) ** (spec.d - 1)
    if isinstance(spec, RBF):
        s2 = spec.sigma**2
        return -z / s2 * math.exp(-z * z / (2.0 * s2))
    if isinstance(spec, Spectral):
        return _spectral_deriv(spec.lambdas, z)
    if isinstance(spec, MahalanobisScalar):
        s2 = spec.sigma**2
        return -(z - spec.mu) / s2 * math.exp(-((z - spec.mu) ** 2) / (2.0 * s2))
    raise InvalidKernelForm(f"{type(spec).__name__} has no scalar form")


def _ratio(a: float, b: float) -> float:
    if b == 0.0:
        raise DegenerateRatio("dot product with the rejected embedding is zero")
    return a / b


def embed_kernel(spec: KernelSpec, dot_pos: float, dot_neg: float) -> float:
    """Embedding term of the kernelized hybrid loss from the two dot products."""
    if isinstance(spec, Identity):
        r = _ratio(dot_pos, dot_neg)
        if r <= 0:
            raise DegenerateRatio(f"embedding ratio {r!r} is not positive; ln r undefined")
        return math.log(r)
    if isinstance(spec, Polynomial):
        den = dot_neg + spec.c
        if den == 0.0:
            raise DegenerateRatio("dot_neg + c is zero in the polynomial embedding row")
        return ((dot_pos + spec.c) / den) ** spec.d
    if isinstance(spec, MahalanobisScalar):
        r = _ratio(dot_pos, dot_neg)
        return math.exp(-((r - spec.mu_prime) ** 2) / (2.0 * spec.sigma_prime**2))
    return scalar_kernel(spec, _ratio(dot_pos, dot_neg))


def embed_kernel_grad(spec: KernelSpec, dot_pos: float, dot_neg: float) -> tuple[float, float]:
    """Partial derivatives of ``embed_kernel`` w.r.t. (dot_pos, dot_neg)."""
    if isinstance(spec, Polynomial):
        den = dot_neg + spec.c
        if den == 0.0:
            raise DegenerateRatio("dot_neg + c is zero in the polynomial embedding row")
        s = (dot_pos + spec.c) / den
        k = spec.d * s ** (spec.d - 1)
        return k / den, -k * s / den
    r = _ratio(dot_pos, dot_neg)
    if isinstance(spec, Identity):
        if r <= 0:
            raise DegenerateRatio(f"embedding ratio {r!r} is not positive; ln r undefined")
        return 1.0 / dot_pos, -1.0 / dot_neg
    if isinstance(spec, MahalanobisScalar):
        s2 = spec.sigma_prime**2
        dk = -(r - spec.mu_prime) / s2 * math.exp(-((r - spec.mu_prime) ** 2) / (2.0 * s2))
    else:
        dk = scalar_kernel_deriv(spec, r)
    # quotient rule: dr/da = 1/b, dr/db = -a/b^2
    return dk / dot_neg, -dk * r / dot_neg


def vector_kernel(spec: KernelSpec, u, v) -> float:
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    if u.size != v.size:
        raise InvalidInput(f"dimension mismatch: {u.size} vs {v.size}")
    if isinstance(spec, Polynomial):
        return float(u @ v + spec.c) ** spec.d
    if isinstance(spec, RBF):
        diff = u - v
        return math.exp(-float(diff @ diff) / (2.0 * spec.sigma**2))
    if isinstance(spec, Spectral):
        diff = u - v
        dist2 = float(diff @ diff)
        dot = float(u @ v)
        return math.fsum(math.exp(-lam * dist2) * math.cos(i * dot) for i, lam in enumerate(spec.lambdas, 1))
    if isinstance(spec, MahalanobisVector):
        if spec.cov.shape[0] != u.size:
            raise InvalidInput(f"Sigma is {spec.cov.shape}, embeddings have dim {u.size}")
        diff = u - v
        return math.exp(-float(diff @ spec.solve(diff)) / 2.0)
    raise InvalidKernelForm(f"{type(spec).__name__} has no vector form")


def effective_range(spec: KernelSpec) -> EffectiveRange:
    """Distance at which the kernel decays to 1% of its self-similarity.

    Polynomial uses a unit-norm reference point, so kappa(u, u) = (1 + c)^d.
    """
    if isinstance(spec, RBF):
        return EffectiveRange(math.sqrt(2.0 * spec.sigma**2 * math.log(1.0 / RANGE_FRACTION)))
    if isinstance(spec, Polynomial):
        self_value = (1.0 + spec.c) ** spec.d
        return EffectiveRange((RANGE_FRACTION / self_value) ** (1.0 / spec.d))
    if isinstance(spec, MahalanobisVector):
        eig = sym_spd_eigvals(spec.cov)
        scale = math.sqrt(2.0 * math.log(1.0 / RANGE_FRACTION))
        major, minor = math.sqrt(eig[0]) * scale, math.sqrt(eig[-1]) * scale
        return EffectiveRange(major, major, minor)
    if isinstance(spec, Spectral):
        raise RangeUndefined("spectral range is defined through graph connectivity, not a closed form")
    raise RangeUndefined(f"no effective range for {type(spec).__name__}")


def kernel_to_dict(spec: KernelSpec) -> dict:
    if isinstance(spec, Identity):
        return {"type": "identity"}
    if isinstance(spec, Polynomial):
        return {"type": "polynomial", "c": spec.c, "d": spec.d}
    if isinstance(spec, RBF):
        return {"type": "rbf", "sigma": spec.sigma}
    if isinstance(spec, Spectral):
        return {"type": "spectral", "lambdas": list(spec.lambdas)}
    if isinstance(spec, MahalanobisScalar):
        return {
            "type": "mahalanobis",
            "mu": spec.mu,
            "sigma": spec.sigma,
            "mu_prime": spec.mu_prime,
            "sigma_prime": spec.sigma_prime,
        }
    if isinstance(spec, MahalanobisVector):
        return {"type": "mahalanobis_vector", "cov": spec.cov.tolist()}
    raise InvalidInput(f"cannot serialize {spec!r}")
