"""Complex vector geometry on the unit sphere of C^M.

Vectors are numpy arrays whose last axis is the dimension ``M``; every
function broadcasts over leading axes, so a batch of ``n`` vectors is just
an ``(n, M)`` array.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidOperandsError
from .stats import Estimate, mean_se

ZERO_TOL = 1e-12
UNIT_TOL = 1e-9


def as_cvec(v) -> np.ndarray:
    a = np.asarray(v, dtype=complex)
    if a.ndim == 0:
        raise InvalidOperandsError("expected a vector")
    if not np.all(np.isfinite(a)):
        raise InvalidOperandsError("vector has non-finite entries")
    return a


def inner(a, b) -> np.ndarray:
    """``a^H b`` along the last axis."""
    return np.sum(np.conj(a) * b, axis=-1)


def norm2(v) -> np.ndarray:
    """Squared Euclidean norm along the last axis."""
    v = np.asarray(v)
    return np.sum(v.real**2 + v.imag**2, axis=-1)


def normalize(v) -> np.ndarray:
    v = as_cvec(v)
    n = np.sqrt(norm2(v))
    if np.any(n == 0):
        raise InvalidOperandsError("cannot normalize the zero vector")
    return v / n[..., None]


def check_unit(v, tol: float = UNIT_TOL) -> np.ndarray:
    v = as_cvec(v)
    if np.any(np.abs(np.sqrt(norm2(v)) - 1.0) > tol):
        raise InvalidOperandsError("expected unit-norm vectors")
    return v


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard circularly-symmetric complex Gaussian entries, E|z|^2 = 1."""
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def sample_isotropic(rng: np.random.Generator, M: int, size=None) -> np.ndarray:
    """Unit vectors uniformly distributed on the sphere of C^M.

    ``size`` adds leading batch dimensions (int or tuple).
    """
    if M < 1:
        raise InvalidOperandsError("M must be >= 1")
    lead = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    while True:
        z = complex_normal(rng, lead + (M,))
        n = np.sqrt(norm2(z))
        if np.all(n > 0):
            return z / n[..., None]


def overlap(a, b) -> np.ndarray | float:
    """Squared cosine ``|a^H b|^2`` of the angle between unit vectors, in [0, 1]."""
    a = check_unit(a)
    b = check_unit(b)
    z = np.abs(inner(a, b)) ** 2
    z = np.clip(z, 0.0, 1.0)
    return float(z) if np.ndim(z) == 0 else z


def sin2(a, b) -> np.ndarray:
    """``1 - |a^H b|^2`` for unit vectors, computed without cancellation.

    Uses the squared norm of the component of ``b`` orthogonal to ``a``,
    which stays accurate when the angle is tiny.
    """
    r = b - a * inner(a, b)[..., None]
    return np.clip(norm2(r), 0.0, 1.0)


@dataclass(frozen=True)
class Projector:
    """Projection onto the orthogonal complement of ``direction``: I - u u^H."""

    direction: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "direction", check_unit(self.direction))

    @classmethod
    def along(cls, v) -> "Projector":
        return cls(normalize(v))

    def apply(self, x) -> np.ndarray:
        u = self.direction
        x = np.asarray(x, dtype=complex)
        return x - u * inner(u, x)[..., None]

    def matrix(self) -> np.ndarray:
        u = self.direction
        if u.ndim != 1:
            raise InvalidOperandsError("matrix() needs a single direction")
        return np.eye(u.size) - np.outer(u, np.conj(u))


def project_null(p: Projector, x) -> np.ndarray:
    return p.apply(x)


def orthogonal_unit(rng: np.random.Generator, u: np.ndarray) -> np.ndarray:
    """Random unit vector uniform on the unit sphere of the complement of ``u``."""
    u = np.asarray(u, dtype=complex)
    while True:
        z = complex_normal(rng, u.shape)
        z = z - u * inner(u, z)[..., None]
        n = np.sqrt(norm2(z))
        if np.all(n > 1e-8):
            return z / n[..., None]


def at_distance(rng: np.random.Generator, center: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Unit vectors with ``sin^2`` angle ``s`` to ``center`` in a uniform direction."""
    s = np.asarray(s, dtype=float)
    u = orthogonal_unit(rng, center)
    return np.sqrt(1.0 - s)[..., None] * center + np.sqrt(s)[..., None] * u


def sample_in_cap(rng: np.random.Generator, center: np.ndarray, cap: np.ndarray) -> np.ndarray:
    """Points uniform (in the invariant measure) on ``{w : sin^2(center, w) < s}``.

    ``cap`` is the measure ``s^(M-1)`` of the cap, in [0, 1].
    """
    center = np.asarray(center, dtype=complex)
    M = center.shape[-1]
    cap = np.asarray(cap, dtype=float)
    y = rng.random(cap.shape) * cap
    return at_distance(rng, center, y ** (1.0 / (M - 1)))


def decompose(q_tilde, q_hat) -> tuple[float, Optional[np.ndarray]]:
    """Split a unit vector against a reference direction.

    Returns ``(a, q_perp)`` with ``a = sin^2`` of the angle between them and
    ``q_perp`` the unit vector orthogonal to ``q_hat`` such that, for a
    unit-modulus phase ``e^{i phi}``,
    ``e^{i phi} q_tilde = sqrt(1 - a) q_hat + sqrt(a) q_perp``.
    ``q_perp`` is ``None`` when the inputs are parallel.
    """
    qt = check_unit(q_tilde)
    qh = check_unit(q_hat)
    if qt.ndim != 1:
        raise InvalidOperandsError("decompose works on single vectors; use decompose_batch")
    a, perp = decompose_batch(qt[None, :], qh[None, :])
    a0 = float(a[0])
    return a0, (None if a0 <= ZERO_TOL**2 else perp[0])


def decompose_batch(q_tilde: np.ndarray, q_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`decompose`; rows with ``a == 0`` (``a <= 1e-24``) get a
    zero ``q_perp``.

    The phase is fixed so that ``q_hat^H (e^{i phi} q_tilde)`` is real and
    non-negative; ``q_perp`` is then ``e^{i phi}`` times the normalized
    residual of ``q_tilde`` after removing its ``q_hat`` component.
    """
    c = inner(q_hat, q_tilde)
    resid = q_tilde - q_hat * c[..., None]
    a = np.clip(norm2(resid), 0.0, 1.0)
    # Residuals at rounding level mean the inputs are parallel: report exact
    # zero so perfectly aligned interference gives exactly zero power.
    a = np.where(a <= ZERO_TOL**2, 0.0, a)
    mag = np.abs(c)
    phase = np.where(mag > 0, np.conj(c) / np.where(mag > 0, mag, 1.0), 1.0)
    n = np.sqrt(a)
    safe = np.where(n > 0, n, 1.0)
    perp = np.where((n > 0)[..., None], resid * (phase / safe)[..., None], 0.0)
    return a, perp


def projection_norm_samples(M: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Samples of ``|Phi_v x|^2`` for independent isotropic unit ``x`` and ``v``."""
    x = sample_isotropic(rng, M, trials)
    v = sample_isotropic(rng, M, trials)
    return norm2(Projector(v).apply(x))


def projection_norm_mean_check(M: int, trials: int, rng: np.random.Generator) -> Estimate:
    """Monte Carlo mean of ``|Phi_v x|^2``; the expected value is (M-1)/M."""
    return mean_se(projection_norm_samples(M, trials, rng))
