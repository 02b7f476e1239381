"""Random vector quantization of directions in C^M.

A codebook holds ``2**B`` independent isotropic unit vectors.  A direction
is quantized to the codeword with the largest squared inner product, ties
going to the lowest index.  The quantization error is the squared sine of
the angle to that codeword; for isotropic inputs its complementary CDF is
``(1 - x**(M-1))**(2**B)`` and its mean is below ``2**(-B/(M-1))``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy.special import beta as beta_fn

from .cgeom import ZERO_TOL, as_cvec, norm2, sample_isotropic
from .errors import InvalidOperandsError, ResourceLimitError
from .rng import check_seed, substream

MAX_BITS = 24
MAGIC = b"XRVQ"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHHQ")  # magic, version, M, B, seed

# Rows of the input batch processed per codebook scan; bounds the temporary
# (rows x 2**B) overlap matrix to about 64 MiB.
_SCAN_CELLS = 1 << 23


@dataclass(frozen=True)
class Codebook:
    """``2**B`` unit vectors in C^M, stored as an ``(2**B, M)`` complex array."""

    M: int
    B: int
    seed: int
    vectors: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.vectors, dtype=complex)
        if v.shape != (2**self.B, self.M):
            raise InvalidOperandsError(
                f"codebook shape {v.shape} does not match (2**{self.B}, {self.M})"
            )
        if np.any(np.abs(np.sqrt(norm2(v)) - 1.0) > 1e-9):
            raise InvalidOperandsError("codebook entries must be unit norm")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "vectors", v)

    @property
    def size(self) -> int:
        return 2**self.B

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Codebook):
            return NotImplemented
        return (self.M, self.B, self.seed) == (other.M, other.B, other.seed) and bool(
            np.array_equal(self.vectors, other.vectors)
        )

    __hash__ = None  # type: ignore[assignment]


def generate_codebook(seed: int, M: int, B: int) -> Codebook:
    """Codebook drawn from the substream ``(seed, "codebook", M, B)``."""
    if M < 2:
        raise InvalidOperandsError("codebooks need M >= 2")
    if B < 0:
        raise InvalidOperandsError("B must be >= 0")
    if B > MAX_BITS:
        raise ResourceLimitError(f"B={B} exceeds the codebook guard of {MAX_BITS} bits")
    rng = substream(check_seed(seed), "codebook", M, B)
    return Codebook(M, B, int(seed), sample_isotropic(rng, M, 2**B))


def _real_codebook(cb: Codebook) -> np.ndarray:
    """``(2M, 2N)`` real matrix mapping ``[Re q, Im q]`` to ``[Re g, Im g]``
    with ``g_j = w_j^H q``; a real product is much faster than a complex one
    when M is small."""
    wr, wi = cb.vectors.real.T, cb.vectors.imag.T  # (M, N)
    return np.block([[wr, -wi], [wi, wr]])


def _overlaps_max(cb: Codebook, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index and value of the largest ``|w_j^H q|^2 / |q|^2`` for each row of q."""
    n = q.shape[0]
    N = cb.size
    idx = np.empty(n, dtype=np.int64)
    best = np.empty(n, dtype=float)
    R = _real_codebook(cb)
    x = np.concatenate([q.real, q.imag], axis=1)
    rows = max(1, _SCAN_CELLS // N)
    for s in range(0, n, rows):
        g = x[s : s + rows] @ R  # (rows, 2N)
        o = g[:, :N] ** 2
        o += g[:, N:] ** 2
        j = np.argmax(o, axis=1)  # first maximum wins ties
        idx[s : s + rows] = j
        best[s : s + rows] = o[np.arange(j.size), j]
    return idx, best / norm2(q)


def _check_input(cb: Codebook, q) -> tuple[np.ndarray, bool]:
    a = as_cvec(q)
    single = a.ndim == 1
    a2 = a[None, :] if single else a.reshape(-1, a.shape[-1])
    if a2.shape[-1] != cb.M:
        raise InvalidOperandsError(f"vector dimension {a2.shape[-1]} != codebook M={cb.M}")
    if np.any(np.sqrt(norm2(a2)) <= ZERO_TOL):
        raise InvalidOperandsError("cannot quantize the zero vector")
    return a2, single


def quantize(cb: Codebook, q) -> Union[int, np.ndarray]:
    """Codeword index of ``q`` (a vector) or of each row of ``q`` (a batch)."""
    a, single = _check_input(cb, q)
    idx, _ = _overlaps_max(cb, a)
    return int(idx[0]) if single else idx.reshape(np.shape(q)[:-1])


def quantize_with_error(cb: Codebook, q) -> tuple[np.ndarray, np.ndarray]:
    """Batch version returning ``(index, sin^2 error)``.

    The error is recomputed from the residual against the chosen codeword so
    small errors keep full relative precision.
    """
    a, _ = _check_input(cb, q)
    idx, _ = _overlaps_max(cb, a)
    qn = a / np.sqrt(norm2(a))[:, None]
    w = cb.vectors[idx]
    c = np.sum(np.conj(w) * qn, axis=-1)
    err = np.clip(norm2(qn - w * c[:, None]), 0.0, 1.0)
    return idx, err


def quantization_error(cb: Codebook, q) -> Union[float, np.ndarray]:
    """``sin^2`` of the angle between ``q`` and its codeword."""
    a = as_cvec(q)
    _, err = quantize_with_error(cb, a)
    return float(err[0]) if a.ndim == 1 else err.reshape(a.shape[:-1])


def lemma1_bound(M: int, B: float) -> float:
    """Upper bound ``2**(-B/(M-1))`` on the mean quantization error."""
    if M < 2:
        raise InvalidOperandsError("the bound needs M >= 2")
    return 2.0 ** (-B / (M - 1))


def error_ccdf(x, M: int, B: int):
    """``Pr[error > x] = (1 - x**(M-1))**(2**B)`` for isotropic inputs."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return (1.0 - x ** (M - 1)) ** (2**B)


def exact_mean_error(M: int, B: int) -> float:
    """Closed-form mean error ``(1/(M-1)) * Beta(2**B + 1, 1/(M-1))``.

    Integrating the complementary CDF gives
    ``E[x] = int_0^1 (1 - x**(M-1))**N dx`` with ``N = 2**B``; substituting
    ``u = x**(M-1)`` turns it into a Beta function.
    """
    if M < 2:
        raise InvalidOperandsError("M must be >= 2")
    k = 1.0 / (M - 1)
    return float(k * beta_fn(2**B + 1, k))


# Serialization -----------------------------------------------------------------


def codebook_bytes(cb: Codebook) -> bytes:
    """Flat little-endian encoding.

    Layout: 4-byte magic ``XRVQ``, u16 format version, u16 M, u16 B, u64 seed,
    then ``2**B * M`` entries in row-major order, each as a float64 real part
    followed by a float64 imaginary part.
    """
    head = _HEADER.pack(MAGIC, FORMAT_VERSION, cb.M, cb.B, cb.seed)
    body = np.ascontiguousarray(cb.vectors, dtype="<c16").tobytes()
    return head + body


def codebook_from_bytes(data: bytes) -> Codebook:
    if len(data) < _HEADER.size:
        raise InvalidOperandsError("truncated codebook header")
    magic, version, M, B, seed = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise InvalidOperandsError("not a codebook file (bad magic)")
    if version != FORMAT_VERSION:
        raise InvalidOperandsError(f"unsupported codebook format version {version}")
    n = (2**B) * M
    body = data[_HEADER.size :]
    if len(body) != 16 * n:
        raise InvalidOperandsError(f"codebook body has {len(body)} bytes, expected {16 * n}")
    vec = np.frombuffer(body, dtype="<c16").astype(complex).reshape(2**B, M)
    return Codebook(M, B, seed, vec)


def save_codebook(cb: Codebook, path) -> None:
    Path(path).write_bytes(codebook_bytes(cb))


def load_codebook(path) -> Codebook:
    return codebook_from_bytes(Path(path).read_bytes())


def mean_error_quadrature(M: int, B: int) -> float:
    """Numerical integral of the complementary CDF (independent of the closed form)."""
    from scipy.integrate import quad

    N = 2**B
    # The integrand falls off on the scale N**(-1/(M-1)); split there.
    edge = min(1.0, 50.0 * N ** (-1.0 / (M - 1)))
    f = lambda x: (1.0 - x ** (M - 1)) ** N
    head, _ = quad(f, 0.0, edge, limit=200, epsabs=0.0, epsrel=1e-12)
    tail = 0.0
    if edge < 1.0:
        tail, _ = quad(f, edge, 1.0, limit=200)
    return head + tail

