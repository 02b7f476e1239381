"""Two-stage zero-forcing receiver and rate analysis for matched sets.

Receiver 1 decodes ``d11`` by first removing the common quantized
interference direction ``q_hat`` (projector ``Phi21``) and then the leftover
direction of the other desired stream (projector ``Phi12`` along
``q12' = Phi21 q12``).  Residual interference comes only from the
quantization errors ``a1``/``a2`` of the two interfering directions.

All geometry helpers accept batches: vectors are ``(..., M)`` arrays and the
scalar fields are ``(...)`` arrays.  Rates are in bits (log base 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .cgeom import decompose_batch, inner, norm2
from .errors import DegenerateGeometryError, DomainError, InvalidOperandsError, PreconditionError
from .rvq import Codebook, quantize
from .stats import Estimate, mean_se, slope
from .xsim import MatchedBatch, Precoders, XRealization, interference_directions

DEGENERATE_TOL = 1e-9


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.sqrt(norm2(v))
    return v / np.where(n > 0, n, 1.0)[..., None]


@dataclass(frozen=True)
class ReceiverGeometry:
    """Effective vectors at one receiver plus their quantization split.

    ``q11`` carries the stream being decoded, ``q12`` the other desired
    stream, ``q21``/``q22`` the two interfering streams and ``q_hat`` the
    codeword they were both quantized to.
    """

    q11: np.ndarray
    q12: np.ndarray
    q21: np.ndarray
    q22: np.ndarray
    q_hat: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    q21_perp: np.ndarray
    q22_perp: np.ndarray

    @property
    def M(self) -> int:
        return self.q11.shape[-1]

    def __len__(self) -> int:
        return 1 if self.q11.ndim == 1 else self.q11.shape[0]


def geometry_from_vectors(q11, q12, q21, q22, q_hat) -> ReceiverGeometry:
    """Split each interference direction against ``q_hat``.

    For rows where an interference direction is parallel to ``q_hat`` the
    error is zero and the orthogonal part is stored as the zero vector; it
    is multiplied by ``a = 0`` everywhere it is used.
    """
    q11, q12, q21, q22, q_hat = (np.asarray(v, dtype=complex) for v in (q11, q12, q21, q22, q_hat))
    a1, p21 = decompose_batch(_unit(q21), q_hat)
    a2, p22 = decompose_batch(_unit(q22), q_hat)
    return ReceiverGeometry(q11, q12, q21, q22, q_hat, a1, a2, p21, p22)


def _role_vectors(gains: np.ndarray, pre: Precoders, receiver: int, stream: int):
    """Effective vectors (decoded, other desired, interferer 1, interferer 2)."""
    g = np.asarray(gains, dtype=complex)
    h11, h12, h21, h22 = (g[..., k, :] for k in range(4))
    if receiver == 1:
        own = (h11 * pre.v11, h12 * pre.v12)
        q21, q22 = h11 * pre.v21, h12 * pre.v22
    elif receiver == 2:
        own = (h21 * pre.v21, h22 * pre.v22)
        q21, q22 = h21 * pre.v11, h22 * pre.v12
    else:
        raise InvalidOperandsError("receiver must be 1 or 2")
    if stream == 1:
        d, o = own
    elif stream == 2:
        o, d = own
    else:
        raise InvalidOperandsError("stream must be 1 or 2")
    return d, o, q21, q22


def batch_geometry(batch: MatchedBatch, pre: Precoders, receiver: int = 1, stream: int = 1) -> ReceiverGeometry:
    """Geometry of every set in a matched batch.

    ``receiver=1, stream=1`` decodes ``d11``; ``stream=2`` decodes ``d12`` at
    receiver 1; ``receiver=2`` decodes ``d21`` (stream 1) or ``d22`` (stream 2).
    """
    d, o, q21, q22 = _role_vectors(batch.gains, pre, receiver, stream)
    w = batch.w1 if receiver == 1 else batch.w2
    return geometry_from_vectors(d, o, q21, q22, w)


def receiver_geometry(x: XRealization, pre: Precoders, cb: Codebook) -> ReceiverGeometry:
    """Receiver-1 geometry of a single realization (decoding ``d11``)."""
    q21, q22, _, _ = interference_directions(x, pre)
    i1, i2 = quantize(cb, q21), quantize(cb, q22)
    if i1 != i2:
        raise PreconditionError(f"receiver 1 is not matched (codewords {i1} and {i2})")
    d, o, q21, q22 = _role_vectors(x.gains, pre, 1, 1)
    return geometry_from_vectors(d, o, q21, q22, cb.vectors[i1])


def second_stage_direction(g: ReceiverGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Unit ``q12'`` (direction removed by the second projector) and ``|q12'|``.

    ``q12' = Phi21 q12 / |q12|`` is the part of the other desired direction
    left after the first projection.
    """
    q12t = _unit(g.q12)
    r = q12t - g.q_hat * inner(g.q_hat, q12t)[..., None]
    n = np.sqrt(norm2(r))
    return r / np.where(n > 0, n, 1.0)[..., None], n


def _project(u: np.ndarray, x: np.ndarray) -> np.ndarray:
    return x - u * inner(u, x)[..., None]


def project_two_stage(g: ReceiverGeometry, y1) -> np.ndarray:
    """``Phi12 Phi21 y1``: remove ``q_hat``, then the leftover ``q12'``."""
    u, n = second_stage_direction(g)
    if np.any(n < DEGENERATE_TOL):
        raise DegenerateGeometryError(f"|q12'| = {float(np.min(n)):.3e} below {DEGENERATE_TOL}")
    y = np.asarray(y1, dtype=complex)
    return _project(u, _project(g.q_hat, y))


def _powers(g: ReceiverGeometry, p: float, M: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    u, n = second_stage_direction(g)
    valid = n >= DEGENERATE_TOL
    scale = M * p / 4.0
    S = scale * norm2(_project(u, _project(g.q_hat, g.q11)))
    I = scale * (
        norm2(g.q21) * norm2(_project(u, g.q21_perp)) * g.a1
        + norm2(g.q22) * norm2(_project(u, g.q22_perp)) * g.a2
    )
    return S, I, valid


def signal_power(g: ReceiverGeometry, p: float, M: int):
    """``(M p / 4) |Phi12 Phi21 q11|^2``."""
    S, _, _ = _powers(g, p, M)
    return float(S) if np.ndim(S) == 0 else S


def interference_power(g: ReceiverGeometry, p: float, M: int):
    """``(M p / 4)(|q21|^2 |Phi12 q21_perp|^2 a1 + |q22|^2 |Phi12 q22_perp|^2 a2)``."""
    _, I, _ = _powers(g, p, M)
    return float(I) if np.ndim(I) == 0 else I


def power_samples(g: ReceiverGeometry, p: float, M: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Signal and interference power per set, with degenerate sets dropped.

    Returns ``(S, I, n_degenerate)``.
    """
    S, I, valid = _powers(g, p, M)
    S, I, valid = np.atleast_1d(S), np.atleast_1d(I), np.atleast_1d(valid)
    return S[valid], I[valid], int((~valid).sum())


def _check_samples(x) -> np.ndarray:
    a = np.asarray(x, dtype=float).ravel()
    if a.size == 0:
        raise InvalidOperandsError("need at least one sample")
    return a


def rate_hat_samples(S, I, M: int) -> np.ndarray:
    S, I = _check_samples(S), _check_samples(I)
    return np.log2(1.0 + S / (I + 1.0)) / M


def rate_ideal_samples(S, M: int) -> np.ndarray:
    return np.log2(1.0 + _check_samples(S)) / M


def rate_hat(S, I, M: int) -> Estimate:
    """Mean of ``(1/M) log2(1 + S/(I+1))``."""
    return mean_se(rate_hat_samples(S, I, M))


def rate_ideal(S, M: int) -> Estimate:
    """Mean of ``(1/M) log2(1 + S)``."""
    return mean_se(rate_ideal_samples(S, M))


def rate_gap(S, I, M: int) -> Estimate:
    """Paired estimate of ``C - C_hat`` on common samples."""
    return mean_se(rate_ideal_samples(S, M) - rate_hat_samples(S, I, M))


def gap_bound(p: float, B: float, M: int) -> float:
    """``(1/M) log2(1 + (p/2) M(M-2)/(M-1) 2**(-B/(M-1)))``."""
    if M < 3:
        raise DomainError("the rate-gap bound needs M >= 3")
    if p < 0:
        raise DomainError("power must be non-negative")
    return math.log2(1.0 + 0.5 * p * M * (M - 2) / (M - 1) * 2.0 ** (-B / (M - 1))) / M


@dataclass(frozen=True)
class RateReport:
    p: float
    B: int
    M: int
    trials: int
    degenerate: int
    S: Estimate
    I: Estimate
    sinr: Estimate
    log_sinr: Estimate
    c_hat: Estimate
    c_ideal: Estimate
    gap: Estimate
    gap_bound: float

    @property
    def gap_ok(self) -> bool:
        """Gap within its bound plus three standard errors."""
        return self.gap.mean <= self.gap_bound + 3.0 * self.gap.stderr


def rate_report(g: ReceiverGeometry, p: float, B: int, M: int) -> RateReport:
    S, I, deg = power_samples(g, p, M)
    sinr = S / (I + 1.0)
    return RateReport(
        p=p,
        B=B,
        M=M,
        trials=int(S.size),
        degenerate=deg,
        S=mean_se(S),
        I=mean_se(I),
        sinr=mean_se(sinr),
        log_sinr=mean_se(np.log2(1.0 + sinr)),
        c_hat=rate_hat(S, I, M),
        c_ideal=rate_ideal(S, M),
        gap=rate_gap(S, I, M),
        gap_bound=gap_bound(p, B, M) if M >= 3 else math.nan,
    )


def db_to_linear(p_db: float) -> float:
    return 10.0 ** (p_db / 10.0)


def bits_for_power(alpha: float, p: float) -> int:
    """Feedback bits ``round(alpha * log2 p)`` (never negative)."""
    return max(0, int(round(alpha * math.log2(p))))


def vanishing_gap_bits(p: float) -> int:
    """``round(2 log2 p + 4 log2 log2 p)``: grows fast enough for the gap to vanish."""
    lp = math.log2(p)
    if lp <= 1.0:
        raise DomainError("needs p > 2")
    return int(round(2.0 * lp + 4.0 * math.log2(lp)))


def dof_estimate(rates: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of rate against ``log2 p`` over the upper half of
    the power range.

    Points whose ``log2 p`` is at or above the midpoint of the range are
    used; if fewer than two qualify, the two highest powers are used.
    """
    pts = sorted((float(p), float(r)) for p, r in rates)
    if len({p for p, _ in pts}) < 2:
        raise InvalidOperandsError("need at least two distinct power points")
    if any(p <= 0 for p, _ in pts):
        raise InvalidOperandsError("powers must be positive")
    x = np.log2([p for p, _ in pts])
    y = np.array([r for _, r in pts])
    mid = 0.5 * (x[0] + x[-1])
    sel = x >= mid - 1e-12
    if sel.sum() < 2:
        sel = np.zeros_like(sel)
        sel[-2:] = True
    return slope(x[sel], y[sel])


@dataclass(frozen=True)
class DofReport:
    """Slope ``s`` of ``E[log2(1 + SINR)]`` per message against ``log2 p``.

    ``s`` is the per-message multiplexing gain without the ``1/M`` time
    normalization of the rate; ``per_slot`` divides by ``M``.  ``total`` is
    ``(4/3) s`` (four messages over three-slot sets, the convention in which
    the expected total is ``(4/3) alpha/(M-1)`` at M = 3) and
    ``total_per_slot`` is ``4 s / M``.
    """

    alpha: float
    M: int
    p_db: tuple[float, ...]
    B: tuple[int, ...]
    log_sinr: tuple[Estimate, ...]
    slope: float
    slope_all: float

    @property
    def expected(self) -> float:
        return self.alpha / (self.M - 1)

    @property
    def per_slot(self) -> float:
        return self.slope / self.M

    @property
    def total(self) -> float:
        return 4.0 * self.slope / 3.0

    @property
    def total_per_slot(self) -> float:
        return 4.0 * self.slope / self.M


def dof_report(alpha: float, M: int, p_db: Sequence[float], B: Sequence[int], log_sinr: Sequence[Estimate]) -> DofReport:
    ps = [db_to_linear(v) for v in p_db]
    ys = [e.mean for e in log_sinr]
    return DofReport(
        alpha=alpha,
        M=M,
        p_db=tuple(float(v) for v in p_db),
        B=tuple(int(b) for b in B),
        log_sinr=tuple(log_sinr),
        slope=dof_estimate(list(zip(ps, ys))),
        slope_all=slope(np.log2(ps), ys) if len(ps) >= 2 else math.nan,
    )


def normalized_total(report: DofReport, full: DofReport) -> float:
    """``(4/3) s / s_full``: the total DoF with the slope measured in units of
    the full-feedback (``alpha = M-1``) slope, which removes the rate
    normalization convention from the comparison."""
    if full.slope == 0.0:
        raise DomainError("full-feedback slope is zero")
    return 4.0 * report.slope / (3.0 * full.slope)


def check_alpha(alpha: float, M: int) -> float:
    if not 0.0 < alpha <= M - 1:
        raise DomainError(f"alpha must lie in (0, {M - 1}], got {alpha}")
    return float(alpha)


def dof_sweep(
    alpha: float,
    M: int,
    p_db: Sequence[float],
    trials: int,
    seeds: Union[int, Sequence[int]],
    pre: Optional[Precoders] = None,
) -> DofReport:
    """Run the matched-set pipeline at each power with ``B = round(alpha log2 p)``.

    ``seeds`` is one seed or a list of them.  Each seed contributes
    ``trials`` sets per power under its own precoder draw (unless ``pre`` is
    given), and the log-SINR samples of all seeds are pooled, so a list of
    seeds averages the slope over precoder realizations.  Sets are drawn
    from the codebook-ensemble sampler; see :func:`xalign.harness.run` for
    the chunked, worker-independent version.
    """
    from .rng import substream
    from .xsim import draw_precoders, sample_matched_ensemble

    check_alpha(alpha, M)
    seed_list = [seeds] if isinstance(seeds, (int, np.integer)) else list(seeds)
    if not seed_list:
        raise InvalidOperandsError("need at least one seed")
    Bs, est = [], []
    for k, v in enumerate(p_db):
        p = db_to_linear(v)
        B = bits_for_power(alpha, p)
        pooled = []
        for seed in seed_list:
            pr = pre if pre is not None else draw_precoders(substream(seed, "precoders", M), M)
            batch = sample_matched_ensemble(substream(seed, "dof-sweep", k), pr, B, trials)
            S, I, _ = power_samples(batch_geometry(batch, pr), p, M)
            pooled.append(np.log2(1.0 + S / (I + 1.0)))
        Bs.append(B)
        est.append(mean_se(np.concatenate(pooled)))
    return dof_report(alpha, M, p_db, Bs, est)
