"""Rayleigh-fading two-user X channel with fixed precoders and RVQ matching.

Stream ``d_ji`` goes from transmitter ``i`` to receiver ``j``.  Over a set of
``M`` slots the channels act as diagonal matrices ``H_ji``, so with precoders
``v_ji`` the interference at receiver 1 arrives along ``q21 = H11 v21`` and
``q22 = H12 v22`` and at receiver 2 along ``r11 = H21 v11`` and
``r12 = H22 v12``.  A set is *matched* when both pairs quantize to the same
codeword, which makes each receiver's interference approximately aligned.

Gains are stored as arrays with the gain axis ordered ``h11, h12, h21, h22``
followed by the slot (position) axis.

Three ways to obtain matched sets are provided:

* :func:`find_matched_sets` searches the combinations of a slot stream.
* :func:`sample_matched_rejection` conditions independent slot tuples on the
  match event for a fixed codebook.  The two receivers depend on disjoint
  gains, so each receiver is rejection-sampled on its own; this is exact.
* :func:`sample_matched_ensemble` draws from the same conditional law
  averaged over random codebooks, without materializing the codebook, so
  it works for any number of feedback bits.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .cgeom import (
    at_distance,
    complex_normal,
    norm2,
    normalize,
    overlap,
    sample_isotropic,
    sample_in_cap,
    sin2,
)
from .errors import InvalidOperandsError, ResourceLimitError
from .rvq import Codebook, quantize
from .stats import Estimate, proportion

GAIN_ORDER = ("h11", "h12", "h21", "h22")
MAX_COMBINATIONS = 10**8
MAX_REJECTIONS = 10**7
REJECTION_MAX_BITS = 20
ENSEMBLE_MAX_BITS = 52
# Above this codebook size the exact fallback of the ensemble sampler (which
# materializes the remaining codewords) is refused.
_FALLBACK_MAX_CODEWORDS = 1 << 16


@dataclass(frozen=True)
class FadingSlot:
    t: int
    h11: complex
    h12: complex
    h21: complex
    h22: complex

    def __post_init__(self) -> None:
        if not all(np.isfinite(g) for g in self.gains):
            raise InvalidOperandsError(f"slot {self.t} has non-finite gains")

    @property
    def gains(self) -> tuple[complex, complex, complex, complex]:
        return (self.h11, self.h12, self.h21, self.h22)


def draw_gains(rng: np.random.Generator, n: int) -> np.ndarray:
    """``(n, 4)`` iid CN(0, 1) gains in ``GAIN_ORDER``."""
    return complex_normal(rng, (n, 4))


def draw_slots(rng: np.random.Generator, n: int, start: int = 0) -> list[FadingSlot]:
    g = draw_gains(rng, n)
    return [FadingSlot(start + k, *map(complex, row)) for k, row in enumerate(g)]


@dataclass(frozen=True)
class Precoders:
    """Four fixed unit-norm beamformers of dimension M."""

    v11: np.ndarray
    v12: np.ndarray
    v21: np.ndarray
    v22: np.ndarray

    def __post_init__(self) -> None:
        vs = [np.asarray(v, dtype=complex) for v in (self.v11, self.v12, self.v21, self.v22)]
        if len({v.shape for v in vs}) != 1 or vs[0].ndim != 1:
            raise InvalidOperandsError("precoders must be vectors of one common dimension")
        for v in vs:
            if abs(math.sqrt(float(norm2(v))) - 1.0) > 1e-9:
                raise InvalidOperandsError("precoders must be unit norm")
        for a, b in itertools.combinations(vs, 2):
            if overlap(a, b) >= 1.0 - 1e-6:
                raise InvalidOperandsError("precoders must have pairwise distinct directions")
        for name, v in zip(("v11", "v12", "v21", "v22"), vs):
            v = v.copy()
            v.flags.writeable = False
            object.__setattr__(self, name, v)

    @property
    def M(self) -> int:
        return self.v11.size

    @property
    def vectors(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return (self.v11, self.v12, self.v21, self.v22)


def draw_precoders(rng: np.random.Generator, M: int) -> Precoders:
    """Isotropic precoders, redrawn in the (measure-zero) event of collinearity
    or a zero entry."""
    while True:
        v = sample_isotropic(rng, M, 4)
        if np.all(np.abs(v) > 1e-12):
            try:
                return Precoders(*v)
            except InvalidOperandsError:
                continue


@dataclass(frozen=True)
class XRealization:
    """An ordered M-tuple of slots; slot ``l`` supplies position ``l`` of every H."""

    slots: tuple[FadingSlot, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "slots", tuple(self.slots))
        if len(self.slots) < 1:
            raise InvalidOperandsError("a realization needs at least one slot")

    @classmethod
    def from_gains(cls, gains: np.ndarray, t0: int = 0) -> "XRealization":
        """Build from a ``(4, M)`` gain array."""
        g = np.asarray(gains, dtype=complex)
        return cls(tuple(FadingSlot(t0 + l, *map(complex, g[:, l])) for l in range(g.shape[1])))

    @property
    def M(self) -> int:
        return len(self.slots)

    @property
    def gains(self) -> np.ndarray:
        """``(4, M)`` array: row k is the diagonal of the k-th channel in GAIN_ORDER."""
        return np.array([s.gains for s in self.slots], dtype=complex).T

    def H(self, j: int, i: int) -> np.ndarray:
        """Diagonal channel matrix from transmitter ``i`` to receiver ``j``."""
        if j not in (1, 2) or i not in (1, 2):
            raise InvalidOperandsError("channel indices are 1 or 2")
        return np.diag(self.gains[2 * (j - 1) + (i - 1)])


def _gains_of(x) -> np.ndarray:
    return x.gains if isinstance(x, XRealization) else np.asarray(x, dtype=complex)


def interference_directions(x, pre: Precoders):
    """``(q21, q22, r11, r12)``; accepts a realization or a ``(..., 4, M)`` gain array."""
    g = _gains_of(x)
    h11, h12, h21, h22 = (g[..., k, :] for k in range(4))
    return h11 * pre.v21, h12 * pre.v22, h21 * pre.v11, h22 * pre.v12


def is_matched(x, pre: Precoders, cb: Codebook):
    """Both receivers' interference pairs share a codeword (batch-capable)."""
    q21, q22, r11, r12 = interference_directions(x, pre)
    m = (quantize(cb, q21) == quantize(cb, q22)) & (quantize(cb, r11) == quantize(cb, r12))
    return bool(m) if np.ndim(m) == 0 else m


def match_probability(
    rng: np.random.Generator, pre: Precoders, cb: Codebook, trials: int, chunk: int = 1 << 15
) -> dict[str, Estimate]:
    """Fraction of independent slot tuples matched at receiver 1, receiver 2 and both."""
    M = pre.M
    hits = {"rx1": 0, "rx2": 0, "both": 0}
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        g = complex_normal(rng, (k, 4, M))
        q21, q22, r11, r12 = interference_directions(g, pre)
        m1 = quantize(cb, q21) == quantize(cb, q22)
        m2 = quantize(cb, r11) == quantize(cb, r12)
        hits["rx1"] += int(m1.sum())
        hits["rx2"] += int(m2.sum())
        hits["both"] += int((m1 & m2).sum())
        done += k
    return {key: proportion(v, trials) for key, v in hits.items()}


# Stream search ---------------------------------------------------------------------


_COMBO_CACHE_MAX = 1 << 22


@functools.lru_cache(maxsize=8)
def _all_combinations(n: int, M: int) -> np.ndarray:
    flat = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), M)),
        dtype=np.int64,
        count=math.comb(n, M) * M,
    )
    out = flat.reshape(-1, M)
    out.flags.writeable = False
    return out


def _combination_chunks(n: int, M: int, chunk: int):
    """Lexicographic M-combinations of range(n) in blocks of ``chunk`` rows."""
    if math.comb(n, M) <= _COMBO_CACHE_MAX:
        allc = _all_combinations(n, M)
        for s in range(0, allc.shape[0], chunk):
            yield allc[s : s + chunk]
        return
    it = itertools.combinations(range(n), M)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.int64)


def find_matched_index_sets(
    gains: np.ndarray, pre: Precoders, cb: Codebook, M: Optional[int] = None, chunk: int = 1 << 15
) -> list[tuple[int, ...]]:
    """Greedy disjoint matched combinations of a slot stream, as index tuples.

    Combinations are visited in lexicographic order; the slots of a
    combination fill positions 1..M in time order.  A matched combination is
    kept when none of its slots was used by an earlier kept one.
    """
    g = np.asarray(gains, dtype=complex)
    M = pre.M if M is None else M
    if M != pre.M:
        raise InvalidOperandsError(f"set size {M} != precoder dimension {pre.M}")
    n = g.shape[0]
    if n < M:
        return []
    if math.comb(n, M) > MAX_COMBINATIONS:
        raise ResourceLimitError(
            f"C({n}, {M}) = {math.comb(n, M)} combinations exceeds the guard {MAX_COMBINATIONS}"
        )
    # Per-slot, per-position interference entries; a combination picks one
    # slot per position.
    h11, h12, h21, h22 = g[:, 0], g[:, 1], g[:, 2], g[:, 3]
    e21 = h11[:, None] * pre.v21
    e22 = h12[:, None] * pre.v22
    e11 = h21[:, None] * pre.v11
    e12 = h22[:, None] * pre.v12
    pos = np.arange(M)
    used = np.zeros(n, dtype=bool)
    kept: list[tuple[int, ...]] = []
    for combo in _combination_chunks(n, M, chunk):
        # Combinations touching a slot kept earlier can never be kept, so
        # they are dropped before the (costly) quantization.
        combo = combo[~used[combo].any(axis=1)]
        if not combo.size:
            continue
        m = quantize(cb, e21[combo, pos]) == quantize(cb, e22[combo, pos])
        cand = combo[m]
        if cand.size:
            m2 = quantize(cb, e11[cand, pos]) == quantize(cb, e12[cand, pos])
            for c in cand[m2]:
                if not used[c].any():
                    used[c] = True
                    kept.append(tuple(int(i) for i in c))
    return kept


def find_matched_sets(
    slots: Sequence[FadingSlot], pre: Precoders, cb: Codebook, M: Optional[int] = None
) -> list[XRealization]:
    g = np.array([s.gains for s in slots], dtype=complex).reshape(-1, 4)
    idx = find_matched_index_sets(g, pre, cb, M)
    return [XRealization(tuple(slots[i] for i in c)) for c in idx]


# Matched batches -------------------------------------------------------------------


@dataclass(frozen=True)
class MatchedBatch:
    """``n`` matched sets.

    ``gains`` has shape ``(n, 4, M)``; ``w1``/``w2`` are the codewords shared by
    each receiver's interference pair.  ``idx1``/``idx2`` are codebook indices,
    or ``-1`` when the codeword came from the codebook ensemble.
    """

    gains: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    idx1: np.ndarray
    idx2: np.ndarray

    def __len__(self) -> int:
        return self.gains.shape[0]

    def realization(self, i: int) -> XRealization:
        return XRealization.from_gains(self.gains[i])

    @staticmethod
    def concat(parts: Sequence["MatchedBatch"]) -> "MatchedBatch":
        return MatchedBatch(
            *(np.concatenate([getattr(p, f) for p in parts]) for f in ("gains", "w1", "w2", "idx1", "idx2"))
        )


def _rejection_half(
    rng: np.random.Generator,
    va: np.ndarray,
    vb: np.ndarray,
    cb: Codebook,
    n: int,
    max_rejections: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gain pairs ``(ha, hb)`` with ``quantize(ha*va) == quantize(hb*vb)``."""
    M = va.size
    ha_out, hb_out, idx_out = [], [], []
    got = 0
    since = 0  # rejections since the last acceptance
    rate = 2.0 ** (-cb.B)
    while got < n:
        k = int(min(1 << 16, max(256, 2 * (n - got) / rate)))
        ha = complex_normal(rng, (k, M))
        hb = complex_normal(rng, (k, M))
        ia = quantize(cb, ha * va)
        ib = quantize(cb, hb * vb)
        hit = np.flatnonzero(ia == ib)
        if hit.size == 0:
            since += k
        else:
            hit = hit[: n - got]
            worst = since + int(hit[0])
            if hit.size > 1:
                worst = max(worst, int(np.diff(hit).max()) - 1)
            if worst > max_rejections:
                since = worst
            else:
                since = k - 1 - int(hit[-1])
            ha_out.append(ha[hit])
            hb_out.append(hb[hit])
            idx_out.append(ia[hit])
            got += hit.size
        if since > max_rejections:
            raise ResourceLimitError(
                f"rejection sampler exceeded {max_rejections} consecutive rejections "
                f"(B={cb.B}, accepted {got} of {n})"
            )
    return np.concatenate(ha_out), np.concatenate(hb_out), np.concatenate(idx_out)


def sample_matched_rejection(
    rng: np.random.Generator,
    pre: Precoders,
    cb: Codebook,
    n: int,
    max_rejections: int = MAX_REJECTIONS,
) -> MatchedBatch:
    """``n`` independent slot tuples conditioned on the match event (fixed codebook)."""
    if cb.B > REJECTION_MAX_BITS:
        raise ResourceLimitError(f"rejection conditioning supports B <= {REJECTION_MAX_BITS}")
    if cb.M != pre.M:
        raise InvalidOperandsError("codebook and precoder dimensions differ")
    h11, h12, i1 = _rejection_half(rng, pre.v21, pre.v22, cb, n, max_rejections)
    h21, h22, i2 = _rejection_half(rng, pre.v11, pre.v12, cb, n, max_rejections)
    gains = np.stack([h11, h12, h21, h22], axis=1)
    return MatchedBatch(gains, cb.vectors[i1], cb.vectors[i2], i1, i2)


def sample_matched_realization(
    rng: np.random.Generator, pre: Precoders, cb: Codebook, M: Optional[int] = None
) -> XRealization:
    """One matched realization by rejection against a fixed codebook."""
    if M is not None and M != pre.M:
        raise InvalidOperandsError(f"set size {M} != precoder dimension {pre.M}")
    return sample_matched_rejection(rng, pre, cb, 1).realization(0)


def sample_matched_stream(
    rng: np.random.Generator, pre: Precoders, cb: Codebook, n: int, n_slots: int
) -> tuple[MatchedBatch, int]:
    """At least ``n`` matched sets from successive independent streams of
    ``n_slots`` slots, truncated to ``n``.  Also returns the number of streams."""
    parts: list[MatchedBatch] = []
    got = streams = 0
    while got < n:
        g = draw_gains(rng, n_slots)
        streams += 1
        sets = find_matched_index_sets(g, pre, cb)
        if not sets:
            continue
        gs = np.stack([g[list(c)].T for c in sets])  # (k, 4, M)
        q21, _, r11, _ = interference_directions(gs, pre)
        i1 = np.asarray(quantize(cb, q21))
        i2 = np.asarray(quantize(cb, r11))
        parts.append(MatchedBatch(gs, cb.vectors[i1], cb.vectors[i2], i1, i2))
        got += len(sets)
    b = MatchedBatch.concat(parts)
    return MatchedBatch(*(getattr(b, f)[:n] for f in ("gains", "w1", "w2", "idx1", "idx2"))), streams


# Codebook-ensemble sampler ---------------------------------------------------------


def _acg_peak(v: np.ndarray) -> float:
    """Largest value of the direction density of ``h * v`` with ``h ~ CN(0, I)``."""
    lam = np.abs(v) ** 2
    return float(lam.max() ** lam.size / np.prod(lam))


def _uniform_outside_cap(rng, center: np.ndarray, cap: np.ndarray) -> np.ndarray:
    """Points uniform on the complement of ``{w : sin^2(center, w)^(M-1) < cap}``."""
    M = center.shape[-1]
    t = cap + (1.0 - cap) * rng.random(cap.shape)
    return at_distance(rng, center, t ** (1.0 / (M - 1)))


def _ensemble_half(
    rng: np.random.Generator, va: np.ndarray, vb: np.ndarray, B: int, n: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gains ``(ha, hb)`` and shared codeword ``w`` for one receiver.

    Draws from the law of ``(ha, hb, w)`` given that ``a = dir(ha*va)`` and
    ``b = dir(hb*vb)`` both quantize to ``w``, averaged over codebooks of
    ``N = 2**B`` isotropic codewords.  With ``X``/``Y`` the cap measures
    ``sin^2(a,w)^(M-1)`` and ``sin^2(b,w)^(M-1)``, the target density is
    proportional to ``f_a(a) f_b(b) (1 - mu(cap_a u cap_b))**(N-1)``, where
    ``f`` are the direction densities and ``mu`` is the invariant measure.

    Proposal: ``a ~ f_a``; ``(X, Y)`` with density proportional to
    ``(1 - max(X, Y))**(N-1)``; ``w`` at measure ``X`` from ``a`` and ``b`` at
    measure ``Y`` from ``w``, each in a uniform direction.  The remaining
    factor ``f_b(b) * ((1 - mu(union)) / (1 - max(X, Y)))**(N-1)`` is applied
    as an acceptance test: ``f_b / max f_b`` by a uniform draw, and the ratio
    as the probability that the ``N - 1`` other codewords, already outside the
    larger cap, also avoid the part of the smaller cap sticking out of it.
    That last event is simulated by thinning: only a binomial number of
    codewords can land in the smaller cap, and each of those is a uniform
    point in it.
    """
    M = va.size
    N = 2**B
    n_other = N - 1
    lam_b = np.abs(vb) ** 2
    det_b = float(np.prod(lam_b))
    peak = _acg_peak(vb)
    inv_m = 1.0 / (M - 1)
    out_a, out_b, out_w = [], [], []
    got = 0
    rate = 0.5 / peak
    while got < n:
        k = int(min(1 << 16, max(1024, 1.5 * (n - got) / rate)))
        ha = complex_normal(rng, (k, M))
        a = normalize(ha * va)
        # (X, Y) proposal
        mix = rng.random(k) < 0.5
        X = np.where(mix, rng.beta(2.0, N, k), rng.beta(1.0, N + 1.0, k))
        low = rng.random(k) * (X + (1.0 - X) / N) < X
        Y = np.where(low, rng.random(k) * X, X + (1.0 - X) * rng.beta(1.0, N, k))
        x = X**inv_m
        y = Y**inv_m
        w = at_distance(rng, a, x)
        b = at_distance(rng, w, y)
        # direction-density factor for b
        quad = np.sum((b.real**2 + b.imag**2) / lam_b, axis=-1)
        dens = quad ** (-M) / det_b
        keep = rng.random(k) * peak < dens
        # union-avoidance factor
        ok = np.zeros(k, dtype=bool)
        big = np.where(low, X, Y)
        small = np.where(low, Y, X)
        pthin = small / (1.0 - big)
        thin = keep & (pthin <= 1.0)
        brute = keep & ~thin
        ti = np.flatnonzero(thin)
        if ti.size:
            K = rng.binomial(n_other, pthin[ti])
            rep = np.repeat(np.arange(ti.size), K)
            src = ti[rep]
            # points uniform in the smaller cap: around b when Y <= X, else around a
            centers = np.where(low[src][:, None], b[src], a[src])
            pts = sample_in_cap(rng, centers, small[src])
            # a point breaks the match when it is outside the larger cap
            other = np.where(low[src][:, None], a[src], b[src])
            thr = np.where(low[src], x[src], y[src])
            bad = sin2(other, pts) >= thr
            broken = np.bincount(rep[bad], minlength=ti.size) > 0
            ok[ti] = ~broken
        for i in np.flatnonzero(brute):
            if n_other > _FALLBACK_MAX_CODEWORDS:
                raise ResourceLimitError("ensemble fallback would materialize too many codewords")
            if low[i]:
                pts = _uniform_outside_cap(rng, np.broadcast_to(a[i], (n_other, M)), np.full(n_other, X[i]))
                ok[i] = not np.any(sin2(np.broadcast_to(b[i], pts.shape), pts) < y[i])
            else:
                pts = _uniform_outside_cap(rng, np.broadcast_to(b[i], (n_other, M)), np.full(n_other, Y[i]))
                ok[i] = not np.any(sin2(np.broadcast_to(a[i], pts.shape), pts) < x[i])
        acc = np.flatnonzero(ok)[: n - got]
        if acc.size:
            bb = b[acc]
            r2 = rng.gamma(float(M), 1.0 / quad[acc])
            phase = np.exp(2j * np.pi * rng.random(acc.size))
            hb = (np.sqrt(r2) * phase)[:, None] * bb / vb
            out_a.append(ha[acc])
            out_b.append(hb)
            out_w.append(w[acc])
            got += acc.size
            rate = max(rate, 0.5 * acc.size / k)
    return np.concatenate(out_a), np.concatenate(out_b), np.concatenate(out_w)


def _ensemble_pair(rng, va, vb, B, n):
    """Run the half-sampler with the rejection applied to whichever direction
    density is flatter; the law is symmetric in the two roles."""
    if _acg_peak(va) < _acg_peak(vb):
        hb, ha, w = _ensemble_half(rng, vb, va, B, n)
    else:
        ha, hb, w = _ensemble_half(rng, va, vb, B, n)
    return ha, hb, w


def sample_matched_ensemble(
    rng: np.random.Generator, pre: Precoders, B: int, n: int
) -> MatchedBatch:
    """``n`` matched sets drawn from the match law averaged over random codebooks.

    This is the law of ``(gains, codeword)`` given the match event when the
    codebook is drawn afresh together with the gains, so codebooks count in
    proportion to their match probability.  For a single fixed codebook the
    conditional law differs slightly; the difference shrinks as ``2**B``
    grows.  The two receivers are drawn with independent codebook ensembles.
    """
    if not 0 <= B <= ENSEMBLE_MAX_BITS:
        raise ResourceLimitError(f"ensemble sampler supports 0 <= B <= {ENSEMBLE_MAX_BITS}")
    h11, h12, w1 = _ensemble_pair(rng, pre.v21, pre.v22, B, n)
    h21, h22, w2 = _ensemble_pair(rng, pre.v11, pre.v12, B, n)
    gains = np.stack([h11, h12, h21, h22], axis=1)
    none = np.full(n, -1, dtype=np.int64)
    return MatchedBatch(gains, w1, w2, none, none.copy())


def _joint_reference_half(rng, va, vb, B, n, chunk=1 << 14):
    M = va.size
    N = 2**B
    out_a, out_b, out_w = [], [], []
    got = 0
    k = max(1, min(chunk, (1 << 22) // (N * M)))
    while got < n:
        cb = sample_isotropic(rng, M, (k, N))
        ha = complex_normal(rng, (k, M))
        hb = complex_normal(rng, (k, M))
        ga = np.einsum("knm,km->kn", np.conj(cb), ha * va)
        gb = np.einsum("knm,km->kn", np.conj(cb), hb * vb)
        ia = np.argmax(ga.real**2 + ga.imag**2, axis=1)
        ib = np.argmax(gb.real**2 + gb.imag**2, axis=1)
        hit = np.flatnonzero(ia == ib)[: n - got]
        out_a.append(ha[hit])
        out_b.append(hb[hit])
        out_w.append(cb[hit, ia[hit]])
        got += hit.size
    return np.concatenate(out_a), np.concatenate(out_b), np.concatenate(out_w)


def sample_matched_joint_reference(
    rng: np.random.Generator, pre: Precoders, B: int, n: int
) -> MatchedBatch:
    """Brute-force reference for :func:`sample_matched_ensemble`.

    Each trial draws a whole codebook together with the gains and is kept
    when the receiver is matched, so codebooks enter in proportion to their
    match probability, exactly as in the ensemble law.  Only for small B.
    """
    if 2**B > 1 << 12:
        raise ResourceLimitError("the joint reference sampler is only meant for small B")
    h11, h12, w1 = _joint_reference_half(rng, pre.v21, pre.v22, B, n)
    h21, h22, w2 = _joint_reference_half(rng, pre.v11, pre.v12, B, n)
    gains = np.stack([h11, h12, h21, h22], axis=1)
    none = np.full(n, -1, dtype=np.int64)
    return MatchedBatch(gains, w1, w2, none, none.copy())


# Signals ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StreamSymbols:
    d11: complex
    d12: complex
    d21: complex
    d22: complex


def draw_symbols(rng: np.random.Generator, p: float, M: int) -> StreamSymbols:
    """Gaussian symbols with ``E|d|^2 = M p / 4`` each."""
    d = complex_normal(rng, (4,)) * math.sqrt(M * p / 4.0)
    return StreamSymbols(*map(complex, d))


def transmit(x: XRealization, pre: Precoders, d: StreamSymbols) -> tuple[np.ndarray, np.ndarray]:
    """``x1 = d11 v11 + d21 v21`` and ``x2 = d12 v12 + d22 v22``."""
    if x.M != pre.M:
        raise InvalidOperandsError("realization and precoder dimensions differ")
    x1 = d.d11 * pre.v11 + d.d21 * pre.v21
    x2 = d.d12 * pre.v12 + d.d22 * pre.v22
    return x1, x2


def receive(
    x: XRealization,
    signals: tuple[np.ndarray, np.ndarray],
    rng: Optional[np.random.Generator] = None,
    noiseless: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """``y_j = H_j1 x1 + H_j2 x2 + n_j`` with unit-variance complex noise."""
    x1, x2 = (np.asarray(s, dtype=complex) for s in signals)
    h11, h12, h21, h22 = x.gains
    y1 = h11 * x1 + h12 * x2
    y2 = h21 * x1 + h22 * x2
    if not noiseless:
        if rng is None:
            raise InvalidOperandsError("a generator is required unless noiseless=True")
        y1 = y1 + complex_normal(rng, y1.shape)
        y2 = y2 + complex_normal(rng, y2.shape)
    return y1, y2
