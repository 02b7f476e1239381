"""Ergodic alignment over a finite field: slot matching, encoding, decoding.

A slot ``t`` placed at position ``l`` of a complementary set has signature

    c1 = (h11(t) / h12(t)) * (v21[l] / v22[l])
    c2 = (h21(t) / h22(t)) * (v11[l] / v12[l])

and three slots whose signatures agree at positions 1, 2, 3 satisfy
``H11 v21 = c1 * H12 v22`` and ``H21 v11 = c2 * H22 v12`` entrywise, so each
receiver sees its two interfering streams along one direction.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    DegenerateSetError,
    InvalidOperandsError,
    PreconditionError,
    SingularMatrixError,
)
from .gf import (
    DIM,
    GFElement,
    GFVector,
    check_modulus,
    det_3x3_int,
    element_table,
    inv_int,
    same_direction_int,
    solve_3x3_int,
)
from .stats import Estimate, proportion

POSITIONS = (1, 2, 3)
MAX_PRECODER_DRAWS = 10_000


@dataclass(frozen=True)
class FFSlot:
    t: int
    h11: GFElement
    h12: GFElement
    h21: GFElement
    h22: GFElement

    def __post_init__(self) -> None:
        gains = self.gains
        if len({g.q for g in gains}) != 1:
            raise InvalidOperandsError("slot gains mix moduli")
        if any(g.value == 0 for g in gains):
            raise InvalidOperandsError(f"slot {self.t} has a zero channel gain")

    @property
    def gains(self) -> tuple[GFElement, GFElement, GFElement, GFElement]:
        return (self.h11, self.h12, self.h21, self.h22)

    @property
    def q(self) -> int:
        return self.h11.q

    def kappa(self) -> tuple[int, int]:
        """Gain ratios (h11/h12, h21/h22) as integers."""
        q = self.q
        return (
            self.h11.value * inv_int(self.h12.value, q) % q,
            self.h21.value * inv_int(self.h22.value, q) % q,
        )


@dataclass(frozen=True)
class FFPrecoders:
    v11: GFVector
    v12: GFVector
    v21: GFVector
    v22: GFVector

    def __post_init__(self) -> None:
        vs = self.vectors
        if len({v.q for v in vs}) != 1:
            raise InvalidOperandsError("precoders mix moduli")
        for name, v in zip(("v11", "v12", "v21", "v22"), vs):
            if any(e.value == 0 for e in v):
                raise InvalidOperandsError(f"{name} has a zero entry")
        q = self.q
        for i in range(4):
            for j in range(i + 1, 4):
                if same_direction_int(vs[i].values, vs[j].values, q) is not None:
                    raise InvalidOperandsError("precoders must have pairwise distinct directions")

    @property
    def vectors(self) -> tuple[GFVector, GFVector, GFVector, GFVector]:
        return (self.v11, self.v12, self.v21, self.v22)

    @property
    def q(self) -> int:
        return self.v11.q

    def rho(self, l: int) -> tuple[int, int]:
        """Position ratios (v21[l]/v22[l], v11[l]/v12[l]) for ``l`` in 1..3."""
        _check_position(l)
        q, i = self.q, l - 1
        return (
            self.v21[i].value * inv_int(self.v22[i].value, q) % q,
            self.v11[i].value * inv_int(self.v12[i].value, q) % q,
        )

    def decodable(self) -> bool:
        """True when matched sets built on these precoders can be decoded.

        On a matched set ``H11 = c1 * H12 * diag(v22/v21)``, so the receiver-1
        decoding matrix is ``H12 [c1 diag(v22/v21) v11, v12, v22]`` and its
        rank depends on the precoders alone (likewise for receiver 2).
        """
        q = self.q
        v11, v12, v21, v22 = (v.values for v in self.vectors)
        col1 = [v22[k] * inv_int(v21[k], q) * v11[k] % q for k in range(DIM)]
        col2 = [v12[k] * inv_int(v11[k], q) * v21[k] % q for k in range(DIM)]
        d1 = det_3x3_int([[col1[k], v12[k], v22[k]] for k in range(DIM)], q)
        d2 = det_3x3_int([[col2[k], v22[k], v12[k]] for k in range(DIM)], q)
        return d1 != 0 and d2 != 0


def _check_position(l: int) -> None:
    if l not in POSITIONS:
        raise InvalidOperandsError(f"position must be 1, 2 or 3, got {l}")


def _vec(values: Iterable[int], q: int) -> GFVector:
    return GFVector(tuple(GFElement(int(v) % q, q) for v in values))


def random_precoders(q: int, rng: np.random.Generator, decodable: bool = True) -> FFPrecoders:
    """Draw precoders with nonzero entries and distinct directions.

    With ``decodable`` set, draws whose matched sets would be singular at
    either receiver are redrawn.  GF(3) has no decodable precoders at all
    (all 384 valid choices are singular), so the redraw loop is capped at
    ``MAX_PRECODER_DRAWS`` attempts.
    """
    check_modulus(q)
    for _ in range(MAX_PRECODER_DRAWS):
        vals = rng.integers(1, q, size=(4, DIM))
        try:
            pre = FFPrecoders(*(_vec(row, q) for row in vals))
        except InvalidOperandsError:
            continue
        if not decodable or pre.decodable():
            return pre
    raise DegenerateSetError(f"no decodable precoders found over GF({q}) in {MAX_PRECODER_DRAWS} draws")


def random_slots(q: int, rng: np.random.Generator, n: int, start: int = 1) -> list[FFSlot]:
    """Return ``n`` slots with uniform gains, discarding any slot with a zero gain.

    Time indices count every drawn slot, discarded ones included.
    """
    check_modulus(q)
    out: list[FFSlot] = []
    el = element_table(q)
    t = start
    while len(out) < n:
        batch = rng.integers(0, q, size=(max(16, 2 * (n - len(out))), 4))
        for row in batch.tolist():
            if len(out) == n:
                break
            if all(row):
                out.append(FFSlot(t, *(el[g] for g in row)))
            t += 1
    return out


def slot_signature(slot: FFSlot, pre: FFPrecoders, l: int) -> tuple[GFElement, GFElement]:
    """Alignment constants (c1, c2) of ``slot`` if it occupies position ``l``."""
    if slot.q != pre.q:
        raise InvalidOperandsError("slot and precoders use different fields")
    q = pre.q
    k1, k2 = slot.kappa()
    r1, r2 = pre.rho(l)
    el = element_table(q)
    return el[k1 * r1 % q], el[k2 * r2 % q]


@dataclass(eq=False)
class FFComplementarySet:
    label: tuple[GFElement, GFElement]
    members: list[tuple[int, int]] = field(default_factory=list)
    slots: list[FFSlot] = field(default_factory=list)
    index: int = 0

    @property
    def state(self) -> str:
        return "matched" if len(self.members) == DIM else "open"

    @property
    def next_position(self) -> int:
        return len(self.members) + 1

    def add(self, slot: FFSlot) -> None:
        if len(self.members) >= DIM:
            raise PreconditionError("complementary set is already matched")
        self.members.append((slot.t, self.next_position))
        self.slots.append(slot)


class StreamMatcher:
    """Online greedy grouping of slots into complementary sets.

    An arriving slot joins the earliest-created open set whose label it
    satisfies at that set's next free position, or else opens a new set.
    Open sets are indexed by the gain ratios a slot must have to fill their
    next position, so each arrival is a dictionary lookup.
    """

    def __init__(self, pre: FFPrecoders):
        self.pre = pre
        self.q = pre.q
        self._rho = {l: pre.rho(l) for l in POSITIONS}
        self._waiting: dict[tuple[int, int], list[tuple[int, FFComplementarySet]]] = {}
        self._count = 0
        self.matched: list[FFComplementarySet] = []

    def _required(self, s: FFComplementarySet) -> tuple[int, int]:
        q = self.q
        r1, r2 = self._rho[s.next_position]
        return (
            s.label[0].value * inv_int(r1, q) % q,
            s.label[1].value * inv_int(r2, q) % q,
        )

    def _park(self, s: FFComplementarySet) -> None:
        heapq.heappush(self._waiting.setdefault(self._required(s), []), (s.index, s))

    def push(self, slot: FFSlot) -> Optional[FFComplementarySet]:
        """Place one slot; return the set it completed, if any."""
        if slot.q != self.q:
            raise InvalidOperandsError("slot and precoders use different fields")
        key = slot.kappa()
        heap = self._waiting.get(key)
        if heap:
            _, s = heapq.heappop(heap)
            if not heap:
                del self._waiting[key]
            s.add(slot)
            if s.state == "matched":
                self.matched.append(s)
                return s
            self._park(s)
            return None
        self._count += 1
        s = FFComplementarySet(slot_signature(slot, self.pre, 1), index=self._count)
        s.add(slot)
        self._park(s)
        return None

    def open_sets(self) -> list[FFComplementarySet]:
        sets = [s for heap in self._waiting.values() for _, s in heap]
        return sorted(sets, key=lambda s: s.index)


def match_stream(
    slots: Iterable[FFSlot], pre: FFPrecoders
) -> tuple[list[FFComplementarySet], list[FFComplementarySet]]:
    """Group a slot sequence into (matched sets, still-open sets)."""
    m = StreamMatcher(pre)
    for slot in slots:
        m.push(slot)
    return m.matched, m.open_sets()


def ff_encode(
    data: Sequence[GFElement], pre: FFPrecoders, l: int
) -> tuple[GFElement, GFElement]:
    """Antenna outputs at position ``l`` for data ``(d11, d12, d21, d22)``.

    Transmitter i sends ``d1i * v1i[l] + d2i * v2i[l]``.
    """
    _check_position(l)
    d11, d12, d21, d22 = data
    i = l - 1
    x1 = d11 * pre.v11[i] + d21 * pre.v21[i]
    x2 = d12 * pre.v12[i] + d22 * pre.v22[i]
    return x1, x2


def ff_channel(slot: FFSlot, x1: GFElement, x2: GFElement) -> tuple[GFElement, GFElement]:
    """Noise-free finite-field channel for one slot."""
    return slot.h11 * x1 + slot.h12 * x2, slot.h21 * x1 + slot.h22 * x2


def ff_transmit_set(
    s: FFComplementarySet, pre: FFPrecoders, data: Sequence[GFElement]
) -> tuple[GFVector, GFVector]:
    """Send one data tuple over a matched set; return the received 3-vectors."""
    if s.state != "matched":
        raise PreconditionError("can only transmit over a matched set")
    q = pre.q
    d11, d12, d21, d22 = (d.value for d in data)
    v11, v12, v21, v22 = (v.values for v in pre.vectors)
    el = element_table(q)
    y1, y2 = [], []
    for slot, (_, l) in zip(s.slots, s.members):
        i = l - 1
        x1 = d11 * v11[i] + d21 * v21[i]
        x2 = d12 * v12[i] + d22 * v22[i]
        h11, h12, h21, h22 = (g.value for g in slot.gains)
        y1.append(el[(h11 * x1 + h12 * x2) % q])
        y2.append(el[(h21 * x1 + h22 * x2) % q])
    return GFVector(tuple(y1)), GFVector(tuple(y2))


def _effective(s: FFComplementarySet, pre: FFPrecoders, names: Sequence[str]) -> dict[str, list[int]]:
    """Entries of ``H_ij v_kl`` over the set, e.g. name ``"H11v21"``, in position order."""
    q = pre.q
    v = dict(zip(("11", "12", "21", "22"), (vec.values for vec in pre.vectors)))
    hidx = {"11": 0, "12": 1, "21": 2, "22": 3}
    out: dict[str, list[int]] = {}
    for name in names:
        g, p = hidx[name[1:3]], v[name[4:6]]
        out[name] = [slot.gains[g].value * p[l - 1] % q for slot, (_, l) in zip(s.slots, s.members)]
    return out


def decoding_matrices(s: FFComplementarySet, pre: FFPrecoders) -> tuple[list[list[int]], list[list[int]]]:
    """Receiver-1 columns (H11 v11, H12 v12, H12 v22); receiver 2 (H21 v21, H22 v22, H22 v12)."""
    e = _effective(s, pre, ("H11v11", "H12v12", "H12v22", "H21v21", "H22v22", "H22v12"))
    A1 = [list(r) for r in zip(e["H11v11"], e["H12v12"], e["H12v22"])]
    A2 = [list(r) for r in zip(e["H21v21"], e["H22v22"], e["H22v12"])]
    return A1, A2


def alignment_constants(s: FFComplementarySet, pre: FFPrecoders) -> tuple[Optional[int], Optional[int]]:
    """Scalars c with H11 v21 = c1 * H12 v22 and H21 v11 = c2 * H22 v12 (None if not aligned)."""
    e = _effective(s, pre, ("H11v21", "H12v22", "H21v11", "H22v12"))
    q = pre.q
    return (
        same_direction_int(e["H11v21"], e["H12v22"], q),
        same_direction_int(e["H21v11"], e["H22v12"], q),
    )


def ff_decode(
    s: FFComplementarySet, received: tuple[GFVector, GFVector], pre: FFPrecoders
) -> tuple[GFElement, GFElement, GFElement, GFElement]:
    """Recover ``(d11, d12, d21, d22)`` from the received vectors of a matched set.

    Each receiver solves for its two streams plus one coefficient along the
    aligned interference direction, and drops that coefficient.
    """
    if s.state != "matched":
        raise PreconditionError("can only decode a matched set")
    q = pre.q
    c1, c2 = alignment_constants(s, pre)
    if (c1, c2) != (s.label[0].value, s.label[1].value):
        raise PreconditionError("interference is not aligned on this set")
    A1, A2 = decoding_matrices(s, pre)
    y1, y2 = received
    try:
        x1 = solve_3x3_int(A1, y1.values, q)
        x2 = solve_3x3_int(A2, y2.values, q)
    except SingularMatrixError as exc:
        raise DegenerateSetError(str(exc)) from exc
    d11, d12, _ = x1
    d21, d22, _ = x2
    el = element_table(q)
    return el[d11], el[d12], el[d21], el[d22]


# Monte Carlo and sizing helpers -------------------------------------------------


def _inverse_table(q: int) -> np.ndarray:
    tab = np.zeros(q, dtype=np.int64)
    for a in range(1, q):
        tab[a] = pow(a, -1, q)
    return tab


def signature_samples(
    q: int, pre: FFPrecoders, rng: np.random.Generator, n: int, l: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Signatures (c1, c2) of ``n`` random nonzero-gain slots at position ``l``."""
    inv = _inverse_table(q)
    h = rng.integers(1, q, size=(n, 4))
    r1, r2 = pre.rho(l)
    c1 = h[:, 0] * inv[h[:, 1]] % q * r1 % q
    c2 = h[:, 2] * inv[h[:, 3]] % q * r2 % q
    return c1, c2


def triple_match_probability(
    q: int, trials: int, rng: np.random.Generator, pre: Optional[FFPrecoders] = None
) -> Estimate:
    """Fraction of random slot triples (in time order, positions 1..3) that match."""
    check_modulus(q)
    if pre is None:
        pre = random_precoders(q, rng)
    inv = _inverse_table(q)
    h = rng.integers(1, q, size=(trials, 3, 4))
    k1 = h[..., 0] * inv[h[..., 1]] % q
    k2 = h[..., 2] * inv[h[..., 3]] % q
    rho = np.array([pre.rho(l) for l in POSITIONS])
    c1 = k1 * rho[:, 0] % q
    c2 = k2 * rho[:, 1] % q
    hit = (c1[:, 0] == c1[:, 1]) & (c1[:, 1] == c1[:, 2]) & (c2[:, 0] == c2[:, 1]) & (c2[:, 1] == c2[:, 2])
    return proportion(int(hit.sum()), trials)


def expected_delay_scaling(q: int, target_prob: float) -> int:
    """Smallest n with C(n, 3) / (q - 1)^4 >= target_prob (never below 3)."""
    if q < 3:
        raise InvalidOperandsError("q must be >= 3")
    need = target_prob * (q - 1) ** 4
    n = 3
    while math.comb(n, 3) < need:
        n += 1
    return n


@dataclass(frozen=True)
class FFDemoResult:
    q: int
    sets: int
    decoded: int
    degenerate: int
    errors: int
    slots_used: int
    open_sets: int


def run_ff_demo(q: int, n_sets: int, rng: np.random.Generator, pre: Optional[FFPrecoders] = None) -> FFDemoResult:
    """Match a random slot stream until ``n_sets`` sets complete, then send
    uniform random data over each and count decoding errors."""
    if pre is None:
        pre = random_precoders(q, rng)
    matcher = StreamMatcher(pre)
    used = 0
    t = 1
    while len(matcher.matched) < n_sets:
        for slot in random_slots(q, rng, 256, start=t):
            used += 1
            matcher.push(slot)
            if len(matcher.matched) == n_sets:
                break
        t = slot.t + 1
    decoded = degenerate = errors = 0
    data = rng.integers(0, q, size=(n_sets, 4))
    el = element_table(q)
    for s, d in zip(matcher.matched, data):
        tx = tuple(el[v] for v in d.tolist())
        rx = ff_transmit_set(s, pre, tx)
        try:
            got = ff_decode(s, rx, pre)
        except DegenerateSetError:
            degenerate += 1
            continue
        decoded += 1
        errors += got != tx
    return FFDemoResult(q, n_sets, decoded, degenerate, errors, used, len(matcher.open_sets()))
