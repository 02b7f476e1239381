"""Experiment driver: configuration, deterministic execution and result files.

A run is described by a :class:`RunConfig`, built from a flat ``key = value``
file and/or command-line flags (flags win).  :func:`run` executes the named
experiment and returns a :class:`RunSummary` holding one row per sweep
point plus the pass/fail checks with their tolerances; :func:`emit` writes
it as CSV or JSON.

Monte Carlo work is cut into chunks of ``CHUNK`` samples.  Chunk ``c`` of
sweep point ``k`` draws from ``substream(seed, experiment, k, c)``, and
chunk results are combined in chunk order, so output files are identical
for any number of workers.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np
from scipy import stats as sps

from . import __version__
from .cgeom import normalize, projection_norm_samples, sample_isotropic, sin2
from .errors import UsageError
from .ff_align import expected_delay_scaling, random_precoders, run_ff_demo, triple_match_probability
from .rates import (
    batch_geometry,
    bits_for_power,
    check_alpha,
    db_to_linear,
    dof_report,
    normalized_total,
    power_samples,
    rate_report,
    vanishing_gap_bits,
)
from .rng import check_seed, chunk_sizes, substream
from .rvq import exact_mean_error, generate_codebook, lemma1_bound, quantize_with_error
from .stats import Estimate, ks_critical, mean_se, proportion, proportion_vs
from .xsim import (
    MatchedBatch,
    Precoders,
    draw_precoders,
    interference_directions,
    match_probability,
    sample_matched_ensemble,
    sample_matched_joint_reference,
    sample_matched_rejection,
    sample_matched_stream,
)

EXPERIMENTS = (
    "ff-demo",
    "ff-match-stats",
    "beta-check",
    "lemma1",
    "lemma2",
    "match-stats",
    "sampler-equivalence",
    "rate-gap",
    "gap-vs-B",
    "dof-sweep",
    "symmetry-check",
)
MODES = ("ensemble", "rejection-conditioning", "stream-search")
FORMATS = ("csv", "json")
CHUNK = 2000

# Experiments that sample fading matched sets; they accept B or alpha.
FADING = ("match-stats", "sampler-equivalence", "rate-gap", "gap-vs-B", "dof-sweep", "symmetry-check")


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    seed: int
    q: Optional[tuple[int, ...]] = None
    M: tuple[int, ...] = (3,)
    B: Optional[tuple[int, ...]] = None
    alpha: Optional[tuple[float, ...]] = None
    p_db: Optional[tuple[float, ...]] = None
    n_slots: Optional[int] = None
    trials: int = 10**4
    mode: str = "ensemble"
    output: Optional[str] = None
    format: str = "csv"
    workers: int = 1

    def echo(self) -> dict:
        """Config as plain data, without fields that do not affect results."""
        d = asdict(self)
        for k in ("output", "workers"):
            d.pop(k)
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


# Config parsing -----------------------------------------------------------------


def _int(key: str, s: str) -> int:
    try:
        return int(s, 0) if isinstance(s, str) else int(s)
    except (TypeError, ValueError):
        raise UsageError(f"{key}: expected an integer, got {s!r}") from None


def _float(key: str, s: str) -> float:
    try:
        v = float(s)
    except (TypeError, ValueError):
        raise UsageError(f"{key}: expected a number, got {s!r}") from None
    if not math.isfinite(v):
        raise UsageError(f"{key}: expected a finite number, got {s!r}")
    return v


def _list(conv):
    def parse(key: str, s) -> tuple:
        if isinstance(s, (list, tuple)):
            items = list(s)
        else:
            items = [t for t in str(s).replace(",", " ").split() if t]
        if not items:
            raise UsageError(f"{key}: expected at least one value")
        return tuple(conv(key, t) for t in items)

    return parse


def _choice(options):
    def parse(key: str, s: str) -> str:
        if s not in options:
            raise UsageError(f"{key}: expected one of {', '.join(options)}, got {s!r}")
        return s

    return parse


def _str(key: str, s) -> str:
    return str(s)


_PARSERS: dict[str, Callable[[str, Any], Any]] = {
    "experiment": _choice(EXPERIMENTS),
    "seed": _int,
    "q": _list(_int),
    "M": _list(_int),
    "B": _list(_int),
    "alpha": _list(_float),
    "p_db": _list(_float),
    "n_slots": _int,
    "trials": _int,
    "mode": _choice(MODES),
    "output": _str,
    "format": _choice(FORMATS),
    "workers": _int,
}
_ALIASES = {"out": "output", "m": "M", "b": "B"}


def canonical_key(key: str) -> str:
    k = key.strip().replace("-", "_")
    k = _ALIASES.get(k, k)
    if k not in _PARSERS:
        raise UsageError(f"unknown configuration key {key!r}")
    return k


def read_config_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        k, v = line.split("=", 1)
        out[canonical_key(k)] = v.strip()
    return out


def parse_config(
    file: Optional[str] = None, flags: Optional[dict[str, Any]] = None
) -> RunConfig:
    """Merge a config file and flag overrides into a validated RunConfig.

    ``flags`` entries whose value is ``None`` are ignored.
    """
    raw: dict[str, Any] = {}
    if file is not None:
        raw.update(read_config_file(file))
    for k, v in (flags or {}).items():
        if v is not None:
            raw[canonical_key(k)] = v
    values = {k: _PARSERS[k](k, v) for k, v in raw.items()}
    if "experiment" not in values:
        raise UsageError("missing required key 'experiment'")
    if "seed" not in values:
        raise UsageError("missing required key 'seed'")
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    try:
        check_seed(cfg.seed)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"seed: {exc}") from None
    if cfg.B is not None and cfg.alpha is not None:
        raise UsageError("B and alpha: set at most one of them")
    if cfg.alpha is not None and cfg.experiment not in FADING:
        raise UsageError(f"alpha: not used by {cfg.experiment}")
    if cfg.trials < 1:
        raise UsageError("trials: must be positive")
    if cfg.workers < 1:
        raise UsageError("workers: must be positive")
    if cfg.n_slots is not None and cfg.n_slots < 1:
        raise UsageError("n_slots: must be positive")
    for m in cfg.M:
        if not 1 <= m <= 8:
            raise UsageError(f"M: {m} outside the supported range 1..8")
    if cfg.B is not None and any(b < 0 for b in cfg.B):
        raise UsageError("B: must be non-negative")
    if cfg.alpha is not None:
        for m in cfg.M:
            for a in cfg.alpha:
                try:
                    check_alpha(a, m)
                except ValueError as exc:
                    raise UsageError(f"alpha: {exc}") from None


# Summary and output -----------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    target: float
    tolerance: str


@dataclass
class RunSummary:
    experiment: str
    config: dict
    columns: list[str]
    rows: list[dict]
    checks: list[Check]
    version: str = __version__
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def payload(self) -> dict:
        """Everything written to JSON: the summary minus the wall time, which
        would make otherwise identical runs differ."""
        return {
            "experiment": self.experiment,
            "version": self.version,
            "config": self.config,
            "columns": self.columns,
            "rows": [{c: r[c] for c in self.columns} for r in self.rows],
            "checks": [asdict(c) for c in self.checks],
            "passed": self.passed,
        }


def _plain(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _cell(v) -> str:
    v = _plain(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def render(summary: RunSummary, fmt: str) -> str:
    if fmt == "csv":
        lines = [",".join(summary.columns)]
        for r in summary.rows:
            lines.append(",".join(_cell(r[c]) for c in summary.columns))
        return "\n".join(lines) + "\n"
    if fmt == "json":
        def default(o):
            p = _plain(o)
            if p is o:
                raise TypeError(f"cannot serialize {type(o).__name__}")
            return p

        return json.dumps(summary.payload(), indent=2, sort_keys=True, default=default, allow_nan=True) + "\n"
    raise UsageError(f"format: unknown format {fmt!r}")


def emit(summary: RunSummary, fmt: str, path: Optional[str] = None) -> str:
    """Write the summary to ``path`` atomically (or return the text when
    ``path`` is None).  I/O errors name the path."""
    text = render(summary, fmt)
    if path is None:
        return text
    target = Path(path)
    tmp = None
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=str(target.parent or Path(".")))
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
        tmp = None
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    finally:
        if tmp is not None and os.path.exists(tmp):
            os.unlink(tmp)
    return text


# Execution helpers ------------------------------------------------------------------


class _Runner:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.pool = ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None

    def close(self) -> None:
        if self.pool is not None:
            self.pool.shutdown()

    def map(self, fn, items: Sequence) -> list:
        if self.pool is None:
            return [fn(x) for x in items]
        return list(self.pool.map(fn, items))

    def chunked(self, key: tuple, total: int, fn: Callable[[np.random.Generator, int], Any]) -> list:
        """Run ``fn(rng, size)`` over fixed-size chunks; results in chunk order."""
        sizes = chunk_sizes(total, CHUNK)
        jobs = [(c, n) for c, n in enumerate(sizes)]
        return self.map(lambda job: fn(substream(self.cfg.seed, self.cfg.experiment, *key, job[0]), job[1]), jobs)

    def precoders(self, M: int) -> Precoders:
        return draw_precoders(substream(self.cfg.seed, "precoders", M), M)


def _z_check(name: str, est: Estimate, target: float, k: float = 3.0) -> Check:
    return Check(name, bool(abs(est.mean - target) <= k * est.stderr), est.mean, target, f"|mean - target| <= {k:g} stderr")


def _one_M(cfg: RunConfig) -> int:
    if len(cfg.M) != 1:
        raise UsageError(f"M: {cfg.experiment} takes a single dimension")
    return cfg.M[0]


# Experiments --------------------------------------------------------------------------


def _ff_demo(cfg: RunConfig, r: _Runner):
    qs = cfg.q or (5, 7, 11)
    cols = ["q", "sets", "decoded", "degenerate", "errors", "slots_used", "open_sets", "pass"]
    rows, checks = [], []
    results = r.map(lambda q: run_ff_demo(q, cfg.trials, substream(cfg.seed, cfg.experiment, q)), qs)
    for q, res in zip(qs, results):
        ok = res.errors == 0 and res.decoded + res.degenerate == res.sets
        rows.append(dict(q=q, sets=res.sets, decoded=res.decoded, degenerate=res.degenerate, errors=res.errors,
                         slots_used=res.slots_used, open_sets=res.open_sets, **{"pass": ok}))
        checks.append(Check(f"ff-decode q={q}", ok, float(res.errors), 0.0, "exact: zero decode errors"))
    return cols, rows, checks


def _ff_match_stats(cfg: RunConfig, r: _Runner):
    qs = cfg.q or (5,)
    cols = ["q", "trials", "hits", "p_hat", "stderr", "expected", "z", "delay_n", "pass"]
    rows, checks = [], []
    for k, q in enumerate(qs):
        pre = random_precoders(q, substream(cfg.seed, "ff-precoders", q))
        parts = r.chunked((k,), cfg.trials, lambda rng, n: round(triple_match_probability(q, n, rng, pre).mean * n))
        hits = int(sum(parts))
        p0 = 1.0 / (q - 1) ** 4
        est, z = proportion_vs(hits, cfg.trials, p0)
        ok = abs(z) <= 3.0
        rows.append(dict(q=q, trials=cfg.trials, hits=hits, p_hat=est.mean, stderr=est.stderr, expected=p0, z=z,
                         delay_n=expected_delay_scaling(q, 1.0), **{"pass": ok}))
        checks.append(Check(f"ff-match q={q}", ok, est.mean, p0, "|z| <= 3 (stderr under the expected rate)"))
    return cols, rows, checks


def _beta_check(cfg: RunConfig, r: _Runner):
    cols = ["M", "trials", "ks_stat", "ks_critical", "mean_overlap", "expected_mean", "pass"]
    rows, checks = [], []
    for k, M in enumerate(cfg.M):
        if M < 2:
            raise UsageError("M: beta-check needs M >= 2")

        def chunk(rng, n, M=M):
            a = sample_isotropic(rng, M, n)
            b = sample_isotropic(rng, M, n)
            return np.abs(np.sum(np.conj(a) * b, axis=-1)) ** 2

        z = np.concatenate(r.chunked((k,), cfg.trials, chunk))
        d = float(sps.kstest(z, lambda t: 1.0 - (1.0 - np.clip(t, 0, 1)) ** (M - 1)).statistic)
        crit = ks_critical(z.size, 0.01)
        ok = d < crit
        rows.append(dict(M=M, trials=z.size, ks_stat=d, ks_critical=crit, mean_overlap=mean_se(z).mean,
                         expected_mean=1.0 / M, **{"pass": ok}))
        checks.append(Check(f"beta-law M={M}", ok, d, crit, "KS statistic below the 1% critical value"))
    return cols, rows, checks


def _lemma1(cfg: RunConfig, r: _Runner):
    M = _one_M(cfg)
    Bs = cfg.B or (2, 4, 8, 12)
    cols = ["M", "B", "trials", "mean_error", "stderr", "bound", "exact_mean", "ccdf_0.1", "ccdf_0.3", "ccdf_0.5", "pass"]
    rows, checks = [], []
    for k, B in enumerate(Bs):
        cb = generate_codebook(cfg.seed, M, B)
        err = np.concatenate(r.chunked((k,), cfg.trials, lambda rng, n: quantize_with_error(cb, sample_isotropic(rng, M, n))[1]))
        est = mean_se(err)
        bound = lemma1_bound(M, B)
        ok = est.mean + 3.0 * est.stderr < bound
        rows.append(dict(M=M, B=B, trials=est.n, mean_error=est.mean, stderr=est.stderr, bound=bound,
                         exact_mean=exact_mean_error(M, B), **{f"ccdf_{x}": float(np.mean(err > x)) for x in (0.1, 0.3, 0.5)},
                         **{"pass": ok}))
        checks.append(Check(f"lemma1 M={M} B={B}", ok, est.mean, bound, "mean + 3 stderr < bound"))
    return cols, rows, checks


def _lemma2(cfg: RunConfig, r: _Runner):
    cols = ["M", "trials", "mean", "stderr", "expected", "z", "pass"]
    rows, checks = [], []
    for k, M in enumerate(cfg.M):
        x = np.concatenate(r.chunked((k,), cfg.trials, lambda rng, n, M=M: projection_norm_samples(M, n, rng)))
        est = mean_se(x)
        target = (M - 1) / M
        chk = _z_check(f"lemma2 M={M}", est, target)
        rows.append(dict(M=M, trials=est.n, mean=est.mean, stderr=est.stderr, expected=target,
                         z=est.z(target), **{"pass": chk.passed}))
        checks.append(chk)
    return cols, rows, checks


def _match_stats(cfg: RunConfig, r: _Runner):
    M = _one_M(cfg)
    Bs = cfg.B or (2, 3, 4)
    pre = r.precoders(M)
    cols = ["M", "B", "trials", "hits_rx1", "hits_rx2", "hits", "p_hat", "stderr", "expected", "z", "ratio", "pass"]
    rows, checks = [], []
    for k, B in enumerate(Bs):
        cb = generate_codebook(cfg.seed, M, B)
        parts = r.chunked((k,), cfg.trials, lambda rng, n: match_probability(rng, pre, cb, n))
        h1 = sum(round(p["rx1"].mean * p["rx1"].n) for p in parts)
        h2 = sum(round(p["rx2"].mean * p["rx2"].n) for p in parts)
        h = sum(round(p["both"].mean * p["both"].n) for p in parts)
        est = proportion(h, cfg.trials)
        p0 = 2.0 ** (-2 * B)
        chk = _z_check(f"fading-match M={M} B={B}", est, p0)
        rows.append(dict(M=M, B=B, trials=cfg.trials, hits_rx1=h1, hits_rx2=h2, hits=h, p_hat=est.mean,
                         stderr=est.stderr, expected=p0, z=est.z(p0), ratio=est.mean / p0, **{"pass": chk.passed}))
        checks.append(chk)
    return cols, rows, checks


def _a1(batch: MatchedBatch, pre: Precoders) -> np.ndarray:
    q21, _, _, _ = interference_directions(batch.gains, pre)
    return sin2(batch.w1, normalize(q21))


def _sampler_equivalence(cfg: RunConfig, r: _Runner):
    """Fixed codebook: stream search against rejection conditioning; plus the
    codebook-ensemble sampler against its brute-force reference."""
    M = _one_M(cfg)
    B = (cfg.B or (6,))[0]
    n_slots = cfg.n_slots or 200
    pre = r.precoders(M)
    cb = generate_codebook(cfg.seed, M, B)
    n = cfg.trials
    stream, streams = sample_matched_stream(substream(cfg.seed, cfg.experiment, "stream"), pre, cb, n, n_slots)
    rej = sample_matched_rejection(substream(cfg.seed, cfg.experiment, "rejection"), pre, cb, n)
    ens = sample_matched_ensemble(substream(cfg.seed, cfg.experiment, "ensemble"), pre, B, n)
    ref = sample_matched_joint_reference(substream(cfg.seed, cfg.experiment, "reference"), pre, B, n)
    cols = ["comparison", "B", "n_slots", "samples", "ks_stat", "p_value", "mean_first", "mean_second", "pass"]
    rows, checks = [], []
    for label, first, second in (("stream-vs-rejection", stream, rej), ("ensemble-vs-reference", ens, ref)):
        x, y = _a1(first, pre), _a1(second, pre)
        t = sps.ks_2samp(x, y)
        ok = bool(t.pvalue > 0.01)
        rows.append(dict(comparison=label, B=B, n_slots=n_slots if label.startswith("stream") else 0,
                         samples=n, ks_stat=float(t.statistic), p_value=float(t.pvalue),
                         mean_first=mean_se(x).mean, mean_second=mean_se(y).mean, **{"pass": ok}))
        checks.append(Check(f"sampler {label} B={B}", ok, float(t.pvalue), 0.01, "two-sample KS p-value > 0.01"))
    return cols, rows, checks


def _matched(cfg: RunConfig, r: _Runner, key: tuple, pre: Precoders, M: int, B: int, n: int) -> MatchedBatch:
    """``n`` matched sets by the configured mode, chunked deterministically."""
    if cfg.mode == "ensemble":
        fn = lambda rng, k: sample_matched_ensemble(rng, pre, B, k)
    elif cfg.mode == "rejection-conditioning":
        cb = generate_codebook(cfg.seed, M, B)
        fn = lambda rng, k: sample_matched_rejection(rng, pre, cb, k)
    else:
        cb = generate_codebook(cfg.seed, M, B)
        slots = cfg.n_slots or 200
        fn = lambda rng, k: sample_matched_stream(rng, pre, cb, k, slots)[0]
    return MatchedBatch.concat(r.chunked(key, n, fn))


_RATE_COLS = ["p_db", "B", "c_ideal", "c_hat", "gap", "gap_bound", "stderr_gap", "stderr_c_hat", "mean_I", "n_eff", "degenerate", "pass"]


def _rate_row(p_db: float, rep) -> dict:
    return dict(p_db=p_db, B=rep.B, c_ideal=rep.c_ideal.mean, c_hat=rep.c_hat.mean, gap=rep.gap.mean,
                gap_bound=rep.gap_bound, stderr_gap=rep.gap.stderr, stderr_c_hat=rep.c_hat.stderr,
                mean_I=rep.I.mean, n_eff=rep.trials, degenerate=rep.degenerate, **{"pass": rep.gap_ok})


def _rate_gap(cfg: RunConfig, r: _Runner):
    M = _one_M(cfg)
    pre = r.precoders(M)
    p_dbs = cfg.p_db or (10.0, 20.0, 30.0)
    rows, checks = [], []
    k = 0
    for p_db in p_dbs:
        p = db_to_linear(p_db)
        Bs = tuple(bits_for_power(a, p) for a in cfg.alpha) if cfg.alpha else (cfg.B or (6, 10, 14))
        for B in Bs:
            batch = _matched(cfg, r, (k,), pre, M, B, cfg.trials)
            rep = rate_report(batch_geometry(batch, pre), p, B, M)
            rows.append(_rate_row(p_db, rep))
            checks.append(Check(f"gap p_db={p_db:g} B={B}", rep.gap_ok, rep.gap.mean, rep.gap_bound,
                                "gap <= bound + 3 stderr (paired)"))
            k += 1
    return _RATE_COLS, rows, checks


def _gap_vs_B(cfg: RunConfig, r: _Runner):
    """Gap as feedback grows with power.  Without B or alpha, each power uses
    ``B = round(2 log2 p + 4 log2 log2 p)`` and the gap must fall as p rises."""
    M = _one_M(cfg)
    pre = r.precoders(M)
    p_dbs = cfg.p_db or (20.0, 40.0)
    rows, checks = [], []
    k = 0
    for p_db in p_dbs:
        p = db_to_linear(p_db)
        if cfg.B:
            Bs = cfg.B
        elif cfg.alpha:
            Bs = tuple(bits_for_power(a, p) for a in cfg.alpha)
        else:
            Bs = (vanishing_gap_bits(p),)
        for B in Bs:
            batch = _matched(cfg, r, (k,), pre, M, B, cfg.trials)
            rep = rate_report(batch_geometry(batch, pre), p, B, M)
            rows.append(_rate_row(p_db, rep))
            checks.append(Check(f"gap p_db={p_db:g} B={B}", rep.gap_ok, rep.gap.mean, rep.gap_bound,
                                "gap <= bound + 3 stderr (paired)"))
            k += 1
    if not cfg.B and not cfg.alpha:
        for a, b in zip(rows, rows[1:]):
            ok = b["gap"] < a["gap"]
            checks.append(Check(f"gap decreases p_db {a['p_db']:g}->{b['p_db']:g}", ok, b["gap"], a["gap"],
                                "strictly smaller point estimate"))
    return _RATE_COLS, rows, checks


def _dof_sweep(cfg: RunConfig, r: _Runner):
    M = _one_M(cfg)
    pre = r.precoders(M)
    alphas = cfg.alpha or (1.0, 2.0)
    p_dbs = cfg.p_db or (20.0, 30.0, 40.0)
    if len(p_dbs) < 2:
        raise UsageError("p_db: dof-sweep needs at least two powers")
    cols = ["alpha", "p_db", "B", "log_sinr", "stderr", "n_eff", "slope", "slope_all", "expected",
            "per_slot", "total", "total_per_slot", "total_normalized", "pass"]
    rows, checks, reports = [], [], []
    k = 0
    for a in alphas:
        check_alpha(a, M)
        Bs, ests = [], []
        for p_db in p_dbs:
            p = db_to_linear(p_db)
            B = bits_for_power(a, p)
            batch = _matched(cfg, r, (k,), pre, M, B, cfg.trials)
            S, I, _ = power_samples(batch_geometry(batch, pre), p, M)
            Bs.append(B)
            ests.append(mean_se(np.log2(1.0 + S / (I + 1.0))))
            k += 1
        rep = dof_report(a, M, p_dbs, Bs, ests)
        reports.append(rep)
        ok = abs(rep.slope - rep.expected) <= 0.1
        for p_db, B, e in zip(p_dbs, Bs, ests):
            rows.append(dict(alpha=a, p_db=p_db, B=B, log_sinr=e.mean, stderr=e.stderr, n_eff=e.n,
                             slope=rep.slope, slope_all=rep.slope_all, expected=rep.expected,
                             per_slot=rep.per_slot, total=rep.total, total_per_slot=rep.total_per_slot,
                             **{"pass": ok}))
        checks.append(Check(f"dof alpha={a:g}", ok, rep.slope, rep.expected, "|slope - alpha/(M-1)| <= 0.1"))
    # Total relative to the full-feedback sweep, when alpha = M-1 was run.
    full = next((rep for rep in reports if rep.alpha == M - 1), None)
    per_alpha = {rep.alpha: (normalized_total(rep, full) if full else None) for rep in reports}
    for row in rows:
        row["total_normalized"] = per_alpha[row["alpha"]]
    return cols, rows, checks


def _symmetry_check(cfg: RunConfig, r: _Runner):
    """Each decoding path against receiver 1 / stream d11 under the matching
    relabelling of the precoders; the two rates must agree statistically."""
    M = _one_M(cfg)
    pre = r.precoders(M)
    p_db = (cfg.p_db or (20.0,))[0]
    p = db_to_linear(p_db)
    B = bits_for_power(cfg.alpha[0], p) if cfg.alpha else (cfg.B or (10,))[0]
    v11, v12, v21, v22 = pre.vectors
    cases = (
        # label, (receiver, stream), relabelled precoders for the d11 path
        ("d12@rx1", (1, 2), Precoders(v12, v11, v22, v21)),
        ("d21@rx2", (2, 1), Precoders(v21, v22, v11, v12)),
        ("d22@rx2", (2, 2), Precoders(v22, v21, v12, v11)),
    )
    cols = ["stream", "p_db", "B", "c_hat", "stderr", "c_hat_relabelled", "stderr_relabelled", "z", "pass"]
    rows, checks = [], []
    for k, (label, (rx, st), swapped) in enumerate(cases):
        b1 = _matched(cfg, r, (k, "direct"), pre, M, B, cfg.trials)
        b2 = _matched(cfg, r, (k, "relabelled"), swapped, M, B, cfg.trials)
        S1, I1, _ = power_samples(batch_geometry(b1, pre, rx, st), p, M)
        S2, I2, _ = power_samples(batch_geometry(b2, swapped, 1, 1), p, M)
        e1 = mean_se(np.log2(1.0 + S1 / (I1 + 1.0)) / M)
        e2 = mean_se(np.log2(1.0 + S2 / (I2 + 1.0)) / M)
        se = math.hypot(e1.stderr, e2.stderr)
        z = (e1.mean - e2.mean) / se if se > 0 else 0.0
        ok = abs(z) <= 3.0
        rows.append(dict(stream=label, p_db=p_db, B=B, c_hat=e1.mean, stderr=e1.stderr, c_hat_relabelled=e2.mean,
                         stderr_relabelled=e2.stderr, z=z, **{"pass": ok}))
        checks.append(Check(f"symmetry {label}", ok, e1.mean, e2.mean, "|difference| <= 3 combined stderr"))
    return cols, rows, checks


_DISPATCH = {
    "ff-demo": _ff_demo,
    "ff-match-stats": _ff_match_stats,
    "beta-check": _beta_check,
    "lemma1": _lemma1,
    "lemma2": _lemma2,
    "match-stats": _match_stats,
    "sampler-equivalence": _sampler_equivalence,
    "rate-gap": _rate_gap,
    "gap-vs-B": _gap_vs_B,
    "dof-sweep": _dof_sweep,
    "symmetry-check": _symmetry_check,
}


def run(cfg: RunConfig, write: bool = True) -> RunSummary:
    """Execute ``cfg`` and, when ``write`` and ``cfg.output`` are set, write
    the result file.  The file is written atomically after the experiment
    finishes, so a failed run never leaves partial output."""
    validate(cfg)
    t0 = time.perf_counter()
    runner = _Runner(cfg)
    try:
        cols, rows, checks = _DISPATCH[cfg.experiment](cfg, runner)
    finally:
        runner.close()
    summary = RunSummary(cfg.experiment, cfg.echo(), list(cols), rows, checks,
                         wall_time=time.perf_counter() - t0)
    if write and cfg.output:
        emit(summary, cfg.format, cfg.output)
    return summary


def exit_code(summary: RunSummary) -> int:
    return 0 if summary.passed else 2
