"""Survey orchestration: partition a prime range into per-class work units,
run the sieve -> factor -> root pipeline over each, and merge the aggregates
deterministically.

The final SurveyResult is a pure function of (wheel, range, threshold): unit
results are merged in canonical order, so worker counts, scheduling, and
checkpoint interruptions cannot change any output byte.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from math import isqrt

from .factorsieve import (
    Wheel,
    factored_primes_in_ap,
    residue_classes,
    simple_sieve,
)
from .primroot import (
    grosswald_check,
    least_prime_primitive_root,
    least_primitive_root_sq,
)

EULER_GAMMA = 0.5772156649015329

DEFAULT_THRESHOLD = 100

# Entries per work unit; small enough that units finish in seconds at desk scale.
UNIT_ENTRIES = 1 << 19


class StaleCheckpointError(ValueError):
    """Checkpoint belongs to a different survey configuration."""


class CheckpointParseError(ValueError):
    """Checkpoint file is malformed."""


@dataclass(frozen=True)
class WorkUnit:
    uid: int
    class_a: int  # 0 marks the wheel-prime unit
    lo: int
    hi: int


@dataclass
class SurveyResult:
    """Aggregates of one survey over [lo, hi]."""

    range_covered: tuple
    threshold: int
    wheel_primes: tuple
    records: list = field(default_factory=list)  # (p, g) ascending, g strictly rising
    stored_roots: list = field(default_factory=list)  # (p, g) with g >= threshold
    exceptions: list = field(default_factory=list)  # (p, g, h) with g != h, odd p
    grosswald_violations: list = field(default_factory=list)  # (p, g), p > 409
    grosswald_small_failures: list = field(default_factory=list)  # (p, g), p <= 409
    g_p58_violations: list = field(default_factory=list)  # p > 3 with g^8 >= p^5
    h_p23_violations: list = field(default_factory=list)  # odd p with h^3 >= p^2
    histogram: dict = field(default_factory=dict)  # floor(log2 g) -> count
    prime_count: int = 0

    @property
    def exception_primes(self):
        return [p for p, _, _ in self.exceptions]


def _unit_results_to_survey(cfg, unit_results) -> SurveyResult:
    res = SurveyResult(
        range_covered=(cfg["lo"], cfg["hi"] - 1),
        threshold=cfg["threshold"],
        wheel_primes=tuple(cfg["wheel"]),
    )
    recs = []
    for u in unit_results:
        recs.extend(map(tuple, u["rec"]))
        res.stored_roots.extend(map(tuple, u["stored"]))
        res.exceptions.extend(map(tuple, u["exc"]))
        res.grosswald_violations.extend(map(tuple, u["gviol"]))
        res.grosswald_small_failures.extend(map(tuple, u["gsmall"]))
        res.g_p58_violations.extend(u["g58"])
        res.h_p23_violations.extend(u["h23"])
        for k, c in u["hist"].items():
            k = int(k)
            res.histogram[k] = res.histogram.get(k, 0) + c
        res.prime_count += u["pc"]
    recs.sort()
    best = 0
    for p, g in recs:
        if g > best:
            res.records.append((p, g))
            best = g
    res.stored_roots.sort()
    res.exceptions.sort()
    res.grosswald_violations.sort()
    res.grosswald_small_failures.sort()
    res.g_p58_violations.sort()
    res.h_p23_violations.sort()
    return res


def _roots_for_prime(p: int, factors) -> tuple:
    """(g, h) for a factored prime; h reuses g's candidate scan."""
    if p == 2:
        return 1, 3
    if p == 3:
        return 2, 2
    n = p - 1
    qs = [q for q, _ in factors]
    exps = [n // q for q in qs]
    psq = p * p
    g = 0
    a = 1
    while True:
        a += 1
        for e in exps:
            if pow(a, e, p) == 1:
                break
        else:
            if g == 0:
                g = a
            if pow(a, n, psq) != 1:
                return g, a


def _run_unit(unit_tuple, cfg, sieving_primes) -> dict:
    """Process one work unit; returns a JSON-friendly aggregate dict."""
    uid, class_a, lo, hi = unit_tuple
    wheel = Wheel(tuple(cfg["wheel"]))
    threshold = cfg["threshold"]
    rec = []
    stored = []
    exc = []
    gviol = []
    gsmall = []
    g58 = []
    h23 = []
    hist = {}
    pc = 0
    best = 0
    if class_a == 0:
        primes = [(p, _trial_factor_list(p - 1)) for p in wheel.modulus_primes if lo <= p < hi]
    else:
        primes = ((fp.p, fp.factors) for fp in factored_primes_in_ap(wheel, class_a, lo, hi, sieving_primes))
    for p, factors in primes:
        pc += 1
        g, h = _roots_for_prime(p, factors)
        if p > 2:
            if g > best:
                rec.append((p, g))
                best = g
            if g >= threshold:
                stored.append((p, g))
                k = g.bit_length() - 1
                hist[k] = hist.get(k, 0) + 1
            if g != h:
                exc.append((p, g, h))
            if h * h * h >= p * p:
                h23.append(p)
        if not grosswald_check(p, g):
            if p > 409:
                gviol.append((p, g))
            else:
                gsmall.append((p, g))
        if p > 3 and g**8 >= p**5:
            g58.append(p)
    return {
        "id": uid,
        "pc": pc,
        "rec": rec,
        "stored": stored,
        "exc": exc,
        "gviol": gviol,
        "gsmall": gsmall,
        "g58": g58,
        "h23": h23,
        "hist": hist,
    }


def _trial_factor_list(n: int):
    out = []
    d = 2
    while d * d <= n:
        e = 0
        while n % d == 0:
            n //= d
            e += 1
        if e:
            out.append((d, e))
        d += 1
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def build_units(wheel: Wheel, lo: int, hi: int, unit_entries: int = UNIT_ENTRIES):
    """Deterministic unit list: wheel primes first, then (class, segment) pairs."""
    units = [WorkUnit(0, 0, lo, hi)]
    uid = 1
    span = wheel.M * unit_entries
    for a in residue_classes(wheel):
        s = lo
        while s < hi:
            e = min(hi, s + span)
            units.append(WorkUnit(uid, a, s, e))
            uid += 1
            s = e
    return units


def _config_dict(wheel: Wheel, lo: int, hi: int, threshold: int) -> dict:
    return {"wheel": list(wheel.modulus_primes), "lo": lo, "hi": hi, "threshold": threshold}


def _config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def checkpoint_save(path: str, cfg: dict, done: dict):
    """Write header plus one line per completed unit; atomic via rename."""
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write("leastroot-checkpoint v1\n")
        fh.write(f"config {_config_hash(cfg)}\n")
        fh.write(f"params {json.dumps(cfg, sort_keys=True)}\n")
        for uid in sorted(done):
            fh.write(f"unit {uid} {json.dumps(done[uid], sort_keys=True)}\n")
    os.replace(tmp, path)


def checkpoint_restore(path: str, cfg: dict) -> dict:
    """Load completed unit results; raises on config mismatch or bad syntax."""
    done = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "leastroot-checkpoint v1":
            raise CheckpointParseError(f"bad header: {header!r}")
        cfg_line = fh.readline().split()
        if len(cfg_line) != 2 or cfg_line[0] != "config":
            raise CheckpointParseError("missing config line")
        if cfg_line[1] != _config_hash(cfg):
            raise StaleCheckpointError("checkpoint was written for a different configuration")
        params = fh.readline()
        if not params.startswith("params "):
            raise CheckpointParseError("missing params line")
        for line in fh:
            if not line.strip():
                continue
            parts = line.split(" ", 2)
            if len(parts) != 3 or parts[0] != "unit":
                raise CheckpointParseError(f"bad unit line: {line!r}")
            done[int(parts[1])] = json.loads(parts[2])
    return done


def run_survey(
    wheel: Wheel = None,
    N: int = None,
    threshold: int = DEFAULT_THRESHOLD,
    workers: int = 1,
    checkpoint_path: str = None,
    lo: int = 2,
    unit_entries: int = UNIT_ENTRIES,
    unit_limit: int = None,
):
    """Survey all primes in [lo, N].  Returns a SurveyResult, or None when
    `unit_limit` stopped the run early (progress lives in the checkpoint).

    Deterministic: the result depends only on (wheel, lo, N, threshold).
    """
    if wheel is None:
        wheel = Wheel((2, 3, 5))
    if N is None or N < 100:
        raise ValueError("N must be at least 100")
    hi = N + 1
    cfg = _config_dict(wheel, lo, hi, threshold)
    units = build_units(wheel, lo, hi, unit_entries)
    done = {}
    if checkpoint_path and os.path.exists(checkpoint_path):
        done = checkpoint_restore(checkpoint_path, cfg)
    pending = [u for u in units if u.uid not in done]
    if unit_limit is not None:
        pending = pending[:unit_limit]
    if pending:
        sieving_primes = simple_sieve(isqrt(hi - 1) + 1)
        if workers > 1:
            results = _run_parallel(pending, cfg, workers)
        else:
            results = (_run_unit((u.uid, u.class_a, u.lo, u.hi), cfg, sieving_primes) for u in pending)
        for r in results:
            done[r["id"]] = r
            if checkpoint_path:
                checkpoint_save(checkpoint_path, cfg, done)
    if len(done) < len(units):
        return None
    ordered = [done[u.uid] for u in units]
    return _unit_results_to_survey(cfg, ordered)


_WORKER_STATE = {}


def _worker_init(cfg):
    _WORKER_STATE["cfg"] = cfg
    _WORKER_STATE["sp"] = simple_sieve(isqrt(cfg["hi"] - 1) + 1)


def _worker_run(unit_tuple):
    return _run_unit(unit_tuple, _WORKER_STATE["cfg"], _WORKER_STATE["sp"])


def _run_parallel(pending, cfg, workers):
    import multiprocessing as mp

    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
    with ctx.Pool(workers, initializer=_worker_init, initargs=(cfg,)) as pool:
        yield from pool.imap_unordered(
            _worker_run, [(u.uid, u.class_a, u.lo, u.hi) for u in pending]
        )


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def f_ratio(p: int, g: int) -> tuple:
    """F(p) = e^gamma * ln(p) * (ln ln p)^2 and the ratio g/F(p)."""
    if p < 17:
        raise ValueError("F(p) needs p >= 17")
    F = math.exp(EULER_GAMMA) * math.log(p) * math.log(math.log(p)) ** 2
    return F, g / F


def survival_product_exact(lo: int, hi: int) -> float:
    """prod(1 - 1/p) over primes lo < p <= hi, evaluated directly."""
    out = 1.0
    for p in simple_sieve(hi + 1):
        if p > lo:
            out *= 1.0 - 1.0 / p
    return out


def survival_probability(x_n: int, x: float, exact_limit: int = 10**7) -> float:
    """Chance that no new exception appears in (x_n, x], heuristically
    prod(1 - 1/p); exact product below `exact_limit`, Mertens ratio
    log(x_n)/log(x) beyond."""
    if x <= x_n:
        return 1.0
    if x <= exact_limit:
        return survival_product_exact(x_n, int(x))
    return math.log(x_n) / math.log(x)


HEURISTIC_QUANTILES = (0.5, 0.25)


def heuristic_next_exception(known_exceptions, quantiles: tuple = HEURISTIC_QUANTILES) -> tuple:
    """Window where the next g != h prime ought to appear.

    Under the Mertens form of the survival product, the probability that no
    exception follows x_n up to x is log(x_n)/log(x); it crosses a quantile q
    at x = x_n^(1/q).  Returns the crossing points for the two quantiles
    (default 1/2 and 1/4) as integers.
    """
    if not known_exceptions or list(known_exceptions) != sorted(known_exceptions):
        raise ValueError("known exceptions must be a nonempty ascending list")
    x_n = known_exceptions[-1]
    q_hi, q_lo = quantiles
    x_lo = int(math.exp(math.log(x_n) / q_hi))
    x_hi = int(math.exp(math.log(x_n) / q_lo))
    return x_lo, x_hi


def emit_histogram(result: SurveyResult) -> list:
    """Rows (bin_lo, bin_hi, count) for bins [2^k, 2^(k+1)) over stored g."""
    return [(1 << k, 1 << (k + 1), result.histogram[k]) for k in sorted(result.histogram)]


def records_table(result: SurveyResult) -> list:
    """Rows (p, g, h, g_hat) for the record primes."""
    rows = []
    for p, g in result.records:
        factors = _trial_factor_list(p - 1)
        h = least_primitive_root_sq(p, factors)
        g_hat = least_prime_primitive_root(p, factors)
        rows.append((p, g, h, g_hat))
    return rows


def ratio_table(result: SurveyResult) -> list:
    """Rows (p, g, F, ratio) for records with g >= threshold (needs p >= 17)."""
    rows = []
    for p, g in result.records:
        if g >= result.threshold and p >= 17:
            F, r = f_ratio(p, g)
            rows.append((p, g, F, r))
    return rows


# ---------------------------------------------------------------------------
# CSV emission (byte-stable)
# ---------------------------------------------------------------------------


def write_records_csv(result: SurveyResult, path: str):
    with open(path, "w", newline="") as fh:
        fh.write("p,g,h,g_hat\n")
        for p, g, h, gh in records_table(result):
            fh.write(f"{p},{g},{h},{gh}\n")


def write_exceptions_csv(result: SurveyResult, path: str):
    with open(path, "w", newline="") as fh:
        fh.write("p,g,h\n")
        for p, g, h in result.exceptions:
            fh.write(f"{p},{g},{h}\n")


def write_histogram_csv(result: SurveyResult, path: str):
    with open(path, "w", newline="") as fh:
        fh.write("bin_lo,bin_hi,count\n")
        for lo_, hi_, c in emit_histogram(result):
            fh.write(f"{lo_},{hi_},{c}\n")


def write_ratio_csv(result: SurveyResult, path: str):
    with open(path, "w", newline="") as fh:
        fh.write("p,g,F,ratio\n")
        for p, g, F, r in ratio_table(result):
            fh.write(f"{p},{g},{F:.6g},{r:.6f}\n")
