"""Experiment harness: config resolution, experiment runners, artifact I/O.

Every runner takes a frozen config dataclass, executes one run per seed
(optionally in parallel processes, capped by DRIFTLS_THREADS), writes
per-seed CSV artifacts plus one summary JSON into the output directory, and
returns the summary dict. Artifacts are byte-identical across re-runs of the
same (config, seed); wall-clock columns are written as 0 unless timing is
requested (benchmark outputs are inherently timing and exempt).
"""
from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .bandits import LinUcbPolicy, PegeConfig, RegretLedger, run_linucb, run_pege, run_replay
from .bounds import BoundParams, k1_of, k2_of
from .environments import (
    ArmSpec,
    ArmStream,
    LinearEnv,
    NoiseSpec,
    SynthStreamConfig,
    UnitBall,
    read_event_log,
    synth_news_stream,
)
from .exceptions import ConfigError, SingularMatrixError
from .linalg import min_eigenvalue, solve_spd
from .metrics import ctr_score, slope_fit
from .rng import make_rng, split_rng
from .schedules import RegSchedule, StepSchedule
from .trackers import SagTracker, SvrgTracker

TRACK_SCHEMA = "driftls-track-v1"
BENCH_SCHEMA = "driftls-bench-v1"
BOUNDS_SCHEMA = "driftls-bounds-v1"

TRACK_ALGOS = ("fols", "frls", "svrg", "sag", "phi")
STREAM_KINDS = ("cycle", "sphere")


# ---------------------------------------------------------------------------
# Config plumbing


def parse_config_file(path) -> dict[str, str]:
    """Flat key=value text file; '#' starts a comment, blank lines ignored."""
    out: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{line_no}: expected key=value")
                key, val = line.split("=", 1)
                key = key.strip()
                if not key:
                    raise ConfigError(f"{path}:{line_no}: empty key")
                out[key] = val.strip()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    return out


def _coerce(raw, typ, key):
    if not isinstance(raw, str):
        return raw
    try:
        if typ is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(raw.strip())
        if typ is float:
            return float(raw.strip())
        return raw
    except ValueError as e:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {typ.__name__}") from e


def build_config(cls, *mappings):
    """Left-to-right merge of key→value mappings into a config dataclass.

    Later mappings win (defaults < file < CLI). Unknown keys are rejected;
    string values are coerced to the declared field types.
    """
    fields = {f.name: f.type for f in dataclasses.fields(cls)}
    types = {
        name: (int if t in ("int", int) else float if t in ("float", float)
               else bool if t in ("bool", bool) else str)
        for name, t in fields.items()
    }
    merged: dict[str, object] = {}
    for m in mappings:
        for k, v in m.items():
            if v is None:
                continue
            if k not in fields:
                raise ConfigError(f"unknown config key {k!r} for {cls.__name__}")
            merged[k] = _coerce(v, types[k], k)
    try:
        return cls(**merged)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e


def resolve_seeds(seed: int, seeds: str) -> list[int]:
    """'': just `seed`; 'N': N consecutive seeds from `seed`; 'a,b,c': list."""
    s = str(seeds).strip()
    if not s:
        return [int(seed)]
    if "," in s:
        try:
            vals = sorted({int(tok) for tok in s.split(",") if tok.strip()})
        except ValueError as e:
            raise ConfigError(f"bad seeds list {seeds!r}") from e
        if not vals:
            raise ConfigError("seeds list is empty")
        return vals
    try:
        count = int(s)
    except ValueError as e:
        raise ConfigError(f"bad seeds value {seeds!r}") from e
    if count < 1:
        raise ConfigError("seeds count must be >= 1")
    return [int(seed) + i for i in range(count)]


def _thread_cap() -> int:
    raw = os.environ.get("DRIFTLS_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError as e:
        raise ConfigError(f"DRIFTLS_THREADS={raw!r} is not an integer") from e
    return max(1, n)


def map_seeds(fn, cfg, seeds: list[int]) -> list:
    """Run fn(cfg, seed) per seed, results ordered by ascending seed."""
    seeds = sorted(seeds)
    cap = min(_thread_cap(), len(seeds))
    if cap <= 1:
        return [fn(cfg, s) for s in seeds]
    with ProcessPoolExecutor(max_workers=cap) as pool:
        return list(pool.map(fn, [cfg] * len(seeds), seeds))


# ---------------------------------------------------------------------------
# Artifact writers


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, schema: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# schema={schema}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path):
    """Read back a harness CSV: returns (schema, dict column -> float array)."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema="):
            raise ValueError(f"{path}: missing schema comment line")
        schema = first[len("# schema="):]
        header = fh.readline().strip().split(",")
        cols: dict[str, list] = {h: [] for h in header}
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            for h, p in zip(header, parts):
                try:
                    cols[h].append(float(p))
                except ValueError:
                    cols[h].append(p)
    out = {}
    for h, vals in cols.items():
        try:
            out[h] = np.asarray(vals, dtype=np.float64)
        except (ValueError, TypeError):
            out[h] = np.asarray(vals, dtype=object)
    return schema, out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    return obj


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _ensure_out(cfg) -> str:
    out = cfg.out
    if not out:
        raise ConfigError("output directory required (set out=DIR or --out DIR)")
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Synthetic tracking streams


def _checkpoints(lo: int, hi: int, count: int) -> np.ndarray:
    if hi < lo:
        return np.asarray([hi], dtype=np.int64) if hi > 0 else np.asarray([], dtype=np.int64)
    grid = np.unique(np.rint(np.geomspace(lo, hi, count)).astype(np.int64))
    return grid[(grid >= 1) & (grid <= hi)]


def _make_stream(kind: str, d: int, n: int, rng, noise: NoiseSpec, theta_norm: float):
    """Feature stream + rewards + hidden parameter for tracking experiments.

    "cycle" walks the canonical basis round-robin (limiting design I/d, the
    strongly convex workhorse); "sphere" draws i.i.d. uniform directions
    (same limit in expectation).
    """
    g = rng.standard_normal(d)
    theta_star = g / np.linalg.norm(g) * theta_norm
    if kind == "cycle":
        xs = np.zeros((n, d))
        if n:
            xs[np.arange(n), np.arange(n) % d] = 1.0
    elif kind == "sphere":
        g = rng.standard_normal((n, d))
        xs = g / np.linalg.norm(g, axis=1, keepdims=True)
    else:
        raise ConfigError(f"unknown stream kind {kind!r}")
    ys = xs @ theta_star + noise.draw(rng, n)
    return xs, ys, theta_star


def _stream_mu(kind: str, d: int) -> float:
    # lam_min of the limiting design is 1/d for both streams; halve it for
    # the same safety margin the bandit layer applies to finite-sample grams
    return 1.0 / (2.0 * d)


def _drift_indices(rng, n: int) -> np.ndarray:
    """idx[t] ~ U{0..t} for t = 0..n-1 (sample t+1 available at step t+1)."""
    highs = np.arange(1, n + 1, dtype=np.float64)
    idx = (rng.random(n) * highs).astype(np.int64)
    return np.minimum(idx, np.arange(n, dtype=np.int64))


def _exact_targets(algo: str, xs, ys, ckpts, penalty: RegSchedule | None,
                   target_x=None):
    """Exact target at each checkpoint via direct solves of the running sums."""
    d = xs.shape[1]
    a = np.zeros((d, d))
    b = np.zeros(d)
    prev = 0
    eye = np.eye(d)
    out = []
    for n in ckpts:
        seg = xs[prev:n]
        a += seg.T @ seg
        b += seg.T @ ys[prev:n]
        prev = int(n)
        try:
            if algo == "phi":
                out.append(solve_spd(a, target_x))
            elif algo == "fols":
                out.append(solve_spd(a, b))
            else:
                lam = penalty(int(n))
                out.append(solve_spd(a / n + lam * eye, b / n))
        except SingularMatrixError:
            out.append(None)
    return out


# ---------------------------------------------------------------------------
# run_track


@dataclass(frozen=True)
class TrackConfig:
    algo: str = "fols"
    d: int = 5
    horizon: int = 100000
    stream: str = "cycle"
    noise: str = "uniform"
    sigma: float = 0.25
    theta_norm: float = 1.0
    seed: int = 0
    seeds: str = ""
    step_kind: str = ""
    c: float = 0.0
    gamma0: float = 0.0
    c1: float = 100.0
    lam_kind: str = ""
    alpha: float = 0.6
    lam_value: float = 1.0
    epoch_len: int = 0
    mu: float = 0.0
    checkpoints: int = 24
    ckpt_min: int = 16
    timing: bool = False
    csv: bool = True
    out: str = ""

    def __post_init__(self):
        if self.algo not in TRACK_ALGOS:
            raise ConfigError(f"unknown tracker algo {self.algo!r}")
        if self.stream not in STREAM_KINDS:
            raise ConfigError(f"unknown stream {self.stream!r}")
        if self.horizon < 0 or self.d < 1:
            raise ConfigError("need horizon >= 0 and d >= 1")
        if self.checkpoints < 2 or self.ckpt_min < 1:
            raise ConfigError("need checkpoints >= 2 and ckpt_min >= 1")


def _noise_spec(cfg) -> NoiseSpec:
    return NoiseSpec(kind=cfg.noise, sigma=cfg.sigma)


def _track_step_schedule(cfg: TrackConfig) -> StepSchedule:
    kind = cfg.step_kind or {
        "fols": "theorem1", "frls": "generic", "phi": "generic",
        "svrg": "constant", "sag": "constant",
    }[cfg.algo]
    if kind == "theorem1":
        c = cfg.c if cfg.c > 0 else 3.2 / _resolved_mu(cfg)
        return StepSchedule.theorem1(c)
    if kind == "generic":
        gamma0 = cfg.gamma0 if cfg.gamma0 > 0 else 1.0
        return StepSchedule.generic(gamma0, cfg.c1)
    if kind == "constant":
        default = 5e-4 if cfg.algo == "svrg" else 5e-3
        gamma0 = cfg.gamma0 if cfg.gamma0 > 0 else default
        return StepSchedule.constant(gamma0)
    raise ConfigError(f"unknown step_kind {kind!r}")


def _track_penalty(cfg: TrackConfig) -> RegSchedule | None:
    if cfg.algo in ("fols", "phi"):
        return None
    kind = cfg.lam_kind or ("power" if cfg.algo == "frls" else "inverse")
    if kind == "power":
        return RegSchedule.power(cfg.alpha, cfg.lam_value)
    if kind == "inverse":
        return RegSchedule.inverse(cfg.lam_value)
    if kind == "constant":
        return RegSchedule.constant(cfg.lam_value)
    if kind == "zero":
        return RegSchedule.zero()
    raise ConfigError(f"unknown lam_kind {kind!r}")


def _resolved_mu(cfg) -> float:
    return cfg.mu if cfg.mu > 0 else _stream_mu(cfg.stream, cfg.d)


def _track_seed(cfg: TrackConfig, seed: int):
    """One tracking run: returns (ckpts, errors, wall_ns per checkpoint)."""
    stream_rng, step_rng = split_rng(seed, 2)
    noise = _noise_spec(cfg)
    n = cfg.horizon
    xs, ys, theta_star = _make_stream(cfg.stream, cfg.d, n, stream_rng, noise,
                                      cfg.theta_norm)
    ckpts = _checkpoints(min(cfg.ckpt_min, n) if n else 1, n, cfg.checkpoints)
    if n == 0 or ckpts.size == 0:
        return np.asarray([], dtype=np.int64), np.asarray([]), np.asarray([], dtype=np.int64)
    schedule = _track_step_schedule(cfg)
    penalty = _track_penalty(cfg)
    target_x = None
    if cfg.algo == "phi":
        g = stream_rng.standard_normal(cfg.d)
        target_x = g / np.linalg.norm(g)

    t0 = time.perf_counter_ns()
    if cfg.algo in ("fols", "frls", "phi"):
        snaps, walls = _drift_kernel_run(cfg, xs, ys, schedule, penalty,
                                         target_x, step_rng, ckpts, t0)
    else:
        snaps, walls = _drift_stateful_run(cfg, xs, ys, schedule, penalty,
                                           step_rng, ckpts, t0)
    targets = _exact_targets(cfg.algo, xs, ys, ckpts, penalty, target_x)
    errs = np.asarray([
        float(np.linalg.norm(s - t)) if t is not None else float("nan")
        for s, t in zip(snaps, targets)
    ])
    walls = walls if cfg.timing else np.zeros(len(ckpts), dtype=np.int64)
    return ckpts, errs, walls


def _drift_kernel_run(cfg, xs, ys, schedule, penalty, target_x, rng, ckpts, t0):
    n = xs.shape[0]
    idx = _drift_indices(rng, n)
    gammas = schedule.values(0, n)
    theta = np.zeros(cfg.d)
    avg = np.zeros(cfg.d)
    if cfg.algo == "frls":
        lams = penalty.values(np.arange(1, n + 1))
    elif cfg.algo == "phi":
        inv_lens = 1.0 / np.arange(1, n + 1, dtype=np.float64)
    snaps, walls = [], []
    prev = 0
    for ck in ckpts:
        sl = slice(prev, int(ck))
        if cfg.algo == "fols":
            kernels.fols_steps(theta, xs, ys, idx[sl], gammas[sl], avg,
                               kernels.NO_AVERAGING, prev)
        elif cfg.algo == "frls":
            kernels.frls_steps(theta, xs, ys, idx[sl], gammas[sl], lams[sl],
                               avg, kernels.NO_AVERAGING, prev)
        else:
            kernels.phi_steps(theta, xs, idx[sl], gammas[sl], target_x,
                              inv_lens[sl])
        prev = int(ck)
        snaps.append(theta.copy())
        walls.append(time.perf_counter_ns() - t0)
    return snaps, np.asarray(walls, dtype=np.int64)


def _drift_stateful_run(cfg, xs, ys, schedule, penalty, rng, ckpts, t0):
    if cfg.algo == "svrg":
        tracker = SvrgTracker(schedule=schedule, penalty=penalty,
                              epoch_len=cfg.epoch_len or None, random_state=rng)
    else:
        tracker = SagTracker(schedule=schedule, penalty=penalty, random_state=rng)
    snaps, walls = [], []
    ck_set = set(int(c) for c in ckpts)
    for t in range(xs.shape[0]):
        tracker.observe(xs[t], ys[t])
        tracker.step(1)
        if t + 1 in ck_set:
            snaps.append(tracker.coef_.copy())
            walls.append(time.perf_counter_ns() - t0)
    return snaps, np.asarray(walls, dtype=np.int64)


def run_track(cfg: TrackConfig) -> dict:
    """Tracking-error experiment: per-seed checkpoint CSVs + summary JSON."""
    out = _ensure_out(cfg)
    seeds = resolve_seeds(cfg.seed, cfg.seeds)
    results = map_seeds(_track_seed, cfg, seeds)
    files = []
    for seed, (ckpts, errs, walls) in zip(seeds, results):
        name = f"track_s{seed:06d}.csv"
        write_csv(os.path.join(out, name), TRACK_SCHEMA, ("n", "err", "wall_ns"),
                  zip(ckpts.tolist(), errs.tolist(), walls.tolist()))
        files.append(name)
    ckpts = results[0][0]
    err_mat = np.asarray([r[1] for r in results])
    summary = {
        "config": dataclasses.asdict(cfg),
        "seeds": seeds,
        "files": files,
        "checkpoints": ckpts,
        "mean_err": err_mat.mean(axis=0) if err_mat.size else [],
        "p90_err": np.quantile(err_mat, 0.9, axis=0) if err_mat.size else [],
        "max_err": err_mat.max(axis=0) if err_mat.size else [],
    }
    valid = ckpts.size >= 10 and err_mat.size and np.isfinite(err_mat).all() \
        and (err_mat > 0).all()
    summary["slope"] = slope_fit(ckpts, err_mat.mean(axis=0)) if valid else None
    write_json(os.path.join(out, "summary.json"), summary)
    return summary


# ---------------------------------------------------------------------------
# run_bounds


@dataclass(frozen=True)
class BoundsConfig:
    d: int = 5
    horizon: int = 131072
    stream: str = "cycle"
    noise: str = "uniform"
    sigma: float = 0.25
    theta_norm: float = 1.0
    seed: int = 0
    seeds: str = "100"
    c: float = 0.0
    mu: float = 0.0
    delta: float = 0.1
    n_min: int = 128
    timing: bool = False
    csv: bool = False
    out: str = ""

    def __post_init__(self):
        if self.stream not in STREAM_KINDS:
            raise ConfigError(f"unknown stream {self.stream!r}")
        if self.horizon < self.n_min:
            raise ConfigError("horizon must be >= n_min")
        if not (0.0 < self.delta < 1.0):
            raise ConfigError("delta must lie in (0, 1)")


def _pow2_checkpoints(lo: int, hi: int) -> np.ndarray:
    out = []
    n = lo
    while n <= hi:
        out.append(n)
        n *= 2
    return np.asarray(out, dtype=np.int64)


def _bounds_seed(cfg: BoundsConfig, seed: int):
    """One bound-validation run; returns (ckpts, errs, n0, dist_at_n0)."""
    mu = _resolved_mu(cfg)
    c = cfg.c if cfg.c > 0 else 3.2 / mu
    stream_rng, step_rng = split_rng(seed, 2)
    xs, ys, theta_star = _make_stream(cfg.stream, cfg.d, cfg.horizon, stream_rng,
                                      _noise_spec(cfg), cfg.theta_norm)
    # first n at which the empirical design is half as convex as the limit
    n0 = 0
    a = np.zeros((cfg.d, cfg.d))
    for t in range(min(8 * cfg.d, cfg.horizon)):
        a += np.outer(xs[t], xs[t])
        if min_eigenvalue(a / (t + 1)) >= mu / 2.0:
            n0 = t + 1
            break
    if n0 == 0:
        n0 = cfg.d  # conservative fallback; reported, not hidden
    ckpts = _pow2_checkpoints(cfg.n_min, cfg.horizon)
    run_ckpts = np.unique(np.concatenate([[n0], ckpts]))
    schedule = StepSchedule.theorem1(c)
    idx = _drift_indices(step_rng, cfg.horizon)
    gammas = schedule.values(0, cfg.horizon)
    theta = np.zeros(cfg.d)
    avg = np.zeros(cfg.d)
    snaps = {}
    prev = 0
    for ck in run_ckpts:
        kernels.fols_steps(theta, xs, ys, idx[prev:int(ck)], gammas[prev:int(ck)],
                           avg, kernels.NO_AVERAGING, prev)
        prev = int(ck)
        snaps[int(ck)] = theta.copy()
    dist = float(np.linalg.norm(snaps[n0] - theta_star))
    targets = _exact_targets("fols", xs, ys, ckpts, None)
    errs = np.asarray([
        float(np.linalg.norm(snaps[int(n)] - t)) if t is not None else float("nan")
        for n, t in zip(ckpts, targets)
    ])
    return ckpts, errs, n0, dist


def run_bounds(cfg: BoundsConfig) -> dict:
    """Monte Carlo validation of the tracking-error envelopes.

    Checks (i) the mean error against K1(n)/sqrt(n+c) at every power-of-two
    checkpoint past n0, and (ii) the final-n exceedance fraction against
    delta for K2. The returned report carries `passed`; the CLI maps a failed
    report to exit code 4.
    """
    mu = _resolved_mu(cfg)
    c = cfg.c if cfg.c > 0 else 3.2 / mu
    params_probe = BoundParams(mu=mu, c=c, d=cfg.d, n0=1, delta=cfg.delta)
    params_probe.require_theorem1()  # refuse bad (mu, c) before any work
    out = _ensure_out(cfg)
    seeds = resolve_seeds(cfg.seed, cfg.seeds)
    results = map_seeds(_bounds_seed, cfg, seeds)
    ckpts = results[0][0]
    err_mat = np.asarray([r[1] for r in results])
    n0 = max(int(r[2]) for r in results)
    dist = max(float(r[3]) for r in results)
    p = BoundParams(mu=mu, c=c, d=cfg.d, n0=max(n0, 1), delta=cfg.delta,
                    theta_init_dist=dist)
    mean_err = err_mat.mean(axis=0)
    rows = []
    pass_mean = True
    for j, n in enumerate(ckpts):
        n = int(n)
        if n <= p.n0:
            continue
        k1 = k1_of(n, p) / math.sqrt(n + c)
        k2 = k2_of(n, p) / math.sqrt(n + c)
        exceed = float((err_mat[:, j] > k2).mean())
        ok = bool(mean_err[j] <= k1)
        pass_mean = pass_mean and ok
        rows.append({
            "n": n, "mean_err": float(mean_err[j]), "k1_bound": k1,
            "exceed_frac": exceed, "k2_bound": k2, "mean_within": ok,
        })
    final_exceed = rows[-1]["exceed_frac"] if rows else 1.0
    pass_exceed = final_exceed <= cfg.delta
    report = {
        "config": dataclasses.asdict(cfg),
        "seeds": seeds,
        "mu": mu,
        "c": c,
        "n0_observed": n0,
        "theta_init_dist": dist,
        "rows": rows,
        "pass_mean": bool(pass_mean),
        "pass_exceed": bool(pass_exceed),
        "passed": bool(pass_mean and pass_exceed),
    }
    write_json(os.path.join(out, "bounds_report.json"), report)
    if cfg.csv:
        write_csv(
            os.path.join(out, "bounds.csv"), BOUNDS_SCHEMA,
            ("n", "mean_err", "k1_bound", "exceed_frac", "k2_bound"),
            [(r["n"], r["mean_err"], r["k1_bound"], r["exceed_frac"], r["k2_bound"])
             for r in rows],
        )
    return report


# ---------------------------------------------------------------------------
# run_bench


@dataclass(frozen=True)
class BenchConfig:
    algos: str = "fols,sm"
    dims: str = "16,64,256,1024"
    steps: int = 10000
    warmup: int = 1000
    buffer_n: int = 4096
    seed: int = 0
    out: str = ""

    def __post_init__(self):
        if self.steps < 1 or self.warmup < 0 or self.buffer_n < 1:
            raise ConfigError("steps >= 1, warmup >= 0, buffer_n >= 1 required")


BENCH_ALGOS = ("fols", "frls", "svrg", "sag", "phi", "sm")


# Largest single timed batch; index/schedule pools are pre-drawn at this size
# so the timed region is the kernel call alone (drawing Philox indices per
# step costs as much as a small-d update and would flatten the scaling curve).
_BENCH_POOL = 8192


def _bench_stepper(algo: str, d: int, n: int, rng):
    """Build a closure running `k <= _BENCH_POOL` steps of the algo's loop."""
    g = rng.standard_normal((n, d))
    xs = g / np.linalg.norm(g, axis=1, keepdims=True)
    ys = xs @ (np.ones(d) / math.sqrt(d)) + rng.uniform(-1, 1, n)
    theta = np.zeros(d)
    avg = np.zeros(d)
    pool = rng.integers(0, n, size=_BENCH_POOL)
    gammas = np.full(_BENCH_POOL, 1e-3)
    lams = np.full(_BENCH_POOL, 1e-3)
    lam = 1e-3
    if algo == "sm":
        inv = np.eye(d)

        def run(k: int):
            if kernels.sm_chain(inv, xs, pool[:k]):
                inv[:] = np.eye(d)  # degenerate decay: restart the chain
        return run
    if algo == "sag":
        mem = np.zeros((n, d))
        gsum = np.zeros(d)
        seen = np.zeros(n, dtype=np.uint8)
        count = np.zeros(1, dtype=np.int64)
        lens = np.full(_BENCH_POOL, n, dtype=np.int64)

        def run(k: int):
            kernels.sag_steps(theta, xs, ys, pool[:k], gammas[:k], lams[:k],
                              lens[:k], mem, gsum, seen, count, False)
        return run
    if algo == "svrg":
        anchor = np.zeros(d)
        fg = xs.T @ (xs @ anchor - ys) / n + lam * anchor

        def run(k: int):
            kernels.svrg_steps(theta, xs, ys, pool[:k], gammas[:k], lams[:k],
                               anchor, fg)
        return run
    if algo == "phi":
        target = xs[0].copy()
        inv_lens = np.full(_BENCH_POOL, 1.0 / n)

        def run(k: int):
            kernels.phi_steps(theta, xs, pool[:k], gammas[:k], target,
                              inv_lens[:k])
        return run
    if algo == "frls":
        def run(k: int):
            kernels.frls_steps(theta, xs, ys, pool[:k], gammas[:k], lams[:k],
                               avg, kernels.NO_AVERAGING, 0)
        return run

    def run(k: int):
        kernels.fols_steps(theta, xs, ys, pool[:k], gammas[:k], avg,
                           kernels.NO_AVERAGING, 0)
    return run


def run_bench(cfg: BenchConfig) -> dict:
    """Per-step wall-time table over (algo, d); medians and p90s of batch
    means. Timing output is inherently non-deterministic byte-wise."""
    out = _ensure_out(cfg)
    algos = [a.strip() for a in cfg.algos.split(",") if a.strip()]
    for a in algos:
        if a not in BENCH_ALGOS:
            raise ConfigError(f"unknown bench algo {a!r}")
    try:
        dims = [int(tok) for tok in cfg.dims.split(",") if tok.strip()]
    except ValueError as e:
        raise ConfigError(f"bad dims list {cfg.dims!r}") from e
    if not dims or not algos:
        raise ConfigError("bench needs at least one algo and one dim")
    rows = []
    medians: dict[str, list] = {a: [] for a in algos}
    for algo in algos:
        for d in dims:
            rng = make_rng(cfg.seed)
            run = _bench_stepper(algo, d, cfg.buffer_n, rng)
            left = cfg.warmup
            while left > 0:  # jit compile + cache warm
                run(min(left, _BENCH_POOL))
                left -= _BENCH_POOL
            # calibrate the batch so one timing sample is >= ~0.2 ms, while
            # keeping at least ~8 samples per config for a stable median
            probe = 32
            t0 = time.perf_counter_ns()
            run(probe)
            per = max((time.perf_counter_ns() - t0) / probe, 1.0)
            batch = int(min(max(2e5 / per, 16), _BENCH_POOL))
            batch = max(16, min(batch, max(16, cfg.steps // 8)))
            run(batch)  # untimed pass at the measured size settles the cpu
            samples = []
            done = 0
            while done < cfg.steps:
                k = min(batch, cfg.steps - done)
                t0 = time.perf_counter_ns()
                run(k)
                samples.append((time.perf_counter_ns() - t0) / k)
                done += k
            med = float(np.median(samples))
            p90 = float(np.quantile(samples, 0.9))
            rows.append((algo, d, med, p90, cfg.steps))
            medians[algo].append(med)
    write_csv(os.path.join(out, "bench.csv"), BENCH_SCHEMA,
              ("algo", "d", "median_ns", "p90_ns", "steps"), rows)
    slopes = {}
    for algo in algos:
        if len(dims) >= 2:
            coef = np.polyfit(np.log(np.asarray(dims, dtype=np.float64)),
                              np.log(np.asarray(medians[algo])), 1)
            slopes[algo] = float(coef[0])
    summary = {
        "config": dataclasses.asdict(cfg),
        "rows": [dict(zip(("algo", "d", "median_ns", "p90_ns", "steps"), r))
                 for r in rows],
        "slopes": slopes,
    }
    if "sm" in medians and len(algos) > 1:
        others = [a for a in algos if a != "sm"]
        summary["sm_ratio_at_max_d"] = {
            a: medians["sm"][-1] / medians[a][-1] for a in others
        }
    write_json(os.path.join(out, "bench_summary.json"), summary)
    return summary


# ---------------------------------------------------------------------------
# run_bandit


@dataclass(frozen=True)
class BanditConfig:
    algo: str = "pege"  # pege | pege-gd | linucb
    variant: str = "gd"  # linucb theta variant: exact | gd | svrg | sag
    d: int = 10
    k: int = 5
    t: int = 1
    kappa: float = -1.0  # required for linucb; no default on purpose
    horizon: int = 20000
    noise: str = "uniform"
    sigma: float = 0.25
    theta_norm: float = 1.0
    c: float = 0.0
    step_kind: str = "theorem1"
    paper_c: bool = False
    gamma0: float = 0.0
    c1: float = 100.0
    lam_kind: str = ""
    alpha: float = 0.6
    lam_value: float = 1.0
    arms: str = "fixed"  # fixed | fresh
    sparsity: float = 0.0
    reward: str = "linear"  # linear | click
    log: str = ""  # replay event-log path (linucb only)
    truth: str = ""  # sidecar with theta_star for replay regret
    seed: int = 0
    seeds: str = ""
    checkpoints: int = 16
    timing: bool = False
    csv: bool = True
    out: str = ""

    def __post_init__(self):
        if self.algo not in ("pege", "pege-gd", "linucb"):
            raise ConfigError(f"unknown bandit algo {self.algo!r}")
        if self.algo == "linucb" and self.kappa < 0:
            raise ConfigError(
                "kappa is required for linucb (there is no sensible default "
                "exploration weight); pass kappa=VALUE"
            )
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.d < 1 or self.k < 1 or self.t < 1:
            raise ConfigError("d, k, t must be >= 1")
        if self.arms not in ("fixed", "fresh"):
            raise ConfigError(f"unknown arms mode {self.arms!r}")
        if self.reward not in ("linear", "click"):
            raise ConfigError(f"unknown reward model {self.reward!r}")


def _bandit_theta_schedule(cfg: BanditConfig) -> StepSchedule | None:
    if cfg.gamma0 <= 0:
        return None  # tracker default (gd: 1/(100+n); svrg/sag constants)
    if cfg.variant in ("svrg", "sag"):
        return StepSchedule.constant(cfg.gamma0)
    return StepSchedule.generic(cfg.gamma0, cfg.c1)


def _bandit_penalty(cfg: BanditConfig) -> RegSchedule | None:
    if not cfg.lam_kind:
        return None
    if cfg.lam_kind == "power":
        return RegSchedule.power(cfg.alpha, cfg.lam_value)
    if cfg.lam_kind == "inverse":
        return RegSchedule.inverse(cfg.lam_value)
    if cfg.lam_kind == "constant":
        return RegSchedule.constant(cfg.lam_value)
    if cfg.lam_kind == "zero":
        return RegSchedule.zero()
    raise ConfigError(f"unknown lam_kind {cfg.lam_kind!r}")


def _bandit_seed(cfg: BanditConfig, seed: int):
    env_rng, policy_rng, arm_rng = split_rng(seed, 3)
    g = env_rng.standard_normal(cfg.d)
    theta_star = g / np.linalg.norm(g) * cfg.theta_norm
    noise = NoiseSpec(kind=cfg.noise, sigma=cfg.sigma)
    if cfg.algo in ("pege", "pege-gd"):
        env = LinearEnv(theta_star, UnitBall(cfg.d), noise,
                        reward_model=cfg.reward, rng=env_rng)
        pcfg = PegeConfig(
            horizon=cfg.horizon,
            c=cfg.c if cfg.c > 0 else None,
            use_tracker=(cfg.algo == "pege-gd"),
            step_kind="cn" if cfg.step_kind == "cn" else "theorem1",
            paper_c=cfg.paper_c,
        )
        ledger, info = run_pege(pcfg, env, policy_rng, timing=cfg.timing)
        return ledger, info
    if cfg.log:
        policy = LinUcbPolicy(cfg.d, kappa=cfg.kappa, variant=cfg.variant,
                              t_phi=cfg.t, k_max=cfg.k,
                              theta_schedule=_bandit_theta_schedule(cfg),
                              penalty=_bandit_penalty(cfg),
                              random_state=policy_rng)
        ts = None
        if cfg.truth:
            with open(cfg.truth, "r", encoding="utf-8") as fh:
                ts = np.asarray(json.load(fh)["theta_star"], dtype=np.float64)
        ledger, stats = run_replay(read_event_log(cfg.log), policy, theta_star=ts)
        stats["clamp_count"] = policy.clamp_count_
        return ledger, stats
    spec = ArmSpec(k=cfg.k, dim=cfg.d,
                   sparsity=cfg.sparsity if cfg.sparsity > 0 else None,
                   fixed=(cfg.arms == "fixed"))
    stream = ArmStream(spec, arm_rng)
    env = LinearEnv(theta_star, UnitBall(cfg.d), noise,
                    reward_model=cfg.reward, rng=env_rng)
    policy = LinUcbPolicy(cfg.d, kappa=cfg.kappa, variant=cfg.variant,
                          t_phi=cfg.t, k_max=cfg.k,
                          theta_schedule=_bandit_theta_schedule(cfg),
                          penalty=_bandit_penalty(cfg),
                          random_state=policy_rng)
    ledger = run_linucb(policy, env, stream, cfg.horizon, timing=cfg.timing)
    info = {"clamp_count": policy.clamp_count_, "phi_resets": policy.phi_resets_}
    return ledger, info


def _curve_at(ledger: RegretLedger, grid: np.ndarray, values: np.ndarray):
    """values sampled at pull counts `grid` (last row at or before each)."""
    pulls = ledger.pulls
    pos = np.searchsorted(pulls, grid, side="right") - 1
    out = np.full(grid.shape, np.nan)
    ok = pos >= 0
    out[ok] = values[pos[ok]]
    return out


def _mean_curve(curves: np.ndarray) -> np.ndarray:
    # nanmean without the all-nan-column warning: grid points before the
    # first recorded pull (or with no tracked error at all) stay nan
    mask = np.isfinite(curves)
    count = mask.sum(axis=0)
    total = np.where(mask, curves, 0.0).sum(axis=0)
    return np.where(count > 0, total / np.maximum(count, 1), np.nan)


def run_bandit(cfg: BanditConfig) -> dict:
    """Bandit experiment: per-seed trace CSVs + summary JSON."""
    out = _ensure_out(cfg)
    seeds = resolve_seeds(cfg.seed, cfg.seeds)
    results = map_seeds(_bandit_seed, cfg, seeds)
    files = []
    for seed, (ledger, _) in zip(seeds, results):
        name = f"trace_s{seed:06d}.csv"
        if cfg.csv:
            ledger.to_csv(os.path.join(out, name))
            files.append(name)
    max_pulls = min(len(lg) for lg, _ in results)
    grid = _checkpoints(1, max_pulls, cfg.checkpoints)
    cum_curves = np.asarray([
        _curve_at(lg, grid, lg.cumulative()) for lg, _ in results
    ])
    terr_curves = np.asarray([
        _curve_at(lg, grid, lg.tracking_errors) for lg, _ in results
    ])
    rewards_all = [lg.rewards for lg, _ in results]
    binary = all(np.all((r == 0.0) | (r == 1.0)) for r in rewards_all if r.size)
    summary = {
        "config": dataclasses.asdict(cfg),
        "seeds": seeds,
        "files": files,
        "grid": grid,
        "mean_cum_regret": _mean_curve(cum_curves) if cum_curves.size else [],
        "final_regret_per_seed": [lg.final_regret() for lg, _ in results],
        "mean_tracking_error": (
            _mean_curve(terr_curves)
            if terr_curves.size and not np.all(np.isnan(terr_curves)) else []
        ),
        "info_per_seed": [info for _, info in results],
    }
    if binary and all(r.size for r in rewards_all):
        summary["ctr"] = float(np.mean([ctr_score(r) for r in rewards_all]))
    finite = all(np.isfinite(lg.rewards).all() for lg, _ in results)
    summary["all_rewards_finite"] = bool(finite)
    write_json(os.path.join(out, "summary.json"), summary)
    return summary


# ---------------------------------------------------------------------------
# run_gen


@dataclass(frozen=True)
class GenConfig:
    d: int = 10
    k: int = 5
    horizon: int = 10000
    sparsity: float = 0.0
    theta_norm: float = 1.0
    seed: int = 0
    out: str = ""


def run_gen(cfg: GenConfig) -> dict:
    """Generate a synthetic clicklog + truth sidecar under `out`."""
    out = _ensure_out(cfg)
    scfg = SynthStreamConfig(
        dim=cfg.d, k=cfg.k, horizon=cfg.horizon,
        sparsity=cfg.sparsity if cfg.sparsity > 0 else None,
        theta_norm=cfg.theta_norm,
    )
    log_path, sidecar = synth_news_stream(
        scfg, make_rng(cfg.seed), os.path.join(out, "events.jsonl")
    )
    summary = {
        "config": dataclasses.asdict(cfg),
        "log": os.path.basename(log_path),
        "truth": os.path.basename(sidecar),
        "rounds": cfg.horizon,
    }
    write_json(os.path.join(out, "gen_summary.json"), summary)
    return summary
