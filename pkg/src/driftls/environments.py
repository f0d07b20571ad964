"""Synthetic linear-reward environments and the event-log interchange format.

The environments enforce the modeling assumptions the guarantees rest on:
actions live in the unit ball, noise is zero-mean with |xi| <= 1. The
event-log half of the module defines the JSON-lines schema used for offline
replay, with strict validation on both write and read.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EventLogError
from .linalg import min_eigenvalue, solve_spd
from .rng import make_rng
from .validation import as_matrix_2d, as_square_matrix, as_vector

NORM_SLACK = 1e-9
NOISE_KINDS = ("uniform", "rademacher", "tgauss", "none")


@dataclass(frozen=True)
class NoiseSpec:
    """Bounded zero-mean reward noise.

    kinds: uniform(-1, 1); rademacher (+-1); tgauss (gaussian(0, sigma)
    redrawn until |xi| <= clip); none.
    """

    kind: str = "uniform"
    sigma: float = 0.25
    clip: float = 1.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "tgauss" and (self.sigma <= 0 or self.clip <= 0):
            raise ValueError("tgauss noise needs sigma > 0 and clip > 0")

    def draw(self, rng: np.random.Generator, size: int | None = None):
        n = 1 if size is None else int(size)
        if self.kind == "uniform":
            out = rng.uniform(-1.0, 1.0, size=n)
        elif self.kind == "rademacher":
            out = rng.integers(0, 2, size=n).astype(np.float64) * 2.0 - 1.0
        elif self.kind == "tgauss":
            out = rng.normal(0.0, self.sigma, size=n)
            bad = np.abs(out) > self.clip
            while bad.any():
                out[bad] = rng.normal(0.0, self.sigma, size=int(bad.sum()))
                bad = np.abs(out) > self.clip
        else:
            out = np.zeros(n)
        return float(out[0]) if size is None else out


# ---------------------------------------------------------------------------
# Action sets


class UnitBall:
    """Euclidean unit ball; the greedy response is theta / ||theta||."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = int(dim)

    def admits(self, x) -> bool:
        x = as_vector(x, dim=self.dim)
        return float(np.linalg.norm(x)) <= 1.0 + NORM_SLACK

    def best_response(self, theta) -> np.ndarray:
        theta = as_vector(theta, dim=self.dim, name="theta")
        nrm = float(np.linalg.norm(theta))
        if nrm == 0.0:
            warnings.warn(
                "zero parameter vector: greedy action is undefined, "
                "returning the first basis direction",
                RuntimeWarning,
            )
            e = np.zeros(self.dim)
            e[0] = 1.0
            return e
        return theta / nrm


class Ellipsoid:
    """{x : x^T Q x <= 1} for SPD Q, scaled to sit inside the unit ball.

    The greedy response maximizes theta.x over the set:
    x* = Q^{-1} theta / sqrt(theta^T Q^{-1} theta).
    """

    def __init__(self, q):
        q = as_square_matrix(q, name="q")
        lo = min_eigenvalue(q)
        if lo < 1.0:
            # the longest semi-axis is 1/sqrt(lambda_min); keep it <= 1
            raise ValueError(
                "ellipsoid leaves the unit ball (needs min eigenvalue >= 1, "
                f"got {lo:.3g})"
            )
        self.q = q
        self.dim = q.shape[0]

    def admits(self, x) -> bool:
        x = as_vector(x, dim=self.dim)
        return float(x @ self.q @ x) <= 1.0 + NORM_SLACK

    def best_response(self, theta) -> np.ndarray:
        theta = as_vector(theta, dim=self.dim, name="theta")
        if float(np.linalg.norm(theta)) == 0.0:
            warnings.warn(
                "zero parameter vector: greedy action is undefined, "
                "returning the first-axis extreme point",
                RuntimeWarning,
            )
            theta = np.zeros(self.dim)
            theta[0] = 1.0
        w = solve_spd(self.q, theta)
        return w / np.sqrt(float(theta @ w))


class FinitePool:
    """A fixed finite arm set; greedy response is the best-scoring row."""

    def __init__(self, arms):
        arms = as_matrix_2d(arms)
        norms = np.linalg.norm(arms, axis=1)
        if np.any(norms > 1.0 + NORM_SLACK):
            raise ValueError("every arm must lie in the unit ball")
        self.arms = arms
        self.dim = arms.shape[1]

    def admits(self, x) -> bool:
        x = as_vector(x, dim=self.dim)
        return bool(np.min(np.linalg.norm(self.arms - x, axis=1)) <= NORM_SLACK)

    def best_response(self, theta) -> np.ndarray:
        theta = as_vector(theta, dim=self.dim, name="theta")
        if float(np.linalg.norm(theta)) == 0.0:
            warnings.warn(
                "zero parameter vector: greedy action is undefined, "
                "returning the first arm",
                RuntimeWarning,
            )
            return self.arms[0].copy()
        return self.arms[int(np.argmax(self.arms @ theta))].copy()


# ---------------------------------------------------------------------------
# Environment


class LinearEnv:
    """Hidden-parameter linear reward environment.

    reward_model "linear": y = x.theta* + xi.
    reward_model "click":  y ~ Bernoulli(clamp(x.theta* + 0.5 xi, 0, 1)) —
    the synthetic click model (an artifact invention; no real-data analogue
    is bundled).
    """

    def __init__(self, theta_star, actions, noise: NoiseSpec | None = None,
                 reward_model: str = "linear", rng=None):
        self.theta_star = as_vector(theta_star, name="theta_star").copy()
        self.actions = actions
        if actions.dim != self.theta_star.shape[0]:
            raise ValueError("theta_star and action set dimensions differ")
        self.noise = noise if noise is not None else NoiseSpec()
        if reward_model not in ("linear", "click"):
            raise ValueError(f"unknown reward model {reward_model!r}")
        self.reward_model = reward_model
        self.rng = make_rng(rng)

    @property
    def dim(self) -> int:
        return self.theta_star.shape[0]

    def mean_reward(self, x) -> float:
        return float(as_vector(x, dim=self.dim) @ self.theta_star)

    def _check(self, x) -> np.ndarray:
        x = as_vector(x, dim=self.dim, name="x")
        if not self.actions.admits(x):
            raise ValueError("action not admitted by the environment's action set")
        return x

    def reward(self, x) -> float:
        return float(self.rewards(x, 1)[0])

    def rewards(self, x, count: int) -> np.ndarray:
        """Draw `count` independent rewards for the same action."""
        x = self._check(x)
        mean = float(x @ self.theta_star)
        xi = self.noise.draw(self.rng, count)
        if self.reward_model == "linear":
            return mean + xi
        p = np.clip(mean + 0.5 * xi, 0.0, 1.0)
        return (self.rng.random(count) < p).astype(np.float64)

    def best_value(self) -> float:
        return float(self.actions.best_response(self.theta_star) @ self.theta_star)


# ---------------------------------------------------------------------------
# Arm generation


@dataclass(frozen=True)
class ArmSpec:
    """How per-round arm sets are produced.

    sparsity: probability that a coordinate is active (None = dense); rows
    are renormalized to unit length, with at least one active coordinate.
    fixed: draw one pool up front and serve it every round.
    """

    k: int
    dim: int
    sparsity: float | None = None
    fixed: bool = False

    def __post_init__(self):
        if self.k < 1 or self.dim < 1:
            raise ValueError("k and dim must be >= 1")
        if self.sparsity is not None and not (0.0 < self.sparsity <= 1.0):
            raise ValueError("sparsity must lie in (0, 1]")


def sample_arms(spec: ArmSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw a (k, dim) block of unit-norm (optionally sparse) arm features."""
    g = rng.standard_normal((spec.k, spec.dim))
    if spec.sparsity is not None:
        mask = rng.random((spec.k, spec.dim)) < spec.sparsity
        dead = ~mask.any(axis=1)
        if dead.any():
            cols = rng.integers(0, spec.dim, size=int(dead.sum()))
            mask[np.flatnonzero(dead), cols] = True
        g = g * mask
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    # standard normals are never exactly 0, but guard the degenerate row anyway
    norms[norms == 0.0] = 1.0
    return g / norms


class ArmStream:
    """Sequence of per-round arm sets; arm ids are pool indices 0..k-1."""

    def __init__(self, spec: ArmSpec, rng):
        self.spec = spec
        self.rng = make_rng(rng)
        self._pool = sample_arms(spec, self.rng) if spec.fixed else None

    def arms(self, t: int) -> np.ndarray:
        if self._pool is not None:
            return self._pool
        return sample_arms(self.spec, self.rng)


def gen_arm_set(spec: ArmSpec, t: int, rng) -> list[tuple[int, np.ndarray]]:
    """One round's arm set as (arm_id, feature) pairs."""
    xs = sample_arms(spec, make_rng(rng))
    return [(i, xs[i]) for i in range(spec.k)]


# ---------------------------------------------------------------------------
# Event log


@dataclass
class EventRecord:
    """One logged round: the arms on offer and (optionally) what happened."""

    t: int
    arms: list = field(default_factory=list)  # [(arm_id, feature vector)]
    chosen: object = None
    reward: float | None = None


def _validate_record(rec: EventRecord, line: int) -> None:
    if not isinstance(rec.t, int) or rec.t < 0:
        raise EventLogError(line, "field 't' must be a non-negative integer")
    if not rec.arms:
        raise EventLogError(line, "field 'arms' must be a non-empty list")
    ids = set()
    for arm_id, x in rec.arms:
        if not isinstance(arm_id, (int, str)):
            raise EventLogError(line, "arm id must be an integer or string")
        if arm_id in ids:
            raise EventLogError(line, f"duplicate arm id {arm_id!r}")
        ids.add(arm_id)
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.size == 0 or not np.isfinite(x).all():
            raise EventLogError(line, f"arm {arm_id!r} has a malformed feature vector")
        if float(np.linalg.norm(x)) > 1.0 + NORM_SLACK:
            raise EventLogError(line, f"arm {arm_id!r} feature norm exceeds 1")
    if rec.reward is not None and rec.chosen is None:
        raise EventLogError(line, "reward present without a chosen arm")
    if rec.chosen is not None:
        if rec.chosen not in ids:
            raise EventLogError(line, f"chosen id {rec.chosen!r} not among the arms")
        if rec.reward is None:
            raise EventLogError(line, "chosen arm present without a reward")
        if not np.isfinite(rec.reward):
            raise EventLogError(line, "reward must be finite")


def write_event_log(path, records) -> int:
    """Write records as UTF-8 JSON lines; returns the number written."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for i, rec in enumerate(records, start=1):
            _validate_record(rec, i)
            obj = {
                "t": rec.t,
                "arms": [
                    {"id": arm_id, "x": np.asarray(x, dtype=np.float64).tolist()}
                    for arm_id, x in rec.arms
                ],
            }
            if rec.chosen is not None:
                obj["chosen"] = rec.chosen
                obj["reward"] = rec.reward
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")
            n += 1
    return n


_TOP_KEYS = {"t", "arms", "chosen", "reward"}


def read_event_log(path):
    """Stream EventRecords from a JSON-lines file.

    Malformed lines raise EventLogError carrying the 1-based line number.
    """
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise EventLogError(line_no, f"invalid JSON: {e.msg}") from e
            if not isinstance(obj, dict):
                raise EventLogError(line_no, "record must be a JSON object")
            extra = set(obj) - _TOP_KEYS
            if extra:
                raise EventLogError(line_no, f"unknown fields {sorted(extra)}")
            if "t" not in obj or "arms" not in obj:
                missing = {"t", "arms"} - set(obj)
                raise EventLogError(line_no, f"missing fields {sorted(missing)}")
            if not isinstance(obj["arms"], list):
                raise EventLogError(line_no, "field 'arms' must be a list")
            arms = []
            for a in obj["arms"]:
                if not isinstance(a, dict) or set(a) != {"id", "x"}:
                    raise EventLogError(line_no, "arm entries need exactly {id, x}")
                arms.append((a["id"], np.asarray(a["x"], dtype=np.float64)))
            reward = obj.get("reward")
            rec = EventRecord(
                t=obj.get("t"),
                arms=arms,
                chosen=obj.get("chosen"),
                reward=None if reward is None else float(reward),
            )
            _validate_record(rec, line_no)
            yield rec


# ---------------------------------------------------------------------------
# Synthetic news stream


@dataclass(frozen=True)
class SynthStreamConfig:
    dim: int = 10
    k: int = 5
    horizon: int = 10000
    sparsity: float | None = None
    theta_norm: float = 1.0

    def __post_init__(self):
        if self.dim < 1 or self.k < 1 or self.horizon < 0:
            raise ValueError("dim, k must be >= 1 and horizon >= 0")
        if self.theta_norm <= 0:
            raise ValueError("theta_norm must be positive")


def synth_news_stream(cfg: SynthStreamConfig, rng, path) -> tuple[str, str]:
    """Generate a clicklog under a uniform-random logging policy.

    Rewards are Bernoulli(clamp(x.theta* + 0.5 xi, 0, 1)) with uniform xi.
    The hidden theta* goes to a `<path>.truth.json` sidecar so offline regret
    can be computed later. Returns (log_path, sidecar_path).
    """
    rng = make_rng(rng)
    g = rng.standard_normal(cfg.dim)
    theta_star = g / np.linalg.norm(g) * cfg.theta_norm
    spec = ArmSpec(k=cfg.k, dim=cfg.dim, sparsity=cfg.sparsity)

    def records():
        for t in range(1, cfg.horizon + 1):
            xs = sample_arms(spec, rng)
            j = int(rng.integers(cfg.k))
            p = float(np.clip(xs[j] @ theta_star + 0.5 * rng.uniform(-1.0, 1.0), 0.0, 1.0))
            click = float(rng.random() < p)
            yield EventRecord(
                t=t, arms=[(i, xs[i]) for i in range(cfg.k)], chosen=j, reward=click
            )

    write_event_log(path, records())
    sidecar = str(path) + ".truth.json"
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "theta_star": theta_star.tolist(),
                "dim": cfg.dim,
                "k": cfg.k,
                "horizon": cfg.horizon,
                "sparsity": cfg.sparsity,
                "click_model": "bernoulli(clamp(x.theta + 0.5*uniform, 0, 1))",
                "logging_policy": "uniform",
            },
            fh,
            indent=2,
        )
    return str(path), sidecar
