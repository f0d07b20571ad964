"""PEGE and LinUCB policies in exact-solver and SGD-tracker variants.

Both policies share the convention that rewards are maximized: the optimal
action is argmax x.theta*, the greedy map is the action set's best_response,
and instantaneous regret (x* - x_n).theta* is nonnegative.

Every run produces a `RegretLedger`, the row-per-pull trace that the harness
serializes to CSV.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .environments import Ellipsoid, UnitBall
from .exceptions import ConfigError, NotReadyError
from .linalg import min_eigenvalue
from .rng import make_rng
from .schedules import RegSchedule, StepSchedule
from .solvers import IncrementalOLS, IncrementalRidge
from .buffer import DataBuffer
from .trackers import (
    ConfidenceTracker,
    LeastSquaresTracker,
    RidgeTracker,
    SagTracker,
    SvrgTracker,
)
from .validation import as_matrix_2d, as_vector

TRACE_SCHEMA = "driftls-trace-v1"
TRACE_COLUMNS = (
    "n", "phase", "arm_id", "reward", "inst_regret", "cum_regret",
    "tracking_error", "wall_ns",
)


def best_action(theta, action_set) -> np.ndarray:
    """argmax_{x in D} theta.x; zero theta falls back to the set's first
    direction with a RuntimeWarning."""
    theta = as_vector(theta, name="theta")
    return action_set.best_response(theta)


def ucb_value(theta, conf, x, kappa: float) -> float:
    """theta.x + kappa * sqrt(conf), with the confidence term clamped at 0.

    `conf` may be the scalar x^T A^{-1} x or a phi vector (in which case the
    scalar is x.phi).
    """
    theta = as_vector(theta, name="theta")
    x = as_vector(x, dim=theta.shape[0], name="x")
    c = np.asarray(conf, dtype=np.float64)
    w = float(x @ c) if c.ndim == 1 else float(c)
    return float(x @ theta) + float(kappa) * math.sqrt(max(w, 0.0))


class RegretLedger:
    """Row-per-pull trace: pull index, phase/round, arm, reward, regret,
    tracking error, wall time. Cumulative regret is derived, never stored."""

    def __init__(self):
        self._n: list[int] = []
        self._phase: list[int] = []
        self._arm: list[object] = []
        self._reward: list[float] = []
        self._inst: list[float] = []
        self._terr: list[float] = []
        self._wall: list[int] = []

    def __len__(self) -> int:
        return len(self._n)

    def add(self, n: int, phase: int, arm_id, reward: float, inst_regret: float,
            tracking_error: float = float("nan"), wall_ns: int = 0):
        if not math.isnan(inst_regret) and inst_regret < -1e-12:
            raise ValueError(
                f"negative instantaneous regret {inst_regret!r} at pull {n}"
            )
        self._n.append(int(n))
        self._phase.append(int(phase))
        self._arm.append(arm_id)
        self._reward.append(float(reward))
        self._inst.append(float(inst_regret))
        self._terr.append(float(tracking_error))
        self._wall.append(int(wall_ns))

    @property
    def pulls(self) -> np.ndarray:
        return np.asarray(self._n, dtype=np.int64)

    @property
    def rewards(self) -> np.ndarray:
        return np.asarray(self._reward)

    @property
    def inst_regret(self) -> np.ndarray:
        return np.asarray(self._inst)

    @property
    def tracking_errors(self) -> np.ndarray:
        return np.asarray(self._terr)

    @property
    def arm_ids(self) -> list:
        return list(self._arm)

    @property
    def phases(self) -> np.ndarray:
        return np.asarray(self._phase, dtype=np.int64)

    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.inst_regret)

    def final_regret(self) -> float:
        return float(self.cumulative()[-1]) if self._n else 0.0

    def to_csv(self, path) -> None:
        cum = self.cumulative()
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# schema={TRACE_SCHEMA}\n")
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            for i in range(len(self._n)):
                fh.write(
                    f"{self._n[i]},{self._phase[i]},{self._arm[i]},"
                    f"{self._reward[i]!r},{self._inst[i]!r},{float(cum[i])!r},"
                    f"{self._terr[i]!r},{self._wall[i]}\n"
                )


# ---------------------------------------------------------------------------
# PEGE


@dataclass(frozen=True)
class PegeConfig:
    """Phased exploration / greedy exploitation run parameters.

    c=None selects 3.2/mu_hat (mu_hat = lam_min(sum b b^T)/(2d)), which puts
    mu_hat*c/4 = 0.8 inside the required (2/3, 1) window. paper_c=True uses
    the literal 4d/(3*lam) instead — that value violates the window (the two
    prescriptions are mutually inconsistent), so the window check is skipped
    in that mode.

    step_kind "theorem1" is gamma_n = c/(4(c+n)); "cn" is the legacy c/n.
    """

    horizon: int
    c: float | None = None
    use_tracker: bool = True
    basis: np.ndarray | None = None
    step_kind: str = "theorem1"
    paper_c: bool = False
    track_exact: bool = True

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.step_kind not in ("theorem1", "cn"):
            raise ConfigError(f"unknown step_kind {self.step_kind!r}")
        if self.c is not None and self.c <= 0:
            raise ConfigError("c must be positive")


def default_basis(actions) -> np.ndarray:
    d = actions.dim
    if isinstance(actions, UnitBall):
        return np.eye(d)
    if isinstance(actions, Ellipsoid):
        return np.eye(d) / np.sqrt(np.diag(actions.q))
    raise ConfigError(
        "no default exploration basis for this action set; pass one explicitly"
    )


def run_pege(cfg: PegeConfig, env, rng, timing: bool = False):
    """Run phased exploration / greedy exploitation against `env`.

    Returns (ledger, info) where info carries the resolved constants and
    counters: mu_hat, lam_pege, c, phases, pulls, degenerate_count.
    """
    rng = make_rng(rng)
    d = env.dim
    basis = default_basis(env.actions) if cfg.basis is None else as_matrix_2d(
        cfg.basis, n_cols=d
    )
    if basis.shape[0] != d:
        raise ConfigError(f"basis must have exactly d={d} rows")
    for i in range(d):
        if not env.actions.admits(basis[i]):
            raise ConfigError(f"basis row {i} is not in the action set")
    gram = basis.T @ basis
    lam_pege = min_eigenvalue(gram)
    if lam_pege <= 0.0:
        raise ConfigError("basis does not span the action space")
    mu_hat = lam_pege / (2.0 * d)

    if cfg.c is not None:
        c = float(cfg.c)
    elif cfg.paper_c:
        c = 4.0 * d / (3.0 * lam_pege)
    else:
        c = 3.2 / mu_hat
    if cfg.step_kind == "theorem1":
        if not cfg.paper_c and not (2.0 / 3.0 < mu_hat * c / 4.0 < 1.0):
            raise ConfigError(
                f"mu_hat*c/4 = {mu_hat * c / 4.0:.6g} outside (2/3, 1); "
                "pick c accordingly or set paper_c"
            )
        schedule = StepSchedule.theorem1(c)
    else:
        schedule = StepSchedule.generic(c, 0.0)

    buffer = DataBuffer(d)
    tracker = None
    exact = None
    if cfg.use_tracker:
        tracker = LeastSquaresTracker(schedule=schedule, random_state=rng.spawn(1)[0])
        tracker.bind(buffer)
    if not cfg.use_tracker or cfg.track_exact:
        exact = IncrementalOLS()

    best_mean = env.best_value()
    theta_star = env.theta_star
    ledger = RegretLedger()
    n = 0
    m = 0
    degenerate = 0
    while n < cfg.horizon:
        m += 1
        t0 = time.perf_counter_ns() if timing else 0
        terr = float("nan")
        for i in range(d):
            if n >= cfg.horizon:
                break
            x = basis[i]
            y = env.reward(x)
            buffer.append(x, y)
            if exact is not None:
                exact.observe(x, y)
            if tracker is not None:
                tracker.step(1)
                if exact is not None and exact.ready_:
                    terr = float(np.linalg.norm(tracker.coef_ - exact.solution()))
            else:
                terr = 0.0
            n += 1
            wall = (time.perf_counter_ns() - t0) if timing else 0
            ledger.add(n, m, f"b{i + 1}", y, best_mean - float(x @ theta_star),
                       terr, wall)
            t0 = time.perf_counter_ns() if timing else 0
        if n >= cfg.horizon:
            break
        if tracker is not None:
            theta = tracker.coef_
        elif exact is not None and exact.ready_:
            theta = exact.solution()
        else:
            theta = np.zeros(d)
        if float(np.linalg.norm(theta)) == 0.0:
            degenerate += 1
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            g = env.actions.best_response(theta)
        count = min(m, cfg.horizon - n)
        ys = env.rewards(g, count)
        inst = best_mean - float(g @ theta_star)
        wall_block = (time.perf_counter_ns() - t0) if timing else 0
        per_row = wall_block // count if count else 0
        for j in range(count):
            n += 1
            ledger.add(n, m, "greedy", float(ys[j]), inst, terr, per_row)
    info = {
        "mu_hat": mu_hat,
        "lam_pege": lam_pege,
        "c": c,
        "phases": m,
        "pulls": n,
        "degenerate_count": degenerate,
    }
    return ledger, info


# ---------------------------------------------------------------------------
# LinUCB


@dataclass(frozen=True)
class LinUcbConfig:
    """kappa has no default on purpose: there is no principled universal
    exploration weight, so every run must pick one explicitly."""

    kappa: float
    variant: str = "gd"
    t_phi: int = 1
    k_max: int | None = None

    def __post_init__(self):
        if self.kappa < 0:
            raise ConfigError("kappa must be >= 0")
        if self.variant not in ("exact", "gd", "svrg", "sag"):
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.t_phi < 1:
            raise ConfigError("t_phi must be >= 1")
        if self.k_max is not None and self.k_max < 1:
            raise ConfigError("k_max must be >= 1")


class LinUcbPolicy:
    """Upper-confidence-bound policy over finite arm sets.

    The parameter estimate theta comes from the chosen variant (exact
    regularized solve, or a gd/svrg/sag tracker taking one step per round);
    per-arm confidence weights phi are estimated by `ConfidenceTracker`s
    taking `t_phi` steps per arm per round. Confidence trackers are keyed by
    arm id and reset whenever an id reappears with different features.

    Only chosen rewards ever enter the buffer, so the policy is directly
    usable for offline replay.
    """

    def __init__(self, dim: int, kappa: float, variant: str = "gd", t_phi: int = 1,
                 k_max: int | None = None, theta_schedule: StepSchedule | None = None,
                 phi_schedule: StepSchedule | None = None,
                 penalty: RegSchedule | None = None, random_state=None):
        cfg = LinUcbConfig(kappa=kappa, variant=variant, t_phi=t_phi, k_max=k_max)
        self.dim = int(dim)
        self.kappa = float(kappa)
        self.variant = cfg.variant
        self.t_phi = int(t_phi)
        self.k_max = k_max
        self.phi_schedule = phi_schedule
        self._rng = make_rng(random_state)
        self.buffer = DataBuffer(self.dim)
        pen = penalty if penalty is not None else (
            RegSchedule.power(0.6) if variant in ("exact", "gd")
            else RegSchedule.inverse(1.0)
        )
        self.penalty = pen
        # the exact regularized solution doubles as the tracking target
        self.oracle = IncrementalRidge(penalty=pen)
        self.tracker = None
        if variant == "gd":
            self.tracker = RidgeTracker(schedule=theta_schedule, penalty=pen,
                                        random_state=self._rng.spawn(1)[0])
        elif variant == "svrg":
            self.tracker = SvrgTracker(schedule=theta_schedule, penalty=pen,
                                       random_state=self._rng.spawn(1)[0])
        elif variant == "sag":
            self.tracker = SagTracker(schedule=theta_schedule, penalty=pen,
                                      random_state=self._rng.spawn(1)[0])
        if self.tracker is not None:
            self.tracker.bind(self.buffer)
        self._phi: dict[object, tuple[np.ndarray, ConfidenceTracker]] = {}
        self.rounds_ = 0
        self.clamp_count_ = 0
        self.phi_resets_ = 0

    # -- internals -------------------------------------------------------
    def _n_obs(self) -> int:
        return getattr(self.oracle, "n_seen_", None) or 0

    def _theta(self) -> np.ndarray:
        if self.variant == "exact":
            if self._n_obs() == 0:
                return np.zeros(self.dim)
            return self.oracle.solution()
        try:
            return self.tracker.coef_
        except NotReadyError:
            return np.zeros(self.dim)

    def _phi_tracker(self, arm_id, x: np.ndarray) -> ConfidenceTracker:
        entry = self._phi.get(arm_id)
        if entry is not None:
            stored_x, tr = entry
            if np.array_equal(stored_x, x):
                return tr
            self.phi_resets_ += 1
        tr = ConfidenceTracker(
            target_x=x.copy(),
            schedule=self.phi_schedule,
            random_state=self._rng.spawn(1)[0],
        )
        tr.bind(self.buffer)
        self._phi[arm_id] = (x.copy(), tr)
        return tr

    # -- public API ---------------------------------------------------------
    def ucb_values(self, arm_ids, X) -> np.ndarray:
        """Current UCB for each arm, without advancing any tracker."""
        X = as_matrix_2d(X, n_cols=self.dim)
        theta = self._theta()
        vals = np.empty(X.shape[0])
        if self.variant == "exact" and self._n_obs():
            confs = self.oracle.confidences(X)
            for i in range(X.shape[0]):
                vals[i] = ucb_value(theta, float(confs[i]), X[i], self.kappa)
            return vals
        for i, arm_id in enumerate(arm_ids):
            entry = self._phi.get(arm_id)
            conf = 0.0
            if entry is not None and np.array_equal(entry[0], X[i]):
                try:
                    conf = entry[1].estimate()
                except NotReadyError:
                    conf = 0.0
                if conf < 0.0:
                    self.clamp_count_ += 1
                    conf = 0.0
            vals[i] = ucb_value(theta, conf, X[i], self.kappa)
        return vals

    def choose(self, arm_ids, X) -> int:
        """Advance the trackers one round and return the argmax-UCB index."""
        X = as_matrix_2d(X, n_cols=self.dim)
        if X.shape[0] != len(arm_ids) or X.shape[0] == 0:
            raise ValueError("need one feature row per arm id")
        if self.k_max is not None and X.shape[0] > self.k_max:
            raise ValueError(f"round offers {X.shape[0]} arms, limit is {self.k_max}")
        norms = np.linalg.norm(X, axis=1)
        if np.any(norms > 1.0 + 1e-9):
            raise ValueError("arm features must lie in the unit ball")
        self.rounds_ += 1
        have_data = len(self.buffer) > 0
        if have_data and self.tracker is not None:
            self.tracker.step(1)
        for i, arm_id in enumerate(arm_ids):
            tr = self._phi_tracker(arm_id, X[i])
            if have_data:
                tr.step(self.t_phi)
        return int(np.argmax(self.ucb_values(arm_ids, X)))

    def update(self, x, reward: float) -> None:
        """Record the chosen arm's observed reward."""
        x = as_vector(x, dim=self.dim, name="x")
        self.buffer.append(x, reward)
        self.oracle.observe(x, reward)

    def tracking_error(self) -> float:
        """Distance between the variant's theta and the exact regularized
        solution on the same data (0 for the exact variant)."""
        if self.variant == "exact":
            return 0.0
        if self._n_obs() == 0:
            return float("nan")
        return float(np.linalg.norm(self._theta() - self.oracle.solution()))


def linucb_step(policy: LinUcbPolicy, arms, env, arm_ids=None) -> int:
    """One full round: choose among `arms`, pull it on `env`, learn."""
    X = as_matrix_2d(arms, n_cols=policy.dim)
    ids = list(range(X.shape[0])) if arm_ids is None else list(arm_ids)
    j = policy.choose(ids, X)
    y = env.reward(X[j])
    policy.update(X[j], y)
    return j


def run_linucb(policy: LinUcbPolicy, env, arm_stream, horizon: int,
               timing: bool = False) -> RegretLedger:
    """Drive a LinUCB policy against a live environment for `horizon` rounds."""
    ledger = RegretLedger()
    theta_star = env.theta_star
    for t in range(1, horizon + 1):
        t0 = time.perf_counter_ns() if timing else 0
        X = arm_stream.arms(t)
        ids = list(range(X.shape[0]))
        j = policy.choose(ids, X)
        y = env.reward(X[j])
        policy.update(X[j], y)
        means = X @ theta_star
        inst = float(np.max(means) - means[j])
        wall = (time.perf_counter_ns() - t0) if timing else 0
        ledger.add(t, t, ids[j], y, inst, policy.tracking_error(), wall)
    return ledger


def run_replay(records, policy: LinUcbPolicy, theta_star=None):
    """Offline evaluation on a logged stream (matched-rounds estimator).

    For each logged round the policy picks an arm; only when the pick equals
    the logged choice does the policy observe the logged reward and a ledger
    row get added. Rounds without a logged (chosen, reward) pair are skipped.
    Returns (ledger, stats).
    """
    ledger = RegretLedger()
    ts = None if theta_star is None else as_vector(theta_star, dim=policy.dim)
    total = 0
    unlabeled = 0
    matched = 0
    for rec in records:
        total += 1
        if rec.chosen is None:
            unlabeled += 1
            continue
        ids = [a for a, _ in rec.arms]
        X = np.stack([x for _, x in rec.arms])
        j = policy.choose(ids, X)
        if ids[j] != rec.chosen:
            continue
        policy.update(X[j], rec.reward)
        matched += 1
        if ts is None:
            inst = float("nan")
        else:
            means = X @ ts
            inst = float(np.max(means) - means[j])
        ledger.add(matched, rec.t, ids[j], rec.reward, inst,
                   policy.tracking_error())
    stats = {
        "rounds_total": total,
        "rounds_unlabeled": unlabeled,
        "rounds_matched": matched,
        "match_rate": matched / max(total - unlabeled, 1),
    }
    return ledger, stats
