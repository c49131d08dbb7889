"""Digital twin of a bounded two-class non-preemptive priority queue.

Arrivals are Poisson per class, service is exponential, one server. The
drop-tail policy at full occupancy sheds low-priority packets first (see
``kernels.priority_queue_kernel``). Simulation metrics feed a
``SemanticModel`` whose thresholds ground prompting and the critic.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from tcintent import kernels
from tcintent.kernels import HIGH, LOW, stat_index

WARMUP_FRACTION = 0.1
THRESHOLD_SIG_FIGS = 3


class QueueDomainError(ValueError):
    pass


class InstabilityError(QueueDomainError):
    pass


class AqmPolicy(str, enum.Enum):
    DROP_TAIL = "DropTail"


@dataclass(frozen=True)
class QueueParams:
    lambda_high: float
    lambda_low: float
    mu_high: float
    mu_low: float
    u_target: float
    capacity: int
    aqm_policy: AqmPolicy = AqmPolicy.DROP_TAIL

    def __post_init__(self):
        # Zero arrival rates are allowed for single-class and idle scenarios.
        for name in ("lambda_high", "lambda_low"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise QueueDomainError(f"{name} must be a finite rate >= 0, got {v!r}")
        for name in ("mu_high", "mu_low"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise QueueDomainError(f"{name} must be a finite rate > 0, got {v!r}")
        if not 0 < self.u_target < 1:
            raise QueueDomainError(f"u_target must lie in (0, 1), got {self.u_target!r}")
        if int(self.capacity) != self.capacity or self.capacity < 1:
            raise QueueDomainError(f"capacity must be an integer >= 1, got {self.capacity!r}")
        object.__setattr__(self, "capacity", int(self.capacity))
        object.__setattr__(self, "aqm_policy", AqmPolicy(self.aqm_policy))

    @property
    def rho_high(self) -> float:
        return self.lambda_high / self.mu_high

    @property
    def rho_low(self) -> float:
        return self.lambda_low / self.mu_low

    @property
    def rho(self) -> float:
        return self.rho_high + self.rho_low

    @classmethod
    def from_target(cls, lambda_high, lambda_low, u_target, capacity, aqm_policy=AqmPolicy.DROP_TAIL):
        mu_h, mu_l = derive_service_rates(lambda_high, lambda_low, u_target)
        return cls(lambda_high, lambda_low, mu_h, mu_l, u_target, capacity, aqm_policy)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["aqm_policy"] = self.aqm_policy.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "QueueParams":
        return cls(**d)


@dataclass(frozen=True)
class ClassCounts:
    offered: int
    served: int
    dropped: int
    in_system: int


@dataclass(frozen=True)
class QueueMetrics:
    avg_wait_high: float
    avg_wait_low: float
    drop_rate_high: float
    drop_rate_low: float
    u_actual: float
    counts: dict
    horizon: float
    seed: int
    warmup: float = 0.0
    mean_queue_high: float = 0.0
    mean_queue_low: float = 0.0
    offered_window: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["counts"] = {k: asdict(v) for k, v in self.counts.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "QueueMetrics":
        d = dict(d)
        d["counts"] = {k: ClassCounts(**v) for k, v in d["counts"].items()}
        return cls(**d)


@dataclass(frozen=True)
class Threshold:
    metric: str
    value: float
    unit: str
    op: str = "<="


THRESHOLD_METRICS = (
    ("avg_wait_high", "s"),
    ("avg_wait_low", "s"),
    ("drop_rate_high", "fraction"),
    ("drop_rate_low", "fraction"),
)


@dataclass(frozen=True)
class SemanticModel:
    params: QueueParams
    metrics: QueueMetrics
    thresholds: tuple
    provenance: str = ""

    def threshold(self, metric: str) -> Threshold | None:
        for t in self.thresholds:
            if t.metric == metric:
                return t
        return None

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "metrics": self.metrics.to_dict(),
            "thresholds": [
                {"metric": t.metric, "op": t.op, "value": t.value, "unit": t.unit}
                for t in self.thresholds
            ],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SemanticModel":
        metrics = QueueMetrics.from_dict(d["metrics"])
        thresholds = tuple(
            Threshold(metric=t["metric"], value=float(t["value"]), unit=t["unit"], op=t.get("op", "<="))
            for t in d["thresholds"]
        )
        known = {m for m, _ in THRESHOLD_METRICS}
        for t in thresholds:
            if t.metric not in known:
                raise QueueDomainError(f"threshold names unknown metric {t.metric!r}")
        return cls(QueueParams.from_dict(d["params"]), metrics, thresholds, d.get("provenance", ""))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SemanticModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def derive_service_rates(lambda_high: float, lambda_low: float, u_target: float) -> tuple[float, float]:
    """Equal per-class service rate that makes offered load hit ``u_target``."""
    if lambda_high < 0 or lambda_low < 0 or lambda_high + lambda_low <= 0:
        raise QueueDomainError("arrival rates must be >= 0 with a positive total")
    if not 0 < u_target < 1:
        raise QueueDomainError(f"u_target must lie in (0, 1), got {u_target!r}")
    mu = (lambda_high + lambda_low) / u_target
    return mu, mu


def analytic_waits(params: QueueParams) -> tuple[float, float]:
    """Mean queueing delay per class for the infinite-buffer M/M/1 priority queue.

    W_k = R / ((1 - sigma_{k-1}) (1 - sigma_k)) with R = sum(lambda_i / mu_i^2)
    and sigma_k the cumulative load of classes 1..k.
    """
    sigma1 = params.rho_high
    sigma2 = params.rho
    if sigma2 >= 1:
        raise InstabilityError(f"offered load {sigma2:.6g} >= 1 has no steady state")
    r = params.lambda_high / params.mu_high**2 + params.lambda_low / params.mu_low**2
    return r / (1.0 - sigma1), r / ((1.0 - sigma1) * (1.0 - sigma2))


def _arrival_times(rng: np.random.Generator, rate: float, horizon: float) -> np.ndarray:
    if rate <= 0:
        return np.empty(0, np.float64)
    expected = rate * horizon
    chunk = int(expected + 6.0 * math.sqrt(expected) + 16)
    times = np.cumsum(rng.exponential(1.0 / rate, chunk))
    while times[-1] <= horizon:
        more = np.cumsum(rng.exponential(1.0 / rate, chunk)) + times[-1]
        times = np.concatenate([times, more])
    return times[: np.searchsorted(times, horizon, side="right")]


def draw_traffic(params: QueueParams, horizon: float, seed: int):
    """Arrival instants and per-packet service demands for both classes.

    Four independent PCG64 streams are spawned from ``seed`` so the draw is
    reproducible across platforms and independent of the kernel path.
    """
    streams = [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(4)]
    arr_h = _arrival_times(streams[0], params.lambda_high, horizon)
    arr_l = _arrival_times(streams[1], params.lambda_low, horizon)
    svc_h = streams[2].exponential(1.0 / params.mu_high, arr_h.shape[0])
    svc_l = streams[3].exponential(1.0 / params.mu_low, arr_l.shape[0])
    return arr_h, svc_h, arr_l, svc_l


def simulate(params: QueueParams, horizon: float, seed: int, *, warmup_fraction: float = WARMUP_FRACTION,
             kernel=None) -> QueueMetrics:
    if not horizon > 0 or not math.isfinite(horizon):
        raise QueueDomainError(f"horizon must be a finite positive time, got {horizon!r}")
    if params.aqm_policy is not AqmPolicy.DROP_TAIL:
        raise QueueDomainError(f"unsupported AQM policy {params.aqm_policy!r}")
    kernel = kernel or kernels.priority_queue_kernel
    arr_h, svc_h, arr_l, svc_l = draw_traffic(params, horizon, seed)
    warmup = warmup_fraction * horizon
    st = kernel(arr_h, svc_h, arr_l, svc_l, params.capacity, float(horizon), float(warmup))
    return _metrics_from_stats(st, horizon, warmup, seed)


def _metrics_from_stats(st, horizon, warmup, seed) -> QueueMetrics:
    window = horizon - warmup

    def g(cls, name):
        return float(st[stat_index(cls, name)])

    def ratio(num, den):
        return num / den if den > 0 else 0.0

    in_service = int(st[kernels.IN_SERVICE_CLASS])
    counts = {}
    offered_w = {}
    for label, cls, q in (("high", HIGH, kernels.IN_QUEUE_HIGH), ("low", LOW, kernels.IN_QUEUE_LOW)):
        counts[label] = ClassCounts(
            offered=int(g(cls, kernels.OFFERED)),
            served=int(g(cls, kernels.SERVED)),
            dropped=int(g(cls, kernels.DROPPED)),
            in_system=int(st[q]) + (1 if in_service == cls else 0),
        )
        offered_w[label] = int(g(cls, kernels.OFFERED_W))

    return QueueMetrics(
        avg_wait_high=ratio(g(HIGH, kernels.WAIT_SUM), g(HIGH, kernels.WAIT_N)),
        avg_wait_low=ratio(g(LOW, kernels.WAIT_SUM), g(LOW, kernels.WAIT_N)),
        drop_rate_high=ratio(g(HIGH, kernels.DROPPED_W), g(HIGH, kernels.OFFERED_W)),
        drop_rate_low=ratio(g(LOW, kernels.DROPPED_W), g(LOW, kernels.OFFERED_W)),
        u_actual=min(1.0, ratio(float(st[kernels.BUSY_TIME]), window)),
        counts=counts,
        horizon=float(horizon),
        seed=int(seed),
        warmup=float(warmup),
        mean_queue_high=ratio(g(HIGH, kernels.QUEUE_AREA), window),
        mean_queue_low=ratio(g(LOW, kernels.QUEUE_AREA), window),
        offered_window=offered_w,
    )


def round_sig(x: float, digits: int = THRESHOLD_SIG_FIGS) -> float:
    if x == 0 or not math.isfinite(x):
        return float(x)
    return float(f"{x:.{digits}g}")


def build_semantic_model(params: QueueParams, metrics: QueueMetrics, label: str = "") -> SemanticModel:
    thresholds = tuple(
        Threshold(metric=name, value=round_sig(getattr(metrics, name)), unit=unit)
        for name, unit in THRESHOLD_METRICS
    )
    return SemanticModel(params=params, metrics=metrics, thresholds=thresholds, provenance=label)
