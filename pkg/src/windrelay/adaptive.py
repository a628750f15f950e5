"""
Adaptive zone-2 setting: a 1-85-1 sigmoid/linear MLP mapping wind speed to
zone-2 reach magnitude, its training loop, and the online update rule.

The network works on normalized quantities::

    x_n = (speed - in_mean) / in_scale
    y   = out_mean + out_scale * (w2 . sigmoid(w1 * x_n + b1) + b2)

Gradients are taken of ``0.5 * (y_n - t_n)**2`` in the normalized output
space, so the bias gradient of the output layer equals the normalized
residual.
"""

from __future__ import annotations

import cmath
import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from windrelay.errors import (
    DatasetTooSmall,
    Diverged,
    DuplicateSpeed,
    InputError,
    KOutOfRange,
    ModelFormatError,
    WindRelayError,
)
from windrelay.faultsolver import FaultScenario, solve
from windrelay.network import NetworkModel
from windrelay.relay import (
    SettingBasis,
    ZoneSettings,
    infeed_factor,
    zone2_adaptive,
    zone2_static,
)
from windrelay.windfarm import WindFarm, WindState

log = logging.getLogger(__name__)

HIDDEN_UNITS = 85
MODEL_MAGIC = "windrelay-mlp"


def sigmoid(u: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * u))


@dataclass(frozen=True)
class MlpModel:
    w1: np.ndarray  # (H,) input -> hidden
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (H,) hidden -> output
    b2: float
    input_norm: tuple[float, float] = (0.0, 1.0)
    output_norm: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self) -> None:
        for name in ("w1", "b1", "w2"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "b2", float(self.b2))
        object.__setattr__(self, "input_norm", tuple(float(v) for v in self.input_norm))
        object.__setattr__(self, "output_norm", tuple(float(v) for v in self.output_norm))
        if not (self.w1.shape == self.b1.shape == self.w2.shape):
            raise ModelFormatError("w1, b1 and w2 must have the same length")
        values = np.concatenate(
            [self.w1, self.b1, self.w2, [self.b2], self.input_norm, self.output_norm]
        )
        if not np.all(np.isfinite(values)):
            raise ModelFormatError("model parameters must be finite")
        if self.input_norm[1] <= 0 or self.output_norm[1] <= 0:
            raise ModelFormatError("normalization scales must be > 0")

    @property
    def hidden(self) -> int:
        return self.w1.size

    def flat(self) -> np.ndarray:
        return np.concatenate([self.w1, self.b1, self.w2, [self.b2]])

    def with_flat(self, theta: np.ndarray) -> MlpModel:
        h = self.hidden
        return replace(self, w1=theta[:h], b1=theta[h : 2 * h], w2=theta[2 * h : 3 * h], b2=theta[3 * h])

    def norm_x(self, x):
        return (np.asarray(x, dtype=float) - self.input_norm[0]) / self.input_norm[1]

    def norm_y(self, y):
        return (np.asarray(y, dtype=float) - self.output_norm[0]) / self.output_norm[1]

    def denorm_y(self, y_n):
        return self.output_norm[0] + self.output_norm[1] * y_n


@dataclass(frozen=True)
class MlpGradient:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    def flat(self) -> np.ndarray:
        return np.concatenate([self.w1, self.b1, self.w2, [self.b2]])


def init_model(
    hidden: int = HIDDEN_UNITS,
    seed: int = 0,
    input_norm: tuple[float, float] = (0.0, 1.0),
    output_norm: tuple[float, float] = (0.0, 1.0),
) -> MlpModel:
    """Hidden layer uniform in [-0.5, 0.5] from a seeded generator.

    The linear output layer starts at zero, so an untrained network predicts
    the normalization mean.
    """
    rng = np.random.default_rng(seed)
    theta = rng.uniform(-0.5, 0.5, size=2 * hidden)
    return MlpModel(
        w1=theta[:hidden],
        b1=theta[hidden:],
        w2=np.zeros(hidden),
        b2=0.0,
        input_norm=input_norm,
        output_norm=output_norm,
    )


def mlp_forward(model: MlpModel, x):
    """Reach magnitude (ohm) for wind speed ``x`` (scalar or array)."""
    x_n = model.norm_x(x)
    hidden = sigmoid(np.multiply.outer(x_n, model.w1) + model.b1)
    y = model.denorm_y(hidden @ model.w2 + model.b2)
    return float(y) if np.ndim(y) == 0 else y


def mlp_gradient(model: MlpModel, x: float, y_target: float) -> MlpGradient:
    """Backpropagated gradient of ``0.5*(y_n - t_n)**2`` at a single point."""
    x_n = float(model.norm_x(x))
    t_n = float(model.norm_y(y_target))
    a = sigmoid(model.w1 * x_n + model.b1)
    r = float(a @ model.w2 + model.b2) - t_n
    delta = r * model.w2 * a * (1.0 - a)
    return MlpGradient(w1=delta * x_n, b1=delta, w2=r * a, b2=r)


def _batch_loss_grad(theta: np.ndarray, h: int, x_n: np.ndarray, t_n: np.ndarray):
    """Mean of ``0.5*r**2`` over a batch and its gradient w.r.t. ``theta``."""
    w1, b1, w2, b2 = theta[:h], theta[h : 2 * h], theta[2 * h : 3 * h], theta[3 * h]
    a = sigmoid(np.outer(x_n, w1) + b1)
    r = a @ w2 + b2 - t_n
    n = x_n.size
    delta = (r[:, None] * w2) * a * (1.0 - a)
    grad = np.concatenate([x_n @ delta, delta.sum(axis=0), r @ a, [r.sum()]]) / n
    return 0.5 * float(r @ r) / n, grad


@dataclass(frozen=True)
class Dataset:
    """Rows of (wind speed m/s, zone-2 reach magnitude ohm)."""

    speeds: tuple[float, ...]
    targets: tuple[float, ...]

    def __post_init__(self) -> None:
        speeds = tuple(float(v) for v in self.speeds)
        targets = tuple(float(v) for v in self.targets)
        object.__setattr__(self, "speeds", speeds)
        object.__setattr__(self, "targets", targets)
        if len(speeds) != len(targets):
            raise InputError("speeds and targets differ in length")
        if len(set(speeds)) != len(speeds):
            raise DuplicateSpeed("dataset contains duplicate wind speeds")
        if any(not 0.0 <= v <= 30.0 for v in speeds):
            raise InputError("wind speeds must lie in [0, 30] m/s")
        if any(not (t > 0 and math.isfinite(t)) for t in targets):
            raise InputError("targets must be positive and finite")

    def __len__(self) -> int:
        return len(self.speeds)

    @property
    def x(self) -> np.ndarray:
        return np.array(self.speeds)

    @property
    def y(self) -> np.ndarray:
        return np.array(self.targets)

    def within(self, lo: float, hi: float) -> Dataset:
        """Rows with ``lo <= speed < hi``."""
        keep = [(v, t) for v, t in zip(self.speeds, self.targets) if lo <= v < hi]
        return Dataset(tuple(v for v, _ in keep), tuple(t for _, t in keep))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["speed_mps", "reach_ohm"])
            for v, t in zip(self.speeds, self.targets):
                w.writerow([repr(v), repr(t)])

    @classmethod
    def from_csv(cls, path: str | Path) -> Dataset:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        try:
            return cls(
                tuple(float(r["speed_mps"]) for r in rows),
                tuple(float(r["reach_ohm"]) for r in rows),
            )
        except (KeyError, ValueError) as exc:
            raise InputError(f"{path}: malformed dataset ({exc})") from exc


@dataclass(frozen=True)
class TrainingConfig:
    train_fraction: float = 0.65
    learning_rate: float = 0.05
    max_epochs: int = 20000
    target_rmse: float = 0.0  # ohm, on the validation split
    seed: int = 1
    hidden: int = HIDDEN_UNITS
    growth: float = 1.05  # learning-rate growth after an accepted step

    def __post_init__(self) -> None:
        if not 0.6 <= self.train_fraction <= 0.7:
            raise InputError("train_fraction must lie in [0.6, 0.7]")
        if self.learning_rate <= 0 or self.max_epochs < 1 or self.growth < 1:
            raise InputError("learning_rate > 0, max_epochs >= 1 and growth >= 1 required")


@dataclass
class TrainingReport:
    train_idx: np.ndarray
    val_idx: np.ndarray
    train_rmse: list[float] = field(default_factory=list)
    val_rmse: list[float] = field(default_factory=list)
    loss: list[float] = field(default_factory=list)
    stopped: str = ""

    @property
    def epochs(self) -> int:
        return len(self.train_rmse)

    @property
    def final_train_rmse(self) -> float:
        return self.train_rmse[-1]

    @property
    def final_val_rmse(self) -> float:
        return self.val_rmse[-1]


def split_indices(n: int, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(train_fraction * n))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def rmse(model: MlpModel, x: np.ndarray, y: np.ndarray) -> float:
    if len(x) == 0:
        return 0.0
    err = np.asarray(mlp_forward(model, x)) - y
    return float(np.sqrt(np.mean(err**2)))


def train(dataset: Dataset, cfg: TrainingConfig = TrainingConfig()) -> tuple[MlpModel, TrainingReport]:
    """Full-batch gradient descent with revert-and-halve on loss increase.

    A step that raises the training loss is undone and the learning rate
    halved; accepted steps grow it by ``cfg.growth``. The recorded loss is
    therefore non-increasing.
    """
    if len(dataset) < 20:
        raise DatasetTooSmall(f"need at least 20 rows, got {len(dataset)}")
    x, y = dataset.x, dataset.y
    train_idx, val_idx = split_indices(len(dataset), cfg.train_fraction, cfg.seed)
    lo, hi = float(x.min()), float(x.max())
    y_scale = float(np.std(y[train_idx]))
    model = init_model(
        cfg.hidden,
        cfg.seed,
        input_norm=((lo + hi) / 2.0, (hi - lo) / 2.0 or 1.0),
        output_norm=(float(np.mean(y[train_idx])), y_scale if y_scale > 0 else 1.0),
    )
    h = model.hidden
    x_n = model.norm_x(x[train_idx])
    t_n = model.norm_y(y[train_idx])
    report = TrainingReport(train_idx=train_idx, val_idx=val_idx)

    theta = model.flat()
    loss, grad = _batch_loss_grad(theta, h, x_n, t_n)
    lr = cfg.learning_rate
    report.stopped = "max_epochs"
    for _ in range(cfg.max_epochs):
        candidate = theta - lr * grad
        c_loss, c_grad = _batch_loss_grad(candidate, h, x_n, t_n)
        if not (math.isfinite(c_loss) and np.all(np.isfinite(c_grad))):
            if lr < 1e-12:
                raise Diverged("training loss became non-finite")
            lr *= 0.5
        elif c_loss > loss:
            lr *= 0.5
        else:
            theta, loss, grad = candidate, c_loss, c_grad
            lr *= cfg.growth
        model = model.with_flat(theta)
        report.loss.append(loss)
        report.train_rmse.append(rmse(model, x[train_idx], y[train_idx]))
        report.val_rmse.append(rmse(model, x[val_idx], y[val_idx]))
        if len(val_idx) and report.val_rmse[-1] <= cfg.target_rmse:
            report.stopped = "target_rmse"
            break
    return model, report


def save_model(model: MlpModel, path: str | Path) -> None:
    """Flat text: one header line, then parameters one per line (w1, b1, w2, b2)."""
    fmt = lambda v: format(float(v), ".17g")  # noqa: E731
    header = " ".join(
        [MODEL_MAGIC, "1", str(model.hidden), "1"]
        + [fmt(v) for v in (*model.input_norm, *model.output_norm)]
    )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for v in model.flat():
            fh.write(fmt(v) + "\n")


def load_model(path: str | Path) -> MlpModel:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise InputError(f"cannot read model file {path}: {exc}") from exc
    head = lines[0].split()
    if len(head) != 8 or head[0] != MODEL_MAGIC or head[1] != "1" or head[3] != "1":
        raise ModelFormatError(f"{path}: unrecognized model header")
    try:
        hidden = int(head[2])
        in_mean, in_scale, out_mean, out_scale = (float(v) for v in head[4:])
        values = [float(v) for v in lines[1:] if v.strip()]
    except ValueError as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc
    if hidden < 1 or len(values) != 3 * hidden + 1:
        raise ModelFormatError(
            f"{path}: expected {3 * hidden + 1} parameters, found {len(values)}"
        )
    theta = np.array(values)
    return MlpModel(
        w1=theta[:hidden],
        b1=theta[hidden : 2 * hidden],
        w2=theta[2 * hidden : 3 * hidden],
        b2=theta[3 * hidden],
        input_norm=(in_mean, in_scale),
        output_norm=(out_mean, out_scale),
    )


class DatasetError(WindRelayError):
    """Solver failure while generating a dataset row."""

    def __init__(self, speed: float, cause: Exception):
        super().__init__(f"at {speed} m/s: {cause}")
        self.speed = speed
        self.cause = cause


def generate_dataset(
    model: NetworkModel,
    farm: WindFarm,
    scenario: FaultScenario,
    speeds: Iterable[float],
    mode: str = "full",
    k_mode: str = "complex",
) -> Dataset:
    """Solve ``scenario`` at each speed and record the adaptive zone-2 reach."""
    speeds = [float(v) for v in speeds]
    if len(set(speeds)) != len(speeds):
        raise DuplicateSpeed("duplicate speeds in the sweep grid")
    if any(not 0.0 <= v <= 30.0 for v in speeds):
        raise InputError("sweep speeds must lie in [0, 30] m/s")
    basis = SettingBasis.from_model(model)
    targets = []
    for v in speeds:
        try:
            sol = solve(model, farm, WindState(v), scenario, mode)
            k = infeed_factor(sol.i_remote, sol.i_loop)
            targets.append(abs(zone2_adaptive(basis.z_ab, basis.remote_z1s, k, k_mode)))
        except WindRelayError as exc:
            raise DatasetError(v, exc) from exc
    return Dataset(tuple(speeds), tuple(targets))


def adaptive_update(
    settings: ZoneSettings,
    basis: SettingBasis,
    farm_online: bool,
    wind_speed: float | None = None,
    telemetry: tuple[complex, complex] | None = None,
    mlp: MlpModel | None = None,
    farm: WindFarm | None = None,
    k_mode: str = "complex",
) -> ZoneSettings:
    """Zone settings for the prevailing wind-farm condition.

    Offline farm: static zone 2. Phasor telemetry ``(i_remote, i_relay)``:
    zone 2 from the measured in-feed factor. Wind speed only: reach
    magnitude from ``mlp`` at the static reach angle; speeds outside the
    farm's operating band give the static reach. Zones 1 and 3 are left as
    they are.
    """
    static = zone2_static(basis.z_ab, basis.remote_z1s)
    if not farm_online:
        return settings.with_zone2(static)
    if telemetry is not None:
        try:
            k = infeed_factor(*telemetry)
            reach = zone2_adaptive(basis.z_ab, basis.remote_z1s, k, k_mode)
        except KOutOfRange as exc:
            log.warning("in-feed factor rejected, static zone 2 kept: %s", exc)
            return settings.with_zone2(static, fallback=True)
        return settings.with_zone2(reach)
    if wind_speed is not None:
        if farm is not None and not farm.cut_in <= wind_speed < farm.cut_out:
            return settings.with_zone2(static)
        if mlp is None:
            raise InputError("wind-speed update needs a trained model")
        magnitude = mlp_forward(mlp, wind_speed)
        return settings.with_zone2(cmath.rect(magnitude, cmath.phase(static)))
    raise InputError("online update needs telemetry or a wind speed")


def training_curve_rows(report: TrainingReport) -> Sequence[tuple[int, float, float]]:
    return [(e + 1, t, v) for e, (t, v) in enumerate(zip(report.train_rmse, report.val_rmse))]
