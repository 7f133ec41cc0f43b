"""Mini-batch training with Adam and optional self-adaptive min-max weights."""

import dataclasses
import math
import time

import numpy as np

from hazardops.autodiff import Adam, Tensor, backward, no_grad
from hazardops.errors import ConfigurationError, DimensionError, NumericalError, TrainingError
from hazardops.operators.losses import SAWeights, sa_loss, standard_loss
from hazardops.operators.normalization import Standardizer


@dataclasses.dataclass
class TrainSchedule:
    """Optimizer and loop settings.

    The learning rate is multiplied by ``decay`` after every
    ``decay_every`` epochs; ``None`` means every third of the run.
    ``sa=True`` enables the self-adaptive min-max objective.
    """

    epochs: int = 100
    batch_size: int = 20
    lr: float = 1e-3
    decay: float = 0.5
    decay_every: int = None
    sa: bool = False
    sa_lr: float = 1e-2
    sa_init: float = 1.0
    sa_per_channel: bool = False
    seed: int = 0
    record_lambda: bool = False

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or not self.lr > 0:
            raise ConfigurationError("schedule needs epochs >= 0, batch_size >= 1 and lr > 0")
        if self.sa and not self.sa_lr > 0:
            raise ConfigurationError("self-adaptive learning rate must be positive")

    def lr_at(self, epoch):
        every = self.decay_every or max(1, math.ceil(self.epochs / 3))
        return self.lr * self.decay ** (epoch // every)

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclasses.dataclass
class TrainResult:
    model: object
    history: dict
    sa: SAWeights = None
    lambda_history: list = None
    seconds: float = 0.0


def _as_pair(model, data):
    x, y = data
    x = model.as_inputs(x)
    y = np.asarray(y, dtype=float)
    if y.ndim == 2:
        y = y[:, :, None]
    if x.shape[:2] != y.shape[:2]:
        raise DimensionError(f"inputs {x.shape} and targets {y.shape} disagree on samples or length")
    if y.shape[-1] != model.n_ch:
        raise DimensionError(f"targets have {y.shape[-1]} channels, model predicts {model.n_ch}")
    return x, y


def _eval_loss(model, x, y, batch_size):
    total = 0.0
    with no_grad():
        for lo in range(0, x.shape[0], batch_size):
            pred = model.forward(x[lo:lo + batch_size]).values
            total += float(((pred - y[lo:lo + batch_size]) ** 2).sum())
    return total / (x.shape[0] * y.shape[-1])


def train(model, data, schedule=None, validation=None, fit_normalization=True, log=None):
    """Train ``model`` in place on raw ``(X, Y)`` arrays.

    ``X`` is ``(M, n_t)`` or ``(M, n_t, n_in)``, ``Y`` is ``(M, n_t, n_ch)``.
    Normalization statistics are fitted on the training inputs and targets
    and stored on the model. Losses are reported in standardized units.
    Each iteration takes one Adam step on the parameters and, with
    ``schedule.sa``, one ascent step on the per-time-point weights computed
    from the same tape.

    A non-finite loss or activation raises :class:`TrainingError`; the model
    is first restored to the parameters at the end of the last finite epoch.
    """
    schedule = schedule or TrainSchedule()
    x, y = _as_pair(model, data)
    if fit_normalization:
        model.input_norm = Standardizer.fit(x)
        model.output_norm = Standardizer.fit(y)
    xs, ys = model.input_norm.transform(x), model.output_norm.transform(y)
    if validation is not None:
        xv, yv = _as_pair(model, validation)
        xv, yv = model.input_norm.transform(xv), model.output_norm.transform(yv)

    m, n_t, n_ch = ys.shape
    sa = None
    if schedule.sa:
        sa = SAWeights(n_t, n_ch, per_channel=schedule.sa_per_channel, lr=schedule.sa_lr,
                       init=schedule.sa_init)
    params = model.trainable()
    opt = Adam(params, lr=schedule.lr)
    rng = np.random.default_rng(schedule.seed)
    history = {"epoch": [], "lr": [], "train_loss": [], "val_loss": []}
    lam_hist = [sa.values.copy()] if sa is not None and schedule.record_lambda else None
    last_good = model.state()
    start = time.perf_counter()
    for epoch in range(schedule.epochs):
        opt.lr = schedule.lr_at(epoch)
        order = rng.permutation(m)
        running = 0.0
        for lo in range(0, m, schedule.batch_size):
            idx = order[lo:lo + schedule.batch_size]
            try:
                pred = model.forward(Tensor(xs[idx]))
                target = Tensor(ys[idx])
                loss = sa_loss(pred, target, sa) if sa is not None else standard_loss(pred, target)
                value = loss.item()
                if not np.isfinite(value):
                    raise NumericalError(f"loss is {value}")
                opt.zero_grad()
                if sa is not None:
                    sa.lam.grad = None
                backward(loss)
                for p in params:
                    if p.grad is None:
                        p.grad = np.zeros_like(p.values)
                opt.step()
                if sa is not None:
                    sa.ascend()
                if not all(np.all(np.isfinite(p.values)) for p in params):
                    raise NumericalError("parameters became non-finite")
            except NumericalError as exc:
                model.load_state(last_good)
                err = TrainingError(f"training diverged at epoch {epoch}, batch starting {lo}: {exc}")
                err.state = last_good
                err.history = history
                err.epoch = epoch
                raise err from exc
            running += value * len(idx)
        history["epoch"].append(epoch)
        history["lr"].append(opt.lr)
        history["train_loss"].append(running / m)
        history["val_loss"].append(_eval_loss(model, xv, yv, 64) if validation is not None else float("nan"))
        last_good = model.state()
        if lam_hist is not None:
            lam_hist.append(sa.values.copy())
        if log is not None:
            log(epoch, history)
    model.trained = True
    return TrainResult(model, history, sa, lam_hist, time.perf_counter() - start)
