"""Two-stage DeepFNOnet: a frozen DeepONet feeds an FNO.

Stage 1 trains a DeepONet on ``F -> Y``. Stage 2 freezes it, stacks its
de-standardized prediction next to the raw excitation as extra input
channels ``[F; G(F)]`` and trains an FNO on those. By default the FNO output
is the final prediction; with ``residual=True`` it learns ``Y - G(F)`` and
the two are summed.
"""

import numpy as np

from hazardops.errors import ConfigurationError, StateError
from hazardops.operators.deeponet import DeepONet
from hazardops.operators.fno import FNO
from hazardops.operators.training import TrainSchedule, train


class DeepFNOnet:
    kind = "deepfnonet"

    def __init__(self, stage1, stage2, residual=False):
        if stage2.n_in != 1 + stage1.n_ch:
            raise ConfigurationError(
                f"stage-2 FNO needs {1 + stage1.n_ch} input channels (excitation + DeepONet outputs), "
                f"has {stage2.n_in}")
        if residual and stage2.n_ch != stage1.n_ch:
            raise ConfigurationError("residual mode needs matching stage-1 and stage-2 output channels")
        self.stage1 = stage1
        self.stage2 = stage2
        self.residual = bool(residual)

    @property
    def n_ch(self):
        return self.stage2.n_ch

    @property
    def trained(self):
        return self.stage1.trained and self.stage2.trained

    def stage2_inputs(self, excitation):
        """Raw stage-2 inputs ``(M, n_t, 1 + n_ch1)``."""
        f = np.asarray(excitation, dtype=float)
        if f.ndim == 1:
            f = f[None]
        g = self.stage1.predict(f)
        return np.concatenate([f[:, :, None], g], axis=-1), g

    def predict(self, excitation, batch_size=64):
        x, g = self.stage2_inputs(excitation)
        out = self.stage2.predict(x, batch_size)
        return out + g if self.residual else out


def deepfnonet_train(stage1, stage2_config, data, schedules=None, validation=None, residual=False,
                     train_stage1=True):
    """Run both stages and return ``(DeepFNOnet, (result1, result2))``.

    ``stage1`` is a :class:`DeepONet` (trained here when ``train_stage1``)
    or an already trained one with ``train_stage1=False``. ``stage2_config``
    holds FNO options; its input width is set by the hybrid. ``schedules``
    is a pair of :class:`TrainSchedule`, one per stage.
    """
    s1, s2 = schedules or (TrainSchedule(), TrainSchedule())
    x, y = data
    y = np.asarray(y, dtype=float)
    if y.ndim == 2:
        y = y[:, :, None]
    if not isinstance(stage1, DeepONet):
        raise ConfigurationError("stage 1 must be a DeepONet")
    result1 = None
    if train_stage1:
        y1 = _stage1_targets(stage1, y)
        v1 = None if validation is None else (validation[0], _stage1_targets(stage1, np.asarray(validation[1])))
        result1 = train(stage1, (x, y1), s1, validation=v1)
    elif not stage1.trained:
        raise StateError("stage-1 DeepONet has not been trained; train it first or pass train_stage1=True")
    cfg = dict(stage2_config)
    cfg["n_in"] = 1 + stage1.n_ch
    cfg.setdefault("n_ch", stage1.n_ch if residual else y.shape[-1])
    stage2 = FNO(**cfg)
    hybrid = DeepFNOnet(stage1, stage2, residual=residual)
    x2, g = hybrid.stage2_inputs(x)
    y2 = _stage1_targets(stage1, y) - g if residual else y
    v2 = None
    if validation is not None:
        xv2, gv = hybrid.stage2_inputs(validation[0])
        yv = np.asarray(validation[1], dtype=float)
        v2 = (xv2, _stage1_targets(stage1, yv) - gv if residual else yv)
    result2 = train(stage2, (x2, y2), s2, validation=v2)
    return hybrid, (result1, result2)


def _stage1_targets(stage1, y):
    """Targets for a DeepONet with fewer channels than the data: the top floors."""
    if y.ndim == 2:
        y = y[:, :, None]
    floors = getattr(stage1, "floors", None)
    if floors is not None:
        return y[..., floors]
    if stage1.n_ch == y.shape[-1]:
        return y
    return y[..., -stage1.n_ch:]
