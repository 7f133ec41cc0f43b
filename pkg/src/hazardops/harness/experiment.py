"""Model construction and fitting by kind name, shared by the CLI and tests.

FNO variants predict every floor. DeepONet variants predict the top floor
only. The DeepFNOnet feeds a top-floor DeepONet into an all-floor FNO.
"""

import dataclasses

from hazardops.errors import ConfigurationError
from hazardops.operators import DeepONet, FNO, TrainSchedule, deepfnonet_train, train

MODEL_KINDS = ("deeponet", "fno", "sa-fno", "sa-deeponet", "deepfnonet")


@dataclasses.dataclass
class FitResult:
    kind: str
    model: object
    results: list

    @property
    def seconds(self):
        return sum(r.seconds for r in self.results if r is not None)

    @property
    def sa(self):
        return self.results[-1].sa


def make_deeponet(sampleset, arch=None):
    cfg = dict(arch or {})
    cfg.setdefault("n_t", sampleset.n_t)
    if cfg["n_t"] != sampleset.n_t:
        raise ConfigurationError(f"DeepONet branch width {cfg['n_t']} does not match the {sampleset.n_t}-point data")
    cfg.setdefault("n_ch", 1)
    model = DeepONet(**cfg)
    model.floors = list(range(sampleset.n_ch - model.n_ch, sampleset.n_ch))
    return model


def make_fno(sampleset, arch=None):
    cfg = dict(arch or {})
    cfg.setdefault("n_ch", sampleset.n_ch)
    if cfg["n_ch"] != sampleset.n_ch:
        raise ConfigurationError(f"FNO predicts {cfg['n_ch']} channels, data has {sampleset.n_ch} floors")
    model = FNO(**cfg)
    model.check_length(sampleset.n_t)
    model.floors = list(range(sampleset.n_ch))
    return model


def _targets(model, y):
    return y[..., model.floors]


def fit_model(kind, sampleset, fno=None, deeponet=None, schedule=None, stage1_schedule=None,
              residual=False, log=None):
    """Train a model of ``kind`` on the train split, validating on the rest.

    ``fno`` and ``deeponet`` are architecture overrides. ``schedule`` drives
    the run (stage 2 for the hybrid); ``stage1_schedule`` the hybrid's
    DeepONet stage, defaulting to ``schedule``.
    """
    if kind not in MODEL_KINDS:
        raise ConfigurationError(f"unknown model kind '{kind}', expected one of {MODEL_KINDS}")
    schedule = schedule or TrainSchedule()
    xt, yt = sampleset.subset("train")
    xv, yv = sampleset.subset("validation")
    validation = (xv, yv) if len(xv) else None
    if kind == "deepfnonet":
        stage1 = make_deeponet(sampleset, deeponet)
        arch = dict(fno or {})
        arch.pop("n_in", None)
        hybrid, results = deepfnonet_train(stage1, arch, (xt, yt), (stage1_schedule or schedule, schedule),
                                           validation=validation, residual=residual)
        hybrid.stage2.floors = stage1.floors if residual else list(range(sampleset.n_ch))
        return FitResult(kind, hybrid, list(results))
    sa = kind.startswith("sa-")
    if sa != schedule.sa:
        schedule = dataclasses.replace(schedule, sa=sa)
    if kind.endswith("deeponet"):
        model = make_deeponet(sampleset, deeponet)
    else:
        model = make_fno(sampleset, fno)
    val = None if validation is None else (xv, _targets(model, yv))
    result = train(model, (xt, _targets(model, yt)), schedule, validation=val, log=log)
    return FitResult(kind, model, [result])
