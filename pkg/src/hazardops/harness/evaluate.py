"""Validation-set evaluation of trained operators against the simulator."""

import dataclasses
import os
import platform
import statistics
import time

import numpy as np
import threadpoolctl

from hazardops.errors import ConfigurationError
from hazardops.harness import metrics
from hazardops.harness.dataset import newmark_config
from hazardops.structural import simulate

REPEATS = 5


@dataclasses.dataclass
class MetricsReport:
    """Table-style errors for one model on one split.

    Headline fields (``overall_mse``, ``rel_l2``, best/worst) use one floor,
    the top floor unless chosen otherwise, pooled over every validation
    entry. ``mean_sample_mse`` is the average of the per-sample values.
    ``all_floors`` repeats the pooled metrics over every predicted floor.
    """

    name: str
    floor: int
    n_samples: int
    overall_mse: float
    mean_sample_mse: float
    best_mse: float
    worst_mse: float
    best_sample: int
    worst_sample: int
    rel_l2: float
    sample_indices: np.ndarray
    per_sample_mse: np.ndarray
    per_sample_rel_l2: np.ndarray
    timings: dict = dataclasses.field(default_factory=dict)
    hardware: dict = dataclasses.field(default_factory=dict)
    all_floors: dict = None
    time: np.ndarray = dataclasses.field(default=None, repr=False)
    truth: np.ndarray = dataclasses.field(default=None, repr=False)
    prediction: np.ndarray = dataclasses.field(default=None, repr=False)

    NUMERIC = ("floor", "n_samples", "overall_mse", "mean_sample_mse", "best_mse", "worst_mse",
               "best_sample", "worst_sample", "rel_l2")

    def summary(self):
        out = {k: getattr(self, k) for k in ("name",) + self.NUMERIC}
        out.update({f"t_{k}": v for k, v in self.timings.items()})
        return out

    def trace(self, sample):
        """``(time, truth, prediction)`` for dataset sample index ``sample``."""
        pos = int(np.flatnonzero(self.sample_indices == sample)[0])
        return self.time, self.truth[pos], self.prediction[pos]


def hardware_descriptor():
    return {"machine": platform.machine(), "processor": platform.processor() or "unknown",
            "python": platform.python_version(), "numpy": np.__version__, "cpus": os.cpu_count(),
            "threads": 1}


def median_time(fn, repeats=REPEATS):
    """Median wall-clock seconds of ``repeats`` calls, single-threaded BLAS."""
    runs = []
    with threadpoolctl.threadpool_limits(1):
        for _ in range(repeats):
            t0 = time.perf_counter()
            fn()
            runs.append(time.perf_counter() - t0)
    return statistics.median(runs)


def output_floors(model, n_floors):
    """0-based floors that the model's output channels stand for."""
    floors = getattr(model, "floors", None)
    if floors is None and hasattr(model, "stage2"):
        floors = getattr(model.stage2, "floors", None)
    if floors is not None:
        floors = [int(f) for f in floors]
    elif model.n_ch == n_floors:
        floors = list(range(n_floors))
    elif model.n_ch == 1:
        floors = [n_floors - 1]
    else:
        raise ConfigurationError(f"model predicts {model.n_ch} channels, data has {n_floors} floors")
    if len(floors) != model.n_ch or max(floors) >= n_floors or min(floors) < 0:
        raise ConfigurationError(f"model floors {floors} do not fit data with {n_floors} floors")
    return floors


def check_model_state(model):
    """Raise unless ``model`` is trained and its stored statistics fit its widths."""
    stages = [model.stage1, model.stage2] if hasattr(model, "stage2") else [model]
    for stage in stages:
        if not getattr(stage, "trained", True):
            raise ConfigurationError(f"{getattr(stage, 'kind', 'model')} has not been trained")
        norms = [(getattr(stage, "input_norm", None), stage.n_in, "input"),
                 (getattr(stage, "output_norm", None), stage.n_ch, "output")]
        for norm, width, which in norms:
            if norm is not None and norm.n_ch != width:
                raise ConfigurationError(
                    f"{which} normalization covers {norm.n_ch} channels, model has {width}")


def evaluate(model, sampleset, split="validation", floor=None, name=None, timing=True, batch_size=64):
    """Errors of ``model`` on ``split`` with de-standardized predictions.

    ``floor`` is 1-based; the default is the top floor. Timings (median of
    five runs) cover batched inference per sample, single-sample inference
    and one simulator run on the full-resolution record.
    """
    check_model_state(model)
    idx = sampleset.indices(split)
    if idx.size == 0:
        raise ConfigurationError(f"split '{split}' holds no samples")
    x, y = sampleset.excitation[idx], sampleset.response[idx]
    floors = output_floors(model, sampleset.n_ch)
    floor = sampleset.n_ch if floor is None else int(floor)
    if floor - 1 not in floors:
        raise ConfigurationError(f"model does not predict floor {floor} (has {[f + 1 for f in floors]})")
    pred = model.predict(x, batch_size)
    if pred.shape != (len(idx), sampleset.n_t, len(floors)):
        raise ConfigurationError(f"model output {pred.shape} does not match the data layout")
    c = floors.index(floor - 1)
    yt, yp = y[..., floor - 1], pred[..., c]
    per = metrics.per_sample_mse(yt, yp)
    best, worst = int(np.argmin(per)), int(np.argmax(per))
    truth_all = y[..., floors]
    report = MetricsReport(
        name=name or getattr(model, "kind", "model"), floor=floor, n_samples=len(idx),
        overall_mse=metrics.mse(yt, yp), mean_sample_mse=float(per.mean()),
        best_mse=float(per[best]), worst_mse=float(per[worst]),
        best_sample=int(idx[best]), worst_sample=int(idx[worst]), rel_l2=metrics.rel_l2(yt, yp),
        sample_indices=idx, per_sample_mse=per, per_sample_rel_l2=metrics.per_sample_rel_l2(yt, yp),
        hardware=hardware_descriptor(),
        all_floors={"floors": [f + 1 for f in floors], "mse": metrics.mse(truth_all, pred),
                    "rel_l2": metrics.rel_l2(truth_all, pred)},
        time=sampleset.time, truth=yt, prediction=yp,
    )
    if timing:
        report.timings = time_inference(model, sampleset, x, batch_size)
    return report


def time_inference(model, sampleset, x, batch_size=64):
    batch = x[:batch_size]
    t_batch = median_time(lambda: model.predict(batch, batch_size))
    t_single = median_time(lambda: model.predict(x[:1]))
    building, gm = sampleset.building(), sampleset.ground_motion()
    ag = sampleset.regenerate(int(sampleset.indices("all")[0]))
    cfg = newmark_config(gm)
    t_oracle = median_time(lambda: simulate(building, cfg, ag))
    per_sample = t_batch / len(batch)
    return {"inference_per_sample": per_sample, "inference_single": t_single,
            "oracle_per_sample": t_oracle, "speedup": t_oracle / per_sample,
            "speedup_single": t_oracle / t_single}
