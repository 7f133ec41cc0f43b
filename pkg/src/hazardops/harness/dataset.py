"""Paired excitation/response datasets with a self-describing on-disk layout.

A saved :class:`SampleSet` is a directory holding ``manifest.json`` and three
array blocks in the :mod:`hazardops.io` format:

``excitation.f64``  ``(M, n_t)`` ground acceleration, in/s^2
``response.f64``    ``(M, n_t, n_ch)`` response, column ``c`` is floor ``c+1``
``time.f64``        ``(n_t,)`` time of each retained sample, s

Small sets also get CSV mirrors (``excitation.csv``, ``response.csv``).
"""

import concurrent.futures
import dataclasses
import json
import logging
import os
import time
from pathlib import Path

import numpy as np

from hazardops import io as hio
from hazardops.errors import ConfigurationError, ConvergenceError, DimensionError, StateError
from hazardops.excitation import GroundMotionParams, generate_many, trim_and_downsample
from hazardops.structural import NewmarkConfig, ShearBuildingModel, simulate

log = logging.getLogger(__name__)

FORMAT = "hazardops.sampleset/1"
RESPONSES = ("displacement", "velocity", "acceleration", "story_drift")
RESPONSE_UNITS = {"displacement": "in", "velocity": "in/s", "acceleration": "in/s^2", "story_drift": "in"}
CSV_LIMIT = 200_000  # entries of the response tensor below which CSV mirrors are written


@dataclasses.dataclass(frozen=True)
class DatasetConfig:
    """How many records, how they are split, trimmed and seeded.

    ``retry_offset`` is added to a sample's seed (repeatedly) when its
    simulation fails to converge.
    """

    n_samples: int = 1000
    train_fraction: float = 0.8
    master_seed: int = 0
    drop_head: int = 21
    stride: int = 1
    response: str = "displacement"
    retry_offset: int = 1_000_003
    max_retries: int = 5
    workers: int = None
    chunk: int = 16

    def __post_init__(self):
        if self.n_samples < 1:
            raise ConfigurationError("n_samples must be at least 1")
        if not 0.0 <= self.train_fraction <= 1.0:
            raise ConfigurationError("train_fraction must lie in [0, 1]")
        if self.response not in RESPONSES:
            raise ConfigurationError(f"response must be one of {RESPONSES}, got '{self.response}'")
        if self.drop_head < 0 or self.stride < 1:
            raise ConfigurationError("need drop_head >= 0 and stride >= 1")

    @property
    def n_train(self):
        return int(round(self.train_fraction * self.n_samples))

    def to_dict(self):
        return dataclasses.asdict(self)


def sample_seeds(master_seed, n):
    """Per-sample 32-bit seeds, a pure function of ``master_seed``."""
    return [int(s) for s in np.random.SeedSequence(int(master_seed)).generate_state(n, dtype=np.uint32)]


def split_assignment(n, n_train, master_seed):
    """Deterministic disjoint train/validation labels for ``n`` samples."""
    order = np.random.default_rng([int(master_seed), int(n), 0x5917]).permutation(n)
    labels = np.array(["validation"] * n, dtype=object)
    labels[order[:n_train]] = "train"
    return labels.tolist()


def newmark_config(gm):
    return NewmarkConfig(dt=gm.dt, duration=(gm.n_t - 1) * gm.dt)


def _response_of(history, kind):
    return history.story_drift if kind == "story_drift" else getattr(history, kind)


def _simulate_chunk(args):
    gm, building, cfg, seeds = args
    ncfg = newmark_config(gm)
    seeds = list(seeds)
    accel = generate_many(gm, seeds)
    out_a, out_r, used, retries = [], [], [], []
    for seed, ag in zip(seeds, accel):
        tries = 0
        while True:
            try:
                hist = simulate(building, ncfg, ag)
                break
            except ConvergenceError as exc:
                tries += 1
                if tries > cfg.max_retries:
                    raise ConvergenceError(f"sample seed {seed}: no convergent record after {tries} tries") from exc
                seed = (seed + cfg.retry_offset) % 2 ** 32
                log.warning("simulation failed to converge, regenerating with seed %d", seed)
                ag = generate_many(gm, [seed])[0]
        out_a.append(ag)
        out_r.append(_response_of(hist, cfg.response))
        used.append(int(seed))
        retries.append(tries)
    return np.array(out_a), np.array(out_r), used, retries


def _workers(cfg):
    if cfg.workers is not None:
        return max(1, int(cfg.workers))
    env = os.environ.get("HAZARDOPS_THREADS", "").strip()
    return max(1, int(env)) if env else 1


def build_dataset(gm=None, building=None, cfg=None):
    """Generate records, simulate each, trim, and assign the split.

    Records come from :func:`sample_seeds` of ``cfg.master_seed``. Chunks of
    samples run in worker processes when ``cfg.workers > 1``; results are
    assembled in seed order, so the output does not depend on the worker
    count.
    """
    gm = gm or GroundMotionParams()
    building = building or ShearBuildingModel()
    cfg = cfg or DatasetConfig()
    start = time.perf_counter()
    seeds = sample_seeds(cfg.master_seed, cfg.n_samples)
    chunks = [(gm, building, cfg, seeds[lo:lo + cfg.chunk]) for lo in range(0, len(seeds), cfg.chunk)]
    workers = _workers(cfg)
    if workers > 1 and len(chunks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate_chunk, chunks))
    else:
        parts = [_simulate_chunk(c) for c in chunks]
    accel = np.concatenate([p[0] for p in parts])
    resp = np.concatenate([p[1] for p in parts])
    used = [s for p in parts for s in p[2]]
    retries = [r for p in parts for r in p[3]]
    time_grid = gm.time_grid()
    x = trim_and_downsample(accel, cfg.drop_head, cfg.stride, axis=1)
    y = trim_and_downsample(resp, cfg.drop_head, cfg.stride, axis=1)
    t = trim_and_downsample(time_grid, cfg.drop_head, cfg.stride)
    manifest = {
        "format": FORMAT,
        "n_samples": cfg.n_samples,
        "n_t": int(x.shape[1]),
        "n_ch": int(y.shape[2]),
        "dt": float(gm.dt * cfg.stride),
        "source_dt": float(gm.dt),
        "source_n_t": int(gm.n_t),
        "trim": {"drop_head": cfg.drop_head, "stride": cfg.stride},
        "response": cfg.response,
        "units": {"time": "s", "excitation": "in/s^2", "response": RESPONSE_UNITS[cfg.response],
                  "arias_intensity": "in/s, pi/(2g) * integral a^2 dt with a in in/s^2"},
        "ground_motion": gm.to_dict(),
        "building": building.to_dict(),
        "dataset": cfg.to_dict(),
        "seeds": used,
        "requested_seeds": seeds,
        "retries": retries,
        "split": split_assignment(cfg.n_samples, cfg.n_train, cfg.master_seed),
    }
    out = SampleSet(x, y, t, manifest)
    out.build_seconds = time.perf_counter() - start
    return out


class SampleSet:
    """Excitations ``(M, n_t)``, responses ``(M, n_t, n_ch)`` and their manifest."""

    def __init__(self, excitation, response, time, manifest):
        self.excitation = np.asarray(excitation, dtype=float)
        self.response = np.asarray(response, dtype=float)
        self.time = np.asarray(time, dtype=float)
        self.manifest = dict(manifest)
        self.build_seconds = None
        m, n_t = self.excitation.shape
        if self.response.ndim != 3 or self.response.shape[:2] != (m, n_t) or self.time.shape != (n_t,):
            raise DimensionError(
                f"inconsistent shapes: excitation {self.excitation.shape}, response {self.response.shape}, "
                f"time {self.time.shape}")
        if len(self.manifest.get("split", [])) != m:
            raise DimensionError("split labels must cover every sample")

    @property
    def n_samples(self):
        return self.excitation.shape[0]

    @property
    def n_t(self):
        return self.excitation.shape[1]

    @property
    def n_ch(self):
        return self.response.shape[2]

    def indices(self, split):
        if split == "all":
            return np.arange(self.n_samples)
        if split not in ("train", "validation"):
            raise ConfigurationError(f"unknown split '{split}'")
        return np.array([i for i, s in enumerate(self.manifest["split"]) if s == split], dtype=int)

    def subset(self, split):
        idx = self.indices(split)
        return self.excitation[idx], self.response[idx]

    def building(self):
        return ShearBuildingModel(**self.manifest["building"])

    def ground_motion(self):
        return GroundMotionParams(**self.manifest["ground_motion"])

    def regenerate(self, i):
        """Untrimmed ground acceleration of sample ``i`` from its recorded seed."""
        return generate_many(self.ground_motion(), [self.manifest["seeds"][i]])[0]

    # persistence -------------------------------------------------------
    def save(self, path, force=False):
        path = Path(path)
        if path.exists() and any(path.iterdir()) and not force:
            raise FileExistsError(f"{path} exists and is not empty; pass force to overwrite")
        path.mkdir(parents=True, exist_ok=True)
        hio.write_block(path / "excitation.f64", self.excitation)
        hio.write_block(path / "response.f64", self.response)
        hio.write_block(path / "time.f64", self.time)
        manifest = dict(self.manifest)
        manifest["layout"] = {
            "excitation.f64": "(M, n_t) float64, rows are samples",
            "response.f64": "(M, n_t, n_ch) float64, last axis is floor",
            "time.f64": "(n_t,) float64",
            "block": "magic 'HZAR', uint32 version, uint32 rank, uint64 shape[rank], little-endian float64 data",
        }
        (path / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
        if self.response.size <= CSV_LIMIT:
            self._write_csv(path)
        return path

    def _write_csv(self, path):
        head = ",".join(f"t{j}" for j in range(self.n_t))
        np.savetxt(path / "excitation.csv", self.excitation, delimiter=",", header=head, comments="", fmt="%.17g")
        m, n_t, n_ch = self.response.shape
        rows = np.column_stack([np.repeat(np.arange(m), n_t), np.tile(self.time, m),
                                self.response.reshape(m * n_t, n_ch)])
        head = "sample,time," + ",".join(f"floor{c + 1}" for c in range(n_ch))
        np.savetxt(path / "response.csv", rows, delimiter=",", header=head, comments="", fmt="%.17g")

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not (path / "manifest.json").exists():
            raise StateError(f"{path} holds no sample set (manifest.json missing)")
        manifest = json.loads((path / "manifest.json").read_text())
        manifest.pop("layout", None)
        return cls(hio.read_block(path / "excitation.f64"), hio.read_block(path / "response.f64"),
                   hio.read_block(path / "time.f64"), manifest)

    def equals(self, other):
        return (np.array_equal(self.excitation, other.excitation) and np.array_equal(self.response, other.response)
                and np.array_equal(self.time, other.time) and self.manifest["seeds"] == other.manifest["seeds"]
                and self.manifest["split"] == other.manifest["split"])
