"""``hazardops`` command line: generate, train, evaluate.

Exit codes: 0 success, 2 configuration or validation problem, 3 refusal to
overwrite existing output, 4 numerical failure.
"""

import argparse
import contextlib
import dataclasses
import os
import sys
from pathlib import Path

import numpy as np
import threadpoolctl

from hazardops.cli.config import ConfigError, help_text, load_config
from hazardops.errors import (ConfigurationError, DimensionError, NumericalError, ParameterError, StateError,
                              TrainingError)
from hazardops.harness import SampleSet, build_dataset, emit_report, evaluate, format_table
from hazardops.harness.experiment import MODEL_KINDS, fit_model, make_deeponet, make_fno
from hazardops.operators import load_checkpoint, save_checkpoint

EXIT_OK, EXIT_CONFIG, EXIT_EXISTS, EXIT_NUMERIC = 0, 2, 3, 4


class Refusal(Exception):
    pass


def _refuse_if_exists(paths, force):
    for p in paths:
        p = Path(p)
        if p.exists() and (p.is_file() or any(p.iterdir())) and not force:
            raise Refusal(f"{p} already exists; pass --force to overwrite")


# generate -----------------------------------------------------------------
def cmd_generate(args):
    cfg = load_config(args.config)
    dataset = cfg.dataset
    changes = {}
    if args.samples is not None:
        changes["n_samples"] = args.samples
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if changes:
        dataset = dataclasses.replace(dataset, **changes)
    building = cfg.building if args.stories is None else cfg.building.with_(n_stories=args.stories)
    out = Path(args.out or Path(cfg.output_dir) / "dataset")
    _refuse_if_exists([out], args.force)
    ds = build_dataset(cfg.ground_motion, building, dataset)
    ds.save(out, force=True)
    m = ds.manifest
    print(f"wrote {out}: {ds.n_samples} samples, excitation {ds.excitation.shape}, response {ds.response.shape}")
    print(f"  dt {m['dt']} s, trim drop_head={m['trim']['drop_head']} stride={m['trim']['stride']}, "
          f"response {m['response']} [{m['units']['response']}]")
    print(f"  split {m['split'].count('train')} train / {m['split'].count('validation')} validation, "
          f"master_seed {dataset.master_seed}, retries {sum(m['retries'])}")
    return EXIT_OK


# train --------------------------------------------------------------------
def _load_dataset(path):
    try:
        return SampleSet.load(path)
    except (StateError, FileNotFoundError) as exc:
        raise ConfigurationError(f"cannot load dataset: {exc}") from None


def _write_history(path, results):
    rows = []
    for stage, r in enumerate(results, start=1):
        if r is None:
            continue
        h = r.history
        for i in range(len(h["epoch"])):
            rows.append([stage, h["epoch"][i], h["lr"][i], h["train_loss"][i], h["val_loss"][i]])
    np.savetxt(path, np.array(rows).reshape(-1, 5), delimiter=",", comments="",
               header="stage,epoch,lr,train_loss,val_loss", fmt=["%d", "%d", "%.17g", "%.17g", "%.17g"])


def _checkpoint_paths(out, kind):
    if kind == "deepfnonet":
        return [out / "deepfnonet_stage1.ckpt", out / "deepfnonet_stage2.ckpt"]
    return [out / f"{kind}.ckpt"]


def _save_fit(fit, out, cfg, dataset_path):
    paths = _checkpoint_paths(out, fit.kind)
    extra = {"dataset": str(dataset_path), "model_kind": fit.kind}
    if fit.kind == "deepfnonet":
        save_checkpoint(paths[0], fit.model.stage1, schedule=cfg.stage1_schedule, extra=extra)
        save_checkpoint(paths[1], fit.model, schedule=cfg.schedule, stage1_path=paths[0], extra=extra)
    else:
        sa = fit.sa if fit.kind.startswith("sa-") else None
        save_checkpoint(paths[0], fit.model, schedule=cfg.schedule, sa=sa, extra=extra)
        if sa is not None:
            np.savetxt(out / f"{fit.kind}_lambda.csv", sa.values, delimiter=",", comments="",
                       header=",".join(f"ch{c}" for c in range(sa.values.shape[1])), fmt="%.17g")
    return paths


def cmd_train(args):
    cfg = load_config(args.config)
    kind = args.model or cfg.model
    if kind not in MODEL_KINDS:
        raise ConfigurationError(f"--model must be one of {MODEL_KINDS}")
    changes = {}
    if args.epochs is not None:
        changes["epochs"] = args.epochs
    if args.seed is not None:
        changes["seed"] = args.seed
    if changes:
        cfg.schedule = dataclasses.replace(cfg.schedule, **changes)
        cfg.stage1_schedule = dataclasses.replace(cfg.stage1_schedule, **changes)
    if args.seed is not None:
        cfg.fno = dict(cfg.fno, seed=args.seed)
        cfg.deeponet = dict(cfg.deeponet, seed=args.seed)
    ds = _load_dataset(args.data)
    out = Path(args.out or Path(cfg.output_dir) / "models")
    _refuse_if_exists(_checkpoint_paths(out, kind), args.force)
    out.mkdir(parents=True, exist_ok=True)
    # validate dimensions before any training time is spent
    if kind.endswith("deeponet") or kind == "deepfnonet":
        make_deeponet(ds, cfg.deeponet)
    else:
        make_fno(ds, cfg.fno)
    try:
        fit = fit_model(kind, ds, fno=cfg.fno, deeponet=cfg.deeponet, schedule=cfg.schedule,
                        stage1_schedule=cfg.stage1_schedule, residual=cfg.residual,
                        log=(lambda e, h: print(f"  epoch {e}: train {h['train_loss'][-1]:.6g} "
                                                f"val {h['val_loss'][-1]:.6g}")) if args.verbose else None)
    except TrainingError as exc:
        # keep the last finite parameters for inspection
        failed = out / f"{kind}_last_good.ckpt"
        model = _fresh_model(kind, ds, cfg)
        if model is not None and getattr(exc, "state", None) is not None:
            with contextlib.suppress(ConfigurationError):
                model.load_state(exc.state)
                save_checkpoint(failed, model, schedule=cfg.schedule, extra={"failed": str(exc)})
                print(f"last good parameters kept in {failed}", file=sys.stderr)
        raise
    paths = _save_fit(fit, out, cfg, args.data)
    _write_history(out / f"{kind}_history.csv", fit.results)
    last = fit.results[-1].history
    print(f"trained {kind} in {fit.seconds:.1f} s; final train loss {last['train_loss'][-1] if last['train_loss'] else float('nan'):.6g}, "
          f"validation loss {last['val_loss'][-1] if last['val_loss'] else float('nan'):.6g}")
    for p in paths:
        print(f"  wrote {p}")
    return EXIT_OK


def _fresh_model(kind, ds, cfg):
    if kind == "deepfnonet":
        return None
    return make_deeponet(ds, cfg.deeponet) if kind.endswith("deeponet") else make_fno(ds, cfg.fno)


# evaluate -----------------------------------------------------------------
def _parse_samples(text):
    if not text:
        return []
    return [t.strip() for t in text.split(",") if t.strip()]


def cmd_evaluate(args):
    ds = _load_dataset(args.data)
    out = Path(args.out or Path(args.data).parent / "report")
    _refuse_if_exists([out / "table.txt", out / "metrics.csv"], args.force)
    reports = []
    for path in args.checkpoint:
        try:
            model, head, _ = load_checkpoint(path)
        except StateError as exc:
            raise ConfigurationError(str(exc)) from None
        name = head.get("extra", {}).get("model_kind") or head["kind"]
        if any(r.name == name for r in reports):
            name = f"{name}:{Path(path).stem}"
        reports.append(evaluate(model, ds, split=args.split, floor=args.floor, name=name,
                                timing=not args.no_timing))
    samples = _parse_samples(args.samples)
    for token in samples:
        if token not in ("best", "worst") and not token.lstrip("-").isdigit():
            raise ConfigurationError(f"--samples takes best, worst or sample indices, got '{token}'")
    try:
        written = emit_report(reports, out, samples=samples)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None
    print(format_table(reports), end="")
    for r in reports:
        if r.timings:
            t = r.timings
            print(f"  {r.name}: inference {t['inference_per_sample'] * 1e3:.3f} ms/sample, "
                  f"simulator {t['oracle_per_sample'] * 1e3:.3f} ms/sample, speedup {t['speedup']:.1f}x")
    print(f"wrote {len(written)} files to {out}")
    return EXIT_OK


# entry point --------------------------------------------------------------
def build_parser():
    parser = argparse.ArgumentParser(
        prog="hazardops",
        description="Neural-operator surrogates for nonlinear shear-building response to stochastic ground motion.",
        epilog=help_text() + "\n\nexit codes: 0 ok, 2 config/validation, 3 refusing to overwrite, 4 numerical failure"
               "\nenvironment: HAZARDOPS_THREADS caps BLAS threads and dataset worker processes",
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration (see the key list in --help)")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")
        p.add_argument("--out", help="output directory")

    g = sub.add_parser("generate", help="build and save a sample set",
                       epilog=help_text(), formatter_class=argparse.RawDescriptionHelpFormatter)
    common(g)
    g.add_argument("--samples", type=int, help="number of records (dataset.n_samples)")
    g.add_argument("--stories", type=int, help="number of stories (building.n_stories)")
    g.add_argument("--seed", type=int, help="master seed (dataset.master_seed)")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train a model on a saved sample set",
                       epilog=help_text(), formatter_class=argparse.RawDescriptionHelpFormatter)
    common(t)
    t.add_argument("--data", required=True, help="sample-set directory from 'generate'")
    t.add_argument("--model", choices=MODEL_KINDS, help="model kind (overrides 'model')")
    t.add_argument("--epochs", type=int, help="training epochs (schedule.epochs)")
    t.add_argument("--seed", type=int, help="initialization and batching seed")
    t.add_argument("--verbose", action="store_true", help="print per-epoch losses")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="compare checkpoints on a sample set")
    e.add_argument("--data", required=True, help="sample-set directory")
    e.add_argument("--checkpoint", action="append", required=True,
                   help="checkpoint file; repeat to build a comparison table")
    e.add_argument("--samples", default="", help="comma list of best, worst or sample indices to plot")
    e.add_argument("--floor", type=int, help="1-based floor for metrics and traces (default top)")
    e.add_argument("--split", default="validation", choices=("validation", "train", "all"))
    e.add_argument("--no-timing", action="store_true", help="skip the inference/simulator timing runs")
    e.add_argument("--force", action="store_true", help="overwrite existing report files")
    e.add_argument("--out", help="report directory (default: next to the dataset)")
    e.set_defaults(func=cmd_evaluate)
    return parser


def _thread_limit():
    env = os.environ.get("HAZARDOPS_THREADS", "").strip()
    if not env:
        return contextlib.nullcontext()
    try:
        n = int(env)
    except ValueError:
        raise ConfigurationError(f"HAZARDOPS_THREADS must be an integer, got '{env}'") from None
    return threadpoolctl.threadpool_limits(max(1, n))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _thread_limit():
            return args.func(args)
    except Refusal as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXISTS
    except (ConfigError, ConfigurationError, DimensionError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
