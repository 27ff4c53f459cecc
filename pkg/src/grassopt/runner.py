"""Config-driven training and optimizer-comparison runs.

``run_training`` owns the epoch loop: it streams one metrics record per epoch
(flushed immediately, so a crash leaves a valid prefix), refreshes the
checkpoint after every epoch, and leaves the resolved config beside the
outputs. ``run_compare`` repeats training across a shared seed set per
optimizer and reports the median final test error of each.
"""

import os
import time
import numpy as np

from .config import TrainConfig, config_to_ini, load_config
from .data import Dataset, gen_blobs, gen_spirals, load_csv, load_idx, normalize
from .errors import ConfigError
from .metrics import MetricsRecord, MetricsWriter
from .nn import Trainer, build_convnet, build_mlp, save_checkpoint
from .optim import LrSchedule, schedule_lr

__all__ = ["OUTPUT_DIR_ENV", "build_dataset", "build_model", "run_training", "run_compare"]

OUTPUT_DIR_ENV = "GRASSOPT_OUTPUT_DIR"


def build_dataset(cfg: TrainConfig) -> Dataset:
    if cfg.dataset == "blobs":
        ds = gen_blobs(cfg.seed, cfg.n_per_class, cfg.classes, cfg.dim, cfg.spread)
    elif cfg.dataset == "spirals":
        ds = gen_spirals(cfg.seed, cfg.n_per_class, cfg.noise)
    elif cfg.dataset == "idx":
        ds = load_idx(cfg.data_path, num_classes=cfg.classes)
    else:
        ds = load_csv(cfg.data_path, {"label": cfg.label_column, "num_classes": cfg.classes})
    if cfg.normalize_mode != "none":
        ds = normalize(ds, cfg.normalize_mode)
    return ds


def build_model(cfg: TrainConfig, ds: Dataset, rng: np.random.Generator):
    if cfg.arch == "mlp":
        in_dim = int(np.prod(ds.feature_shape))
        return build_mlp(
            in_dim, cfg.hidden, ds.num_classes, rng,
            freeze_bn_scale=cfg.freeze_bn_scale, bn_eps=cfg.bn_eps, bn_momentum=cfg.bn_momentum,
        )
    if len(ds.feature_shape) != 3:
        raise ConfigError(
            f"arch 'conv' needs image-shaped features (C, H, W), got {ds.feature_shape}"
        )
    return build_convnet(
        ds.feature_shape, ds.num_classes, rng, channels=cfg.channels,
        freeze_bn_scale=cfg.freeze_bn_scale, bn_eps=cfg.bn_eps, bn_momentum=cfg.bn_momentum,
    )


def _features_for(cfg: TrainConfig, x: np.ndarray) -> np.ndarray:
    if cfg.arch == "mlp" and x.ndim > 2:
        return x.reshape(x.shape[0], -1)
    return x


def resolve_out_dir(cfg: TrainConfig) -> str:
    return os.environ.get(OUTPUT_DIR_ENV, "") or cfg.out_dir


def run_training(cfg: TrainConfig, out_dir: str | None = None):
    """Train per the config; returns (records, paths).

    Writes ``metrics.csv`` (or ``.jsonl``), ``checkpoint.npz``, and
    ``config.ini`` under the output directory. Deterministic for a fixed seed:
    identical configs produce byte-identical metrics files (enable ``timing``
    to record real wall time instead of 0.0, which breaks that).
    """
    out_dir = out_dir or resolve_out_dir(cfg)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.ini"), "w") as fh:
        fh.write(config_to_ini(cfg))

    ds = build_dataset(cfg)
    train_x = _features_for(cfg, ds.train_x)
    test_x = _features_for(cfg, ds.test_x)

    rng = np.random.default_rng(cfg.seed)
    net = build_model(cfg, ds, rng)
    trainer = Trainer(
        net, cfg.optimizer, rng=rng,
        eta_e=cfg.eta_e, eta_g=cfg.eta_g, gamma=cfg.gamma, beta1=cfg.beta1, beta2=cfg.beta2,
        nu=cfg.nu, alpha=cfg.alpha, weight_decay=cfg.weight_decay, nesterov=cfg.nesterov,
        bn_weight_decay=cfg.bn_weight_decay,
    )

    schedule_e = LrSchedule(cfg.eta_e, cfg.milestones, cfg.factor)
    schedule_g = LrSchedule(cfg.eta_g, cfg.milestones, cfg.factor)

    metrics_name = "metrics.csv" if cfg.metrics_format == "csv" else "metrics.jsonl"
    metrics_path = os.path.join(out_dir, metrics_name)
    checkpoint_path = os.path.join(out_dir, "checkpoint.npz")
    started = time.monotonic()
    records = []

    def record(epoch, step, mean_angle, lr_e, lr_g):
        train_loss, train_acc = net.evaluate(train_x, ds.train_y)
        test_loss, test_acc = net.evaluate(test_x, ds.test_y)
        return MetricsRecord(
            epoch=epoch,
            step=step,
            train_loss=train_loss,
            train_acc=train_acc,
            test_loss=test_loss,
            test_acc=test_acc,
            ortho_loss_total=trainer.ortho_total(),
            mean_step_angle_radians=mean_angle,
            lr_e=lr_e,
            lr_g=lr_g,
            wall_time=(time.monotonic() - started) if cfg.timing else 0.0,
        )

    step = 0
    with MetricsWriter(metrics_path, cfg.metrics_format) as writer:
        rec = record(0, 0, 0.0, schedule_lr(schedule_e, 0), schedule_lr(schedule_g, 0))
        records.append(rec)
        writer.write(rec)
        save_checkpoint(checkpoint_path, trainer)
        for epoch in range(cfg.epochs):
            lr_e = schedule_lr(schedule_e, epoch)
            lr_g = schedule_lr(schedule_g, epoch)
            stats = trainer.train_epoch(train_x, ds.train_y, cfg.batch_size, lr_g, lr_e)
            step += stats.steps
            rec = record(epoch + 1, step, stats.mean_angle, lr_e, lr_g)
            records.append(rec)
            writer.write(rec)
            save_checkpoint(checkpoint_path, trainer)

    paths = {"metrics": metrics_path, "checkpoint": checkpoint_path, "out_dir": out_dir}
    return records, paths


COMPARE_RUNS_HEADER = "optimizer,seed,final_test_error"
COMPARE_SUMMARY_HEADER = "optimizer,runs,median_final_test_error"


def run_compare(config_path, overrides, optimizers, runs: int = 5, out_dir: str | None = None):
    """Run each optimizer over seeds ``base_seed + i`` and summarize medians.

    Returns (summary_csv_text, per_run_rows). The median is the lower order
    statistic (the 3rd of 5 runs).
    """
    if len(optimizers) < 1:
        raise ConfigError("compare needs at least one optimizer name")
    base_cfg = load_config(config_path, overrides)
    out_dir = out_dir or resolve_out_dir(base_cfg)
    run_rows = []
    summary_rows = []
    for name in optimizers:
        errors = []
        for i in range(runs):
            run_overrides = dict(overrides or {})
            run_overrides["optimizer"] = name
            run_overrides["seed"] = str(base_cfg.seed + i)
            cfg = load_config(config_path, run_overrides)
            sub_dir = os.path.join(out_dir, "compare", name, f"seed{cfg.seed}")
            records, _ = run_training(cfg, out_dir=sub_dir)
            err = 1.0 - records[-1].test_acc
            errors.append(err)
            run_rows.append(f"{name},{cfg.seed},{err!r}")
        median = sorted(errors)[(len(errors) - 1) // 2]
        summary_rows.append(f"{name},{runs},{median!r}")

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "compare_runs.csv"), "w") as fh:
        fh.write("\n".join([COMPARE_RUNS_HEADER] + run_rows) + "\n")
    summary_text = "\n".join([COMPARE_SUMMARY_HEADER] + summary_rows) + "\n"
    with open(os.path.join(out_dir, "compare_summary.csv"), "w") as fh:
        fh.write(summary_text)
    return summary_text, run_rows
