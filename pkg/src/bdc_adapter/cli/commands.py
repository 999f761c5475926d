"""Subcommand bodies. Each echoes its resolved config, then returns a JSON-able result."""

from __future__ import annotations

import argparse
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..bdc import dcorr, dcov, pearson
from ..data import (
    Checkpoint,
    FeatureBank,
    Manifest,
    SynthSpec,
    generate_synthetic,
    load_checkpoint,
    load_manifest,
    load_prototypes,
    read_bank,
    sample_episode,
    save_checkpoint,
    save_manifest,
    save_prototypes,
    write_bank,
    write_jsonl,
)
from ..data.checkpoint import projection_meta
from ..data.reports import ablation_records, eval_records, grid_records
from ..errors import (
    CheckpointError,
    DegenerateInputError,
    InsufficientDataError,
    ManifestError,
    ShapeError,
)
from ..fewshot import (
    AdapterModel,
    Episode,
    FusionConfig,
    build_model,
    build_prototypes,
    evaluate,
    fit_episode_projection,
    grid_search,
    run_ablation,
)
from ..head import TrainConfig
from ..linalg import make_rng
from ..observability.metrics import (
    STAGE_ABLATE,
    STAGE_DCOV,
    STAGE_EVAL,
    STAGE_GENERATE,
    STAGE_GRID,
    STAGE_PROTOTYPES,
    STAGE_TRAIN,
)
from ..observability.timing import stage_timer
from ..reduction import ProjectionConfig

logger = logging.getLogger(__name__)

Result = Dict[str, Any]
Echo = Callable[[Dict[str, Any]], None]

# Raw flags superseded by a resolved section of the echoed config.
_COVERED = {
    "spec": (
        "classes",
        "shots",
        "queries",
        "channels",
        "positions",
        "pairs",
        "noise",
        "embed_signal",
        "text_noise",
        "templates",
        "train_per_class",
        "val_per_class",
    ),
    "projection": ("proj_dim", "positions_as_observations"),
    "train": ("epochs", "lr", "wd", "image_batch", "text_batch"),
    "fusion": ("alpha", "delta", "tau"),
}


def namespace_config(args: argparse.Namespace) -> Dict[str, Any]:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())}


def _announce(echo: Echo, args: argparse.Namespace, **resolved: Any) -> None:
    """Echo the flags with every defaulted or merged value replaced by what the run uses."""
    config = namespace_config(args)
    for section in resolved:
        for name in _COVERED.get(section, ()):
            config.pop(name, None)
    config.update(resolved)
    echo(config)


def resolved_projection(cfg: ProjectionConfig, channels: int) -> Dict[str, Any]:
    return {**cfg.model_dump(), "out_dim": min(cfg.out_dim, channels)}


def _load(args: argparse.Namespace) -> Tuple[FeatureBank, Manifest]:
    return read_bank(args.bank), load_manifest(args.manifest)


def projection_config(args: argparse.Namespace) -> ProjectionConfig:
    return ProjectionConfig(
        kind=args.projection,
        out_dim=args.proj_dim,
        seed=args.seed,
        channels_as_observations=not args.positions_as_observations,
    )


def train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        base_lr=args.lr,
        weight_decay=args.wd,
        image_per_step=args.image_batch,
        text_per_step=args.text_batch,
        seed=args.seed,
    )


def fusion_config(args: argparse.Namespace, base: Optional[FusionConfig] = None) -> FusionConfig:
    """Flags override ``base`` (the checkpoint's stored config) one field at a time."""
    merged = (base or FusionConfig()).model_dump()
    for name in ("alpha", "delta", "tau"):
        value = getattr(args, name, None)
        if value is not None:
            merged[name] = value
    return FusionConfig(**merged)


def synth_spec(args: argparse.Namespace) -> SynthSpec:
    return SynthSpec(
        classes=args.classes,
        shots=args.shots,
        queries=args.queries,
        channels=args.channels,
        positions=args.positions,
        pairs=args.pairs,
        noise=args.noise,
        embed_signal=args.embed_signal,
        text_noise=args.text_noise,
        templates=args.templates,
        train_per_class=args.train_per_class,
        val_per_class=args.val_per_class,
        seed=args.seed,
    )


def cmd_gen(args: argparse.Namespace, run_id: str, echo: Echo) -> Result:
    spec = synth_spec(args)
    resolved = spec.model_dump()
    resolved.update(pairs=spec.resolved_pairs, train_per_class=spec.resolved_train_per_class)
    _announce(echo, args, spec=resolved)
    with stage_timer(logger, run_id=run_id, stage=STAGE_GENERATE):
        data = generate_synthetic(spec)
    write_bank(args.bank, data.bank)
    save_manifest(args.manifest, data.manifest)
    return {"bank": str(args.bank), "manifest": str(args.manifest), "items": len(data.bank)}


def _channels(bank: FeatureBank) -> int:
    if bank.maps is None:
        raise InsufficientDataError("bank has no feature maps")
    return bank.map_shape[0]


def cmd_prototypes(args: argparse.Namespace, run_id: str, echo: Echo) -> Result:
    bank, manifest = _load(args)
    proj_cfg = projection_config(args)
    _announce(echo, args, projection=resolved_projection(proj_cfg, _channels(bank)))
    episode = sample_episode(bank, manifest, args.shots, args.seed)
    with stage_timer(logger, run_id=run_id, stage=STAGE_PROTOTYPES):
        projection = fit_episode_projection(episode.support_maps, proj_cfg)
        protos = build_prototypes(
            episode.support_maps, projection, class_names=episode.class_names
        )
    save_prototypes(args.out, protos, projection)
    return {"prototypes": str(args.out), "classes": protos.num_classes, "side": protos.side}


def cmd_train(args: argparse.Namespace, run_id: str, echo: Echo) -> Result:
    bank, manifest = _load(args)
    train_cfg = train_config(args)
    proj_cfg = projection_config(args)
    fusion = fusion_config(args)
    seeds = {"episode": args.seed, "projection": args.seed, "train": args.seed}
    _announce(
        echo,
        args,
        train=train_cfg.resolved(args.shots, manifest.num_classes).model_dump(),
        projection=resolved_projection(proj_cfg, _channels(bank)),
        fusion=fusion.model_dump(),
        seeds=seeds,
    )
    episode = sample_episode(bank, manifest, args.shots, args.seed)
    extra = {"epochs": train_cfg.epochs}
    with stage_timer(logger, run_id=run_id, stage=STAGE_TRAIN, extra=extra) as timing:
        model, trace = build_model(
            episode, train_cfg, proj_cfg, text_init=not args.no_text_init
        )
    ckpt = Checkpoint(
        head=model.head,
        projection=model.projection,
        fusion=fusion,
        seeds=seeds,
        class_names=tuple(episode.class_names),
        shots=args.shots,
    )
    save_checkpoint(args.checkpoint, ckpt)
    return {
        "checkpoint": str(args.checkpoint),
        "epochs": len(trace),
        "final_loss": trace[-1],
        # Only the head is learned; the projection is fixed once fitted.
        "trainable_parameters": int(model.head.weights.size),
        "train_ms": round(timing["duration_ms"], 3),
    }


def _episode_and_model(
    args: argparse.Namespace, ckpt: Checkpoint, split: str
) -> Tuple[Episode, AdapterModel]:
    bank, manifest = _load(args)
    if ckpt.class_names and tuple(manifest.classes) != tuple(ckpt.class_names):
        raise ManifestError(
            "manifest classes differ from the classes the checkpoint was trained on"
        )
    episode = sample_episode(
        bank, manifest, max(ckpt.shots, 1), ckpt.seeds.get("episode", 0), query_split=split
    )
    if args.prototypes is not None:
        protos, projection = load_prototypes(args.prototypes)
        if not projection.equals(ckpt.projection):
            raise CheckpointError(
                "prototype file was built with a different projection than the checkpoint"
            )
    else:
        protos = build_prototypes(
            episode.support_maps, ckpt.projection, class_names=episode.class_names
        )
    if protos.num_classes != ckpt.head.num_classes:
        raise ShapeError(
            f"{protos.num_classes} prototypes but the head scores {ckpt.head.num_classes} classes"
        )
    return episode, AdapterModel(head=ckpt.head, projection=ckpt.projection, prototypes=protos)


def _announce_checkpoint(
    echo: Echo, args: argparse.Namespace, ckpt: Checkpoint, fusion: FusionConfig
) -> None:
    _announce(
        echo,
        args,
        fusion=fusion.model_dump(),
        projection=projection_meta(ckpt.projection),
        seeds=dict(ckpt.seeds),
        shots=max(ckpt.shots, 1),
    )


def cmd_eval(args: argparse.Namespace, run_id: str, echo: Echo) -> Result:
    ckpt = load_checkpoint(args.checkpoint)
    fusion = fusion_config(args, ckpt.fusion)
    _announce_checkpoint(echo, args, ckpt, fusion)
    episode, model = _episode_and_model(args, ckpt, args.split)
    extra = {"queries": episode.num_queries}
    with stage_timer(logger, run_id=run_id, stage=STAGE_EVAL, extra=extra):
        report = evaluate(episode, model, fusion, workers=args.workers)
    config = {"split": args.split, "shots": ckpt.shots, "seeds": ckpt.seeds, **fusion.model_dump()}
    write_jsonl(args.report, eval_records(report, config))
    return {
        "report": str(args.report),
        "accuracy": report.overall,
        "zero_shot_accuracy": report.zero_shot_accuracy,
    }


def cmd_grid(args: argparse.Namespace, run_id: str, echo: Echo) -> Result:
    ckpt = load_checkpoint(args.checkpoint)
    fusion = fusion_config(args, ckpt.fusion)
    _announce_checkpoint(echo, args, ckpt, fusion)
    episode, model = _episode_and_model(args, ckpt, args.split)
    with stage_timer(logger, run_id=run_id, stage=STAGE_GRID):
        best, table = grid_search(args.alpha_grid, args.delta_grid, episode, model, tau=fusion.tau)
    best_acc = max(row["accuracy"] for row in table)
    config = {"split": args.split, "alpha_grid": args.alpha_grid, "delta_grid": args.delta_grid}
    if args.report is not None:
        summary = {**best.model_dump(), "accuracy": best_acc}
        write_jsonl(args.report, grid_records(table, summary, config))
    if args.write_checkpoint is not None:
        save_checkpoint(args.write_checkpoint, replace(ckpt, fusion=best))
    return {"best": best.model_dump(), "accuracy": best_acc, "table": table}


def cmd_ablate(args: argparse.Namespace, run_id: str, echo: Echo) -> Result:
    bank, manifest = _load(args)
    train_cfg = train_config(args)
    proj_cfg = projection_config(args)
    fusion = fusion_config(args)
    _announce(
        echo,
        args,
        train={
            str(m): train_cfg.resolved(m, manifest.num_classes).model_dump()
            for m in args.shots
        },
        projection=resolved_projection(proj_cfg, _channels(bank)),
        fusion=fusion.model_dump(),
    )
    episodes = {m: sample_episode(bank, manifest, m, args.seed) for m in args.shots}
    extra = {"shots": list(args.shots)}
    with stage_timer(logger, run_id=run_id, stage=STAGE_ABLATE, extra=extra):
        result = run_ablation(episodes, train_cfg, proj_cfg, fusion)
    config = {
        "seed": args.seed,
        "train": train_cfg.model_dump(),
        "projection": proj_cfg.model_dump(),
        "fusion": fusion.model_dump(),
    }
    if args.report is not None:
        write_jsonl(args.report, ablation_records(result, config))
    return {
        "shots": result.shots,
        "rows": result.rows,
        "bdc_only": result.bdc_only,
        "mean_embedding": result.mean_embedding,
    }


def _select_items(args: argparse.Namespace, bank: FeatureBank) -> np.ndarray:
    idx = bank.image_indices()
    if args.split is not None:
        if args.manifest is None:
            raise InsufficientDataError("--split needs --manifest")
        wanted = set(load_manifest(args.manifest).ids_in(args.split))
        idx = np.array([i for i in idx if bank.ids[i] in wanted], dtype=np.int64)
    if args.label is not None:
        idx = idx[bank.labels[idx] == args.label]
    if idx.size == 0:
        raise InsufficientDataError("no bank items match the selection")
    return idx


def _column_samples(
    bank: FeatureBank, idx: np.ndarray, cols: Sequence[int], source: str
) -> np.ndarray:
    if source == "maps":
        if bank.maps is None:
            raise InsufficientDataError("bank has no feature maps")
        limit = bank.map_shape[0]
    else:
        limit = bank.dim
    bad = [c for c in cols if not 0 <= c < limit]
    if bad:
        raise ShapeError(f"column {bad[0]} out of range for {source} with {limit} columns")
    if source == "maps":
        # (items, cols, m) -> one sample per item and position
        block = bank.maps[idx][:, list(cols), :].astype(np.float64)
        return np.moveaxis(block, 1, 2).reshape(-1, len(cols))
    return bank.embeddings[idx][:, list(cols)].astype(np.float64)


def cmd_dcov(args: argparse.Namespace, run_id: str, echo: Echo) -> Result:
    _announce(echo, args)
    bank = read_bank(args.bank)
    idx = _select_items(args, bank)
    x = _column_samples(bank, idx, args.x_cols, args.source)
    y = _column_samples(bank, idx, args.y_cols, args.source)
    n = x.shape[0]
    if n > args.max_samples:
        keep = np.sort(make_rng(args.seed).choice(n, size=args.max_samples, replace=False))
        x, y = x[keep], y[keep]
    with stage_timer(logger, run_id=run_id, stage=STAGE_DCOV, extra={"samples": int(x.shape[0])}):
        result: Result = {
            "samples": int(x.shape[0]),
            "dcov": dcov(x, y),
            "dcorr": dcorr(x, y),
            "pearson": None,
        }
        if x.shape[1] == 1 and y.shape[1] == 1:
            try:
                result["pearson"] = pearson(x[:, 0], y[:, 0])
            except DegenerateInputError:
                logger.info("Pearson undefined for a constant column")
    if args.report is not None:
        config: Dict[str, Any] = {
            "source": args.source,
            "x_cols": list(args.x_cols),
            "y_cols": list(args.y_cols),
            "split": args.split,
            "label": args.label,
        }
        write_jsonl(args.report, [{"type": "dcov", **result, "config": config}])
    return result


COMMANDS = {
    "gen": cmd_gen,
    "prototypes": cmd_prototypes,
    "train": cmd_train,
    "eval": cmd_eval,
    "dcov": cmd_dcov,
    "grid": cmd_grid,
    "ablate": cmd_ablate,
}


def parse_int_list(text: str) -> List[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def parse_float_list(text: str) -> List[float]:
    return [float(part) for part in text.split(",") if part.strip()]
