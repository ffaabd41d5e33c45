"""
Командная строка fuse-traffic.

Каждая команда пишет resolved_config.json в каталог вывода. При ошибке
одна строка `error code=<code> message=<...>` в stderr и ненулевой код.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from loguru import logger
from pydantic import ValidationError

from fuse_traffic.converters.csv import (
    write_attention_csv,
    write_case_study_csv,
    write_embeddings_csv,
    write_history_csv,
    write_impact_distribution_csv,
    write_report_csv,
    write_rows,
    write_study_csv,
    write_sweep_csv,
)
from fuse_traffic.core.config import settings
from fuse_traffic.core.constants import GRAD_CHECK_TOLERANCE
from fuse_traffic.core.errors import AcceptanceError, FuseTrafficError
from fuse_traffic.core.utils import ensure_dir, setup_logging, write_json
from fuse_traffic.metrics.evaluation import assign_strata, per_horizon
from fuse_traffic.schemas.config import ALL_VARIANTS, RunConfig, load_run_config
from fuse_traffic.schemas.events import RetrievalStats
from fuse_traffic.services import experiments, pipeline
from fuse_traffic.services.retrieval import impact_distribution
from fuse_traffic.training.checkpoint import (
    from_model,
    load_checkpoint,
    restore_model,
    save_checkpoint,
)

CHECKPOINT_FILE = "model.ckpt"
EXPORT_SAMPLES = 32

Command = Callable[[RunConfig, argparse.Namespace], int]


def _out(config: RunConfig) -> Path:
    return ensure_dir(config.out_dir)


def _checkpoint_path(config: RunConfig, args: argparse.Namespace) -> Path:
    return args.checkpoint or config.out_dir / CHECKPOINT_FILE


def cmd_synth(config: RunConfig, args: argparse.Namespace) -> int:
    bundle = pipeline.synthesize(config)
    out = _out(config)
    pipeline.save_dataset(bundle, out)
    write_impact_distribution_csv(
        out / "impact_distribution.csv", impact_distribution(bundle.records)
    )
    return 0


def cmd_events(config: RunConfig, args: argparse.Namespace) -> int:
    out = _out(config)
    prepared = pipeline.prepare(pipeline.load_dataset(config), config)
    cache = pipeline.open_cache(config)
    stats = RetrievalStats()
    pipeline.collect_event_texts(config, prepared.bundle, prepared.anchors, cache=cache, stats=stats)
    cache.save(out / "event_cache.json")
    write_json(out / "retrieval_stats.json", stats.model_dump())
    records = [r for key in cache for r in cache.records(key)]
    write_impact_distribution_csv(out / "impact_distribution.csv", impact_distribution(records))
    logger.info(
        f"📊 Retrieval: {stats.requests} requests, {stats.unique_keys} unique keys, "
        f"{stats.provider_calls} provider calls, {stats.fallbacks} fallbacks"
    )
    return 0


def cmd_train(config: RunConfig, args: argparse.Namespace) -> int:
    out = _out(config)
    prepared = pipeline.prepare(pipeline.load_dataset(config), config)
    bank, _ = pipeline.build_bank(config, prepared)
    model, result = pipeline.train_variant(config, prepared, bank)
    save_checkpoint(
        out / CHECKPOINT_FILE,
        from_model(model, prepared.stats, result.best_epoch, result.best_val_mae),
    )
    write_history_csv(out / "history.csv", result.history)
    return 0


def cmd_eval(config: RunConfig, args: argparse.Namespace) -> int:
    out = _out(config)
    ckpt = load_checkpoint(_checkpoint_path(config, args))
    config = config.model_copy(update={"model": ckpt.config})
    model = restore_model(ckpt)
    prepared = pipeline.prepare(pipeline.load_dataset(config), config, ckpt.stats)
    bank, _ = pipeline.build_bank(config, prepared)
    output = pipeline.evaluate_model(model, config, prepared, bank)
    write_report_csv(out / "report.csv", output.overall, output.strata)

    # MAE на каждом шаге 1..H_out
    curve = per_horizon(
        output.y, output.pred, None, range(1, config.model.h_out + 1), config.eval.mape_threshold
    )
    write_report_csv(out / "horizon_curve.csv", curve)
    _, _, attention = experiments.export_representations(model, prepared, bank, 1)
    if attention is not None:
        write_attention_csv(out / "attention.csv", attention)
    for line in output.overall:
        print(f"horizon={line.horizon} mae={line.mae:.4f} rmse={line.rmse:.4f} mape={line.mape:.2f}")
    return 0


def cmd_ablate(config: RunConfig, args: argparse.Namespace) -> int:
    out = _out(config)
    ablation = config.ablation
    templates = ablation.templates if ablation.prompt_sweep else []
    cells = experiments.run_variants(config, ablation.variants, ablation.seeds, templates)
    rows = [row for c in cells for row in c.rows] + experiments.median_rows(cells)
    write_study_csv(out / "ablation.csv", rows)
    for row in experiments.median_rows(cells):
        if row["stratum"] in ("all", "high"):
            print(f"variant={row['variant']} template={row['template']} stratum={row['stratum']} median_mae={row['mae']:.4f}")
    return 0


def cmd_gradcheck(config: RunConfig, args: argparse.Namespace) -> int:
    out = _out(config)
    report = experiments.gradcheck_groups(config)
    rows = [
        {"group": g, "max_rel_error": e, "status": "PASS" if e < GRAD_CHECK_TOLERANCE else "FAIL"}
        for g, e in report.items()
    ]
    write_rows(out / "gradcheck.csv", rows, ["group", "max_rel_error", "status"])
    for row in rows:
        print(f"{row['group']} max_rel_error={row['max_rel_error']:.3e} {row['status']}")
    if not experiments.gradcheck_passed(report):
        raise AcceptanceError(f"gradient check exceeded {GRAD_CHECK_TOLERANCE:g} relative error")
    print("PASS")
    return 0


def cmd_export_embeddings(config: RunConfig, args: argparse.Namespace) -> int:
    out = _out(config)
    ckpt = load_checkpoint(_checkpoint_path(config, args))
    config = config.model_copy(update={"model": ckpt.config})
    model = restore_model(ckpt)
    prepared = pipeline.prepare(pipeline.load_dataset(config), config, ckpt.stats)
    bank, _ = pipeline.build_bank(config, prepared)
    blocks, samples, attention = experiments.export_representations(
        model, prepared, bank, EXPORT_SAMPLES
    )
    strata = assign_strata(
        samples, prepared.bundle.records, prepared.bundle.series.timestamp, per_node=True
    )
    write_embeddings_csv(
        out / "embeddings.csv",
        blocks,
        [s.t_anchor for s in samples],
        pipeline.sample_times(prepared, samples),
        strata,
    )
    if attention is not None:
        write_attention_csv(out / "attention.csv", attention)
    return 0


def cmd_sweep(config: RunConfig, args: argparse.Namespace) -> int:
    out = _out(config)
    write_sweep_csv(out / "sweep.csv", experiments.run_sweep(config))
    return 0


def cmd_case_study(config: RunConfig, args: argparse.Namespace) -> int:
    out = _out(config)
    if args.checkpoint and args.baseline:
        event_ckpt = load_checkpoint(args.checkpoint)
        blind_ckpt = load_checkpoint(args.baseline)
        config = config.model_copy(update={"model": event_ckpt.config})
        event_model, blind_model = restore_model(event_ckpt), restore_model(blind_ckpt)
        prepared = pipeline.prepare(pipeline.load_dataset(config), config, event_ckpt.stats)
        bank, _ = pipeline.build_bank(config, prepared)
    else:
        prepared = pipeline.prepare(pipeline.synthesize(config), config)
        bank, _ = pipeline.build_bank(config, prepared)
        event_model, _ = pipeline.train_variant(config, prepared, bank)
        blind_model, _ = pipeline.train_variant(config, prepared, bank, "event_disabled")
    sensor = config.eval.case_sensor
    if sensor is None:
        sensor = experiments.pick_case_sensor(prepared)
    rows = experiments.case_study_rows(
        event_model, blind_model, prepared, bank, sensor, config.eval.case_steps
    )
    write_case_study_csv(out / "case_study.csv", rows)
    logger.info(f"📊 Case study for sensor {sensor}: {len(rows)} steps")
    return 0


def cmd_study(config: RunConfig, args: argparse.Namespace) -> int:
    out = _out(config)
    cells = experiments.run_variants(config, list(ALL_VARIANTS), config.ablation.seeds)
    rows = [row for c in cells for row in c.rows] + experiments.median_rows(cells)
    write_study_csv(out / "study.csv", rows)
    verdict = experiments.judge_study(cells, config.events.template)
    for note in verdict.notes:
        print(note)
    for name, ok in verdict.checks.items():
        print(f"{name} {'PASS' if ok else 'FAIL'}")
    if not verdict.passed:
        raise AcceptanceError("synthetic event study did not meet every check")
    return 0


COMMANDS: Dict[str, Command] = {
    "synth": cmd_synth,
    "events": cmd_events,
    "train": cmd_train,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "gradcheck": cmd_gradcheck,
    "export-embeddings": cmd_export_embeddings,
    "sweep": cmd_sweep,
    "case-study": cmd_case_study,
    "study": cmd_study,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuse-traffic", description=__doc__.splitlines()[1])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, default=None, help="JSON run config")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--provider", choices=["mock", "live", "chat"], default=None)
    parser.add_argument("--variant", choices=list(ALL_VARIANTS), default=None)
    parser.add_argument("--checkpoint", type=Path, default=None)
    parser.add_argument("--baseline", type=Path, default=None, help="event-disabled checkpoint")
    return parser


def _fail(code: str, message: str) -> int:
    one_line = " ".join(str(message).split())
    print(f"error code={code} message={one_line}", file=sys.stderr)
    return 1


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(settings.LOG_LEVEL)
    try:
        config = load_run_config(args.config).with_overrides(
            seed=args.seed, out_dir=args.out, provider=args.provider, variant=args.variant
        )
        write_json(_out(config) / "resolved_config.json", config.model_dump(mode="json"))
        logger.info(f"🔹 {args.command}: out={config.out_dir} seed={config.seed}")
        return COMMANDS[args.command](config, args)
    except FuseTrafficError as e:
        return _fail(e.code, str(e))
    except ValidationError as e:
        return _fail("config", str(e))
    except json.JSONDecodeError as e:
        return _fail("config", f"invalid JSON: {e}")
    except FileNotFoundError as e:
        return _fail("missing_file", str(e))


if __name__ == "__main__":
    sys.exit(main())
