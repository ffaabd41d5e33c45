"""
Эксперименты поверх конвейера: исследование вариантов слияния, перебор
шаблонов промптов, перебор гиперпараметров, трасса одного сенсора и
проверка градиентов на игрушечной модели.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from fuse_traffic.core.constants import (
    GRAD_CHECK_TOLERANCE,
    MODEL_GRAD_CHECK_STEP,
    TIMESTAMP_FORMAT,
)
from fuse_traffic.data.windows import WindowSample
from fuse_traffic.models.fuse_model import FuseTrafficModel
from fuse_traffic.models.fusion import CrossAttentionFusion, attention_weights
from fuse_traffic.nn.gradcheck import grad_check_report
from fuse_traffic.nn.rng import RngState
from fuse_traffic.nn.tensor import Tensor, mul, sum_all
from fuse_traffic.schemas.config import ALL_VARIANTS, RunConfig, VariantName
from fuse_traffic.schemas.events import Impact, TemplateId
from fuse_traffic.services.pipeline import (
    EvalOutput,
    PreparedData,
    build_bank,
    evaluate_model,
    prepare,
    synthesize,
    train_variant,
)
from fuse_traffic.training.trainer import TextBank, batch_texts, evaluate_mae, predict_samples

STRATA_NAMES = ["all"] + [i.value for i in Impact.ordered()]


# --- исследование вариантов -------------------------------------------------


@dataclass
class StudyCell:
    variant: VariantName
    template: TemplateId
    seed: int
    maes: Dict[str, float] = field(default_factory=dict)
    rows: List[Dict[str, Any]] = field(default_factory=list)


def _cell_rows(
    variant: VariantName, template: TemplateId, seed: int, output: EvalOutput
) -> StudyCell:
    cell = StudyCell(variant=variant, template=template, seed=seed)
    average = output.overall[-1]
    entries = [("all", average)] + [(s.impact.value, s.report) for s in output.strata]
    for name, report in entries:
        cell.maes[name] = report.mae
        cell.rows.append(
            {
                "variant": variant,
                "template": template,
                "seed": seed,
                "stratum": name,
                "mae": report.mae,
                "rmse": report.rmse,
                "mape": report.mape,
                "count": report.count,
            }
        )
    return cell


def median_rows(cells: Sequence[StudyCell]) -> List[Dict[str, Any]]:
    """Медиана MAE по сидам для каждой пары (вариант, шаблон) и страты"""
    groups: Dict[Tuple[str, str], List[StudyCell]] = {}
    for c in cells:
        groups.setdefault((c.variant, c.template), []).append(c)
    rows = []
    for (variant, template), group in groups.items():
        for stratum in STRATA_NAMES:
            values = [c.maes[stratum] for c in group if stratum in c.maes]
            if not values:
                continue
            rows.append(
                {
                    "variant": variant,
                    "template": template,
                    "seed": "median",
                    "stratum": stratum,
                    "mae": statistics.median(values),
                    "rmse": None,
                    "mape": None,
                    "count": len(values),
                }
            )
    return rows


def median_mae(
    cells: Sequence[StudyCell], variant: str, stratum: str, template: Optional[str] = None
) -> Optional[float]:
    values = [
        c.maes[stratum]
        for c in cells
        if c.variant == variant
        and stratum in c.maes
        and (template is None or c.template == template)
    ]
    return statistics.median(values) if values else None


def run_variants(
    config: RunConfig,
    variants: Sequence[VariantName],
    seeds: Sequence[int],
    templates: Sequence[TemplateId] = (),
) -> List[StudyCell]:
    """
    Обучение и оценка вариантов по сидам на синтетике.

    Для каждого сида генерируется свой датасет; все варианты сида делят
    один датасет, один банк текстов и одну инициализацию энкодера.
    """
    cells: List[StudyCell] = []
    for seed in seeds:
        seeded = config.with_seed(seed)
        prepared = prepare(synthesize(seeded), seeded)
        template = seeded.events.template
        bank, _ = build_bank(seeded, prepared, template)
        for variant in variants:
            model, _ = train_variant(seeded, prepared, bank, variant)
            output = evaluate_model(model, seeded, prepared, bank)
            cells.append(_cell_rows(variant, template, seed, output))
            logger.info(f"📊 {variant} seed={seed}: test MAE {cells[-1].maes['all']:.4f}")
        for other in templates:
            if other == template:
                continue
            other_bank, _ = build_bank(seeded, prepared, other)
            model, _ = train_variant(seeded, prepared, other_bank, "cross_attention")
            output = evaluate_model(model, seeded, prepared, other_bank)
            cells.append(_cell_rows("cross_attention", other, seed, output))
            logger.info(f"📊 prompt {other} seed={seed}: test MAE {cells[-1].maes['all']:.4f}")
    return cells


@dataclass
class StudyVerdict:
    checks: Dict[str, bool]
    notes: List[str]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def judge_study(cells: Sequence[StudyCell], template: str) -> StudyVerdict:
    """Качественные проверки: событийная модель против слепой и против concat"""
    checks: Dict[str, bool] = {}
    notes: List[str] = []

    def mae(variant: str, stratum: str) -> Optional[float]:
        return median_mae(cells, variant, stratum, template)

    fuse_all, blind_all = mae("cross_attention", "all"), mae("event_disabled", "all")
    if fuse_all is not None and blind_all is not None:
        checks["overall_beats_event_disabled"] = fuse_all < blind_all
        notes.append(f"overall MAE cross_attention={fuse_all:.4f} event_disabled={blind_all:.4f}")

    gains: List[Tuple[str, float]] = []
    for impact in Impact.ordered():
        f, b = mae("cross_attention", impact.value), mae("event_disabled", impact.value)
        if f is not None and b is not None and b > 0:
            gains.append((impact.value, (b - f) / b))
    if gains:
        notes.append("improvement by stratum: " + ", ".join(f"{n}={g:+.1%}" for n, g in gains))
        high = dict(gains).get(Impact.high.value)
        if high is not None:
            checks["high_stratum_gain_at_least_15pct"] = high >= 0.15
        values = [g for _, g in gains]
        checks["gain_monotone_none_to_high"] = all(a <= b for a, b in zip(values, values[1:]))

    fuse_high, concat_high = mae("cross_attention", "high"), mae("concat", "high")
    if fuse_high is not None and concat_high is not None:
        checks["cross_attention_beats_concat_on_high"] = fuse_high < concat_high
        notes.append(f"high-stratum MAE cross_attention={fuse_high:.4f} concat={concat_high:.4f}")
    return StudyVerdict(checks=checks, notes=notes)


# --- перебор гиперпараметров ------------------------------------------------


def run_sweep(config: RunConfig) -> List[Dict[str, Any]]:
    """Глубина FFN слияния и размер текстового эмбеддинга против val/test MAE"""
    rows: List[Dict[str, Any]] = []
    for seed in config.sweep.seeds:
        seeded = config.with_seed(seed)
        prepared = prepare(synthesize(seeded), seeded)
        banks: Dict[int, TextBank] = {}

        def bank_for(d_text: int) -> TextBank:
            if d_text not in banks:
                banks[d_text], _ = build_bank(seeded, prepared, d_text=d_text)
            return banks[d_text]

        knobs: List[Tuple[str, int, RunConfig]] = []
        for layers in config.sweep.ffn_layers:
            fusion = seeded.model.fusion.model_copy(update={"ffn_layers": layers})
            model_config = seeded.model.model_copy(update={"fusion": fusion})
            knobs.append(("ffn_layers", layers, seeded.model_copy(update={"model": model_config})))
        for d_text in config.sweep.d_text:
            model_config = seeded.model.model_copy(update={"d_text": d_text})
            knobs.append(("d_text", d_text, seeded.model_copy(update={"model": model_config})))

        for knob, value, variant_config in knobs:
            bank = bank_for(variant_config.model.d_text)
            model, result = train_variant(variant_config, prepared, bank, "cross_attention")
            test_mae = evaluate_mae(model, prepared.split.test, prepared.a_hat, bank, prepared.stats)
            rows.append(
                {
                    "knob": knob,
                    "value": value,
                    "seed": seed,
                    "val_mae": result.best_val_mae,
                    "test_mae": test_mae,
                }
            )
            logger.info(f"📊 sweep {knob}={value} seed={seed}: test MAE {test_mae:.4f}")
    return rows


# --- трасса одного сенсора --------------------------------------------------


def pick_case_sensor(prepared: PreparedData) -> int:
    """Сенсор с наибольшим числом записей сильного влияния"""
    counts = np.zeros(prepared.bundle.series.n, dtype=np.int64)
    for r in prepared.bundle.records:
        if r.impact == Impact.high:
            counts[r.node_id] += 1
    return int(np.argmax(counts))


def case_study_rows(
    event_model: FuseTrafficModel,
    blind_model: FuseTrafficModel,
    prepared: PreparedData,
    bank: TextBank,
    sensor: int,
    steps: int,
) -> List[Dict[str, Any]]:
    """Прогноз на шаг вперёд для последовательных тестовых окон одного сенсора"""
    samples: List[WindowSample] = list(prepared.split.test[:steps])
    if not samples:
        return []
    series = prepared.bundle.series
    with_events = predict_samples(event_model, samples, prepared.a_hat, bank, prepared.stats)
    without = predict_samples(blind_model, samples, prepared.a_hat, bank, prepared.stats)

    node_records = [r for r in prepared.bundle.records if r.node_id == sensor]
    rows = []
    for i, s in enumerate(samples):
        t = s.t_anchor + 1
        ts = series.timestamp(t)
        impact = Impact.none
        for r in node_records:
            if r.overlaps(ts, ts) and r.impact.rank > impact.rank:
                impact = r.impact
        rows.append(
            {
                "t": t,
                "timestamp": ts.strftime(TIMESTAMP_FORMAT),
                "truth": float(s.y[sensor, 0]),
                "pred_event": float(with_events[i, sensor, 0]),
                "pred_no_event": float(without[i, sensor, 0]),
                "impact": impact.value,
            }
        )
    return rows


# --- проверка градиентов ----------------------------------------------------


def gradcheck_groups(config: RunConfig, batch: int = 2) -> Dict[str, float]:
    """
    Максимальная относительная ошибка градиента по группам параметров:
    энкодер, проекция, декодер и каждый из четырёх вариантов слияния.
    """
    model_config = config.model
    rng = RngState(config.seed).stream("gradcheck")
    n = config.synth.generator.n_sensors
    x = rng.normal(size=(batch, n, model_config.h_in))
    text = rng.normal(size=(batch, n, model_config.d_text))
    a = rng.random((n, n))
    a = (a + a.T) / 2.0
    a_hat = a / a.sum(axis=1, keepdims=True)
    a_hat = (a_hat + a_hat.T) / 2.0
    weights = rng.normal(size=(batch, n, model_config.h_out))

    report: Dict[str, float] = {}
    for kind in ("cross_attention", "gating", "add", "concat"):
        model = FuseTrafficModel(model_config.with_variant(kind), seed=config.seed)

        def loss() -> Tensor:
            return sum_all(mul(model.forward(x, a_hat, text), weights))

        for group, params in model.parameter_groups().items():
            if group in report or not params:
                report.setdefault(group, 0.0)
                continue
            per_param = grad_check_report(loss, params, MODEL_GRAD_CHECK_STEP)
            report[group] = max(per_param.values(), default=0.0)
            verdict = "PASS" if report[group] < GRAD_CHECK_TOLERANCE else "FAIL"
            logger.info(f"🔎 gradcheck {group}: {report[group]:.3e} {verdict}")
    return report


def gradcheck_passed(report: Dict[str, float]) -> bool:
    return all(v < GRAD_CHECK_TOLERANCE for v in report.values())


# --- выгрузка представлений -------------------------------------------------


def export_representations(
    model: FuseTrafficModel,
    prepared: PreparedData,
    bank: TextBank,
    limit: int,
) -> Tuple[Dict[str, np.ndarray], List[WindowSample], Optional[np.ndarray]]:
    """E_st, проецированный E_text и H_fused на первых тестовых окнах"""
    samples = list(prepared.split.test[:limit])
    x = np.stack([s.x for s in samples])
    trace = model.trace(x, prepared.a_hat, batch_texts(samples, bank))
    blocks = {
        "e_st": trace.e_st.data,
        "e_text": trace.e_text.data,
        "h_fused": trace.h_fused.data,
    }
    attention = None
    if isinstance(model.fusion, CrossAttentionFusion):
        # карты внимания первого окна
        attention = attention_weights(trace.e_st.data[0], trace.e_text.data[0], model.fusion)
    return blocks, samples, attention


def variants_or_default(variants: Sequence[VariantName]) -> List[VariantName]:
    return list(variants) if variants else list(ALL_VARIANTS)
