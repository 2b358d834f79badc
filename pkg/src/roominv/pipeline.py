"""End-to-end runs: simulate a model, build a plant, invert, apply, score.

Control point ``k`` is scored with the desired-signal vector ``x = e_k delta``
(an impulse on channel k, silence elsewhere).  Its "measured" room response
is the plant entry ``(k, k mod L)``, i.e. the diagonal for a square system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ImpulseResponse, InversionConfig, TransferMatrix
from .degrade import degrade_matrix
from .evaluation import EvalConfig, EvalReport, ZeroRmsInterval, evaluate_output, local_mse
from .image_source import simulate_matrix
from .inversion import InverseFilterSet, apply, invert
from .scenario import ScenarioConfig

SWEEP_PARAMETERS = ("tau", "beta", "abar")
SWEEP_COLUMNS = ("parameter", "value", "control_point", "dr_total_db", "dr_early_db")


def simulate_set(scenario: ScenarioConfig) -> TransferMatrix:
    return simulate_matrix(scenario.room, scenario.sources, scenario.receivers)


def degrade_set(scenario: ScenarioConfig) -> TransferMatrix:
    return degrade_matrix(scenario.room, scenario.sources, scenario.receivers, scenario.degradation)


def plant_set(scenario: ScenarioConfig, model: TransferMatrix | None = None) -> TransferMatrix:
    """The degraded proxy, or the clean simulation when degradation is disabled."""
    if scenario.degradation.enabled:
        return degrade_set(scenario)
    return model if model is not None else simulate_set(scenario)


def reference_index(k: int, n_sources: int) -> tuple[int, int]:
    return k, k % n_sources


def control_outputs(filters: InverseFilterSet, plant: TransferMatrix) -> list[ImpulseResponse]:
    """``x_hat_k`` for ``x = e_k delta``, one per control point."""
    fs = plant.sample_rate
    outputs = []
    for k in range(plant.M):
        inputs = [ImpulseResponse([1.0 if j == k else 0.0], fs) for j in range(plant.M)]
        outputs.append(apply(filters, plant, inputs)[k])
    return outputs


def evaluate_set(
    filters: InverseFilterSet,
    plant: TransferMatrix,
    cfg: EvalConfig,
    model: TransferMatrix | None = None,
) -> list[EvalReport]:
    """Score every control point; the local MSE curve is filled in when ``model`` is given."""
    reports = []
    for k, x_hat in enumerate(control_outputs(filters, plant)):
        g = plant[reference_index(k, plant.L)]
        report = evaluate_output(g, x_hat, cfg, control_point=k)
        if model is not None:
            interval = max(2, int(round(cfg.mse_interval * plant.sample_rate)))
            try:
                report.mse_curve = local_mse(model[reference_index(k, model.L)], g, interval)
            except ZeroRmsInterval:
                pass
        reports.append(report)
    return reports


@dataclass
class PipelineResult:
    filters: InverseFilterSet
    reports: list[EvalReport]


def run(
    model: TransferMatrix,
    plant: TransferMatrix,
    inversion: InversionConfig,
    cfg: EvalConfig,
) -> PipelineResult:
    """Invert ``model``, drive ``plant`` with the filters and score the result."""
    if cfg.modeling_delay != inversion.modeling_delay:
        cfg = EvalConfig(cfg.t_min, cfg.early_window_T, inversion.modeling_delay, cfg.mse_interval)
    filters = invert(model, inversion)
    return PipelineResult(filters, evaluate_set(filters, plant, cfg, model))


def sweep(
    scenario: ScenarioConfig,
    parameter: str,
    values,
    model: TransferMatrix | None = None,
    plant: TransferMatrix | None = None,
) -> list[tuple]:
    """One pipeline run per value of ``tau``, ``beta`` or the modeled ``abar``.

    The plant stays fixed; an ``abar`` sweep re-simulates only the model.
    A ``tau`` of ``inf`` means no window.  Returns rows in ``SWEEP_COLUMNS`` order.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"parameter must be one of {SWEEP_PARAMETERS}, got {parameter!r}")
    values = [float(v) for v in values]
    if len(values) < 2:
        raise ValueError("a sweep needs at least two values")
    if model is None:
        model = simulate_set(scenario)
    if plant is None:
        plant = plant_set(scenario, model)
    rows = []
    for value in values:
        if parameter == "tau":
            tau = "null" if math.isinf(value) else repr(value)
            sc = scenario.replace_doc([f"inversion.window_tau={tau}"])
            m = model
        elif parameter == "beta":
            sc = scenario.replace_doc([f"inversion.beta={value!r}"])
            m = model
        else:
            sc = scenario.replace_doc([f"room.abar={value!r}", "room.reflection=null"])
            m = simulate_set(sc)
        result = run(m, plant, sc.inversion, sc.eval)
        for r in result.reports:
            rows.append((parameter, value, r.control_point, r.dr_total, r.dr_early))
    return rows


def spread(rows, control_point: int | None = None, column: int = 3) -> float:
    vals = np.array([r[column] for r in rows if control_point is None or r[2] == control_point])
    return float(vals.max() - vals.min())
