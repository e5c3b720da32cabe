"""End-to-end orchestration: offline design, online runs, metrics, series.

The offline phase fits normalization, the detection versor and threshold, the
fault-direction matrix, the per-sensor regression model (for fault-amplitude
calibration), and the reliability threshold, bundling everything needed by the
online phase. The online phase replays a validation record sample by sample
with an injected fault, producing detection/evidence/fusion series, the
true-detection and true-isolation rates, and the false-alarm rate on
fault-free spans.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .calibration import empirical_threshold
from .data import (
    Dataset,
    FaultSpec,
    LsModel,
    NormStats,
    SyntheticConfig,
    apply_normalization,
    calibrate_fault_amplitude,
    compute_normalization,
    fit_ls_model,
    generate_synthetic_flight,
    inject_fault,
    load_dataset,
)
from .detection import DetectionModel, calibrate_threshold, fit_detection_versor
from .directions import (
    IsolationModel,
    SolverOptions,
    angular_distances,
    optimize_fault_directions,
)
from .evidence import (
    BbaParams,
    DEFAULT_ANGLE_DECAY,
    ReliabilityParams,
    assign_bbm,
    reliability,
)
from .fusion import COMBINATION_RULES, TotalConflictError, init_state, isolate, FusionState

__all__ = [
    "PipelineError",
    "PipelineConfig",
    "DesignBundle",
    "ScenarioResult",
    "DiagnosisReport",
    "run_offline_design",
    "run_online",
    "run_pipeline",
    "compute_tdr",
    "compute_tir",
    "emit_series",
    "report_to_dict",
    "write_report",
]

log = logging.getLogger(__name__)

NO_FAULT_SCENARIO = "fault_free"


class PipelineError(RuntimeError):
    """Failure in a pipeline stage, labeled with the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage


@dataclass(frozen=True)
class PipelineConfig:
    """Everything needed to run the offline design plus the online scenarios.

    Training data comes either from ``synthetic_train`` or from ``train_files``
    (CSV paths, stacked row-wise); validation likewise. With
    ``fault_scenarios = "auto"`` one rectangular fault per monitored channel is
    generated on [fault_start, fault_stop) at the calibrated amplitude.
    """

    x_names: tuple[str, ...] = ()
    u_names: tuple[str, ...] = ()
    synthetic_train: SyntheticConfig | None = None
    synthetic_validation: SyntheticConfig | None = None
    train_files: tuple[str, ...] = ()
    validation_file: str | None = None
    false_alarm_prob: float = 0.10
    angle_decay: float = DEFAULT_ANGLE_DECAY
    detection_slope_factor: float = 20.0
    reliability_slope_factor: float = 40.0
    solver: SolverOptions = field(default_factory=SolverOptions)
    fault_scenarios: tuple[FaultSpec, ...] | str = "auto"
    fault_factor: float = 3.0
    fault_start: int = 0
    fault_stop: int | None = None
    rules: tuple[str, ...] = ("RB", "DS")

    def __post_init__(self):
        if self.synthetic_train is None and not self.train_files:
            raise ValueError("config needs a training source (synthetic or files)")
        if not 0.0 < self.false_alarm_prob < 1.0:
            raise ValueError("false_alarm_prob must lie in (0, 1)")
        if isinstance(self.fault_scenarios, str) and self.fault_scenarios != "auto":
            raise ValueError("fault_scenarios must be 'auto' or a list of faults")
        for rule in self.rules:
            if rule not in COMBINATION_RULES:
                raise ValueError(
                    f"unknown rule {rule!r}; registered: {sorted(COMBINATION_RULES)}"
                )
        object.__setattr__(self, "x_names", tuple(self.x_names))
        object.__setattr__(self, "u_names", tuple(self.u_names))
        object.__setattr__(self, "train_files", tuple(self.train_files))
        object.__setattr__(self, "rules", tuple(self.rules))
        if not isinstance(self.fault_scenarios, str):
            object.__setattr__(self, "fault_scenarios", tuple(self.fault_scenarios))

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        data = dict(raw)
        for key in ("synthetic_train", "synthetic_validation"):
            if data.get(key) is not None:
                section = dict(data[key])
                if "maneuver_segments" in section:
                    section["maneuver_segments"] = tuple(
                        tuple(seg) for seg in section["maneuver_segments"]
                    )
                data[key] = SyntheticConfig(**section)
        if data.get("solver") is not None and not isinstance(data["solver"], SolverOptions):
            data["solver"] = SolverOptions(**data["solver"])
        scenarios = data.get("fault_scenarios", "auto")
        if not isinstance(scenarios, str):
            data["fault_scenarios"] = tuple(
                fs if isinstance(fs, FaultSpec) else FaultSpec(**fs) for fs in scenarios
            )
        for key in ("x_names", "u_names", "train_files", "rules"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    def reseed(self, seed: int) -> "PipelineConfig":
        """Override every RNG seed (validation uses seed + 1)."""
        updates: dict = {"solver": replace(self.solver, seed=seed)}
        if self.synthetic_train is not None:
            updates["synthetic_train"] = replace(self.synthetic_train, seed=seed)
        if self.synthetic_validation is not None:
            updates["synthetic_validation"] = replace(
                self.synthetic_validation, seed=seed + 1
            )
        return replace(self, **updates)


@dataclass(frozen=True, eq=False)
class DesignBundle:
    """Artifacts of the offline design phase."""

    norm_stats: NormStats
    detection: DetectionModel
    isolation: IsolationModel
    ls_model: LsModel
    bba: BbaParams
    reliability: ReliabilityParams
    amplitudes: tuple[float, ...]
    x_names: tuple[str, ...]
    u_names: tuple[str, ...]
    dt: float

    @property
    def n_x(self) -> int:
        return len(self.x_names)

    def to_dict(self) -> dict:
        return {
            "x_names": list(self.x_names),
            "u_names": list(self.u_names),
            "dt": self.dt,
            "normalization": {
                "mean": self.norm_stats.mean.tolist(),
                "std": self.norm_stats.std.tolist(),
            },
            "detection": {
                "versor": self.detection.versor.tolist(),
                "sigma_min": self.detection.sigma_min,
                "threshold": self.detection.threshold,
                "false_alarm_prob": self.detection.false_alarm_prob,
            },
            "isolation": {
                "directions": self.isolation.directions.tolist(),
                "objective": self.isolation.objective,
                "iterations": self.isolation.iterations,
                "converged": self.isolation.converged,
            },
            "ls_model": {
                "coef_x": self.ls_model.coef_x.tolist(),
                "coef_u": self.ls_model.coef_u.tolist(),
                "mean_abs_error": self.ls_model.mean_abs_error.tolist(),
            },
            "bba": {
                "angle_decay": self.bba.angle_decay,
                "slope": self.bba.slope,
                "threshold": self.bba.threshold,
            },
            "reliability": {
                "slope": self.reliability.slope,
                "threshold": self.reliability.threshold,
            },
            "amplitudes": list(self.amplitudes),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "DesignBundle":
        return cls(
            norm_stats=NormStats(
                mean=np.array(raw["normalization"]["mean"]),
                std=np.array(raw["normalization"]["std"]),
            ),
            detection=DetectionModel(
                versor=np.array(raw["detection"]["versor"]),
                sigma_min=raw["detection"]["sigma_min"],
                threshold=raw["detection"]["threshold"],
                false_alarm_prob=raw["detection"]["false_alarm_prob"],
            ),
            isolation=IsolationModel(
                directions=np.array(raw["isolation"]["directions"]),
                objective=raw["isolation"]["objective"],
                iterations=raw["isolation"]["iterations"],
                converged=raw["isolation"]["converged"],
            ),
            ls_model=LsModel(
                coef_x=np.array(raw["ls_model"]["coef_x"]),
                coef_u=np.array(raw["ls_model"]["coef_u"]),
                mean_abs_error=np.array(raw["ls_model"]["mean_abs_error"]),
            ),
            bba=BbaParams(**raw["bba"]),
            reliability=ReliabilityParams(**raw["reliability"]),
            amplitudes=tuple(raw["amplitudes"]),
            x_names=tuple(raw["x_names"]),
            u_names=tuple(raw["u_names"]),
            dt=raw["dt"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    """Per-scenario, per-rule outcome with the full time series."""

    name: str
    rule: str
    fault: FaultSpec | None
    tdr: float | None
    tir: float | None
    false_alarm_rate: float
    series: dict

    def metrics_dict(self) -> dict:
        out = {
            "name": self.name,
            "rule": self.rule,
            "tdr": self.tdr,
            "tir": self.tir,
            "false_alarm_rate": self.false_alarm_rate,
        }
        if self.fault is not None:
            out["fault"] = {
                "channel": self.fault.channel,
                "amplitude": self.fault.amplitude,
                "start": self.fault.start,
                "stop": self.fault.stop,
            }
        else:
            out["fault"] = None
        return out


@dataclass(frozen=True, eq=False)
class DiagnosisReport:
    """Design summary plus every scenario result."""

    bundle: DesignBundle
    results: tuple[ScenarioResult, ...]
    length: int
    dt: float

    def scenario_names(self) -> list[str]:
        seen: list[str] = []
        for result in self.results:
            if result.name not in seen:
                seen.append(result.name)
        return seen

    def result_for(self, name: str, rule: str) -> ScenarioResult:
        for result in self.results:
            if result.name == name and result.rule == rule:
                return result
        raise KeyError(f"no result for scenario {name!r}, rule {rule!r}")


def _stage(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as err:
        raise PipelineError(stage, str(err)) from err


def _load_training(cfg: PipelineConfig) -> Dataset:
    if cfg.synthetic_train is not None:
        return generate_synthetic_flight(cfg.synthetic_train)
    parts = [load_dataset(path, cfg.x_names, cfg.u_names) for path in cfg.train_files]
    if len(parts) == 1:
        return parts[0]
    samples = np.vstack([part.samples for part in parts])
    return Dataset(samples, parts[0].x_channels, parts[0].u_channels, parts[0].dt)


def load_validation(cfg: PipelineConfig) -> Dataset:
    """Validation record from the configured source (raw, unnormalized)."""
    if cfg.synthetic_validation is not None:
        return generate_synthetic_flight(cfg.synthetic_validation)
    if cfg.validation_file is None:
        raise PipelineError("load-validation", "config has no validation source")
    return _stage(
        "load-validation", load_dataset, cfg.validation_file, cfg.x_names, cfg.u_names
    )


def run_offline_design(cfg: PipelineConfig) -> DesignBundle:
    """Execute the full offline phase and return the design bundle."""
    train = _stage("load-training", _load_training, cfg)
    stats = _stage("normalization", compute_normalization, train)
    train_n = _stage("normalization", apply_normalization, train, stats)

    detector = _stage("detection-versor", fit_detection_versor, train_n)
    residuals = np.abs(train_n.samples @ detector.versor)
    threshold = _stage(
        "detection-threshold", calibrate_threshold, residuals, cfg.false_alarm_prob
    )
    detector = replace(
        detector, threshold=threshold, false_alarm_prob=cfg.false_alarm_prob
    )

    isolation = _stage("fault-directions", optimize_fault_directions, train_n, cfg.solver)

    ls_model = _stage("ls-model", fit_ls_model, train_n)
    amplitudes = tuple(
        _stage("fault-amplitudes", calibrate_fault_amplitude, ls_model, i, cfg.fault_factor)
        for i in range(train.n_x)
    )

    activity = np.linalg.norm(train_n.u, axis=1)
    th_rel = _stage(
        "reliability-threshold", empirical_threshold, activity, cfg.false_alarm_prob
    )
    rel_params = _stage(
        "reliability-params",
        ReliabilityParams.from_threshold,
        th_rel,
        cfg.reliability_slope_factor,
    )
    bba = _stage(
        "bba-params",
        BbaParams.from_threshold,
        threshold,
        cfg.angle_decay,
        cfg.detection_slope_factor,
    )
    return DesignBundle(
        norm_stats=stats,
        detection=detector,
        isolation=isolation,
        ls_model=ls_model,
        bba=bba,
        reliability=rel_params,
        amplitudes=amplitudes,
        x_names=train.x_channels,
        u_names=train.u_channels,
        dt=train.dt,
    )


def run_online(
    validation: Dataset,
    bundle: DesignBundle,
    fault: FaultSpec | None,
    rule: str,
    name: str | None = None,
) -> ScenarioResult:
    """Replay one fault scenario through detection, evidence, and fusion.

    ``validation`` is the raw record; it is normalized with the training
    statistics before the fault (in normalized units) is injected.
    """
    if rule not in COMBINATION_RULES:
        raise PipelineError("online", f"unknown rule {rule!r}")
    record = apply_normalization(validation, bundle.norm_stats)
    if fault is not None and fault.amplitude != 0.0:
        record = inject_fault(record, fault)
    n_x = bundle.n_x
    m = record.m
    detector = bundle.detection
    if detector.threshold is None:
        raise PipelineError("online", "detection threshold is not calibrated")

    rule_fn = COMBINATION_RULES[rule]
    state = init_state(n_x, rule)
    residuals = record.samples @ detector.versor
    detected = np.abs(residuals) > detector.threshold

    rel_series = np.empty(m)
    bbm_series = np.empty((m, n_x + 1))
    mass_series = np.empty((m, n_x + 1))
    decisions = np.empty(m, dtype=int)
    winning = np.empty(m)

    for k in range(m):
        z = record.samples[k]
        distances = angular_distances(bundle.isolation.directions @ z, bundle.isolation)
        masses = assign_bbm(distances, residuals[k], bundle.bba)
        rel = reliability(z[n_x:], bundle.reliability)
        try:
            posterior = rule_fn(state.posterior, masses, rel)
        except TotalConflictError:
            log.warning("%s/%s: total conflict at sample %d, update skipped", name, rule, k)
            posterior = state.posterior
        state = FusionState(posterior=posterior, rule=rule, step_count=state.step_count + 1)
        decision = isolate(state)
        rel_series[k] = rel
        bbm_series[k] = masses
        mass_series[k] = state.posterior
        decisions[k] = -1 if decision.channel is None else decision.channel
        winning[k] = decision.winning_mass

    fault_mask = np.zeros(m, dtype=bool)
    tdr = tir = None
    if fault is not None and fault.amplitude != 0.0:
        fault_mask[fault.start : fault.stop] = True
        tdr = compute_tdr(detected, fault_mask)
        tir = compute_tir(decisions, fault)
    clean = ~fault_mask
    false_alarm_rate = 100.0 * float(np.count_nonzero(decisions[clean] != -1)) / int(
        clean.sum()
    )
    series = {
        "time": np.arange(m) * record.dt,
        "abs_residual": np.abs(residuals),
        "detected": detected,
        "reliability": rel_series,
        "bbm": bbm_series,
        "masses": mass_series,
        "decisions": decisions,
        "winning_mass": winning,
        "fault_mask": fault_mask,
    }
    if name is None:
        name = NO_FAULT_SCENARIO if fault is None else f"fault_{bundle.x_names[fault.channel]}"
    return ScenarioResult(
        name=name,
        rule=rule,
        fault=fault,
        tdr=tdr,
        tir=tir,
        false_alarm_rate=false_alarm_rate,
        series=series,
    )


def build_scenarios(cfg: PipelineConfig, bundle: DesignBundle, m: int) -> list[FaultSpec]:
    """Fault list from the config: explicit specs, or one per channel ('auto')."""
    if isinstance(cfg.fault_scenarios, tuple):
        return list(cfg.fault_scenarios)
    stop = cfg.fault_stop if cfg.fault_stop is not None else m
    return [
        FaultSpec(channel=i, amplitude=bundle.amplitudes[i], start=cfg.fault_start, stop=stop)
        for i in range(bundle.n_x)
    ]


def run_pipeline(cfg: PipelineConfig) -> DiagnosisReport:
    """Offline design plus every configured scenario under every rule."""
    bundle = run_offline_design(cfg)
    validation = load_validation(cfg)
    faults = build_scenarios(cfg, bundle, validation.m)
    results = []
    for fault in faults:
        scenario_name = f"fault_{bundle.x_names[fault.channel]}"
        for rule in cfg.rules:
            results.append(
                _stage("online", run_online, validation, bundle, fault, rule, scenario_name)
            )
    for rule in cfg.rules:
        results.append(_stage("online", run_online, validation, bundle, None, rule))
    return DiagnosisReport(
        bundle=bundle, results=tuple(results), length=validation.m, dt=validation.dt
    )


def compute_tdr(detections, fault_mask) -> float:
    """Percent of fault-active samples flagged by the raw detection test."""
    detections = np.asarray(detections, dtype=bool)
    fault_mask = np.asarray(fault_mask, dtype=bool)
    if detections.shape != fault_mask.shape:
        raise ValueError("detections and fault_mask must have equal length")
    active = int(fault_mask.sum())
    if active == 0:
        raise ValueError("fault mask has no active samples")
    hits = int(np.count_nonzero(detections & fault_mask))
    return 100.0 * hits / active


def compute_tir(decisions, fault: FaultSpec) -> float:
    """Percent of fault-interval samples isolated to the faulty channel.

    ``decisions`` is either an integer series (-1 for no-fault) or a sequence
    of IsolationDecision objects covering the whole record.
    """
    channels = np.asarray(
        [d if isinstance(d, (int, np.integer)) else (-1 if d.channel is None else d.channel)
         for d in decisions],
        dtype=int,
    )
    if fault.stop > channels.size:
        raise ValueError("decisions do not cover the fault interval")
    interval = channels[fault.start : fault.stop]
    if interval.size == 0:
        raise ValueError("empty fault interval")
    return 100.0 * int(np.count_nonzero(interval == fault.channel)) / interval.size


def _write_csv(path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = zip(*columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(value)) for value in row])


def emit_series(report: DiagnosisReport, which: str, path) -> None:
    """Write one named time series of the report as CSV.

    Series ids:

    - ``detection/<scenario>/<rule>``: |residual|, threshold, fault mask
    - ``evidence/<scenario>/<rule>``: raw belief masses plus reliability
    - ``combined/<scenario>/<rule>``: fused posterior masses
    - ``fault-evidence/<scenario>``: faulty-channel posterior mass per rule

    Floats are written with full round-trip precision.
    """
    parts = which.split("/")
    kinds = {"detection", "evidence", "combined", "fault-evidence"}
    if parts[0] not in kinds:
        raise ValueError(f"unknown series kind {parts[0]!r}; expected one of {sorted(kinds)}")
    x_names = report.bundle.x_names
    if parts[0] == "fault-evidence":
        if len(parts) != 2:
            raise ValueError("fault-evidence id must be 'fault-evidence/<scenario>'")
        scenario = parts[1]
        entries = [r for r in report.results if r.name == scenario]
        if not entries:
            raise ValueError(f"unknown scenario {scenario!r}")
        fault = entries[0].fault
        if fault is None:
            raise ValueError("fault-evidence series needs a fault scenario")
        header = ["time_s"] + [f"mass_{r.rule}" for r in entries]
        columns = [entries[0].series["time"]] + [
            r.series["masses"][:, fault.channel] for r in entries
        ]
        _write_csv(path, header, columns)
        return
    if len(parts) != 3:
        raise ValueError(f"series id must be '<kind>/<scenario>/<rule>', got {which!r}")
    kind, scenario, rule = parts
    try:
        entry = report.result_for(scenario, rule)
    except KeyError as err:
        raise ValueError(str(err)) from None
    series = entry.series
    if kind == "detection":
        threshold = report.bundle.detection.threshold
        header = ["time_s", "abs_residual", "threshold", "fault_active"]
        columns = [
            series["time"],
            series["abs_residual"],
            np.full(report.length, threshold),
            series["fault_mask"].astype(float),
        ]
    elif kind == "evidence":
        header = (
            ["time_s"]
            + [f"bbm_{name}" for name in x_names]
            + ["bbm_no_fault", "reliability"]
        )
        columns = (
            [series["time"]]
            + [series["bbm"][:, i] for i in range(len(x_names))]
            + [series["bbm"][:, -1], series["reliability"]]
        )
    else:  # combined
        header = ["time_s"] + [f"mass_{name}" for name in x_names] + ["mass_no_fault"]
        columns = (
            [series["time"]]
            + [series["masses"][:, i] for i in range(len(x_names))]
            + [series["masses"][:, -1]]
        )
    _write_csv(path, header, columns)


def report_to_dict(report: DiagnosisReport, series_paths: dict | None = None) -> dict:
    """JSON-ready summary: design bundle, metrics, optional series locations."""
    out = {
        "design": report.bundle.to_dict(),
        "validation": {"length": report.length, "dt": report.dt},
        "scenarios": [result.metrics_dict() for result in report.results],
    }
    if series_paths:
        out["series"] = {key: str(value) for key, value in series_paths.items()}
    return out


def write_report(report: DiagnosisReport, path, series_paths: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report, series_paths), fh, indent=2, sort_keys=True)
        fh.write("\n")
