"""Dataset handling for multichannel sensor records.

Covers CSV ingestion, zero-mean/unit-variance normalization, synthetic
flight-like data generation, additive fault injection, and the linear
least-squares redundancy model whose per-sensor estimation error drives
fault-amplitude calibration.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "Dataset",
    "NormStats",
    "LsModel",
    "FaultSpec",
    "SyntheticConfig",
    "load_dataset",
    "compute_normalization",
    "apply_normalization",
    "generate_synthetic_flight",
    "inject_fault",
    "fit_ls_model",
    "calibrate_fault_amplitude",
]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Time-indexed record of monitored channels followed by input channels.

    Row k of ``samples`` is the full measurement vector at sample k; the
    monitored (x) columns come first, the input/actuation (u) columns after
    them. ``dt`` is the sampling interval in seconds. The sample array is
    frozen after construction and safe to share across threads.
    """

    samples: np.ndarray
    x_channels: tuple[str, ...]
    u_channels: tuple[str, ...]
    dt: float = 0.1

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        x = tuple(self.x_channels)
        u = tuple(self.u_channels)
        if len(x) < 1:
            raise ValueError("at least one monitored (x) channel is required")
        n = len(x) + len(u)
        if n < 2:
            raise ValueError("need at least two channels in total")
        names = x + u
        if len(set(names)) != len(names):
            raise ValueError("channel names must be unique")
        if samples.ndim != 2 or samples.shape[1] != n:
            raise ValueError(
                f"samples must be a 2-D array with {n} columns, got shape {samples.shape}"
            )
        if samples.shape[0] < n:
            raise ValueError(
                f"need at least as many samples as channels ({n}), got {samples.shape[0]}"
            )
        if not np.isfinite(samples).all():
            raise ValueError("samples contain non-finite values")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "x_channels", x)
        object.__setattr__(self, "u_channels", u)

    @property
    def n_x(self) -> int:
        return len(self.x_channels)

    @property
    def n_u(self) -> int:
        return len(self.u_channels)

    @property
    def n(self) -> int:
        return self.n_x + self.n_u

    @property
    def m(self) -> int:
        return self.samples.shape[0]

    @property
    def x(self) -> np.ndarray:
        """Monitored-sensor block (m x n_x view)."""
        return self.samples[:, : self.n_x]

    @property
    def u(self) -> np.ndarray:
        """Input/actuation block (m x n_u view)."""
        return self.samples[:, self.n_x :]


@dataclass(frozen=True, eq=False)
class NormStats:
    """Per-channel offset and scale for zero-mean / unit-variance scaling."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        std = np.asarray(self.std, dtype=float)
        if mean.shape != std.shape or mean.ndim != 1:
            raise ValueError("mean and std must be 1-D arrays of equal length")
        if not (std > 0).all():
            raise ValueError("std must be strictly positive for every channel")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @property
    def n(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True, eq=False)
class LsModel:
    """Linear multivariate model: each sensor regressed on all other channels.

    ``coef_x[i]`` holds the coefficients of sensor i on the other monitored
    sensors (diagonal is structurally zero: a sensor never predicts itself),
    ``coef_u[i]`` the coefficients on the input channels, and
    ``mean_abs_error[i]`` the mean absolute training residual of sensor i.
    """

    coef_x: np.ndarray
    coef_u: np.ndarray
    mean_abs_error: np.ndarray

    def __post_init__(self):
        cx = np.asarray(self.coef_x, dtype=float)
        cu = np.asarray(self.coef_u, dtype=float)
        mae = np.asarray(self.mean_abs_error, dtype=float)
        if cx.ndim != 2 or cx.shape[0] != cx.shape[1]:
            raise ValueError("coef_x must be square (n_x x n_x)")
        if cu.ndim != 2 or cu.shape[0] != cx.shape[0]:
            raise ValueError("coef_u must have one row per monitored sensor")
        if np.any(np.diag(cx) != 0.0):
            raise ValueError("diagonal of coef_x must be exactly zero")
        if mae.shape != (cx.shape[0],) or np.any(mae < 0):
            raise ValueError("mean_abs_error must be a nonnegative length-n_x vector")
        object.__setattr__(self, "coef_x", cx)
        object.__setattr__(self, "coef_u", cu)
        object.__setattr__(self, "mean_abs_error", mae)

    @property
    def n_x(self) -> int:
        return self.coef_x.shape[0]

    @property
    def n_u(self) -> int:
        return self.coef_u.shape[1]

    @property
    def residual_matrix(self) -> np.ndarray:
        """Parity-style map [coef_x - I, coef_u]; rows annihilate fault-free z."""
        return np.hstack([self.coef_x - np.eye(self.n_x), self.coef_u])


@dataclass(frozen=True)
class FaultSpec:
    """Additive rectangular bias on one monitored channel.

    ``amplitude`` is expressed in normalized units; the offset is applied for
    sample indices in [start, stop).
    """

    channel: int
    amplitude: float
    start: int
    stop: int

    def __post_init__(self):
        if self.channel < 0:
            raise ValueError("channel index must be nonnegative")
        if not 0 <= self.start < self.stop:
            raise ValueError("need 0 <= start < stop")
        if not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")


@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters of the synthetic flight-like data generator.

    ``maneuver_segments`` is a sequence of (start, stop, intensity) triples;
    inside each segment the input channels are scaled by ``intensity`` so the
    control-activity norm leaves its quiescent range.
    """

    n_x: int
    n_u: int
    m: int
    latent_dim: int
    noise_std: float = 0.02
    maneuver_segments: tuple[tuple[int, int, float], ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.n_x < 1 or self.n_u < 0:
            raise ValueError("need n_x >= 1 and n_u >= 0")
        n = self.n_x + self.n_u
        if n < 2:
            raise ValueError("need at least two channels in total")
        if self.m < n:
            raise ValueError("need at least as many samples as channels")
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be positive")
        if self.latent_dim >= n:
            raise ValueError(
                f"latent_dim ({self.latent_dim}) must be smaller than the channel "
                f"count ({n}): otherwise no approximate null space can exist"
            )
        if not (math.isfinite(self.noise_std) and self.noise_std >= 0):
            raise ValueError("noise_std must be finite and nonnegative")
        segments = tuple((int(a), int(b), float(g)) for a, b, g in self.maneuver_segments)
        for start, stop, intensity in segments:
            if not 0 <= start < stop <= self.m:
                raise ValueError(f"maneuver segment [{start}, {stop}) outside [0, {self.m})")
            if not (math.isfinite(intensity) and intensity > 0):
                raise ValueError("maneuver intensity must be finite and positive")
        object.__setattr__(self, "maneuver_segments", segments)


def load_dataset(path, x_names, u_names) -> Dataset:
    """Read a header-row CSV and return a Dataset with columns ordered [x; u].

    Raises a descriptive ValueError for missing columns, non-numeric cells,
    non-finite values, or ragged rows.
    """
    x_names = list(x_names)
    u_names = list(u_names)
    wanted = x_names + u_names
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: file is empty, expected a header row")
        header = [name.strip() for name in header]
        missing = [name for name in wanted if name not in header]
        if missing:
            raise ValueError(
                f"{path}: column(s) {missing} not found; available headers: {header}"
            )
        index = [header.index(name) for name in wanted]
        rows = []
        for r, row in enumerate(reader):
            if len(row) < len(header):
                raise ValueError(
                    f"{path}: row {r} has {len(row)} cells, expected {len(header)}"
                )
            values = []
            for name, c in zip(wanted, index):
                cell = row[c].strip()
                try:
                    value = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}: non-numeric value {cell!r} at row {r}, column {name}"
                    ) from None
                if not math.isfinite(value):
                    raise ValueError(
                        f"{path}: non-finite value at row {r}, column {name}"
                    )
                values.append(value)
            rows.append(values)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return Dataset(np.array(rows, dtype=float), tuple(x_names), tuple(u_names))


def compute_normalization(train: Dataset) -> NormStats:
    """Per-channel mean and population standard deviation of a training set."""
    if train.m < 2:
        raise ValueError("need at least two samples to estimate normalization")
    mean = train.samples.mean(axis=0)
    std = train.samples.std(axis=0)  # population convention (divide by m)
    flat = np.nonzero(std == 0.0)[0]
    if flat.size:
        names = [(train.x_channels + train.u_channels)[i] for i in flat]
        raise ValueError(f"constant column(s), cannot normalize: {names}")
    return NormStats(mean=mean, std=std)


def apply_normalization(ds: Dataset, stats: NormStats) -> Dataset:
    """Return a copy of ``ds`` with each column shifted and scaled by ``stats``."""
    if stats.n != ds.n:
        raise ValueError(f"stats cover {stats.n} channels, dataset has {ds.n}")
    return replace(ds, samples=(ds.samples - stats.mean) / stats.std)


# Strength falloff across the shared (core) latent drivers.
_LATENT_DECAY = 0.6
# Weight of the per-channel weak drivers relative to the core mixture.
_PERSONAL_STRENGTH = 0.15
# Coupling of the blended monitored channel to input-channel content. Ties
# the redundancy relation to control activity, so maneuvers raise both the
# relation residual and per-sensor model error, as on a real vehicle.
_INPUT_COUPLING = 0.3
_DEFAULT_DT = 0.1


def _driver_split(cfg: SyntheticConfig) -> tuple[int, int]:
    """Number of shared (core) and per-channel (personal) latent drivers."""
    personal_dim = 0
    if cfg.n_x >= 2:
        personal_dim = max(0, min(cfg.latent_dim - 2, cfg.n_x - 1))
    return cfg.latent_dim - personal_dim, personal_dim


def _latent_drivers(
    rng: np.random.Generator, m: int, k: int, dt: float, n_slow: int
) -> np.ndarray:
    """k unit-variance latent signals.

    The first ``n_slow`` are slow flight-state-like drivers (sinusoid sums
    plus heavily smoothed noise); the rest are faster band-limited signals
    standing in for per-channel unmodeled dynamics.
    """
    def smoothing_kernel(width):
        width = min(width, m if m % 2 == 1 else m - 1)
        kernel = np.hanning(max(width, 1)) + 1e-12
        return kernel / kernel.sum()

    t = np.arange(m) * dt
    slow_kernel = smoothing_kernel(101)
    fast_kernel = smoothing_kernel(7)
    drivers = np.empty((m, k))
    for j in range(k):
        if j < n_slow:
            freqs = rng.uniform(0.003, 0.08, size=3)
            amps = rng.uniform(0.4, 1.0, size=3)
            phases = rng.uniform(0.0, 2.0 * np.pi, size=3)
            wave = np.zeros(m)
            for f, a, p in zip(freqs, amps, phases):
                wave += a * np.sin(2.0 * np.pi * f * t + p)
            rough = rng.normal(0.0, 1.0, size=m)
            wave = wave + 2.0 * np.convolve(rough, slow_kernel, mode="same")
        else:
            wave = np.convolve(rng.normal(0.0, 1.0, size=m), fast_kernel, mode="same")
        drivers[:, j] = wave / wave.std()
    return drivers


def _mixing_matrix(cfg: SyntheticConfig) -> np.ndarray:
    """Latent-to-channel mixing with an evenly spread redundancy relation.

    The mixing is a fixed property of the channel configuration (same
    n_x/n_u/latent_dim means the same simulated vehicle), so datasets
    generated with different seeds are different flights of one system and
    models fit on one transfer to the other.

    The monitored channels share one common core mixture of the shared
    drivers (so their common-mode content, including any model error in it,
    is equidistant from every single-sensor fault direction), each carries
    one weak personal driver where the latent budget allows, and the last
    monitored channel is a balanced blend of the other monitored rows. The
    blend makes the weakest direction of the data a parity relation spanning
    the whole monitored block, so no sensor is structurally blind to faults.
    Input channels mix the core drivers independently.
    """
    rng = np.random.default_rng((cfg.n_x, cfg.n_u, cfg.latent_dim))
    n = cfg.n_x + cfg.n_u
    blend_last = cfg.n_x >= 2
    core_dim, personal_dim = _driver_split(cfg)
    core_strengths = _LATENT_DECAY ** np.arange(core_dim)
    mixing = np.zeros((n, cfg.latent_dim))
    shared_core = rng.normal(size=core_dim) * core_strengths
    for i in range(cfg.n_x):
        mixing[i, :core_dim] = shared_core
    for i in range(cfg.n_x, n):
        mixing[i, :core_dim] = rng.normal(size=core_dim) * core_strengths
    for j in range(personal_dim):
        mixing[j, core_dim + j] = _PERSONAL_STRENGTH * rng.choice((-1.0, 1.0))
    if blend_last:
        signs = rng.choice((-1.0, 1.0), size=cfg.n_x - 1)
        mixing[cfg.n_x - 1] = (signs @ mixing[: cfg.n_x - 1]) / np.sqrt(cfg.n_x - 1)
        if cfg.n_u > 0:
            u_signs = rng.choice((-1.0, 1.0), size=cfg.n_u)
            mixing[cfg.n_x - 1, :core_dim] += (
                _INPUT_COUPLING * (u_signs @ mixing[cfg.n_x :, :core_dim]) / np.sqrt(cfg.n_u)
            )
    return mixing


def generate_synthetic_flight(cfg: SyntheticConfig) -> Dataset:
    """Deterministic flight-like dataset: latent linear mixtures plus noise.

    All channels are linear mixtures of ``latent_dim`` smooth latent drivers
    plus independent Gaussian noise of scale ``noise_std``, so the data matrix
    has an approximate right null space. Inside each maneuver segment the
    u-channel block is multiplied by the segment intensity, pushing the
    control-activity norm out of its quiescent range (and, because the
    channel models are fit across both regimes, raising model uncertainty
    there).
    """
    rng = np.random.default_rng(cfg.seed)
    core_dim, _ = _driver_split(cfg)
    drivers = _latent_drivers(rng, cfg.m, cfg.latent_dim, _DEFAULT_DT, core_dim)
    mixing = _mixing_matrix(cfg)
    data = drivers @ mixing.T
    if cfg.noise_std > 0:
        data = data + rng.normal(0.0, cfg.noise_std, size=(cfg.m, cfg.n_x + cfg.n_u))
    for start, stop, intensity in cfg.maneuver_segments:
        data[start:stop, cfg.n_x :] *= intensity
    x_names = tuple(f"x{i + 1}" for i in range(cfg.n_x))
    u_names = tuple(f"u{i + 1}" for i in range(cfg.n_u))
    return Dataset(data, x_names, u_names, dt=_DEFAULT_DT)


def inject_fault(ds: Dataset, fault: FaultSpec) -> Dataset:
    """Return a copy of ``ds`` with the fault offset added on [start, stop)."""
    if fault.channel >= ds.n_x:
        raise ValueError(
            f"fault channel {fault.channel} out of range (n_x = {ds.n_x})"
        )
    if fault.stop > ds.m:
        raise ValueError(f"fault interval [{fault.start}, {fault.stop}) exceeds m = {ds.m}")
    samples = np.array(ds.samples)
    samples[fault.start : fault.stop, fault.channel] += fault.amplitude
    return replace(ds, samples=samples)


def fit_ls_model(train: Dataset) -> LsModel:
    """Ordinary least squares of each sensor on the remaining channels.

    Expects normalized training data. Row i of the model predicts sensor i
    from every other monitored sensor plus all input channels; the mean
    absolute training residual per sensor is retained for amplitude
    calibration.
    """
    n_x, n_u = train.n_x, train.n_u
    coef_x = np.zeros((n_x, n_x))
    coef_u = np.zeros((n_x, n_u))
    mae = np.zeros(n_x)
    for i in range(n_x):
        others = [j for j in range(n_x) if j != i]
        regressors = np.hstack([train.x[:, others], train.u])
        target = train.x[:, i]
        coefs, _, rank, _ = np.linalg.lstsq(regressors, target, rcond=None)
        if rank < regressors.shape[1]:
            raise ValueError(
                f"rank-deficient regressors while fitting sensor "
                f"{train.x_channels[i]!r} (rank {rank} < {regressors.shape[1]})"
            )
        coef_x[i, others] = coefs[: n_x - 1]
        coef_u[i, :] = coefs[n_x - 1 :]
        mae[i] = np.abs(target - regressors @ coefs).mean()
    return LsModel(coef_x=coef_x, coef_u=coef_u, mean_abs_error=mae)


def _round_one_significant(value: float) -> float:
    if value == 0.0:
        return 0.0
    digits = -int(math.floor(math.log10(abs(value))))
    return round(value, digits)


def calibrate_fault_amplitude(model: LsModel, channel: int, factor: float = 3.0) -> float:
    """Fault amplitude: ``factor`` times the sensor's rounded mean estimation error.

    The mean absolute training residual is rounded to one significant figure
    before scaling, which keeps amplitudes human-readable.
    """
    if not 0 <= channel < model.n_x:
        raise ValueError(f"channel {channel} out of range (n_x = {model.n_x})")
    if not factor > 0:
        raise ValueError("factor must be positive")
    return factor * _round_one_significant(float(model.mean_abs_error[channel]))
