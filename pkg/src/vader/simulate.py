"""Deterministic synthetic passage generator.

Each axle crossing a sensor injects an impulse-excited decaying sinusoid at
the bridge's ringing frequency plus a short Gaussian-windowed broadband
click at the crossing instant; channels superpose the contributions of all
axles and add seeded Gaussian noise. The crossing of axle ``a`` at sensor
``s`` happens at ``(position_s + offset_a) / speed``, so crossing times are
exactly consistent across sensors and label vectors follow from the core
data rules.

This is the minimal physics that makes receptive-field effects observable:
the ringing of earlier axles buries the click of the next one, so telling
axles from bridge oscillation requires context on the order of one ringing
period.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import AxleRecord, Dataset, Passage, SensorChannel, save_passage
from .errors import InvalidConfig

#: Minimum assumed distance between two axles (meters).
MIN_AXLE_SPACING_M = 2.0


@dataclass(frozen=True)
class BridgeConfig:
    """Bridge response model and sensor layout."""

    fundamental_frequency: float = 6.9  # Hz, ringing of an unloaded crossing
    damping_ratio: float = 0.03
    sensor_positions: tuple[float, ...] = (8.2,)  # meters along the span
    span: float = 16.4  # meters
    sample_rate: float = 600.0  # Hz
    #: Ringing frequency under the heaviest axle; None disables the
    #: load-dependent frequency drop.
    loaded_frequency: float | None = None
    #: Click amplitude relative to the ringing amplitude of the same axle.
    click_gain: float = 0.35
    #: Gaussian click window width in seconds.
    click_width: float = 0.008

    def validate(self) -> None:
        if self.fundamental_frequency <= 0:
            raise InvalidConfig(f"fundamental_frequency must be > 0, got {self.fundamental_frequency}")
        if not 0.0 < self.damping_ratio < 1.0:
            raise InvalidConfig(f"damping_ratio must be in (0, 1), got {self.damping_ratio}")
        if self.sample_rate <= 0:
            raise InvalidConfig(f"sample_rate must be > 0, got {self.sample_rate}")
        if not self.sensor_positions:
            raise InvalidConfig("at least one sensor position required")
        for pos in self.sensor_positions:
            if not 0.0 <= pos <= self.span:
                raise InvalidConfig(f"sensor position {pos} outside [0, {self.span}]")
        if self.loaded_frequency is not None and not 0.0 < self.loaded_frequency <= self.fundamental_frequency:
            raise InvalidConfig(
                f"loaded_frequency must be in (0, fundamental], got {self.loaded_frequency}"
            )
        if self.click_gain < 0 or self.click_width <= 0:
            raise InvalidConfig("click_gain must be >= 0 and click_width > 0")


@dataclass(frozen=True)
class TrainConfig:
    """Axle layout and speed of one crossing train."""

    axle_offsets: tuple[float, ...]  # meters from the train head, increasing
    speed: float  # m/s
    load_scale: tuple[float, ...] = ()  # per-axle amplitude factors

    def validate(self) -> None:
        if not self.axle_offsets:
            raise InvalidConfig("train needs at least one axle")
        offsets = np.asarray(self.axle_offsets, dtype=float)
        if np.any(np.diff(offsets) < MIN_AXLE_SPACING_M):
            raise InvalidConfig(
                f"consecutive axle offsets must differ by >= {MIN_AXLE_SPACING_M} m"
            )
        if self.speed <= 0:
            raise InvalidConfig(f"speed must be > 0, got {self.speed}")
        if self.load_scale and len(self.load_scale) != len(self.axle_offsets):
            raise InvalidConfig("load_scale must match the number of axles")
        if any(l <= 0 for l in self.load_scale):
            raise InvalidConfig("load_scale entries must be > 0")

    def loads(self) -> np.ndarray:
        if self.load_scale:
            return np.asarray(self.load_scale, dtype=float)
        return np.ones(len(self.axle_offsets))


#: Extra recording time after the last crossing, seconds.
TAIL_SECONDS = 0.8


def generate_passage(
    bridge: BridgeConfig,
    train: TrainConfig,
    noise_std: float = 0.1,
    seed: int = 0,
    passage_id: str = "passage",
) -> Passage:
    """Synthesise one passage; ``noise_std`` is relative to the clean signal
    peak. Identical arguments produce a bit-identical passage."""
    bridge.validate()
    train.validate()
    if noise_std < 0:
        raise InvalidConfig(f"noise_std must be >= 0, got {noise_std}")

    fs = bridge.sample_rate
    offsets = np.asarray(train.axle_offsets, dtype=float)
    loads = train.loads()
    duration = (bridge.span + offsets[-1]) / train.speed + TAIL_SECONDS
    n = int(np.ceil(duration * fs))
    t = np.arange(n) / fs

    if bridge.loaded_frequency is None:
        freqs = np.full(loads.size, bridge.fundamental_frequency)
    else:
        drop = bridge.fundamental_frequency - bridge.loaded_frequency
        freqs = bridge.fundamental_frequency - drop * loads / loads.max()

    rng = np.random.Generator(np.random.PCG64(seed))
    zeta = bridge.damping_ratio
    carrier = 2.0 * np.pi * (0.3 * fs)  # broadband click carrier, rad/s
    channels = []
    axles: dict[str, tuple[AxleRecord, ...]] = {}
    velocity = train.speed / fs  # meters per sample
    for si, pos in enumerate(bridge.sensor_positions):
        sensor_id = f"s{si}"
        clean = np.zeros(n)
        crossings = (pos + offsets) / train.speed
        for t0, amp, freq in zip(crossings, loads, freqs):
            tr = t - t0
            active = tr >= 0.0
            tra = tr[active]
            omega = 2.0 * np.pi * freq
            ring = np.exp(-zeta * omega * tra) * np.sin(omega * tra)
            click = bridge.click_gain * np.exp(-(tra**2) / (2.0 * bridge.click_width**2)) * np.sin(
                carrier * tra
            )
            clean[active] += amp * (ring + click)
        peak = np.max(np.abs(clean))
        noise = rng.normal(0.0, noise_std * peak, size=n) if noise_std > 0 else 0.0
        channels.append(SensorChannel(sensor_id, clean + noise, fs))
        axles[sensor_id] = tuple(AxleRecord(float(tc), velocity) for tc in crossings)

    return Passage(
        passage_id=passage_id,
        channels=tuple(channels),
        axles=axles,
        axle_count=len(offsets),
    )


@dataclass(frozen=True)
class DatasetConfig:
    """Sampling ranges for randomly drawn passages."""

    speed_range: tuple[float, float] = (20.0, 60.0)
    spacing_range: tuple[float, float] = (2.5, 8.0)
    load_range: tuple[float, float] = (0.7, 1.3)
    frequency_range: tuple[float, float] = (5.0, 6.9)
    noise_std: float = 0.1
    bridge: BridgeConfig = field(default_factory=BridgeConfig)


def sample_train(rng, axle_count: int, cfg: DatasetConfig) -> TrainConfig:
    gaps = rng.uniform(*cfg.spacing_range, size=max(axle_count - 1, 0))
    offsets = np.concatenate(([0.0], np.cumsum(gaps)))
    return TrainConfig(
        axle_offsets=tuple(offsets),
        speed=float(rng.uniform(*cfg.speed_range)),
        load_scale=tuple(rng.uniform(*cfg.load_range, size=axle_count)),
    )


def generate_dataset(
    n_passages: int,
    axle_count_distribution: dict[int, float],
    out_dir,
    seed: int = 0,
    config: DatasetConfig = DatasetConfig(),
) -> Dataset:
    """Draw ``n_passages`` i.i.d. passages and write them in the canonical
    directory format. Per-passage randomness is derived from the seed and
    the passage index, so any generation order gives the same files."""
    if not axle_count_distribution:
        raise InvalidConfig("axle_count_distribution must be nonempty")
    counts = sorted(axle_count_distribution)
    probs = np.asarray([axle_count_distribution[c] for c in counts], dtype=float)
    if np.any(probs < 0) or probs.sum() <= 0:
        raise InvalidConfig("distribution weights must be non-negative and sum > 0")
    probs = probs / probs.sum()

    out_dir = Path(out_dir)
    passages = []
    for i in range(n_passages):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(i,))
        rng = np.random.Generator(np.random.PCG64(ss))
        axle_count = int(rng.choice(counts, p=probs))
        train = sample_train(rng, axle_count, config)
        bridge = BridgeConfig(
            fundamental_frequency=float(rng.uniform(*config.frequency_range)),
            damping_ratio=config.bridge.damping_ratio,
            sensor_positions=config.bridge.sensor_positions,
            span=config.bridge.span,
            sample_rate=config.bridge.sample_rate,
            loaded_frequency=config.bridge.loaded_frequency,
            click_gain=config.bridge.click_gain,
            click_width=config.bridge.click_width,
        )
        passage = generate_passage(
            bridge,
            train,
            noise_std=config.noise_std,
            seed=int(rng.integers(0, 2**63 - 1)),
            passage_id=f"passage_{i:05d}",
        )
        save_passage(passage, out_dir)
        passages.append(passage)
    return Dataset(root=str(out_dir), passages=tuple(passages))
