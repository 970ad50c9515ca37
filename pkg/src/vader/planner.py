"""Receptive-field arithmetic and hyperparameter grid planning.

The models downsample only by max pooling, so the widest input span a
single kernel can see ("maximum receptive field", MRF) is
``kernel_size * pool_size ** pool_steps`` original samples. Comparing that
span against the size of the largest object of interest (one period of the
lowest relevant frequency) classifies a hyperparameter combination before
any training happens.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import NonPositiveFrequency, Overflow

_MAX_MRF = 2**63 - 1

#: Default hyperparameter axes for the planning grid.
DEFAULT_KERNEL_SIZES = (3, 5, 7, 9, 11, 13, 15, 17)
DEFAULT_POOL_SIZES = (2, 3, 4, 5)
DEFAULT_POOL_STEPS = (3, 4)

#: Lowest frequency (Hz) effectively encoded into single spectrogram samples
#: by the wavelet transform; reported as a bonus, never used to classify.
SPECTROGRAM_ENCODED_LOW_HZ = 3.4


class InputKind(enum.Enum):
    RAW = "raw"
    SPECTROGRAM = "spectrogram"


class PlanClass(enum.Enum):
    UNDERFIT = "underfit"
    OK = "ok"
    BEYOND_USEFUL = "beyond_useful"
    INVALID = "invalid"


@dataclass(frozen=True)
class HyperParams:
    """One model configuration: input representation plus the three
    receptive-field-relevant hyperparameters and the channel width."""

    input_kind: InputKind
    kernel_size: int
    pool_size: int
    pool_steps: int
    base_width: int = 16

    def __post_init__(self):
        if self.kernel_size < 1:
            raise ValueError(f"kernel_size must be >= 1, got {self.kernel_size}")
        if self.pool_size < 2:
            raise ValueError(f"pool_size must be >= 2, got {self.pool_size}")
        if self.pool_steps < 0:
            raise ValueError(f"pool_steps must be >= 0, got {self.pool_steps}")
        if self.base_width < 1:
            raise ValueError(f"base_width must be >= 1, got {self.base_width}")

    @property
    def valid(self) -> bool:
        """Upsampling can only interpolate when the kernel spans more than
        one pooled input value, i.e. kernel_size > pool_size."""
        return self.kernel_size > self.pool_size

    @property
    def mrf(self) -> int:
        return mrf(self.kernel_size, self.pool_size, self.pool_steps)


@dataclass(frozen=True)
class ObjectSizeSpec:
    """Largest object of interest expressed in samples."""

    sample_rate: float
    lowest_frequency: float

    @property
    def size(self) -> int:
        return object_size(self.sample_rate, self.lowest_frequency)


@dataclass(frozen=True)
class PlanEntry:
    hyper: HyperParams
    mrf: int
    classification: PlanClass
    #: For spectrogram inputs: receptive field including what the wavelet
    #: transform pre-encodes. Equal to ``mrf`` for raw inputs.
    effective_mrf: int


def mrf(kernel_size: int, pool_size: int, pool_steps: int) -> int:
    """Maximum receptive field in original samples: kernel_size * pool_size ** pool_steps."""
    value = kernel_size * pool_size**pool_steps
    if value > _MAX_MRF:
        raise Overflow(f"receptive field {kernel_size}*{pool_size}^{pool_steps} exceeds 2^63-1")
    return value


def object_size(sample_rate: float, lowest_frequency: float) -> int:
    """Samples spanned by one period of the lowest frequency of interest,
    rounded up."""
    if lowest_frequency <= 0 or sample_rate <= 0:
        raise NonPositiveFrequency(
            f"sample_rate and lowest_frequency must be positive, got {sample_rate}, {lowest_frequency}"
        )
    if lowest_frequency > sample_rate:
        raise NonPositiveFrequency(
            f"lowest_frequency {lowest_frequency} exceeds sample_rate {sample_rate}"
        )
    return math.ceil(sample_rate / lowest_frequency)


def classify(
    hyper: HyperParams, sample_rate: float, f_low_certain: float, f_low_useful: float
) -> PlanClass:
    """Classify one hyperparameter combination against the object sizes.

    ``f_low_certain`` is the lowest frequency the model must resolve;
    ``f_low_useful`` the lowest frequency that can still carry information.
    """
    if not hyper.valid:
        return PlanClass.INVALID
    field = hyper.mrf
    if field < object_size(sample_rate, f_low_certain):
        return PlanClass.UNDERFIT
    if field > object_size(sample_rate, f_low_useful):
        return PlanClass.BEYOND_USEFUL
    return PlanClass.OK


def plan_grid(
    kernel_sizes=DEFAULT_KERNEL_SIZES,
    pool_sizes=DEFAULT_POOL_SIZES,
    pool_steps=DEFAULT_POOL_STEPS,
    sample_rate: float = 600.0,
    f_low_certain: float = 5.0,
    f_low_useful: float = 1.0,
    input_kinds=(InputKind.RAW, InputKind.SPECTROGRAM),
    base_width: int = 16,
) -> list[PlanEntry]:
    """Enumerate and classify the full hyperparameter grid.

    The Cartesian product of the given axes is classified per entry; no
    combination is dropped, so the caller sees invalid and underfitting
    entries alongside usable ones.
    """
    if not kernel_sizes or not pool_sizes or not pool_steps:
        raise ValueError("grid axes must be nonempty")
    if f_low_useful > f_low_certain:
        raise ValueError(
            f"f_low_useful ({f_low_useful}) must not exceed f_low_certain ({f_low_certain})"
        )
    entries = []
    for kind in input_kinds:
        for k in kernel_sizes:
            for m in pool_sizes:
                for p in pool_steps:
                    hyper = HyperParams(kind, k, m, p, base_width)
                    field = hyper.mrf
                    effective = field
                    if kind is InputKind.SPECTROGRAM:
                        effective = max(field, object_size(sample_rate, SPECTROGRAM_ENCODED_LOW_HZ))
                    entries.append(
                        PlanEntry(
                            hyper=hyper,
                            mrf=field,
                            classification=classify(hyper, sample_rate, f_low_certain, f_low_useful),
                            effective_mrf=effective,
                        )
                    )
    return entries
