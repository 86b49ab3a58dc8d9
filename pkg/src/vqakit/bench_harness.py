"""Efficiency protocol: timed runs, analytic MACs, and the runtime gate.

Runtime is measured on a pre-loaded in-memory clip with a monotonic clock:
a few untimed warmup executions, then the configured number of timed runs
whose arithmetic mean is reported. MACs follow a multiply-accumulate-only
convention (comparisons, copies and index math count zero), with per-frame
stages multiplied by the number of frames left after temporal sampling.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np

from .clip_io import VideoClip
from .errors import BenchRunError, SpecMismatch

__all__ = [
    "Resize",
    "Conv2d",
    "Linear",
    "Elementwise",
    "Feature",
    "PipelineDescriptor",
    "BenchReport",
    "ConstraintGate",
    "ConstraintVerdict",
    "count_macs",
    "count_params",
    "time_pipeline",
    "check_constraint",
]

# features whose dominant cost is one 3x3 kernel pass over the plane
_KERNEL_FEATURES = {"si", "ti", "sharpness"}


@dataclass(frozen=True)
class Resize:
    w_in: int
    h_in: int
    w_out: int
    h_out: int
    per_frame: bool = True

    def macs(self) -> int:
        return 4 * self.w_out * self.h_out  # bilinear: 4 MACs per output pixel

    def params(self) -> int:
        return 0


@dataclass(frozen=True)
class Conv2d:
    c_in: int
    c_out: int
    k_h: int
    k_w: int
    h_out: int
    w_out: int
    per_frame: bool = True

    def macs(self) -> int:
        return self.c_in * self.c_out * self.k_h * self.k_w * self.h_out * self.w_out

    def params(self) -> int:
        return self.c_in * self.c_out * self.k_h * self.k_w + self.c_out


@dataclass(frozen=True)
class Linear:
    d_in: int
    d_out: int
    tokens: int = 1
    per_frame: bool = True

    def macs(self) -> int:
        return self.d_in * self.d_out * self.tokens

    def params(self) -> int:
        return self.d_in * self.d_out + self.d_out


@dataclass(frozen=True)
class Elementwise:
    n: int
    per_frame: bool = True

    def macs(self) -> int:
        return self.n

    def params(self) -> int:
        return 0


@dataclass(frozen=True)
class Feature:
    name: str
    plane_size: int
    per_frame: bool = True

    def macs(self) -> int:
        kernel = 9 * self.plane_size if self.name in _KERNEL_FEATURES else 0
        return kernel + self.plane_size  # plus one reduction pass

    def params(self) -> int:
        return 0


Stage = Resize | Conv2d | Linear | Elementwise | Feature


@dataclass(frozen=True)
class PipelineDescriptor:
    stages: tuple[Stage, ...] = ()
    frames_per_clip: int = 1

    def __add__(self, other: "PipelineDescriptor") -> "PipelineDescriptor":
        if other.frames_per_clip != self.frames_per_clip:
            raise ValueError("cannot concatenate descriptors with different frame counts")
        return PipelineDescriptor(self.stages + other.stages, self.frames_per_clip)


def count_macs(descriptor: PipelineDescriptor) -> float:
    """Giga-MACs per clip for a declared pipeline."""
    total = 0
    for s in descriptor.stages:
        m = s.macs()
        total += m * descriptor.frames_per_clip if s.per_frame else m
    return total / 1e9


def count_params(descriptor_or_model) -> float:
    """Learned parameters in millions.

    Accepts a PipelineDescriptor, a BranchNet, or a ForestModel (forests and
    samplers carry no learned parameters; tree nodes are reported separately
    via ForestModel.node_count()).
    """
    from .regressors.forest import ForestModel
    from .regressors.net import BranchNet

    if isinstance(descriptor_or_model, PipelineDescriptor):
        return sum(s.params() for s in descriptor_or_model.stages) / 1e6
    if isinstance(descriptor_or_model, BranchNet):
        return descriptor_or_model.n_params() / 1e6
    if isinstance(descriptor_or_model, ForestModel):
        return 0.0
    raise TypeError(f"cannot count parameters of {type(descriptor_or_model).__name__}")


@dataclass(frozen=True)
class BenchReport:
    clip_spec: str
    runtime_ms: float
    runtime_runs: tuple[float, ...]
    warmup_runs: int
    macs_g: float
    params_m: float
    constraint_pass: bool

    def to_json(self) -> str:
        return json.dumps({
            "spec": self.clip_spec,
            "runtime_ms": self.runtime_ms,
            "runs": list(self.runtime_runs),
            "warmup_runs": self.warmup_runs,
            "macs_g": self.macs_g,
            "params_m": self.params_m,
            "pass": self.constraint_pass,
        })


@dataclass(frozen=True)
class ConstraintGate:
    clip_spec: str
    budget_ms: float = 1000.0

    def __post_init__(self):
        if self.budget_ms <= 0:
            raise ValueError("budget must be positive")


# canonical design-rule gate: a 30-frame FHD clip under one second
CANONICAL_GATE = ConstraintGate("30-FHD", 1000.0)


@dataclass(frozen=True)
class ConstraintVerdict:
    passed: bool
    margin_ms: float


def time_pipeline(
    pipeline,
    clip: VideoClip,
    warmup: int = 3,
    runs: int = 10,
    spec_label: str = "",
    budget_ms: float = 1000.0,
) -> BenchReport:
    """Run warmups then timed executions of a clip->score callable.

    pipeline is either a callable or an object with .score (callable),
    .descriptor and optional .params_m — MACs and parameter counts are taken
    from the descriptor when present. Clip ingestion is outside the timed
    region (the clip is already in memory).
    """
    if runs < 1:
        raise ValueError("need at least one timed run")
    score = getattr(pipeline, "score", pipeline)
    descriptor = getattr(pipeline, "descriptor", None)
    macs_g = count_macs(descriptor) if descriptor is not None else 0.0
    params_m = getattr(pipeline, "params_m", None)
    if params_m is None:
        params_m = count_params(descriptor) if descriptor is not None else 0.0

    for i in range(warmup):
        try:
            score(clip)
        except Exception as e:  # noqa: BLE001 - annotate with the run index
            raise BenchRunError(-(i + 1), e) from e
    measured = []
    for i in range(runs):
        t0 = time.perf_counter()
        try:
            score(clip)
        except Exception as e:  # noqa: BLE001
            raise BenchRunError(i, e) from e
        measured.append((time.perf_counter() - t0) * 1e3)

    mean = float(np.mean(measured))
    return BenchReport(
        clip_spec=spec_label,
        runtime_ms=mean,
        runtime_runs=tuple(measured),
        warmup_runs=warmup,
        macs_g=macs_g,
        params_m=float(params_m),
        constraint_pass=mean <= budget_ms,
    )


def check_constraint(report: BenchReport, gate: ConstraintGate) -> ConstraintVerdict:
    if report.clip_spec != gate.clip_spec:
        raise SpecMismatch(f"report is {report.clip_spec!r}, gate is {gate.clip_spec!r}")
    margin = gate.budget_ms - report.runtime_ms
    return ConstraintVerdict(report.runtime_ms <= gate.budget_ms, margin)
