"""The tuning loop: ask, instantiate, measure, tell, record.

Objectives are callables mapping a configuration to a runtime in seconds,
returning ``None`` when the evaluation failed numerically.
"""
from __future__ import annotations

import logging
import math
import os
import statistics
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .kernels import KernelCase, NumericalFailure, residual
from .space import Configuration, ParamSpace, build_space, random_config
from .tuners import SpaceExhausted, make_tuner

log = logging.getLogger(__name__)

REPS_ENV = "TILETUNER_REPS"
SPOT_CHECK_TOL = 1e-10


class MeasurementError(RuntimeError):
    """A timing could not be trusted (non-positive reading)."""


class KernelMismatch(RuntimeError):
    """Tiled kernel output disagrees with the reference."""


@dataclass(frozen=True)
class Budget:
    max_evals: int = 100
    max_seconds: Optional[float] = None

    def __post_init__(self):
        if self.max_evals < 1:
            raise ValueError("max_evals must be positive")


@dataclass(frozen=True)
class MeasureProtocol:
    warmups: int = 1
    repetitions: int = 3
    aggregate: str = "median"

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.aggregate not in _AGGREGATES:
            raise ValueError(f"aggregate must be one of {sorted(_AGGREGATES)}")

    @classmethod
    def from_env(cls, **kwargs) -> "MeasureProtocol":
        reps = os.environ.get(REPS_ENV)
        if reps:
            kwargs["repetitions"] = int(reps)
        return cls(**kwargs)


_AGGREGATES = {"median": statistics.median, "min": min, "mean": statistics.fmean}


@dataclass(frozen=True)
class EvalRecord:
    eval_index: int
    config: Configuration
    runtime_s: Optional[float]  # None: failed evaluation
    elapsed_s: float
    best_so_far_s: float

    @property
    def ok(self) -> bool:
        return self.runtime_s is not None


@dataclass
class TuningTrace:
    kernel: str
    size_name: str
    tuner: str
    seed: int
    records: list[EvalRecord] = field(default_factory=list)
    total_process_s: float = 0.0
    budget: Budget = Budget()
    protocol: MeasureProtocol = MeasureProtocol()
    objective: str = "synthetic"
    timestamp: str = "0"
    version: str = __version__


# ---------------------------------------------------------------- objectives


def aggregate_timings(timings: Sequence[float], how: str) -> float:
    return float(_AGGREGATES[how](timings))


def measure(case: KernelCase, config, protocol: MeasureProtocol = MeasureProtocol(), inputs=None,
            timer: Callable[[], float] = time.perf_counter) -> float:
    """Time the tiled kernel; warmups are untimed.

    Raises NumericalFailure from the kernel and MeasurementError when a
    timed run reads as zero or negative.
    """
    if inputs is None:
        inputs = case.inputs()
    for _ in range(protocol.warmups):
        case.run(config, inputs)
    timings = []
    for _ in range(protocol.repetitions):
        t0 = timer()
        case.run(config, inputs)
        dt = timer() - t0
        if not dt > 0:
            raise MeasurementError(f"non-positive timer reading {dt!r} for {config}")
        timings.append(dt)
    return aggregate_timings(timings, protocol.aggregate)


def optimum_config(space: ParamSpace) -> Configuration:
    """Per parameter, the candidate nearest sqrt(extent); ties go to the smaller."""
    best = []
    for p in space.params:
        root = math.sqrt(p.axis_extent)
        best.append(min(p.candidates, key=lambda c: (abs(c - root), c)))
    return tuple(best)


def synthetic_objective(space: ParamSpace, config) -> float:
    """Pseudo-runtime ``1 + sum_i (log2 f_i - log2 f*_i)**2``, minimum 1 at f*."""
    config = space.validate(config)
    star = optimum_config(space)
    return 1.0 + sum((math.log2(f) - math.log2(s)) ** 2 for f, s in zip(config, star))


class SyntheticObjective:
    name = "synthetic"

    def __init__(self, space: ParamSpace):
        self.space = space

    def __call__(self, config) -> float:
        return synthetic_objective(self.space, config)


class KernelObjective:
    """Times a real kernel case; numerical failures become ``None``."""

    name = "kernel"

    def __init__(self, case: KernelCase, protocol: Optional[MeasureProtocol] = None):
        self.case = case
        self.protocol = protocol or MeasureProtocol.from_env()
        self._inputs = None

    def __call__(self, config) -> Optional[float]:
        if self._inputs is None:
            self._inputs = self.case.inputs()
        try:
            return measure(self.case, config, self.protocol, self._inputs)
        except NumericalFailure as exc:
            log.warning("evaluation of %s failed: %s", config, exc)
            return None

    def spot_check(self, seed: int = 0) -> float:
        """Compare one random tiled run against the reference at the mini size."""
        mini = KernelCase.of(self.case.kernel, "mini", self.case.seed)
        space = build_space(mini.kernel, "mini")
        config = random_config(space, np.random.default_rng(seed))
        inputs = mini.inputs()
        out = mini.run(config, inputs)
        err = residual(mini.kernel, inputs, out)
        if not err <= SPOT_CHECK_TOL:
            raise KernelMismatch(f"{mini.kernel} mini {config}: residual {err:.3e}")
        return err


# ---------------------------------------------------------------- loop


class SimulatedClock:
    """Advances only by the objective values it is fed; for bit-exact replays."""

    def __init__(self):
        self.now = 0.0

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> None:
        self.now += seconds


def run_tuning(
    tuner_kind: str,
    space: ParamSpace,
    objective,
    budget: Budget = Budget(),
    seed: int = 0,
    *,
    protocol: Optional[MeasureProtocol] = None,
    simulated_clock: bool = False,
    reproducible: bool = False,
    trace_path: Optional[Path] = None,
    tuner_kwargs: Optional[dict] = None,
) -> TuningTrace:
    """Drive one tuner against an objective until the budget runs out.

    Stops after ``budget.max_evals`` evaluations, once ``budget.max_seconds``
    has elapsed (checked before each evaluation), or when the space is
    exhausted. With ``simulated_clock`` elapsed time is the running sum of
    objective values, which makes synthetic runs bit-reproducible.
    """
    from .persist import write_trace

    tuner = make_tuner(tuner_kind, space, seed, **(tuner_kwargs or {}))
    if protocol is None:
        protocol = getattr(objective, "protocol", MeasureProtocol())
    stamp = "0" if reproducible else datetime.now(timezone.utc).isoformat(timespec="seconds")
    trace = TuningTrace(
        kernel=space.kernel,
        size_name=space.size_name,
        tuner=tuner_kind,
        seed=seed,
        budget=budget,
        protocol=protocol,
        objective=getattr(objective, "name", "custom"),
        timestamp=stamp,
    )
    if simulated_clock:
        clock = SimulatedClock()
    else:
        t0 = time.perf_counter()
        clock = lambda: time.perf_counter() - t0  # noqa: E731

    if hasattr(objective, "spot_check"):
        objective.spot_check(seed)

    best = math.inf
    elapsed = 0.0
    try:
        while len(trace.records) < budget.max_evals:
            if budget.max_seconds is not None and clock() >= budget.max_seconds:
                break
            try:
                config = tuner.ask()
            except SpaceExhausted:
                break
            runtime = objective(config)
            if isinstance(clock, SimulatedClock) and runtime is not None:
                clock.advance(runtime)
            tuner.tell(config, runtime)
            if runtime is not None:
                best = min(best, runtime)
            elapsed = max(elapsed, clock())
            trace.records.append(EvalRecord(len(trace.records), config, runtime, elapsed, best))
    except Exception:
        trace.total_process_s = max(elapsed, clock())
        if trace_path is not None:
            write_trace(trace, trace_path)
            log.error("tuning aborted; partial trace written to %s", trace_path)
        raise
    trace.total_process_s = max(elapsed, clock())
    if trace_path is not None:
        write_trace(trace, trace_path)
    return trace
