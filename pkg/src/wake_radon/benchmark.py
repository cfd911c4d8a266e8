"""Slot-level scoring of the detector against simulated ground truth.

Every scene has five slots (turbulent, two narrow-V, two Kelvin). A slot is
a true positive when a visible wake is confirmed and a true negative when
an invisible one is not; accuracy is ``TP% + TN%``. Percentages are kept as
exact fractions so the four of them always add up to 100.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
import os
import warnings

import numpy as np

from . import _backend
from .detection import DetectorConfig, detect_wakes
from .simulate import SLOTS

OUTCOMES = ("TP", "TN", "FP", "FN")


def slot_outcome(truth: bool, detected: bool) -> str:
    if truth:
        return "TP" if detected else "FN"
    return "FP" if detected else "TN"


@dataclass
class SceneResult:
    index: int
    name: str
    truth: tuple
    detected: tuple | None = None
    error: str | None = None

    @property
    def outcomes(self):
        if self.detected is None:
            return ()
        return tuple(slot_outcome(t, d) for t, d in zip(self.truth, self.detected))

    def as_dict(self):
        return {
            "index": self.index,
            "name": self.name,
            "truth": [int(v) for v in self.truth],
            "detected": None if self.detected is None else [int(v) for v in self.detected],
            "outcomes": list(self.outcomes),
            "error": self.error,
        }


@dataclass
class BenchmarkResult:
    scenes: list = field(default_factory=list)

    @property
    def counts(self):
        c = dict.fromkeys(OUTCOMES, 0)
        for s in self.scenes:
            for o in s.outcomes:
                c[o] += 1
        return c

    @property
    def evaluated_slots(self):
        return sum(self.counts.values())

    @property
    def percentages(self):
        """Exact percentages of evaluated slots, as ``Fraction`` values."""
        n = self.evaluated_slots
        if n == 0:
            return dict.fromkeys(OUTCOMES, Fraction(0))
        return {k: Fraction(100 * v, n) for k, v in self.counts.items()}

    @property
    def accuracy(self):
        p = self.percentages
        return p["TP"] + p["TN"]

    @property
    def failed(self):
        return [s for s in self.scenes if s.error is not None]

    def as_dict(self):
        pct = self.percentages
        return {
            "scenes": [s.as_dict() for s in self.scenes],
            "counts": self.counts,
            "evaluated_slots": self.evaluated_slots,
            "percent": {k: float(v) for k, v in pct.items()},
            "accuracy": float(self.accuracy),
            "failed_scenes": len(self.failed),
        }


def evaluate_scene(index, name, img, truth, cfg: DetectorConfig):
    """Run the detector on one scene; failures are recorded, not raised."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            report = detect_wakes(img, cfg)
    except Exception as exc:  # a broken scene must not sink the whole run
        return SceneResult(index, name, tuple(truth), None, f"{type(exc).__name__}: {exc}")
    return SceneResult(index, name, tuple(truth), report.visibility)


def _job(args):
    return evaluate_scene(*args)


def _single_thread_worker():
    # the pool already uses the cores; kernels inside a worker stay serial
    os.environ["WAKE_RADON_THREADS"] = "1"


def run_benchmark(suite, cfg: DetectorConfig = DetectorConfig(), workers=None):
    """Score ``suite``, a sequence of ``(image, GroundTruth)`` pairs.

    ``workers`` defaults to ``WAKE_RADON_THREADS``. Scenes are independent,
    and results are merged by scene index, so the result does not depend on
    the number of workers.
    """
    jobs = [
        (i, gt.name or f"scene{i}", img, gt.visibility, cfg)
        for i, (img, gt) in enumerate(suite)
    ]
    workers = _backend.threads() if workers is None else max(1, int(workers))
    workers = min(workers, len(jobs)) if jobs else 1
    if workers <= 1:
        results = [_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_single_thread_worker) as pool:
            results = list(pool.map(_job, jobs))
    results.sort(key=lambda r: r.index)
    return BenchmarkResult(results)


def perfect_result(suite):
    """Scores of a detector that reproduces ground truth exactly."""
    return BenchmarkResult([
        SceneResult(i, gt.name, gt.visibility, gt.visibility) for i, (_, gt) in enumerate(suite)
    ])


def format_table(result: BenchmarkResult):
    """Per-scene rows followed by the aggregate row, as text lines."""
    head = "scene".ljust(16) + " ".join(s.ljust(10) for s in SLOTS) + "  outcome"
    lines = [head]
    for s in result.scenes:
        if s.detected is None:
            lines.append(s.name.ljust(16) + f"failed: {s.error}")
            continue
        cells = " ".join(f"{int(t)}/{int(d)}".ljust(10) for t, d in zip(s.truth, s.detected))
        lines.append(s.name.ljust(16) + cells + "  " + ",".join(s.outcomes))
    pct = result.percentages
    lines.append(
        "aggregate".ljust(16)
        + "  ".join(f"{k} {float(pct[k]):.1f}%" for k in OUTCOMES)
        + f"  accuracy {float(result.accuracy):.1f}%"
    )
    return lines


def peak_to_background(rimg, r, theta, r_excl=3, theta_excl=3.0):
    """Line response over background RMS in a Radon image.

    The peak is the largest ``|value|`` within one bin of ``(r, theta)``;
    the background is every bin farther than ``r_excl`` offset bins or
    ``theta_excl`` degrees (circularly) from the line.
    """
    grid, values = rimg.grid, np.asarray(rimg.values)
    i0, j0 = grid.r_index(r), grid.theta_index(theta)
    ii = np.arange(grid.n_r)[:, None]
    dth = np.abs((grid.theta_deg - grid.theta_of(j0) + 90.0) % 180.0 - 90.0)[None, :]
    near = (np.abs(ii - i0) <= 1) & (dth <= grid.dtheta_deg + 1e-9)
    far = (np.abs(ii - i0) > r_excl) | (dth > theta_excl)
    peak = float(np.max(np.abs(values[near])))
    rms = float(np.sqrt(np.mean(values[far] ** 2)))
    return peak / rms if rms > 0 else np.inf
