"""Request sequences, schedules, validity checking and cost accounting.

Both sequences and schedules are array-backed so that Monte-Carlo runs with
millions of requests stay vectorised.  A schedule is a list of service times
plus an ``assignment`` array mapping every request index to the service that
serves it; a partition of the requests is therefore built into the
representation, and ``Schedule.from_services`` checks it when converting from
the explicit ``(t(s), R(s))`` form.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import kernels
from .errors import InputError, ScheduleError
from .tree import Tree


def _frozen(a):
    a.setflags(write=False)
    return a


class RequestSequence:
    """Time-sorted requests ``(t(r), l(r))`` over the horizon ``[0, horizon]``."""

    def __init__(self, times, locations, horizon: float, tree: Tree | None = None):
        times = np.array(times, dtype=np.float64).reshape(-1)
        locations = np.array(locations, dtype=np.int64).reshape(-1)
        horizon = float(horizon)
        if times.shape != locations.shape:
            raise InputError("times and locations must have equal length")
        if not horizon > 0:
            raise InputError(f"horizon must be positive, got {horizon}")
        if times.size:
            if np.any(np.diff(times) < 0):
                i = int(np.flatnonzero(np.diff(times) < 0)[0]) + 1
                raise InputError(f"request {i} arrives before request {i - 1}")
            if times[0] < 0 or times[-1] > horizon or not np.all(np.isfinite(times)):
                raise InputError("arrival times must lie in [0, horizon]")
        if tree is not None:
            if locations.size and (locations.min() < 0 or locations.max() >= tree.n):
                raise InputError("request location is not a vertex of the tree")
            at_root = np.flatnonzero(locations == tree.root)
            if at_root.size:
                raise InputError(f"request {int(at_root[0])} is located at the root")
        self.times = _frozen(times)
        self.locations = _frozen(locations)
        self.horizon = horizon

    def __len__(self) -> int:
        return self.times.shape[0]

    def __iter__(self) -> Iterator[tuple[float, int]]:
        return zip(self.times.tolist(), self.locations.tolist())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RequestSequence)
            and self.horizon == other.horizon
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.locations, other.locations)
        )

    def __repr__(self) -> str:
        return f"RequestSequence(m={len(self)}, horizon={self.horizon:g})"

    def restrict_vertices(self, vertices: Iterable[int]) -> "RequestSequence":
        keep = np.isin(self.locations, np.fromiter(vertices, dtype=np.int64))
        return RequestSequence(self.times[keep], self.locations[keep], self.horizon)

    def restrict_interval(self, start: float, end: float) -> "RequestSequence":
        """Requests in ``[start, end]``, shifted so that ``start`` becomes 0."""
        if not (0 <= start < end <= self.horizon):
            raise InputError(f"interval [{start}, {end}] is not inside [0, {self.horizon}]")
        keep = (self.times >= start) & (self.times <= end)
        return RequestSequence(self.times[keep] - start, self.locations[keep], end - start)

    def prefix(self, horizon: float) -> "RequestSequence":
        """Requests arriving in ``[0, horizon]``, horizon replaced (no shift)."""
        keep = self.times <= horizon
        return RequestSequence(self.times[keep], self.locations[keep], horizon)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "vertex"])
        for t, v in self:
            w.writerow([repr(t), v])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "times": self.times.tolist(), "locations": self.locations.tolist()}

    @classmethod
    def from_dict(cls, d: dict, tree: Tree | None = None) -> "RequestSequence":
        return cls(d["times"], d["locations"], d["horizon"], tree)

    @classmethod
    def from_csv(cls, text: str, horizon: float, tree: Tree | None = None) -> "RequestSequence":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls([float(r["time"]) for r in rows], [int(r["vertex"]) for r in rows], horizon, tree)


def merge_sequences(parts: Sequence[RequestSequence]) -> RequestSequence:
    """Concatenate sequences, shifting each by the total horizon before it."""
    offset = 0.0
    times, locs = [], []
    for p in parts:
        times.append(p.times + offset)
        locs.append(p.locations)
        offset += p.horizon
    if not parts:
        raise InputError("nothing to merge")
    return RequestSequence(np.concatenate(times), np.concatenate(locs), offset)


@dataclass(frozen=True)
class CostBreakdown:
    delay: float
    weight: float

    @property
    def total(self) -> float:
        return self.delay + self.weight

    def to_dict(self) -> dict:
        return {"delay": self.delay, "weight": self.weight, "total": self.total}


class Schedule:
    """Services ``(t(s), R(s))`` over a request sequence.

    ``blind_weights`` optionally records, per service, the weight a blind
    periodic algorithm pays regardless of which requests are pending.
    """

    def __init__(self, times, assignment, blind_weights=None):
        times = np.array(times, dtype=np.float64).reshape(-1)
        assignment = np.array(assignment, dtype=np.int64).reshape(-1)
        if assignment.size and (assignment.min() < 0 or assignment.max() >= times.size):
            raise ScheduleError("assignment references a service that does not exist")
        if blind_weights is not None:
            blind_weights = np.array(blind_weights, dtype=np.float64).reshape(-1)
            if blind_weights.shape != times.shape:
                raise InputError("blind_weights must have one entry per service")
            blind_weights = _frozen(blind_weights)
        self.times = _frozen(times)
        self.assignment = _frozen(assignment)
        self.blind_weights = blind_weights

    @classmethod
    def from_services(cls, services: Iterable[tuple[float, Iterable[int]]], n_requests: int) -> "Schedule":
        """Build from explicit ``(time, request indices)`` pairs.

        Raises ScheduleError on a request served twice, never served, or out of range.
        """
        times = []
        assignment = np.full(n_requests, -1, dtype=np.int64)
        for s, (t, reqs) in enumerate(services):
            times.append(float(t))
            for r in reqs:
                r = int(r)
                if not 0 <= r < n_requests:
                    raise ScheduleError(f"service {s} serves unknown request {r}")
                if assignment[r] >= 0:
                    raise ScheduleError(f"request {r} is served twice (services {assignment[r]} and {s})")
                assignment[r] = s
        missing = np.flatnonzero(assignment < 0)
        if missing.size:
            raise ScheduleError(f"request {int(missing[0])} is never served")
        return cls(times, assignment)

    @property
    def n_services(self) -> int:
        return self.times.shape[0]

    def services(self) -> list[tuple[float, list[int]]]:
        groups: list[list[int]] = [[] for _ in range(self.n_services)]
        for r, s in enumerate(self.assignment.tolist()):
            groups[s].append(r)
        return list(zip(self.times.tolist(), groups))

    def service_times_of_requests(self) -> np.ndarray:
        return self.times[self.assignment]

    def validate(self, sequence: RequestSequence) -> None:
        """Raise ScheduleError unless every request is served once, never early."""
        if self.assignment.shape[0] != len(sequence):
            raise ScheduleError(
                f"schedule covers {self.assignment.shape[0]} requests, sequence has {len(sequence)}"
            )
        early = np.flatnonzero(self.times[self.assignment] < sequence.times)
        if early.size:
            r = int(early[0])
            s = int(self.assignment[r])
            raise ScheduleError(
                f"service {s} at t={self.times[s]!r} precedes arrival of request {r} at t={sequence.times[r]!r}"
            )

    def is_valid(self, sequence: RequestSequence) -> bool:
        try:
            self.validate(sequence)
        except ScheduleError:
            return False
        return True

    def to_dict(self) -> dict:
        d = {"services": [{"time": t, "requests": rs} for t, rs in self.services()]}
        if self.blind_weights is not None:
            d["blind_weights"] = self.blind_weights.tolist()
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def __repr__(self) -> str:
        return f"Schedule(services={self.n_services}, requests={self.assignment.shape[0]})"


def service_weights(schedule: Schedule, tree: Tree, sequence: RequestSequence) -> np.ndarray:
    """Per-service weight of the minimal rooted subtree covering its locations."""
    return kernels.service_weights(
        tree.parent, tree.weight, tree.root, sequence.locations, schedule.assignment, schedule.n_services
    )


def service_delays(schedule: Schedule, sequence: RequestSequence) -> np.ndarray:
    per_request = schedule.times[schedule.assignment] - sequence.times
    return np.bincount(schedule.assignment, weights=per_request, minlength=schedule.n_services)


def schedule_cost(schedule: Schedule, tree: Tree, sequence: RequestSequence, blind: bool = False,
                  validate: bool = True) -> CostBreakdown:
    """Delay plus weight.  ``blind=True`` charges the recorded blind weights instead."""
    if validate:
        schedule.validate(sequence)
    delay = float(np.sum(schedule.times[schedule.assignment] - sequence.times))
    if blind:
        if schedule.blind_weights is None:
            raise InputError("schedule carries no blind weights")
        weight = float(schedule.blind_weights.sum())
    else:
        weight = float(service_weights(schedule, tree, sequence).sum())
    return CostBreakdown(delay=delay, weight=weight)
