"""Quasi-static crack growth under a proportional load program."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..assembly import Discretization, Model
from ..solve import FieldSolution, IndefiniteSystemWarning, SingularSystemError, postprocess, solve_system
from .criteria import UnsupportedConfigurationError, ber_values, hoop_tractions, propagate_max_hoop
from .state import CrackState, release_segment

CRITERIA = ("max_hoop", "hoop_initiation", "ber_initiation")


@dataclass(frozen=True)
class CriterionSpec:
    """Crack criterion and its critical value.

    ``max_hoop`` advances every tip by its most loaded segment each step;
    with a threshold it only does so when that traction exceeds it.  The
    initiation criteria release every uncracked segment whose normal
    traction (``hoop_initiation``) or absolute bonding energy rate
    (``ber_initiation``) exceeds the threshold.
    """

    kind: str
    threshold: float | None = None

    def __post_init__(self):
        if self.kind not in CRITERIA:
            raise ValueError(f"unknown criterion {self.kind!r}; choose from {CRITERIA}")
        if self.kind != "max_hoop" and self.threshold is None:
            object.__setattr__(self, "threshold", 1.0)


@dataclass(frozen=True)
class LoadProgram:
    """Proportional load factors; a linear ramp up to ``peak`` by default."""

    n_steps: int = 10
    peak: float = 1.0
    factors: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.factors is not None:
            object.__setattr__(self, "factors", tuple(float(f) for f in self.factors))
            object.__setattr__(self, "n_steps", len(self.factors))
        if self.n_steps < 1:
            raise ValueError("load program needs at least one step")

    def __call__(self, step: int) -> float:
        """Load factor of 1-based ``step``."""
        if self.factors is not None:
            return self.factors[step - 1]
        return self.peak * step / self.n_steps

    def __iter__(self):
        return (self(k) for k in range(1, self.n_steps + 1))


@dataclass
class StepRecord:
    """Releases of one load step; ``rounds`` groups them by re-solve round."""

    step: int
    load: float
    released: list[int]
    values: list[float]
    solves: int
    energy: float
    rounds: list[list[int]] = field(default_factory=list)


@dataclass(frozen=True)
class DisconnectionReport:
    step: int
    load: float
    dof: int
    message: str


@dataclass
class DriveResult:
    state: CrackState
    steps: list[StepRecord]
    solutions: list[FieldSolution] = field(default_factory=list)
    disconnection: DisconnectionReport | None = None
    arrested: bool = False

    @property
    def n_released(self) -> int:
        return sum(len(s.released) for s in self.steps)


def criterion_values(solution: FieldSolution, eta: float, segments: Sequence[int], kind: str) -> np.ndarray:
    """Criterion values driving releases on the given uncracked segments."""
    segs = np.asarray(list(segments), dtype=np.int64)
    if kind == "ber_initiation":
        return np.abs(ber_values(solution, eta, segs))
    return hoop_tractions(solution, segs)


def _solve(disc: Discretization, load: float) -> FieldSolution:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IndefiniteSystemWarning)
        q = solve_system(disc.system(load))
    return postprocess(q, disc)


def quasi_static_drive(model: Model | Discretization, program: LoadProgram | Sequence[float],
                       criterion: CriterionSpec | str, max_steps: int | None = None,
                       max_inner: int = 50, keep_solutions: bool = False,
                       on_step: Callable[[StepRecord, FieldSolution], None] | None = None,
                       **disc_options) -> DriveResult:
    """Step through the load program, releasing segments per the criterion.

    Initiation criteria re-solve at the same load after each round of
    releases until no uncracked segment exceeds the threshold (or
    ``max_inner`` rounds pass); ``max_hoop`` advances each tip once per
    step.  A singular system after a release ends the run with a
    disconnection report instead of raising.
    """
    disc = model if isinstance(model, Discretization) else Discretization(model, **disc_options)
    if isinstance(criterion, str):
        criterion = CriterionSpec(criterion)
    if not isinstance(program, LoadProgram):
        program = LoadProgram(factors=tuple(program))
    if criterion.kind == "ber_initiation" and disc.order != 1:
        raise UnsupportedConfigurationError("the bonding energy rate criterion needs linear trial functions")
    state = CrackState.from_discretization(disc)
    part = disc.partition
    n_steps = program.n_steps if max_steps is None else min(max_steps, program.n_steps)
    result = DriveResult(state, [])
    for step in range(1, n_steps + 1):
        load = program(step)
        rec = StepRecord(step, load, [], [], 0, 0.0)
        sol = None
        for _ in range(max_inner):
            try:
                sol = _solve(disc, load)
            except SingularSystemError as exc:
                result.disconnection = DisconnectionReport(step, load, exc.dof, str(exc))
                break
            rec.solves += 1
            rec.energy = sol.energy
            if criterion.kind == "max_hoop":
                picks = {}
                for tip in state.tips:
                    s = propagate_max_hoop(state, sol, tip)
                    if s is None:
                        continue
                    v = float(hoop_tractions(sol, [s])[0])
                    if criterion.threshold is None or v > criterion.threshold:
                        picks.setdefault(s, v)
                if not picks:
                    result.arrested = not state.tips or criterion.threshold is None
                    break
                chosen = sorted(picks)
                vals = [picks[s] for s in chosen]
            else:
                cand = np.array([s for s in range(part.n_segments) if s not in state.released], dtype=np.int64)
                vals_all = criterion_values(sol, disc.eta, cand, criterion.kind)
                hit = np.flatnonzero(vals_all > criterion.threshold)
                chosen = cand[hit].tolist()
                vals = vals_all[hit].tolist()
                if not chosen:
                    break
            release_segment(state, disc, chosen)
            for s, v in zip(chosen, vals):
                state.record(step, s, v, load, criterion.kind)
            rec.released.extend(int(s) for s in chosen)
            rec.rounds.append([int(s) for s in chosen])
            rec.values.extend(float(v) for v in vals)
            if criterion.kind == "max_hoop":
                # one advance per tip per step; refresh the fields for output
                try:
                    sol = _solve(disc, load)
                    rec.solves += 1
                except SingularSystemError as exc:
                    result.disconnection = DisconnectionReport(step, load, exc.dof, str(exc))
                break
        result.steps.append(rec)
        if sol is not None:
            if keep_solutions:
                result.solutions.append(sol)
            if on_step is not None:
                on_step(rec, sol)
        if result.disconnection is not None or result.arrested:
            break
    return result


def crack_paths(state: CrackState) -> list[np.ndarray]:
    """Released segments chained into polylines (vertex coordinates)."""
    part = state.partition
    verts, v0, v1 = part.vertex_table
    adj: dict[int, list[tuple[int, int]]] = {}
    for s in sorted(state.released):
        a, b = int(v0[s]), int(v1[s])
        adj.setdefault(a, []).append((b, s))
        adj.setdefault(b, []).append((a, s))
    used: set[int] = set()
    paths = []
    # start from chain ends first, then close any remaining loops
    starts = sorted(v for v, nb in adj.items() if len(nb) != 2) + sorted(adj)
    for v in starts:
        for w, s in adj[v]:
            if s in used:
                continue
            chain = [v]
            cur, seg = w, s
            while True:
                used.add(seg)
                chain.append(cur)
                nxt = [(x, t) for x, t in adj[cur] if t not in used]
                if len(adj[cur]) != 2 or not nxt:
                    break
                cur, seg = nxt[0]
            paths.append(verts[chain])
    return paths


def write_history_csv(path, state: CrackState) -> None:
    """step, segment, x0, y0, x1, y1, value, load, criterion per release."""
    part = state.partition
    with open(path, "w", newline="") as fh:
        fh.write("step,segment,x0,y0,x1,y1,value,load,criterion\n")
        for h in state.history:
            p0, p1 = part.seg_p0[h.segment], part.seg_p1[h.segment]
            fh.write(f"{h.step},{h.segment},{p0[0]:.17g},{p0[1]:.17g},{p1[0]:.17g},{p1[1]:.17g},"
                     f"{h.value:.17g},{h.load:.17g},{h.criterion}\n")


def write_polylines(path, state: CrackState) -> None:
    """One crack path per block: ``# path k`` then ``x y`` lines, blank line between blocks."""
    with open(path, "w") as fh:
        for k, poly in enumerate(crack_paths(state)):
            fh.write(f"# path {k}\n")
            for x, y in poly:
                fh.write(f"{x:.17g} {y:.17g}\n")
            fh.write("\n")
