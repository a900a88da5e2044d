"""Time integration of (h I + L) u_t = h (f(u) - B(u)) with an energy-identity monitor.

``B`` is the mass-scaled gradient of the modular (see :func:`magnetic_residual`),
``L`` the fractional stiffness and ``h`` the lumped nodal mass.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import _kernels
from .functionals import EnergyReport, ProblemParams, _report_from_values
from .grid import Field, KernelTable, assemble_fractional_stiffness

__all__ = [
    "OverflowSignal",
    "StepRejected",
    "Stepper",
    "TraceRecord",
    "RunResult",
    "magnetic_residual",
    "rho_gradient",
    "step",
    "integrate",
    "energy_monitor",
    "differential_residuals",
    "write_trace_csv",
    "read_trace_csv",
    "TRACE_COLUMNS",
]

TRACE_COLUMNS = ("t", "J", "I", "l2h", "lp1", "ut_l2h", "diss", "F", "drift")


class OverflowSignal(ArithmeticError):
    """Non-finite state; consumed by the blowup logic."""


class StepRejected(RuntimeError):
    pass


def rho_gradient(values, params: ProblemParams, table: KernelTable) -> np.ndarray:
    """Gradient of the modular w.r.t. (Re u_k, Im u_k), packed as a complex vector."""
    ue = np.concatenate([np.asarray(values, dtype=complex), [0.0]])
    D = _kernels.pair_quotients(ue, table.I, table.J, table.phase, table.rs)
    a = np.abs(D)
    nz = a > 0
    ratio = np.zeros_like(a)
    ratio[nz] = params.G.g(a[nz]) / a[nz]
    coef = 2.0 * table.w * ratio * D
    return _kernels.scatter_pairs(coef, table.I, table.J, table.conj_phase, table.rs, table.domain.M)


def magnetic_residual(u: Field, params: ProblemParams, table: KernelTable) -> Field:
    table.check_field(u)
    return Field(rho_gradient(u.values, params, table) / table.domain.h, u.domain)


def _rhs(values, params, table):
    """h (f(u) - B(u)) = -grad J."""
    h = table.domain.h
    f = np.abs(values) ** (params.p - 1) * values
    return h * f - rho_gradient(values, params, table)


@dataclass
class Stepper:
    params: ProblemParams
    table: KernelTable
    dt: float
    scheme: str = "explicit"
    picard_tol: float = 1e-10
    picard_max_iters: int = 50
    t: float = 0.0
    drift: float = 0.0
    L: np.ndarray = field(init=False, repr=False)
    linear_solve: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.scheme not in ("explicit", "picard"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        self.L = assemble_fractional_stiffness(self.table.domain, self.table)
        A = self.table.domain.h * np.eye(self.table.domain.M) + self.L
        self.linear_solve = cho_factor(A)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve(self.linear_solve, rhs)

    def norm2(self, v: np.ndarray) -> float:
        """||v||^2_{s,2,0} = h |v|^2 + v^H L v."""
        return float(self.table.domain.h * np.vdot(v, v).real + np.vdot(v, self.L @ v).real)


def _velocity(stepper: Stepper, values) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        rhs = _rhs(values, stepper.params, stepper.table)
    if not np.all(np.isfinite(rhs)):
        raise OverflowSignal("non-finite right-hand side")
    return stepper.solve(rhs)


def _raw_step(stepper: Stepper, values, dt):
    """One step of size dt; returns (new values, velocity used)."""
    if stepper.scheme == "explicit":
        v = _velocity(stepper, values)
    else:
        v = _velocity(stepper, values)
        vn = np.linalg.norm(v)
        for _ in range(stepper.picard_max_iters):
            v_new = _velocity(stepper, values + dt * v)
            if not np.all(np.isfinite(v_new)):
                raise OverflowSignal("non-finite Picard iterate")
            diff = np.linalg.norm(v_new - v)
            v, vn = v_new, np.linalg.norm(v_new)
            if diff <= stepper.picard_tol * max(vn, 1e-300):
                break
        else:
            raise StepRejected("Picard iteration did not converge")
    with np.errstate(over="ignore", invalid="ignore"):
        new = values + dt * v
    if not (np.all(np.isfinite(new)) and np.all(np.isfinite(v))):
        raise OverflowSignal("non-finite state")
    return new, v


def step(state: Stepper, u: Field, params: ProblemParams, table: KernelTable) -> Field:
    """Advance by ``state.dt`` without any rejection logic."""
    table.check_field(u)
    if params is not state.params or table is not state.table:
        raise ValueError("stepper was built for another problem")
    new, _ = _raw_step(state, u.values, state.dt)
    state.t += state.dt
    return Field(new, u.domain)


@dataclass
class TraceRecord:
    t: float
    J: float
    I: float
    l2h: float
    lp1: float
    ut_l2h: float
    diss: float
    F: float = float("nan")
    drift: float = 0.0
    # in-memory only
    pairing: float = field(default=float("nan"), repr=False)
    seminorm2: float = field(default=float("nan"), repr=False)
    dual_residual: float = field(default=float("nan"), repr=False)


@dataclass
class RunResult:
    trace: list
    status: str
    u_final: Field
    snapshots: list = field(default_factory=list)
    message: str = ""


def _record(t, rep: EnergyReport, v, grad, stepper: Stepper, diss, J0) -> TraceRecord:
    h = stepper.table.domain.h
    return TraceRecord(
        t=t,
        J=rep.J,
        I=rep.I,
        l2h=rep.l2h,
        lp1=rep.lp1,
        ut_l2h=stepper.norm2(v),
        diss=diss,
        drift=abs(diss + rep.J - J0) / max(abs(J0), 1.0),
        pairing=rep.pairing,
        seminorm2=rep.seminorm2,
        dual_residual=math.sqrt(h * float(np.sum(np.abs(grad / h) ** 2))),
    )


def _growing(trace) -> bool:
    """l2h increasing with positive second difference over the last records, or up 100x."""
    l2h = [r.l2h for r in trace]
    if l2h[-1] > 100 * max(l2h[0], 1e-300):
        return True
    if len(l2h) < 3:
        return False
    a, b, c = l2h[-3:]
    return c > b > a and (c - b) > (b - a)


def integrate(
    u0: Field,
    stepper: Stepper,
    t_end: float,
    record_every: int = 1,
    snapshot_every: int | None = None,
    blowup_l2h: float = 1e6,
    max_halvings: int = 10,
    spike_factor: float = 10.0,
    max_rel_change: float = 0.05,
) -> RunResult:
    """Run to ``t_end``; stop early on blowup or repeated step failure.

    Each macro step of size ``dt`` is split into 2^k substeps (k <= max_halvings)
    when the state turns non-finite, a substep moves u by more than
    ``max_rel_change`` in relative l2 norm, or the per-step energy defect spikes
    above ``spike_factor`` times the running median.
    """
    params, table = stepper.params, stepper.table
    table.check_field(u0)
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    u = u0.values.copy()
    dt = stepper.dt
    n_steps = int(round(t_end / dt))
    if n_steps < 1:
        raise ValueError("t_end shorter than one step")

    rep = _report_from_values(u, params, table, with_norm=False)
    J0 = rep.J
    diss = 0.0
    grad = -_rhs(u, params, table)
    v = stepper.solve(-grad)
    trace = [_record(0.0, rep, v, grad, stepper, diss, J0)]
    snaps = [(0.0, u.copy())] if snapshot_every else []
    defects: list[float] = []
    status, message = "completed", ""
    J_prev = J0

    for n in range(1, n_steps + 1):
        accepted = False
        for k in range(max_halvings + 1):
            sub = 2**k
            h_dt = dt / sub
            try:
                w = u
                dsum = 0.0
                for _ in range(sub):
                    w_next, vv = _raw_step(stepper, w, h_dt)
                    if np.linalg.norm(w_next - w) > max_rel_change * max(np.linalg.norm(w), 1e-300):
                        raise StepRejected("relative change too large")
                    w = w_next
                    dsum += h_dt * stepper.norm2(vv)
            except (OverflowSignal, StepRejected) as exc:
                message = str(exc)
                continue
            rep_new = _report_from_values(w, params, table, with_norm=False)
            if not math.isfinite(rep_new.l2h):
                message = "non-finite energy"
                continue
            # energy defect relative to the dissipated amount: scale-free, O(dt)
            gap = abs(rep_new.J - J_prev + dsum)
            defect = gap / max(dsum, 1e-300)
            # a gap at the roundoff level of J is never a spike (matters near equilibria)
            if len(defects) >= 10 and gap > 1e-12 * max(abs(J_prev), 1.0):
                tail = defects[-50:]
                if defect > spike_factor * max(float(np.median(tail)), 1e-8):
                    message = "energy defect spike"
                    continue
            accepted = True
            break
        if not accepted:
            if trace[-1].t < stepper.t:
                grad = -_rhs(u, params, table)
                trace.append(_record(stepper.t, rep, stepper.solve(-grad), grad, stepper, diss, J0))
            status = "blowup-detected" if _growing(trace) else "step-failure"
            break
        defects.append(defect)
        u, diss, J_prev, rep = w, diss + dsum, rep_new.J, rep_new
        t = n * dt
        stepper.t = t
        if n % record_every == 0 or n == n_steps or rep.l2h > blowup_l2h:
            grad = -_rhs(u, params, table)
            v = stepper.solve(-grad)
            trace.append(_record(t, rep, v, grad, stepper, diss, J0))
            stepper.drift = trace[-1].drift
        if snapshot_every and n % snapshot_every == 0:
            snaps.append((t, u.copy()))
        if rep.l2h > blowup_l2h:
            status, message = "blowup-detected", f"l2h exceeded {blowup_l2h:g}"
            break
    return RunResult(trace=trace, status=status, u_final=Field(u, u0.domain), snapshots=snaps, message=message)


def energy_monitor(trace) -> float:
    """Worst relative defect of diss(t) + J(t) = J(0) over the trace."""
    if len(trace) < 2:
        raise ValueError("need at least two records")
    J0 = trace[0].J
    return max(abs(r.diss + r.J - J0) for r in trace) / max(abs(J0), 1.0)


def differential_residuals(trace) -> dict:
    """Trapezoid checks of dJ/dt = -||u_t||^2 and (1/2) d/dt ||u||^2 = -I.

    Each residual is normalised by the largest magnitude of its right-hand side.
    """
    if len(trace) < 2:
        raise ValueError("need at least two records")
    t = np.array([r.t for r in trace])
    J = np.array([r.J for r in trace])
    ut = np.array([r.ut_l2h for r in trace])
    l2h = np.array([r.l2h for r in trace])
    I = np.array([r.I for r in trace])
    dt = np.diff(t)
    rJ = np.diff(J) / dt + 0.5 * (ut[1:] + ut[:-1])
    rL = 0.5 * np.diff(l2h) / dt + 0.5 * (I[1:] + I[:-1])
    return {
        "dJ": float(np.max(np.abs(rJ)) / max(np.max(ut), 1e-300)),
        "dl2h": float(np.max(np.abs(rL)) / max(np.max(np.abs(I)), 1e-300)),
    }


def write_trace_csv(path, trace) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(TRACE_COLUMNS)
        for r in trace:
            row = [r.t, r.J, r.I, r.l2h, r.lp1, r.ut_l2h, r.diss, r.F, r.drift]
            wr.writerow([repr(float(x)) for x in row])


def read_trace_csv(path) -> list[TraceRecord]:
    with Path(path).open(encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = tuple(next(rd))
        if header != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        out = []
        for row in rd:
            vals = dict(zip(TRACE_COLUMNS, map(float, row)))
            out.append(
                TraceRecord(
                    t=vals["t"], J=vals["J"], I=vals["I"], l2h=vals["l2h"], lp1=vals["lp1"],
                    ut_l2h=vals["ut_l2h"], diss=vals["diss"], F=vals["F"], drift=vals["drift"],
                    pairing=vals["I"] + vals["lp1"],
                )
            )
    return out
