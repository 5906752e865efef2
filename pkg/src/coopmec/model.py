"""Core cost model for cooperative edge task offloading.

A system has N user equipments (UEs), each owning one computation task, plus
one edge server co-located with the access point.  Device ids run 0..N where
device 0 is the edge server and device i (i >= 1) is the UE that owns task i.
A task is either executed locally, offloaded to the edge server, offloaded to
a helper UE, or dropped (penalised).

Units: frequencies in CPU cycles/s, data sizes in bits, bandwidth in Hz,
power in watts, time in seconds.

The central quantity is the transmit-power curve

    U(f) = (noise / gain) * (exp(ln2/B * D*f / (T*f - F)) - 1),

the transmit power that makes upload time plus remote compute time at
frequency f meet the deadline exactly.  U is strictly decreasing and strictly
convex on (F/T, inf); every solver in this package leans on that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleAssignment

LN2 = math.log(2.0)

# exp() overflows float64 above ~709; saturate a little earlier and report +inf
EXP_CAP = 700.0

# relative slack accepted when checking hard constraints (float round-off)
CHECK_TOL = 1e-9


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class TaskSpec:
    """One UE's computation task plus its owner's pricing.

    cycles      CPU cycles the task needs (F)
    bits        upload size in bits (D)
    deadline    hard completion deadline in seconds
    penalty     price charged when the task is not accomplished
    power_price price per watt of this UE's power draw
    """

    id: int
    cycles: float
    bits: float
    deadline: float
    penalty: float
    power_price: float = 1.0

    def __post_init__(self):
        if self.id < 1:
            raise ValueError(f"task id must be >= 1, got {self.id}")
        if not (self.cycles > 0 and self.bits > 0 and self.deadline > 0):
            raise ValueError(f"task {self.id}: cycles, bits, deadline must be positive")
        if self.penalty < 0 or self.power_price < 0:
            raise ValueError(f"task {self.id}: penalty and power_price must be >= 0")

    @property
    def f_min(self) -> float:
        """Slowest frequency that could ever meet the deadline (F / T_max)."""
        return self.cycles / self.deadline


@dataclass(frozen=True)
class DeviceProfile:
    """Compute/power capabilities of one device.

    kappa and nu parameterise dynamic CPU power kappa * f**nu; eta is the
    transmit power-amplifier efficiency; p_max is the total power budget
    (ignored for the edge server, which is grid powered); p_cir is the
    always-on circuit power.
    """

    id: int
    f_max: float
    kappa: float
    nu: float
    eta: float
    p_max: float
    p_cir: float
    position: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"device id must be >= 0, got {self.id}")
        if self.f_max <= 0:
            raise ValueError(f"device {self.id}: f_max must be positive")
        if self.kappa < 0 or self.nu < 1:
            raise ValueError(f"device {self.id}: need kappa >= 0 and nu >= 1")
        if not (0 < self.eta <= 1):
            raise ValueError(f"device {self.id}: eta must be in (0, 1]")
        if self.id > 0 and self.p_max - self.p_cir <= 0:
            raise ValueError(f"device {self.id}: p_max must exceed circuit power")

    @property
    def p_m(self) -> float:
        """Power budget left for compute + transmit after circuit draw."""
        return self.p_max - self.p_cir


@dataclass(frozen=True)
class Scenario:
    """A fully materialised problem instance.

    gains is the (N, N+1) linear channel-gain matrix: row i-1 holds UE i's
    gains towards devices 0..N.  The diagonal-like entry gains[i-1, i]
    (a UE towards itself) is never used.
    """

    tasks: tuple[TaskSpec, ...]
    devices: tuple[DeviceProfile, ...]
    gains: np.ndarray
    bandwidth: float
    noise_w: float
    seed: int

    @property
    def n(self) -> int:
        return len(self.tasks)

    def task(self, task_id: int) -> TaskSpec:
        return self.tasks[task_id - 1]

    def device(self, device_id: int) -> DeviceProfile:
        return self.devices[device_id]

    def gain(self, task_id: int, device_id: int) -> float:
        return float(self.gains[task_id - 1, device_id])

    def host_price(self, device_id: int) -> float:
        """Power price of a hosting device; edge-server compute is free."""
        return 0.0 if device_id == 0 else self.tasks[device_id - 1].power_price


# ---------------------------------------------------------------------------
# transmit-power curve


def required_rate(task: TaskSpec, f: float) -> float:
    """Upload rate (bit/s) making upload + compute at frequency f hit the deadline."""
    denom = task.deadline * f - task.cycles
    if denom <= 0:
        raise DomainError(f"task {task.id}: frequency {f:g} at or below f_min {task.f_min:g}")
    return task.bits * f / denom

def power_for_rate(gain: float, bandwidth: float, noise_w: float, rate: float) -> float:
    """Transmit power sustaining `rate` on an AWGN link of the given gain."""
    x = LN2 * rate / bandwidth
    if x > EXP_CAP:
        return math.inf
    return noise_w / gain * math.expm1(x)

def offload_power(task: TaskSpec, gain: float, bandwidth: float, noise_w: float, f: float) -> float:
    """U(f): transmit power that meets the deadline when the host runs at f.

    Returns +inf when the required power saturates the floating-point range
    (callers treat that as an infeasible operating point).
    """
    denom = task.deadline * f - task.cycles
    if denom <= 0:
        raise DomainError(f"task {task.id}: frequency {f:g} at or below f_min {task.f_min:g}")
    x = LN2 / bandwidth * task.bits * f / denom
    if x > EXP_CAP:
        return math.inf
    return noise_w / gain * math.expm1(x)

def offload_power_derivs(task: TaskSpec, gain: float, bandwidth: float, noise_w: float,
                         f: float) -> tuple[float, float]:
    """First and second derivative of U at f; (-inf, +inf) once saturated."""
    F, D, T = task.cycles, task.bits, task.deadline
    denom = T * f - F
    if denom <= 0:
        raise DomainError(f"task {task.id}: frequency {f:g} at or below f_min {task.f_min:g}")
    x = LN2 / bandwidth * D * f / denom
    if x > EXP_CAP:
        return -math.inf, math.inf
    du = noise_w * LN2 / (bandwidth * gain) * math.exp(x) * (-D * F / denom**2)
    d2u = -du / denom * (LN2 * D * F / (bandwidth * denom) + 2.0 * T)
    return du, d2u


def offload_power_vec(cycles, bits, deadline, gain, bandwidth, noise_w, f):
    """Vectorised U(f); +inf where saturated, +inf where f <= f_min."""
    denom = deadline * f - cycles
    bad = denom <= 0
    denom = np.where(bad, 1.0, denom)
    x = LN2 / bandwidth * bits * f / denom
    out = np.where(x > EXP_CAP, np.inf, noise_w / gain * np.expm1(np.minimum(x, EXP_CAP)))
    return np.where(bad, np.inf, out)

def offload_power_derivs_vec(cycles, bits, deadline, gain, bandwidth, noise_w, f):
    """Vectorised (U', U''); saturates to (-inf, +inf)."""
    denom = deadline * f - cycles
    bad = denom <= 0
    denom = np.where(bad, 1.0, denom)
    x = LN2 / bandwidth * bits * f / denom
    sat = (x > EXP_CAP) | bad
    expx = np.exp(np.minimum(x, EXP_CAP))
    du = noise_w * LN2 / (bandwidth * gain) * expx * (-bits * cycles / denom**2)
    d2u = -du / denom * (LN2 * bits * cycles / (bandwidth * denom) + 2.0 * deadline)
    return np.where(sat, -np.inf, du), np.where(sat, np.inf, d2u)


# ---------------------------------------------------------------------------
# stationary-point solver for  U'(f) + power_coeff * f**(nu-1) + price_offset = 0
#
# The left side is strictly increasing on (f_min, inf) and tends to -inf at
# f_min, so there is at most one root; when the expression stays negative the
# associated objective keeps decreasing and the solution escapes to +inf.


def _balance_terms(task, gain, bandwidth, noise_w, nu, power_coeff, price_offset, f):
    du, d2u = offload_power_derivs(task, gain, bandwidth, noise_w, f)
    g = du + power_coeff * f ** (nu - 1.0) + price_offset
    gp = d2u + power_coeff * (nu - 1.0) * f ** (nu - 2.0)
    scale = abs(du) + power_coeff * f ** (nu - 1.0) + abs(price_offset)
    return g, gp, scale


def balance_root(task, gain, bandwidth, noise_w, nu, power_coeff, price_offset,
                 rtol: float = 1e-9) -> float:
    """Unique root of U'(f) + power_coeff*f**(nu-1) + price_offset on (f_min, inf).

    Returns +inf when the expression never crosses zero.  Safeguarded Newton:
    a bracketing interval is maintained and any wild Newton step falls back to
    a geometric bisection, so the residual target |g| <= rtol * scale is met
    for any admissible parameters.
    """
    f_lo = task.f_min
    a = f_lo * (1.0 + 1e-9)
    b = max(2.0 * f_lo, a * 2.0)
    g_b, _, _ = _balance_terms(task, gain, bandwidth, noise_w, nu, power_coeff, price_offset, b)
    grow = 0
    while g_b <= 0.0:
        b *= 8.0
        grow += 1
        if grow > 40:                       # ~1e36 * f_min: no crossing
            return math.inf
        g_b, _, _ = _balance_terms(task, gain, bandwidth, noise_w, nu, power_coeff, price_offset, b)
    return _newton_bisect(task, gain, bandwidth, noise_w, nu, power_coeff, price_offset,
                          a, b, rtol)


def balance_root_clamped(task, gain, bandwidth, noise_w, nu, power_coeff, price_offset,
                         lo: float, hi: float, rtol: float = 1e-9) -> float:
    """Root of the same expression clamped into [lo, hi] (monotone => minimiser)."""
    if hi < lo:
        raise ValueError(f"empty interval [{lo:g}, {hi:g}]")
    g_lo, _, _ = _balance_terms(task, gain, bandwidth, noise_w, nu, power_coeff, price_offset, lo)
    if g_lo >= 0.0:
        return lo
    g_hi, _, _ = _balance_terms(task, gain, bandwidth, noise_w, nu, power_coeff, price_offset, hi)
    if g_hi <= 0.0:
        return hi
    return _newton_bisect(task, gain, bandwidth, noise_w, nu, power_coeff, price_offset,
                          lo, hi, rtol)


def _newton_bisect(task, gain, bandwidth, noise_w, nu, power_coeff, price_offset,
                   a, b, rtol):
    # invariant: g(a) < 0 < g(b)
    x = math.sqrt(a * b)
    for _ in range(200):
        g, gp, scale = _balance_terms(task, gain, bandwidth, noise_w, nu,
                                      power_coeff, price_offset, x)
        if math.isfinite(g) and abs(g) <= rtol * max(scale, 1e-300):
            return x
        if math.isfinite(g):
            if g < 0.0:
                a = x
            else:
                b = x
        else:
            a = x                           # saturated side is the negative side
        step_ok = math.isfinite(g) and math.isfinite(gp) and gp > 0.0
        if step_ok:
            x_new = x - g / gp
            step_ok = a < x_new < b
        if not step_ok:
            x_new = math.sqrt(a * b)
        x = x_new
        if (b - a) <= 1e-13 * b:
            return x
    return x


# ---------------------------------------------------------------------------
# feasibility bounds


@dataclass
class FeasibilityBounds:
    """Static per-pair frequency windows and the infeasible-device sets.

    All arrays are (N, N+1): row i-1 belongs to task i, column j to device j.
    f_lower is the slowest admissible host frequency (delay side), f_upper the
    fastest the host can afford (capacity and power side); a pair is blocked
    when the window is empty or the deadline cannot be met at any power.
    """

    f_upper: np.ndarray
    f_lower: np.ndarray
    rate_cap: np.ndarray
    blocked: np.ndarray

    def infeasible_devices(self, task_id: int) -> set[int]:
        return set(np.flatnonzero(self.blocked[task_id - 1]).tolist())


def device_speed_cap(dev: DeviceProfile) -> float:
    """Fastest frequency a device can host: capacity and CPU power budget."""
    if dev.id == 0 or dev.kappa == 0.0:
        return dev.f_max
    return min(dev.f_max, (dev.p_m / dev.kappa) ** (1.0 / dev.nu))


def feasibility_bounds(sc: Scenario, residual_power=None) -> FeasibilityBounds:
    """Static feasibility windows; `residual_power` optionally overrides each
    UE's transmit budget (used by solvers that track commitments)."""
    n = sc.n
    cap = np.array([device_speed_cap(d) for d in sc.devices])
    f_upper = np.tile(cap, (n, 1))

    cycles = np.array([t.cycles for t in sc.tasks])[:, None]
    bits = np.array([t.bits for t in sc.tasks])[:, None]
    deadline = np.array([t.deadline for t in sc.tasks])[:, None]
    eta = np.array([sc.devices[i + 1].eta for i in range(n)])[:, None]
    if residual_power is None:
        p_m = np.array([sc.devices[i + 1].p_m for i in range(n)])[:, None]
    else:
        p_m = np.asarray(residual_power, dtype=float)[:, None]

    snr = sc.gains * eta * np.maximum(p_m, 0.0) / sc.noise_w
    rate_cap = sc.bandwidth * np.log1p(snr) / LN2
    own = np.arange(1, n + 1)
    rows = np.arange(n)
    rate_cap[rows, own] = np.inf         # local execution has no radio link

    with np.errstate(divide="ignore", invalid="ignore"):
        slack = deadline - bits / rate_cap
        f_lower = np.where(slack > 0, cycles / np.where(slack > 0, slack, 1.0), np.inf)
    f_lower[rows, own] = (cycles / deadline)[:, 0]

    blocked = f_lower >= f_upper
    remote = np.ones_like(blocked)
    remote[rows, own] = False
    blocked |= remote.astype(bool) & (deadline * rate_cap <= bits)
    return FeasibilityBounds(f_upper=f_upper, f_lower=f_lower, rate_cap=rate_cap,
                             blocked=blocked)


# ---------------------------------------------------------------------------
# assignments, costs, constraint validation


@dataclass(frozen=True)
class CostBreakdown:
    """System cost split by source; `reduced` drops the constant circuit and
    full-penalty terms (the part the solvers actually optimise)."""

    transmit: float
    compute: float
    circuit: float
    penalty: float
    total: float
    reduced: float


@dataclass(frozen=True)
class Assignment:
    """Final offloading decision: task id -> device id, host frequencies and
    transmit powers (offloaded tasks only; local tasks transmit nothing)."""

    target: dict[int, int]
    f: dict[int, float]
    p_t: dict[int, float]
    cost: CostBreakdown

    @property
    def accomplished(self) -> int:
        return len(self.target)


@dataclass(frozen=True)
class Violation:
    constraint: str
    task: int | None
    device: int | None
    amount: float

    def __str__(self):
        where = f"task {self.task}" if self.task is not None else f"device {self.device}"
        if self.task is not None and self.device is not None:
            where = f"task {self.task}@device {self.device}"
        return f"{self.constraint}[{where}] excess {self.amount:.3e}"


def assignment_cost(sc: Scenario, target, freqs) -> tuple[CostBreakdown, dict[int, float]]:
    """Cost breakdown of a (target, frequency) choice; also returns the
    delay-tight transmit powers implied for the offloaded tasks."""
    transmit = 0.0
    compute = 0.0
    p_t: dict[int, float] = {}
    for task_id in sorted(target):
        dev = target[task_id]
        task = sc.task(task_id)
        f = freqs[task_id]
        if dev != task.id:
            power = offload_power(task, sc.gain(task_id, dev), sc.bandwidth, sc.noise_w, f)
            p_t[task_id] = power
            transmit += task.power_price / sc.device(task.id).eta * power
        compute += sc.host_price(dev) * sc.device(dev).kappa * f ** sc.device(dev).nu
    circuit = sum(t.power_price * sc.device(t.id).p_cir for t in sc.tasks)
    penalty_all = sum(t.penalty for t in sc.tasks)
    saved = sum(sc.task(i).penalty for i in target)
    total = transmit + compute + circuit + (penalty_all - saved)
    reduced = transmit + compute - saved
    return CostBreakdown(transmit=transmit, compute=compute, circuit=circuit,
                         penalty=penalty_all - saved, total=total, reduced=reduced), p_t


def validate_constraints(sc: Scenario, asg: Assignment) -> list[Violation]:
    """Check decision structure, deadlines (C3), host capacity (C4) and UE
    power budgets (C5).  Returns one Violation per breach; empty means clean."""
    out: list[Violation] = []
    n = sc.n
    for task_id, dev in asg.target.items():
        if not (1 <= task_id <= n) or not (0 <= dev <= n):
            out.append(Violation("C2", task_id, dev, math.inf))
            continue
        if task_id not in asg.f:
            out.append(Violation("C1", task_id, dev, math.inf))
        if dev != task_id and task_id not in asg.p_t:
            out.append(Violation("C1", task_id, dev, math.inf))
    for task_id in asg.f:
        if task_id not in asg.target:
            out.append(Violation("C1", task_id, None, math.inf))

    # C3: deadline per assigned task, from the stored frequency and power
    for task_id, dev in asg.target.items():
        task = sc.task(task_id)
        f = asg.f.get(task_id)
        if f is None or f <= 0:
            continue
        delay = task.cycles / f
        if dev != task_id:
            p = asg.p_t.get(task_id, 0.0)
            snr = p * sc.gain(task_id, dev) / sc.noise_w
            rate = sc.bandwidth * math.log1p(snr) / LN2 if snr > 0 else 0.0
            delay += task.bits / rate if rate > 0 else math.inf
        if delay > task.deadline * (1.0 + CHECK_TOL):
            out.append(Violation("C3", task_id, dev, delay - task.deadline))

    # C4: per-device frequency capacity
    load = {j: 0.0 for j in range(n + 1)}
    for task_id, dev in asg.target.items():
        load[dev] += asg.f.get(task_id, 0.0)
    for j, used in load.items():
        cap = sc.device(j).f_max
        if used > cap * (1.0 + CHECK_TOL):
            out.append(Violation("C4", None, j, used - cap))

    # C5: per-UE total power (hosted compute + own transmit + circuit)
    for i in range(1, n + 1):
        dev = sc.device(i)
        draw = dev.p_cir
        draw += dev.kappa * sum(asg.f.get(k, 0.0) ** dev.nu
                                for k, tgt in asg.target.items() if tgt == i)
        if asg.target.get(i) not in (None, i):
            draw += asg.p_t.get(i, 0.0) / dev.eta
        if draw > dev.p_max * (1.0 + CHECK_TOL):
            out.append(Violation("C5", None, i, draw - dev.p_max))
    return out


def make_assignment(sc: Scenario, target, freqs) -> Assignment:
    """Assemble an Assignment (recomputing delay-tight transmit powers), then
    validate it; raises InfeasibleAssignment on any violation."""
    cost, p_t = assignment_cost(sc, target, freqs)
    asg = Assignment(target=dict(sorted(target.items())),
                     f={k: freqs[k] for k in sorted(target)},
                     p_t=p_t, cost=cost)
    violations = validate_constraints(sc, asg)
    if violations:
        raise InfeasibleAssignment(violations)
    return asg


def evaluate_assignment(sc: Scenario, asg: Assignment) -> CostBreakdown:
    """Recompute the cost breakdown of an existing assignment after validating it."""
    violations = validate_constraints(sc, asg)
    if violations:
        raise InfeasibleAssignment(violations)
    cost, _ = assignment_cost(sc, asg.target, asg.f)
    return cost


def ue_total_power(sc: Scenario, asg: Assignment) -> float:
    """Total watts drawn by all UEs (compute + transmit + circuit)."""
    total = 0.0
    for i in range(1, sc.n + 1):
        dev = sc.device(i)
        total += dev.p_cir
        total += dev.kappa * sum(asg.f.get(k, 0.0) ** dev.nu
                                 for k, tgt in asg.target.items() if tgt == i)
        if asg.target.get(i) not in (None, i):
            total += asg.p_t.get(i, 0.0) / dev.eta
    return total
