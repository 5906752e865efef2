"""Sequential cooperative matching heuristic.

Tasks that can run locally do so at their slowest admissible frequency.  The
remaining tasks are matched one at a time: every unmatched task ranks the
devices that can still fit it (cheapest marginal cost first), an ordering
criterion picks which task commits next, and all lists are rebuilt because a
commitment shrinks the chosen host's residual frequency/power and, for an
offloaded task, its owner's transmit budget.  Leftover edge-server capacity
is finally redistributed over the tasks it hosts to cut their upload power.

Two ordering criteria are provided: "maxtask" favours the task with the
fewest remaining options (ties by cheapest head entry), "minpw" always
commits the globally cheapest head entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasiblePair, UnknownAlgorithm
from .model import (LN2, Assignment, Scenario, assignment_cost, balance_root_clamped,
                    feasibility_bounds, make_assignment, offload_power)

CRITERIA = ("maxtask", "minpw")


@dataclass(frozen=True)
class PrefEntry:
    device: int
    f: float
    psi: float


@dataclass(frozen=True)
class PreferenceList:
    task: int
    entries: tuple[PrefEntry, ...]

    def head(self) -> PrefEntry:
        return self.entries[0]


@dataclass
class MatchingState:
    """Mutable matching progress: committed pairs plus residual budgets."""

    omega: dict[int, int] = field(default_factory=dict)
    hosted: dict[int, list[int]] = field(default_factory=dict)
    freqs: dict[int, float] = field(default_factory=dict)
    f_res: np.ndarray = None
    p_res: np.ndarray = None
    unmatched: set[int] = field(default_factory=set)
    abandoned: set[int] = field(default_factory=set)
    trace: list[tuple] = field(default_factory=list)
    cost_series: list[float] = field(default_factory=list)


def new_state(sc: Scenario) -> MatchingState:
    f_res = np.array([d.f_max for d in sc.devices])
    p_res = np.array([math.inf] + [d.p_m for d in sc.devices[1:]])
    return MatchingState(f_res=f_res, p_res=p_res,
                         unmatched=set(range(1, sc.n + 1)))


def local_seed_set(sc: Scenario) -> set[int]:
    """Tasks whose own UE can execute them: f_min within the CPU capacity and
    the compute power it implies within the device's budget."""
    bounds = feasibility_bounds(sc)
    return {i for i in range(1, sc.n + 1) if not bounds.blocked[i - 1, i]}


def residual_window(sc: Scenario, state: MatchingState, k: int, dev: int
                    ) -> tuple[float, float]:
    """Admissible frequency window [lo, hi] for placing task k on `dev` given
    current residual budgets; raises InfeasiblePair when empty."""
    task = sc.task(k)
    host = sc.device(dev)
    if dev == k:
        lo = task.f_min
        hi = state.f_res[dev]
        if host.kappa > 0:
            hi = min(hi, (max(state.p_res[dev], 0.0) / host.kappa) ** (1.0 / host.nu))
    else:
        budget = state.p_res[k]
        if budget <= 0:
            raise InfeasiblePair(f"task {k}: no transmit budget left")
        snr = sc.gain(k, dev) * sc.device(k).eta * budget / sc.noise_w
        rate = sc.bandwidth * math.log1p(snr) / LN2
        if task.deadline * rate <= task.bits:
            raise InfeasiblePair(f"task {k}->device {dev}: deadline unreachable")
        lo = task.cycles / (task.deadline - task.bits / rate)
        hi = state.f_res[dev]
        if dev > 0 and host.kappa > 0:
            hi = min(hi, (max(state.p_res[dev], 0.0) / host.kappa) ** (1.0 / host.nu))
    if lo >= hi:
        raise InfeasiblePair(f"task {k}->device {dev}: window [{lo:g}, {hi:g}] empty")
    return lo, hi


def pair_frequency(sc: Scenario, state: MatchingState, k: int, dev: int) -> float:
    """Frequency this pair would commit: the slowest admissible one for the
    edge server and for local execution, otherwise the point balancing the
    owner's marginal upload saving against the helper's marginal CPU power."""
    lo, hi = residual_window(sc, state, k, dev)
    if dev == 0 or dev == k:
        return lo
    task = sc.task(k)
    host = sc.device(dev)
    w_k = task.power_price
    w_host = sc.host_price(dev)
    if w_k == 0.0:
        return lo                       # only the helper's CPU power matters
    coeff = w_host * host.kappa * host.nu * sc.device(k).eta / w_k
    return balance_root_clamped(task, sc.gain(k, dev), sc.bandwidth, sc.noise_w,
                                host.nu, coeff, 0.0, lo, hi)


def pair_cost(sc: Scenario, k: int, dev: int, f: float) -> float:
    """Marginal system cost of accomplishing task k on `dev` at frequency f
    (upload power, host CPU power, minus the avoided drop penalty)."""
    task = sc.task(k)
    cost = -task.penalty
    if dev != k:
        u = offload_power(task, sc.gain(k, dev), sc.bandwidth, sc.noise_w, f)
        cost += task.power_price / sc.device(k).eta * u
    host = sc.device(dev)
    cost += sc.host_price(dev) * host.kappa * f ** host.nu
    return cost


def build_preferences(sc: Scenario, state: MatchingState) -> dict[int, PreferenceList]:
    """Rank every still-fitting device for each unmatched task, cheapest first."""
    prefs = {}
    for k in sorted(state.unmatched):
        entries = []
        for dev in range(sc.n + 1):
            try:
                f = pair_frequency(sc, state, k, dev)
            except InfeasiblePair:
                continue
            entries.append(PrefEntry(device=dev, f=f, psi=pair_cost(sc, k, dev, f)))
        entries.sort(key=lambda e: (e.psi, e.device))
        prefs[k] = PreferenceList(task=k, entries=tuple(entries))
    return prefs


def next_task(prefs: dict[int, PreferenceList], criterion: str) -> int:
    """Pick which task commits now; ties always break towards lower task id."""
    if criterion == "maxtask":
        key = lambda k: (len(prefs[k].entries), prefs[k].head().psi, k)
    elif criterion == "minpw":
        key = lambda k: (prefs[k].head().psi, k)
    else:
        raise UnknownAlgorithm(f"matching criterion {criterion!r}")
    return min(prefs, key=key)


def commit(sc: Scenario, state: MatchingState, k: int, dev: int, f: float) -> None:
    """Bind task k to `dev` at frequency f and debit the residual budgets."""
    state.omega[k] = dev
    state.freqs[k] = f
    state.hosted.setdefault(dev, []).append(k)
    state.unmatched.discard(k)
    state.f_res[dev] -= f
    host = sc.device(dev)
    if dev > 0:
        state.p_res[dev] = max(0.0, state.p_res[dev] - host.kappa * f ** host.nu)
    if dev != k:
        u = offload_power(sc.task(k), sc.gain(k, dev), sc.bandwidth, sc.noise_w, f)
        state.p_res[k] = max(0.0, state.p_res[k] - u / sc.device(k).eta)
    state.trace.append((len(state.trace) + 1, k, dev, f, pair_cost(sc, k, dev, f)))


def mec_topup(sc: Scenario, mec_freqs: dict[int, float], capacity: float
              ) -> dict[int, float]:
    """Spread leftover edge-server capacity over its tasks proportionally to
    their current upload power cost (heavier uploads get more speed-up)."""
    if not mec_freqs:
        return dict(mec_freqs)
    residue = capacity - sum(mec_freqs.values())
    if residue <= 0:
        return dict(mec_freqs)
    weights = {}
    for k, f in mec_freqs.items():
        task = sc.task(k)
        u = offload_power(task, sc.gain(k, 0), sc.bandwidth, sc.noise_w, f)
        weights[k] = task.power_price / sc.device(k).eta * u
    total = sum(weights.values())
    if total <= 0:
        share = {k: 1.0 / len(mec_freqs) for k in mec_freqs}
    else:
        share = {k: weights[k] / total for k in mec_freqs}
    return {k: f + share[k] * residue for k, f in mec_freqs.items()}


def redistribute_mec(state: MatchingState, sc: Scenario) -> None:
    """Apply the capacity top-up to the matching state (frequencies, residual
    capacity, and the owners' recovered transmit budgets)."""
    on_mec = {k: state.freqs[k] for k, dev in state.omega.items() if dev == 0}
    if not on_mec:
        return
    new_freqs = mec_topup(sc, on_mec, sc.device(0).f_max)
    for k, f_new in new_freqs.items():
        f_old = on_mec[k]
        if f_new == f_old:
            continue
        task = sc.task(k)
        u_old = offload_power(task, sc.gain(k, 0), sc.bandwidth, sc.noise_w, f_old)
        u_new = offload_power(task, sc.gain(k, 0), sc.bandwidth, sc.noise_w, f_new)
        state.p_res[k] = max(0.0, state.p_res[k] + (u_old - u_new) / sc.device(k).eta)
        state.f_res[0] -= f_new - f_old
        state.freqs[k] = f_new


def run(sc: Scenario, criterion: str = "maxtask") -> tuple[Assignment, MatchingState]:
    """Full heuristic: local seeding, ordered matching loop, capacity top-up."""
    if criterion not in CRITERIA:
        raise UnknownAlgorithm(f"matching criterion {criterion!r}")
    state = new_state(sc)
    for k in sorted(local_seed_set(sc)):
        commit(sc, state, k, k, sc.task(k).f_min)
    state.cost_series.append(assignment_cost(sc, state.omega, state.freqs)[0].total)

    while state.unmatched:
        prefs = build_preferences(sc, state)
        fitting = {k: pl for k, pl in prefs.items() if pl.entries}
        dead = state.unmatched - set(fitting)
        state.abandoned |= dead
        state.unmatched -= dead
        if not fitting:
            break
        k = next_task(fitting, criterion)
        head = fitting[k].head()
        commit(sc, state, k, head.device, head.f)
        state.cost_series.append(assignment_cost(sc, state.omega, state.freqs)[0].total)

    redistribute_mec(state, sc)
    asg = make_assignment(sc, state.omega, state.freqs)
    state.cost_series.append(asg.cost.total)
    return asg, state
