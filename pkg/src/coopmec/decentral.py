"""Decentralized three-step offloading (CLI label: decentral).

Step 1 runs every task locally that fits its own UE.  Step 2 lets the
remaining tasks request the edge server at their minimum admissible
frequency; requests are admitted cheapest-first as long as they fit the
server, and leftover capacity is spread back over the admitted uploads.
Step 3 places the still-unmatched tasks on helper UEs by deferred
acceptance with permanent rejections: requested frequencies are frozen at
each pair's minimum, devices keep the cheapest prefix of their pooled
offers that fits both their CPU capacity and their power budget.

A UE whose own task is still seeking a host must keep its battery free for
the upload that placement would trigger (the minimum-frequency request
consumes the full transmit budget), so such a device accepts no guests
until its task is placed elsewhere or gives up.  Without that reservation
the final matching can overdraw a helper's power budget.

The module also contains the closed-form signalling overhead counts for
this algorithm, the centralized iterative solver, and the sequential
matching heuristic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import matching
from .errors import UnknownAlgorithm
from .model import (Assignment, FeasibilityBounds, Scenario, assignment_cost,
                    feasibility_bounds, make_assignment)


@dataclass
class RoundLog:
    """Message-level record of one decentralized run.

    events holds (round, task, device, f, verdict) rows where verdict is one
    of request / hold / reject / evict; the counters feed overhead_report.
    """

    n: int
    n_u: int = 0
    n_mec: int = 0
    rounds: int = 0
    events: list[tuple[int, int, int, float, str]] = field(default_factory=list)
    cost_series: list[float] = field(default_factory=list)

    def counters(self) -> dict[str, int]:
        return {"n": self.n, "n_u": self.n_u, "n_mec": self.n_mec,
                "rounds": self.rounds}

    def lines(self):
        for rnd, task, dev, f, verdict in self.events:
            yield f"{rnd} {task} {dev} {f!r} {verdict}"


def prefix_admit(requests: dict[int, float], capacity: float) -> list[int]:
    """Ids of the longest cheapest-first prefix whose frequencies fit capacity.

    Ties in the requested frequency break towards the lower id."""
    admitted = []
    used = 0.0
    for k in sorted(requests, key=lambda k: (requests[k], k)):
        if used + requests[k] > capacity:
            break
        used += requests[k]
        admitted.append(k)
    return admitted


def mec_admission(sc: Scenario, bounds: FeasibilityBounds,
                  candidates=None) -> tuple[set[int], dict[int, float]]:
    """Step 2: admit edge-server requests cheapest-first, then top up.

    candidates defaults to every task that cannot run locally.  Returns the
    admitted set and their frequencies after leftover capacity is spread."""
    if candidates is None:
        candidates = set(range(1, sc.n + 1)) - matching.local_seed_set(sc)
    requests = {k: float(bounds.f_lower[k - 1, 0]) for k in candidates
                if not bounds.blocked[k - 1, 0]}
    admitted = prefix_admit(requests, sc.device(0).f_max)
    freqs = {k: requests[k] for k in admitted}
    freqs = matching.mec_topup(sc, freqs, sc.device(0).f_max)
    return set(admitted), freqs


def deferred_acceptance(sc: Scenario, unmatched, state=None, log=None,
                        bounds=None) -> dict[int, int]:
    """Step 3: synchronized-round deferred acceptance among UE helpers.

    Each round every unplaced task asks the cheapest device that has not yet
    rejected it; each device pools newly asked and currently held offers,
    sorts them by (frequency, task id) and keeps the longest prefix that fits
    its residual CPU capacity and its residual power budget.  Rejections are
    permanent.  Returns {task: device} for the offers held at termination."""
    if state is None:
        state = matching.new_state(sc)
    if bounds is None:
        bounds = feasibility_bounds(sc)
    if log is None:
        log = RoundLog(n=sc.n)

    participants = sorted(unmatched)
    prefs: dict[int, list[tuple[float, int]]] = {}
    for k in participants:
        prefs[k] = sorted((float(bounds.f_lower[k - 1, j]), j)
                          for j in range(1, sc.n + 1)
                          if j != k and not bounds.blocked[k - 1, j])
    ptr = {k: 0 for k in participants}
    holding: dict[int, int | None] = {k: None for k in participants}
    held_at: dict[int, list[tuple[float, int]]] = {}

    def seeking(k: int) -> bool:
        return holding[k] is not None or ptr[k] < len(prefs[k])

    while True:
        new_req: dict[int, list[tuple[float, int]]] = {}
        for k in participants:
            if holding[k] is None and ptr[k] < len(prefs[k]):
                f, d = prefs[k][ptr[k]]
                new_req.setdefault(d, []).append((f, k))
        if not new_req:
            break
        log.rounds += 1
        rnd = log.rounds
        # budgets frozen at round start so device processing order is moot
        open_budget = {}
        for d in new_req:
            own_seeks = d in holding and seeking(d)
            open_budget[d] = 0.0 if own_seeks else float(state.p_res[d])
        for d, f, k in sorted((d, f, k) for d, reqs in new_req.items() for f, k in reqs):
            log.events.append((rnd, k, d, f, "request"))
        for d in sorted(new_req):
            pool = sorted(held_at.get(d, []) + new_req[d])
            dev = sc.device(d)
            cum_f = 0.0
            cum_p = 0.0
            keep = 0
            for f, k in pool:
                if cum_f + f > state.f_res[d]:
                    break
                if dev.kappa * (cum_p + f ** dev.nu) > open_budget[d]:
                    break
                cum_f += f
                cum_p += f ** dev.nu
                keep += 1
            accepted = pool[:keep]
            was_held = {k for _, k in held_at.get(d, [])}
            for f, k in pool[keep:]:
                holding[k] = None
                ptr[k] += 1
                log.events.append((rnd, k, d, f, "evict" if k in was_held else "reject"))
            for f, k in accepted:
                if k not in was_held:
                    holding[k] = d
                    log.events.append((rnd, k, d, f, "hold"))
            held_at[d] = accepted
        target = dict(state.omega)
        freqs = dict(state.freqs)
        for k in participants:
            if holding[k] is not None:
                target[k] = holding[k]
                freqs[k] = float(bounds.f_lower[k - 1, holding[k]])
        log.cost_series.append(assignment_cost(sc, target, freqs)[0].total)
    return {k: d for k, d in holding.items() if d is not None}


def run(sc: Scenario) -> tuple[Assignment, RoundLog]:
    """Full three-step decentralized algorithm; the result always validates."""
    state = matching.new_state(sc)
    bounds = feasibility_bounds(sc)
    log = RoundLog(n=sc.n)
    for k in sorted(matching.local_seed_set(sc)):
        matching.commit(sc, state, k, k, sc.task(k).f_min)
    log.cost_series.append(assignment_cost(sc, state.omega, state.freqs)[0].total)

    k_mec, mec_freqs = mec_admission(sc, bounds, set(state.unmatched))
    for k in sorted(k_mec):
        matching.commit(sc, state, k, 0, mec_freqs[k])
    log.n_mec = len(k_mec)
    log.cost_series.append(assignment_cost(sc, state.omega, state.freqs)[0].total)

    log.n_u = len(state.unmatched)
    held = deferred_acceptance(sc, set(state.unmatched), state, log, bounds)
    for k in sorted(held):
        matching.commit(sc, state, k, held[k], float(bounds.f_lower[k - 1, held[k]]))
    state.abandoned |= state.unmatched - set(held)
    state.unmatched -= state.abandoned

    asg = make_assignment(sc, state.omega, state.freqs)
    log.cost_series.append(asg.cost.total)
    return asg, log


def overhead_report(algorithm: str, counters) -> int:
    """Signalling scalars exchanged by one run, from its counters.

    Exact integer forms: the centralized iterative solver collects CSI and
    task descriptors and returns decisions; the matching heuristic repeats a
    shrinking preference rebuild; the decentralized scheme pays per round."""
    n = int(counters["n"])
    if algorithm == "icrbi":
        return 8 * n + n * (n - 1)
    if algorithm == "decentral":
        n_u = int(counters["n_u"])
        return (2 * int(counters["rounds"]) * n_u + (n - 1) * n_u
                + 2 * int(counters["n_mec"]) + 2 * n)
    if algorithm in matching.CRITERIA:
        n_h = int(counters["n_h"])
        return (2 * int(counters["n_mec"]) + (n_h + 1) * n_h * n // 2
                + 3 * n + (2 * n + 1) * n_h)
    raise UnknownAlgorithm(f"no overhead model for {algorithm!r}")
