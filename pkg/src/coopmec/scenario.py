"""Random scenario generation and plain-text (de)serialisation.

Scenarios follow the usual single-cell layout: UEs dropped uniformly in a
square cell with the access point / edge server at the centre, log-distance
path loss with optional unit-mean exponential (Rayleigh power) fading, and
task parameters drawn uniformly from fixed ranges.  Everything is driven by
one integer seed so any instance can be replayed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import ConfigError
from .model import DeviceProfile, Scenario, TaskSpec

SCENARIO_FORMAT = "coopmec-scenario v1"


@dataclass(frozen=True)
class GenConfig:
    """Generator knobs.  Ranges are inclusive (lo, hi) pairs.

    Defaults: 2 MHz uplink channels at -174 dBm/Hz noise density, CPU power
    kappa * f**3 with kappa = 1e-27, 0.1 W circuit power, UE budgets drawn
    uniformly in dBm over [20, 50], task sizes 0.1..0.5 Mbit, 1e4..1.5e8
    cycles, 20..50 ms deadlines, UE CPUs 0.5..1.5 GHz, drop penalty uniform
    over [phi0, phi0 + 10], PA efficiency 0.5, path loss d^-3.5 with -30 dB
    reference gain at 1 m inside a 1 km square cell.
    """

    n: int = 10
    f0_max: float = 5e9
    bandwidth: float = 2e6
    noise_dbm_per_hz: float = -174.0
    kappa: float = 1e-27
    nu: float = 3.0
    p_cir: float = 0.1
    p_max_dbm: tuple[float, float] = (20.0, 50.0)
    data_bits: tuple[float, float] = (0.1e6, 0.5e6)
    cycles: tuple[float, float] = (1e4, 15e7)
    deadline_s: tuple[float, float] = (0.02, 0.05)
    f_ue: tuple[float, float] = (0.5e9, 1.5e9)
    phi0: float = 40.0
    phi_spread: float = 10.0
    w: float = 1.0
    eta: float = 0.5
    pathloss_exponent: float = 3.5
    pathloss_ref_gain: float = 1e-3
    cell_m: float = 1000.0
    fading: bool = True
    seed: int = 0

    def noise_w(self) -> float:
        """Noise power in watts over the configured bandwidth."""
        return 10.0 ** (self.noise_dbm_per_hz / 10.0) * 1e-3 * self.bandwidth


_RANGE_FIELDS = {"p_max_dbm", "data_bits", "cycles", "deadline_s", "f_ue"}


def _check(cfg: GenConfig) -> None:
    if cfg.n < 1:
        raise ConfigError(f"n must be >= 1, got {cfg.n}")
    for name in _RANGE_FIELDS:
        lo, hi = getattr(cfg, name)
        if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
            raise ConfigError(f"{name}: bad range ({lo!r}, {hi!r})")
    positive = ["f0_max", "bandwidth", "kappa", "nu", "phi_spread", "cell_m",
                "pathloss_exponent", "pathloss_ref_gain"]
    for name in positive:
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"{name} must be positive")
    if not (0 < cfg.eta <= 1):
        raise ConfigError(f"eta must be in (0, 1], got {cfg.eta}")
    if cfg.p_cir < 0 or cfg.phi0 < 0 or cfg.w < 0:
        raise ConfigError("p_cir, phi0 and w must be >= 0")


def generate(cfg: GenConfig) -> Scenario:
    """Materialise one scenario.  The draw order is fixed (positions, UE CPU
    caps, power budgets, cycles, bits, deadlines, penalties, fading) so a
    seed always reproduces the same instance bit for bit."""
    _check(cfg)
    n = cfg.n
    rng = np.random.default_rng(cfg.seed)

    pos = rng.uniform(0.0, cfg.cell_m, size=(n, 2))
    f_ue = rng.uniform(*cfg.f_ue, size=n)
    p_max = 10.0 ** (rng.uniform(*cfg.p_max_dbm, size=n) / 10.0) * 1e-3
    cyc = rng.uniform(*cfg.cycles, size=n)
    bits = rng.uniform(*cfg.data_bits, size=n)
    deadline = rng.uniform(*cfg.deadline_s, size=n)
    phi = rng.uniform(cfg.phi0, cfg.phi0 + cfg.phi_spread, size=n)

    centre = (cfg.cell_m / 2.0, cfg.cell_m / 2.0)
    xy = np.vstack([centre, pos])                    # device positions, id order
    d = np.sqrt(((pos[:, None, :] - xy[None, :, :]) ** 2).sum(axis=2))
    gains = cfg.pathloss_ref_gain * np.maximum(d, 1.0) ** (-cfg.pathloss_exponent)
    if cfg.fading:
        gains = gains * rng.exponential(1.0, size=gains.shape)

    tasks = tuple(TaskSpec(id=i + 1, cycles=float(cyc[i]), bits=float(bits[i]),
                           deadline=float(deadline[i]), penalty=float(phi[i]),
                           power_price=cfg.w)
                  for i in range(n))
    mec = DeviceProfile(id=0, f_max=cfg.f0_max, kappa=0.0, nu=cfg.nu, eta=cfg.eta,
                        p_max=math.inf, p_cir=0.0, position=centre)
    ues = tuple(DeviceProfile(id=i + 1, f_max=float(f_ue[i]), kappa=cfg.kappa,
                              nu=cfg.nu, eta=cfg.eta, p_max=float(p_max[i]),
                              p_cir=cfg.p_cir,
                              position=(float(pos[i, 0]), float(pos[i, 1])))
                for i in range(n))
    return Scenario(tasks=tasks, devices=(mec,) + ues, gains=gains,
                    bandwidth=cfg.bandwidth, noise_w=cfg.noise_w(), seed=cfg.seed)


# ---------------------------------------------------------------------------
# flat key = value config files


def _parse_value(name: str, raw: str):
    raw = raw.strip()
    if name in _RANGE_FIELDS:
        parts = [p for p in raw.replace("(", " ").replace(")", " ").split(",") if p.strip()]
        if len(parts) != 2:
            raise ConfigError(f"{name}: expected 'lo, hi', got {raw!r}")
        return (float(parts[0]), float(parts[1]))
    if name == "fading":
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"fading: expected true/false, got {raw!r}")
    if name in ("n", "seed"):
        return int(raw)
    return float(raw)


def read_config(path) -> GenConfig:
    """Parse a flat `key = value` file into a GenConfig (unknown keys rejected)."""
    known = {f.name for f in fields(GenConfig)}
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = line.split("=", 1)
            key = key.strip()
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _parse_value(key, raw)
    cfg = replace(GenConfig(), **values)
    _check(cfg)
    return cfg


def write_config(cfg: GenConfig, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for f in fields(GenConfig):
            v = getattr(cfg, f.name)
            if isinstance(v, tuple):
                fh.write(f"{f.name} = {v[0]!r}, {v[1]!r}\n")
            else:
                fh.write(f"{f.name} = {v!r}\n")


# ---------------------------------------------------------------------------
# scenario files (versioned, full float precision via repr round-trip)


def write_scenario(sc: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{SCENARIO_FORMAT}\n")
        fh.write(f"n {sc.n}\n")
        fh.write(f"bandwidth {sc.bandwidth!r}\n")
        fh.write(f"noise_w {sc.noise_w!r}\n")
        fh.write(f"seed {sc.seed}\n")
        for t in sc.tasks:
            fh.write(f"task {t.id} {t.cycles!r} {t.bits!r} {t.deadline!r} "
                     f"{t.penalty!r} {t.power_price!r}\n")
        for d in sc.devices:
            fh.write(f"device {d.id} {d.f_max!r} {d.kappa!r} {d.nu!r} {d.eta!r} "
                     f"{d.p_max!r} {d.p_cir!r} {d.position[0]!r} {d.position[1]!r}\n")
        for i in range(sc.n):
            row = " ".join(repr(float(g)) for g in sc.gains[i])
            fh.write(f"gains {i + 1} {row}\n")


def read_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != SCENARIO_FORMAT:
        raise ConfigError(f"{path}: not a {SCENARIO_FORMAT!r} file")
    header = {}
    tasks = {}
    devices = {}
    gain_rows = {}
    for ln in lines[1:]:
        parts = ln.split()
        kind = parts[0]
        if kind == "task":
            tid = int(parts[1])
            tasks[tid] = TaskSpec(id=tid, cycles=float(parts[2]), bits=float(parts[3]),
                                  deadline=float(parts[4]), penalty=float(parts[5]),
                                  power_price=float(parts[6]))
        elif kind == "device":
            did = int(parts[1])
            devices[did] = DeviceProfile(id=did, f_max=float(parts[2]),
                                         kappa=float(parts[3]), nu=float(parts[4]),
                                         eta=float(parts[5]), p_max=float(parts[6]),
                                         p_cir=float(parts[7]),
                                         position=(float(parts[8]), float(parts[9])))
        elif kind == "gains":
            gain_rows[int(parts[1])] = [float(x) for x in parts[2:]]
        else:
            header[kind] = parts[1]
    n = int(header["n"])
    if set(tasks) != set(range(1, n + 1)) or set(devices) != set(range(n + 1)):
        raise ConfigError(f"{path}: incomplete task/device records")
    gains = np.array([gain_rows[i] for i in range(1, n + 1)])
    if gains.shape != (n, n + 1):
        raise ConfigError(f"{path}: gain matrix must be ({n}, {n + 1})")
    return Scenario(tasks=tuple(tasks[i] for i in range(1, n + 1)),
                    devices=tuple(devices[j] for j in range(n + 1)),
                    gains=gains, bandwidth=float(header["bandwidth"]),
                    noise_w=float(header["noise_w"]), seed=int(header["seed"]))
