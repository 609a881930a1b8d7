"""Frame-level simulation of the access protocol and the ACB baselines.

Each frame: new arrivals join the backlog, every backlogged device contends,
and the scheme decides who is served. Unserved devices retry next frame with
a fresh preamble; a device keeps its timing group (its position) for life.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import rng as rs
from .access import CellGeometry, LoadMatrix, estimate_load, sample_arrivals, synthesize_prach
from .analysis import AcbConfig, acb_frame_outcome, weight_overhead_rbs
from .msd import required_rbs
from .superposition import (
    InfeasibleTarget,
    WeightProfile,
    adaptive_target_snr,
    effective_snrs,
    exw_random_assignment,
    grw_profile,
    grw_total_snr,
)
from .zc import PreambleBank

__all__ = [
    "SCHEMES",
    "FrameBudget",
    "EfficiencyModel",
    "SystemConfig",
    "DeviceQueueState",
    "FrameReport",
    "SeedSummary",
    "ScenarioResult",
    "plan_grw_target",
    "run_frame",
    "run_seed",
    "run_scenario",
]

SCHEMES = ("proposed-grw", "proposed-exw", "acb-original", "acb-ta")


@dataclass(frozen=True)
class FrameBudget:
    data_rbs: int = 100
    rb_bandwidth: float = 1e6
    rb_duration: float = 1e-3
    frame_length: float = 10e-3

    def __post_init__(self):
        if self.data_rbs < 1:
            raise ValueError("data_rbs must be >= 1")

    @property
    def uses_per_rb(self) -> int:
        return int(round(self.rb_bandwidth * self.rb_duration))


@dataclass(frozen=True)
class EfficiencyModel:
    """Truncated-normal rate efficiency of a finite-length Raptor code.

    Defaults are fitted to link-level runs at -10 dB with ``k = 1024``.
    """

    mean: float = 0.87
    sd: float = 0.06
    floor: float = 0.6
    ceiling: float = 0.99

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n == 0:
            return np.zeros(0)
        if self.sd == 0:
            return np.full(n, min(max(self.mean, self.floor), self.ceiling))
        a, b = (self.floor - self.mean) / self.sd, (self.ceiling - self.mean) / self.sd
        return stats.truncnorm.ppf(rng.random(n), a, b, loc=self.mean, scale=self.sd)


@dataclass(frozen=True)
class SystemConfig:
    """Scheme and protocol parameters of a scenario.

    ``gamma_max`` enables the adaptive power rule; ``gamma0_fixed`` instead
    pins the per-device target SNR. ``planning_efficiency`` is the rate
    efficiency the base station budgets for when sizing the data channel.
    """

    scheme: str = "proposed-grw"
    n_s: int = 64
    geometry: CellGeometry = field(default_factory=CellGeometry)
    k: int = 1024
    gamma_max: float = 1000.0
    gamma0_max: float = 10.0
    gamma0_fixed: float | None = None
    mode: str = "fast"
    efficiency: EfficiencyModel = field(default_factory=EfficiencyModel)
    planning_efficiency: float = 0.6
    deferral: str = "largest"
    load_source: str = "genie"
    n_zc: int = 839
    prach_snr_db: float = 0.0
    delta: float = 1.0
    gamma_w: float = 1.0
    acb_p_mode: str = "standard"
    acb_d: float = 75.0
    llr_form: str = "standard"
    grw_order: str = "ascending"
    checkpoint_uses: int = 32
    cap_factor: float = 4.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.mode not in ("fast", "full"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.deferral not in ("largest", "smallest", "random"):
            raise ValueError(f"unknown deferral policy {self.deferral!r}")
        if self.load_source not in ("genie", "algorithm1"):
            raise ValueError(f"unknown load source {self.load_source!r}")
        if not 0 < self.planning_efficiency <= 1:
            raise ValueError("planning efficiency must be in (0, 1]")

    @property
    def n_t(self) -> int:
        return self.geometry.timing_groups


class DeviceQueueState:
    """Backlog of waiting devices and the log of served ones."""

    def __init__(self):
        self.ids = np.zeros(0, dtype=np.int64)
        self.arrival = np.zeros(0, dtype=np.int64)
        self.timing = np.zeros(0, dtype=np.int64)
        self.served_log: list[tuple[int, int, int]] = []
        self.next_id = 0

    def __len__(self) -> int:
        return self.ids.size

    def add(self, n: int, frame: int, timing: np.ndarray) -> None:
        new = np.arange(self.next_id, self.next_id + n, dtype=np.int64)
        self.next_id += n
        self.ids = np.concatenate([self.ids, new])
        self.arrival = np.concatenate([self.arrival, np.full(n, frame, dtype=np.int64)])
        self.timing = np.concatenate([self.timing, np.asarray(timing, dtype=np.int64)])

    def serve(self, idx: np.ndarray, frame: int) -> np.ndarray:
        """Remove backlog positions ``idx``; returns their delays in frames."""
        idx = np.asarray(idx, dtype=np.int64)
        delays = frame - self.arrival[idx]
        if np.any(delays < 0):
            raise AssertionError("negative delay")
        self.served_log.extend(zip(self.ids[idx].tolist(), self.arrival[idx].tolist(), [frame] * idx.size))
        keep = np.ones(self.ids.size, dtype=bool)
        keep[idx] = False
        self.ids, self.arrival, self.timing = self.ids[keep], self.arrival[keep], self.timing[keep]
        return delays


@dataclass
class FrameReport:
    frame: int
    arrivals: int
    contenders: int
    served: int
    rbs_used: int
    overhead_rbs: int
    deferred: int
    failed: int
    estimated: int
    delays: np.ndarray = field(repr=False)
    target_snr: float = 0.0
    backlog_after: int = 0


def plan_grw_target(counts, gamma0: float, gamma_max: float | None, tol: float = 1e-12) -> float:
    """Largest target not above ``gamma0`` that keeps the GrW design feasible
    and, if ``gamma_max`` is given, its total SNR within ``gamma_max``."""
    r = np.asarray([c for c in counts if c > 0], dtype=np.float64)
    if r.size == 0:
        return gamma0

    def ok(g):
        if g * (r.max() - 1.0) >= 1.0:
            return False
        return gamma_max is None or grw_total_snr(r, g) <= gamma_max * (1 + 1e-12)

    if ok(gamma0):
        return gamma0
    lo, hi = 0.0, gamma0
    while hi - lo > tol * gamma0:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    if lo <= 0:
        raise InfeasibleTarget("no positive feasible target")
    return lo


_BANKS: dict[tuple[int, int, int], PreambleBank] = {}


def _bank(n_s: int, n_t: int, n_zc: int) -> PreambleBank:
    key = (n_s, n_t, n_zc)
    if key not in _BANKS:
        _BANKS[key] = PreambleBank(n_s, n_t, n_zc)
    return _BANKS[key]


def _design(cfg: SystemConfig, groups: list[tuple[int, int, int]], rng: np.random.Generator
            ) -> tuple[WeightProfile, int]:
    """Weight profile for the admitted groups and its signalling overhead in RBs."""
    L = sum(c for _, _, c in groups)
    if cfg.gamma0_fixed is not None:
        g0, cap = cfg.gamma0_fixed, None
    else:
        g0, cap = adaptive_target_snr(L, cfg.gamma_max, cfg.gamma0_max), cfg.gamma_max
    if cfg.scheme == "proposed-grw":
        counts = [c for _, _, c in groups]
        g0 = plan_grw_target(counts, g0, cap)
        return grw_profile(counts, g0, order=cfg.grw_order), 0
    prof = exw_random_assignment(L, g0, rng)
    return prof, weight_overhead_rbs(cfg.delta, L, cfg.gamma_w)


def _plan_rbs(cfg: SystemConfig, budget: FrameBudget, prof: WeightProfile) -> float:
    gmin = float(effective_snrs(prof).min())
    return required_rbs(cfg.k, cfg.planning_efficiency * math.log2(1.0 + gmin), budget.uses_per_rb, 1.0)


def _evict(cfg: SystemConfig, groups: list, rng: np.random.Generator) -> list:
    if cfg.deferral == "random":
        drop = int(rng.integers(0, len(groups)))
    else:
        sizes = np.array([c for _, _, c in groups])
        # ties resolved towards the last group in cell order
        pick = np.flatnonzero(sizes == (sizes.max() if cfg.deferral == "largest" else sizes.min()))
        drop = int(pick[-1])
    return groups[:drop] + groups[drop + 1:]


def _decode_fast(cfg: SystemConfig, prof: WeightProfile, cap_uses: int, rng: np.random.Generator
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Success flag and channel uses per device, decoding order, sequential SIC."""
    w2 = prof.device_weights ** 2
    eta = cfg.efficiency.sample(w2.size, rng)
    interference = float(w2.sum()) + prof.noise_variance
    ok = np.zeros(w2.size, dtype=bool)
    uses = np.zeros(w2.size, dtype=np.int64)
    step = cfg.checkpoint_uses
    for i in range(w2.size):
        interference -= w2[i]
        snr = w2[i] / interference
        c = math.log2(1.0 + snr)
        ideal = cfg.k / c
        need = cfg.k / (eta[i] * c)
        need = int(math.ceil(need / step - 1e-9)) * step
        cap = min(cap_uses, int(cfg.cap_factor * ideal))
        if need <= cap:
            ok[i], uses[i] = True, need
        else:
            uses[i] = cap
            interference += w2[i]
    return ok, uses


def _decode_full(cfg: SystemConfig, prof: WeightProfile, cells: list[tuple[int, int, int]], cap_uses: int,
                 frame: int, seed: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    from .codec.raptor import AdapterStream, RaptorCode, RaptorCodeSpec
    from .msd import decode_multistage, transmit_layers
    from .rng import device_seed

    codes, adapters, msgs = [], [], []
    for pre, grp, slot in cells:
        s = device_seed(pre, grp + 1, slot, base=frame)
        codes.append(RaptorCode(RaptorCodeSpec(k=cfg.k, graph_seed=s)))
        adapters.append(AdapterStream(s))
        msgs.append(rng.integers(0, 2, cfg.k).astype(np.uint8))
    fr = transmit_layers(msgs, codes, adapters, prof, cap_uses, rng)
    rep = decode_multistage(fr, codes, adapters, msgs, llr_form=cfg.llr_form, cap_factor=cfg.cap_factor)
    ok = np.array([s.success for s in rep.per_stage])
    uses = np.array([s.symbols_consumed for s in rep.per_stage], dtype=np.int64)
    return ok, uses


def run_frame(state: DeviceQueueState, budget: FrameBudget, cfg: SystemConfig, lam: float, frame: int,
              seed: int) -> FrameReport:
    """Advance the system by one frame; arrivals are drawn inside."""
    n_new = sample_arrivals(lam, rs.seed_stream(seed, frame, rs.LANE_ARRIVALS))
    rng_assign = rs.seed_stream(seed, frame, rs.LANE_ASSIGN)
    state.add(n_new, frame, cfg.geometry.sample_groups(n_new, rng_assign))
    N = len(state)
    empty = np.zeros(0, dtype=np.int64)
    if N == 0:
        return FrameReport(frame, n_new, 0, 0, 0, 0, 0, 0, 0, empty)

    if cfg.scheme.startswith("acb"):
        acb = AcbConfig("original" if cfg.scheme == "acb-original" else "timing-advance", cfg.n_s,
                        cfg.geometry, cfg.acb_d, cfg.acb_p_mode)
        rng = rs.seed_stream(seed, frame, rs.LANE_ACB)
        _, served = acb_frame_outcome(acb, N, rng, timing=state.timing)
        if served.size > budget.data_rbs:
            served = np.sort(rng.choice(served, budget.data_rbs, replace=False))
        delays = state.serve(served, frame)
        return FrameReport(frame, n_new, N, served.size, served.size, 0, 0, 0, N, delays,
                           backlog_after=len(state))

    pre = rng_assign.integers(0, cfg.n_s, size=N)
    tg = state.timing - 1
    counts = np.zeros((cfg.n_s, cfg.n_t), dtype=np.int64)
    np.add.at(counts, (pre, tg), 1)
    truth = LoadMatrix(counts)
    if cfg.load_source == "genie":
        est = truth
    else:
        bank = _bank(cfg.n_s, cfg.n_t, cfg.n_zc)
        prach = rs.seed_stream(seed, frame, rs.LANE_PRACH)
        obs = synthesize_prach(truth, bank, 10 ** (-cfg.prach_snr_db / 10), prach)
        est = estimate_load(obs, bank).load
    # a cell whose count is misestimated gets a wrong weight plan; its devices retry
    groups = [g for g in truth.groups() if est.counts[g[0], g[1]] == g[2]]
    failed_est = truth.total - sum(c for _, _, c in groups)

    rng_w = rs.seed_stream(seed, frame, rs.LANE_WEIGHTS)
    deferred = 0
    prof, overhead, need = None, 0, 0
    while groups:
        try:
            prof, overhead = _design(cfg, groups, rng_w)
            need = _plan_rbs(cfg, budget, prof)
        except InfeasibleTarget:
            need = math.inf
        if need + overhead <= budget.data_rbs:
            break
        before = sum(c for _, _, c in groups)
        groups = _evict(cfg, groups, rng_w)
        deferred += before - sum(c for _, _, c in groups)
        prof = None
    if prof is None:
        return FrameReport(frame, n_new, N, 0, 0, 0, deferred, failed_est, est.total, empty,
                           backlog_after=len(state))

    # backlog positions of admitted devices, enumerated group by group in arrival order
    cell_of = pre * cfg.n_t + tg
    members = []
    cells = []
    for i, j, c in groups:
        pos = np.flatnonzero(cell_of == i * cfg.n_t + j)
        members.append(pos)
        cells.extend((i, j, s) for s in range(c))
    members = np.concatenate(members)
    order = prof.decoding_order()
    cap_uses = int(need) * budget.uses_per_rb
    rng_eff = rs.seed_stream(seed, frame, rs.LANE_EFFICIENCY)
    if cfg.mode == "fast":
        ok, uses = _decode_fast(cfg, prof, cap_uses, rng_eff)
    else:
        ok, uses = _decode_full(cfg, prof, [cells[d] for d in order], cap_uses, frame, seed, rng_eff)
    served_pos = np.sort(members[order[ok]])
    rbs = int(math.ceil(uses[ok].max() / budget.uses_per_rb)) if ok.any() else 0
    delays = state.serve(served_pos, frame)
    return FrameReport(frame, n_new, N, served_pos.size, rbs + overhead, overhead, deferred,
                       failed_est + int((~ok).sum()), est.total, delays, prof.target_snr, len(state))


@dataclass
class SeedSummary:
    seed: int
    frames: int
    arrivals: int
    served: int
    rbs_used: int
    mean_served: float
    devices_per_rb: float
    mean_delay: float
    mean_wait: float
    final_backlog: int


def run_seed(cfg: SystemConfig, budget: FrameBudget, lam: float, frames: int, seed: int
             ) -> tuple[SeedSummary, list[FrameReport]]:
    """Run ``frames`` consecutive frames from an empty backlog.

    ``mean_delay`` averages over served devices. ``mean_wait`` also counts
    devices still waiting at the end, at their wait so far.
    """
    if frames < 1:
        raise ValueError("frames must be >= 1")
    state = DeviceQueueState()
    reports = [run_frame(state, budget, cfg, lam, f, seed) for f in range(frames)]
    delays = np.concatenate([r.delays for r in reports]) if reports else np.zeros(0)
    arrivals = sum(r.arrivals for r in reports)
    served = sum(r.served for r in reports)
    rbs = sum(r.rbs_used for r in reports)
    waiting = (frames - 1) - state.arrival
    all_waits = np.concatenate([delays, waiting]).astype(np.float64)
    summary = SeedSummary(
        seed, frames, arrivals, served, rbs, served / frames,
        served / rbs if rbs else 0.0,
        float(delays.mean()) if delays.size else 0.0,
        float(all_waits.mean()) if all_waits.size else 0.0,
        len(state),
    )
    return summary, reports


@dataclass
class ScenarioResult:
    """Per-seed summaries and their across-seed means and standard errors."""

    seeds: list[SeedSummary]
    frame_length: float

    def metric(self, name: str) -> tuple[float, float]:
        v = np.array([getattr(s, name) for s in self.seeds], dtype=np.float64)
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size >= 2 else math.nan
        return float(v.mean()), se

    @property
    def mean_delay_seconds(self) -> float:
        return self.metric("mean_delay")[0] * self.frame_length

    def pooled_devices_per_rb(self) -> float:
        rbs = sum(s.rbs_used for s in self.seeds)
        return sum(s.served for s in self.seeds) / rbs if rbs else 0.0


def run_scenario(cfg: SystemConfig, budget: FrameBudget, lam: float, frames: int, seeds) -> ScenarioResult:
    return ScenarioResult([run_seed(cfg, budget, lam, frames, int(s))[0] for s in seeds], budget.frame_length)
