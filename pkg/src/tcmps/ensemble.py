"""Trajectory ensembles: fidelity statistics and the return-probability benchmark.

Every trajectory draws its angles from streams keyed by
``(master_seed, trajectory_index, qubit)``, and results are reduced in
trajectory order, so the output does not depend on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .circuit import Schedule, inverse_schedule, qft_schedule, simulate, simulate_noisy
from .mps import MPS, BitstringSampleSet, inner, product_state, random_mps, sample_bitstrings
from .noise import (DEFAULT_GATE_TIME, OUParams, arma_from_ou, generate_trajectory,
                    noise_power_1q, total_power)
from .analysis import estimate_p0  # noqa: F401  (re-exported)

NOISE_STREAM = 0
SAMPLING_STREAM = 1
INPUT_KINDS = ("random_mps", "product")


@dataclass(frozen=True)
class EnsembleConfig:
    """One noisy-QFT experiment.

    ``input_kind`` is ``"random_mps"`` (bond dimension ``chi``, seeded by
    ``input_seed``) or ``"product"`` (``bits``, or random bits from
    ``input_seed`` when ``bits`` is None).
    """

    n_qubits: int
    n_traj: int
    ou: OUParams
    master_seed: int = 0
    input_kind: str = "random_mps"
    chi: int = 4
    input_seed: int = 0
    bits: str | None = None
    t_g: float = DEFAULT_GATE_TIME
    regime: str = ""
    cutoff: float = 1e-14
    max_bond: int | None = None
    angle_convention: str = "half"
    noise_both_halves: bool = False

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if self.input_kind not in INPUT_KINDS:
            raise ValueError(f"input_kind must be one of {INPUT_KINDS}")
        if self.bits is not None and len(self.bits) != self.n_qubits:
            raise ValueError("bits length must equal n_qubits")

    @property
    def p_tot(self) -> float:
        return total_power(self.n_qubits, noise_power_1q(self.ou, self.t_g))

    def input_bits(self) -> str:
        if self.bits is not None:
            return self.bits
        rng = np.random.default_rng(self.input_seed)
        return "".join(str(b) for b in rng.integers(0, 2, self.n_qubits))

    def input_state(self) -> MPS:
        if self.input_kind == "product":
            return product_state(self.input_bits(), self.cutoff, self.max_bond)
        return random_mps(self.n_qubits, self.chi, self.input_seed, self.cutoff, self.max_bond)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ou"] = asdict(self.ou)
        return d


@dataclass
class EnsembleResult:
    amplitudes: np.ndarray
    fidelity_mean: float
    fidelity_std: float
    fidelity_sem: float
    infidelity: float
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_amplitudes(cls, amplitudes, metadata=None) -> "EnsembleResult":
        a = np.asarray(amplitudes, dtype=complex)
        f = np.abs(a) ** 2
        mean = float(np.mean(f))
        std = float(np.std(f, ddof=1)) if f.size > 1 else 0.0
        return cls(a, mean, std, std / math.sqrt(f.size), 1.0 - mean, dict(metadata or {}))

    @property
    def a_bar(self) -> complex:
        return complex(np.mean(self.amplitudes))

    def to_dict(self) -> dict:
        return {
            "fidelity_mean": self.fidelity_mean,
            "fidelity_std": self.fidelity_std,
            "fidelity_sem": self.fidelity_sem,
            "infidelity": self.infidelity,
            "amplitudes": [[float(z.real), float(z.imag)] for z in self.amplitudes],
            "metadata": self.metadata,
        }


class _Context:
    """Per-process state shared by all trajectories of one configuration."""

    def __init__(self, cfg: EnsembleConfig, schedule: Schedule | None = None):
        self.cfg = cfg
        self.schedule = schedule if schedule is not None else qft_schedule(cfg.n_qubits)
        self.model = arma_from_ou(cfg.ou)
        self.input_state = cfg.input_state()
        self.ideal_state = simulate(self.schedule, self.input_state.copy())

    def angles(self, index: int, steps: int) -> np.ndarray:
        return generate_trajectory(self.model, self.cfg.n_qubits, steps, self.cfg.master_seed,
                                   index, NOISE_STREAM).angles

    def amplitude(self, index: int) -> complex:
        state = self.input_state.copy()
        simulate_noisy(self.schedule, self.angles(index, self.schedule.depth), state,
                       self.cfg.angle_convention)
        return inner(self.ideal_state, state)


def run_trajectory(cfg: EnsembleConfig, schedule: Schedule | None, ideal_state: MPS | None,
                   trajectory_index: int) -> complex:
    """Amplitude ``<psi_ideal | U_noisy | eta>`` for one trajectory."""
    ctx = _Context(cfg, schedule)
    if ideal_state is not None:
        ctx.ideal_state = ideal_state
    return ctx.amplitude(trajectory_index)


_WORKER: dict = {}


def _init_worker(kind, cfg, schedule, extra):
    if kind == "fidelity":
        _WORKER["ctx"] = _Context(cfg, schedule)
    else:
        _WORKER["ctx"] = _BenchContext(cfg, extra)


def _fidelity_chunk(indices):
    ctx = _WORKER["ctx"]
    return [ctx.amplitude(i) for i in indices]


def _bench_chunk(indices):
    ctx = _WORKER["ctx"]
    return [ctx.run(i) for i in indices]


def _chunks(n: int, workers: int) -> list[list[int]]:
    size = max(1, math.ceil(n / (4 * workers)))
    return [list(range(i, min(n, i + size))) for i in range(0, n, size)]


def _map(kind, cfg, schedule, extra, func, workers: int) -> list:
    n = cfg.n_traj
    if workers <= 1 or n == 1:
        _init_worker(kind, cfg, schedule, extra)
        try:
            return func(list(range(n)))
        finally:
            _WORKER.clear()
    out = []
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=(kind, cfg, schedule, extra)) as pool:
        # map preserves submission order, so the reduction order is fixed
        for part in pool.map(func, _chunks(n, workers)):
            out.extend(part)
    return out


def run_ensemble(cfg: EnsembleConfig, schedule: Schedule | None = None, workers: int = 1) -> EnsembleResult:
    """Average fidelity of ``n_traj`` noisy runs against the noiseless output."""
    sched = schedule if schedule is not None else qft_schedule(cfg.n_qubits)
    amps = _map("fidelity", cfg, sched, None, _fidelity_chunk, workers)
    meta = {
        "N": cfg.n_qubits,
        "D": sched.depth,
        "P_tot": cfg.p_tot,
        "regime": cfg.regime,
        "n_t": cfg.n_traj,
        "seed": cfg.master_seed,
        "sigma": cfg.ou.sigma,
        "alpha": cfg.ou.alpha(cfg.t_g),
        "config": cfg.to_dict(),
    }
    return EnsembleResult.from_amplitudes(amps, meta)


class _BenchContext:
    def __init__(self, cfg: EnsembleConfig, n_samples: int):
        if cfg.input_kind != "product":
            raise ValueError("the return-probability benchmark needs a product input state")
        self.cfg = cfg
        self.n_samples = n_samples
        self.bits = cfg.input_bits()
        self.forward = qft_schedule(cfg.n_qubits)
        self.inverse = inverse_schedule(self.forward)
        self.model = arma_from_ou(cfg.ou)
        self.input_state = cfg.input_state()
        self.ideal_forward = simulate(self.forward, self.input_state.copy())

    def run(self, index: int):
        cfg = self.cfg
        depth = self.forward.depth
        if cfg.noise_both_halves:
            # one continuous stream per qubit across both halves
            ang = generate_trajectory(self.model, cfg.n_qubits, 2 * depth, cfg.master_seed,
                                      index, NOISE_STREAM).angles
            state = simulate_noisy(self.forward, ang, self.input_state.copy(), cfg.angle_convention)
            simulate_noisy(self.inverse, ang, state, cfg.angle_convention, slot_offset=depth)
        else:
            ang = generate_trajectory(self.model, cfg.n_qubits, depth, cfg.master_seed,
                                      index, NOISE_STREAM).angles
            state = simulate_noisy(self.inverse, ang, self.ideal_forward.copy(), cfg.angle_convention)
        amp = state.amplitude(self.bits)
        state.normalize()
        seed = np.random.SeedSequence(cfg.master_seed, spawn_key=(index, 0, SAMPLING_STREAM))
        samples = sample_bitstrings(state, self.n_samples, seed)
        return amp, samples.counts


@dataclass
class BenchmarkResult:
    samples: BitstringSampleSet
    sampled_infidelity: float
    exact: EnsembleResult
    input_bits: str

    def __iter__(self):
        # unpacks as (samples, I_s)
        return iter((self.samples, self.sampled_infidelity))

    @property
    def exact_infidelity(self) -> float:
        return self.exact.infidelity


def return_probability_benchmark(cfg: EnsembleConfig, n_samples_per_traj: int,
                                 workers: int = 1) -> BenchmarkResult:
    """Sample ``U_noisy^dagger U |nu>`` and pool counts over trajectories.

    ``I_s`` is one minus the pooled frequency of ``nu``. The exact return
    amplitudes of the same trajectories are kept alongside.
    """
    parts = _map("bench", cfg, None, n_samples_per_traj, _bench_chunk, workers)
    pooled = BitstringSampleSet()
    amps = []
    for amp, counts in parts:
        amps.append(amp)
        pooled.counts.update(counts)
    bits = cfg.input_bits()
    i_s = 1.0 - pooled.frequency(bits)
    depth = qft_schedule(cfg.n_qubits).depth
    meta = {"N": cfg.n_qubits, "D": depth * (2 if cfg.noise_both_halves else 1),
            "P_tot": cfg.p_tot, "regime": cfg.regime, "n_t": cfg.n_traj,
            "seed": cfg.master_seed, "samples_per_traj": n_samples_per_traj,
            "config": cfg.to_dict()}
    return BenchmarkResult(pooled, i_s, EnsembleResult.from_amplitudes(amps, meta), bits)
