"""Time-correlated dephasing angle streams.

An Ornstein-Uhlenbeck (OU) process sampled once per gate time is an exact
AR(1) series. This module maps OU parameters onto that series, generates
per-qubit angle trajectories with counter-style seeding, and provides the
spectral and power bookkeeping used to set up noise sweeps.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import signal

from . import kernels

DEFAULT_GATE_TIME = 100e-9
ANGLE_CONVENTIONS = ("half", "full")


class ParameterError(ValueError):
    """Raised for invalid noise-model parameters."""


def _finite_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ParameterError(f"{name} must be finite and > 0, got {value!r}")
    return value


@dataclass(frozen=True)
class OUParams:
    """Parameters of ``dx = theta (mu - x) dt + sigma dW``.

    ``sigma`` is in rad/sqrt(s), ``theta`` in 1/s, ``mu`` in rad and ``dt``
    (the sampling step, one gate time by default) in s.
    """

    sigma: float
    theta: float
    mu: float = 0.0
    dt: float = DEFAULT_GATE_TIME

    def __post_init__(self):
        _finite_positive("theta", self.theta)
        _finite_positive("dt", self.dt)
        if not math.isfinite(self.sigma) or self.sigma < 0.0:
            raise ParameterError(f"sigma must be finite and >= 0, got {self.sigma!r}")
        if not math.isfinite(self.mu):
            raise ParameterError(f"mu must be finite, got {self.mu!r}")

    @classmethod
    def from_alpha(cls, sigma: float, alpha: float, t_g: float = DEFAULT_GATE_TIME,
                   mu: float = 0.0, dt: float | None = None) -> "OUParams":
        """Build from a correlation time given in gate times, ``tau = alpha * t_g``."""
        alpha = _finite_positive("alpha", alpha)
        t_g = _finite_positive("t_g", t_g)
        return cls(sigma=sigma, theta=1.0 / (alpha * t_g), mu=mu,
                   dt=t_g if dt is None else dt)

    @property
    def tau(self) -> float:
        return 1.0 / self.theta

    def alpha(self, t_g: float = DEFAULT_GATE_TIME) -> float:
        return self.tau / t_g

    @property
    def stationary_variance(self) -> float:
        return self.sigma**2 / (2.0 * self.theta)


@dataclass(frozen=True)
class ArmaModel:
    """ARMA(p, q) recursion ``y_k = sum_i r_i y_{k-i} + sum_j w_j x_{k-j}``.

    The inputs ``x`` are i.i.d. ``N(0, innovation_std**2)``; ``mean`` offsets
    the whole series.
    """

    ar_coeffs: tuple[float, ...]
    ma_coeffs: tuple[float, ...]
    innovation_std: float
    dt: float
    mean: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "ar_coeffs", tuple(float(r) for r in self.ar_coeffs))
        object.__setattr__(self, "ma_coeffs", tuple(float(w) for w in self.ma_coeffs))
        if len(self.ma_coeffs) < 1:
            raise ParameterError("ma_coeffs needs at least the lag-0 coefficient")
        if not math.isfinite(self.innovation_std) or self.innovation_std < 0.0:
            raise ParameterError("innovation_std must be finite and >= 0")
        _finite_positive("dt", self.dt)
        if self.ar_coeffs and np.max(np.abs(self._ar_roots())) >= 1.0:
            raise ParameterError(f"AR part is not stable: {self.ar_coeffs}")

    @property
    def p(self) -> int:
        return len(self.ar_coeffs)

    @property
    def q(self) -> int:
        return len(self.ma_coeffs) - 1

    def _ar_roots(self) -> np.ndarray:
        # roots of z^p - r_1 z^{p-1} - ... - r_p
        return np.roots(np.r_[1.0, -np.asarray(self.ar_coeffs)])

    def filter_coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        """(b, a) in the convention of :func:`scipy.signal.lfilter`."""
        return np.asarray(self.ma_coeffs), np.r_[1.0, -np.asarray(self.ar_coeffs)]

    def stationary_variance(self) -> float:
        """Variance of the stationary series, from the impulse response."""
        if self.p == 1 and self.q == 0:
            r = self.ar_coeffs[0]
            return (self.innovation_std * self.ma_coeffs[0]) ** 2 / (1.0 - r * r)
        b, a = self.filter_coeffs()
        n = self._burn_in() * 4 + 64
        h = signal.lfilter(b, a, np.r_[1.0, np.zeros(n - 1)])
        return self.innovation_std**2 * float(h @ h)

    def _burn_in(self) -> int:
        if not self.ar_coeffs:
            return self.q + 1
        rho = float(np.max(np.abs(self._ar_roots())))
        if rho < 1e-300:
            return self.p + self.q + 1
        # decay the transient below 1e-16 of its start
        return int(math.ceil(-37.0 / math.log(rho))) + self.p + self.q


def arma_from_ou(params: OUParams) -> ArmaModel:
    """Exact AR(1) discretization of an OU process on a grid of step ``dt``.

    ``r_1 = exp(-theta dt)``; the lag-0 weight ``sigma^2 (1 - r_1^2) / (2 theta)``
    is used as the innovation *variance*, which keeps the stationary variance
    at ``sigma^2 / (2 theta)``.
    """
    if not isinstance(params, OUParams):
        raise ParameterError("expected OUParams")
    omega = math.exp(-params.theta * params.dt)
    # -expm1(-2 theta dt) keeps precision when theta dt is tiny
    innovation_var = params.sigma**2 * -math.expm1(-2.0 * params.theta * params.dt) / (2.0 * params.theta)
    return ArmaModel(ar_coeffs=(omega,), ma_coeffs=(1.0,),
                     innovation_std=math.sqrt(innovation_var), dt=params.dt,
                     mean=params.mu)


@dataclass
class NoiseTrajectory:
    """Angles in radians, shape ``(qubits, steps)``; row ``q`` is qubit ``q``."""

    angles: np.ndarray
    master_seed: int
    trajectory_index: int
    stream: int = 0
    seed_info: dict = field(default_factory=dict)

    @property
    def n_qubits(self) -> int:
        return self.angles.shape[0]

    @property
    def n_steps(self) -> int:
        return self.angles.shape[1]

    def to_csv(self, path) -> None:
        """Write ``qubit,slot,angle_rad`` rows."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["qubit", "slot", "angle_rad"])
            for q, row in enumerate(self.angles):
                for i, y in enumerate(row):
                    writer.writerow([q, i, repr(float(y))])

    @classmethod
    def from_csv(cls, path, master_seed: int = -1, trajectory_index: int = -1) -> "NoiseTrajectory":
        rows = []
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                rows.append((int(rec["qubit"]), int(rec["slot"]), float(rec["angle_rad"])))
        n_q = 1 + max(r[0] for r in rows)
        n_s = 1 + max(r[1] for r in rows)
        angles = np.zeros((n_q, n_s))
        for q, i, y in rows:
            angles[q, i] = y
        return cls(angles, master_seed, trajectory_index)


def stream_rng(master_seed: int, trajectory_index: int, qubit: int, stream: int = 0) -> np.random.Generator:
    """Generator keyed by ``(master_seed, trajectory_index, qubit, stream)``.

    Keys map to independent streams regardless of the order in which they are
    requested, so work can be split across processes freely.
    """
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(trajectory_index), int(qubit), int(stream)))
    return np.random.Generator(np.random.PCG64(seq))


def _generate_stream(model: ArmaModel, steps: int, rng: np.random.Generator) -> np.ndarray:
    if steps == 0:
        return np.zeros(0)
    sd = model.innovation_std
    if model.p == 1 and model.q == 0:
        r = model.ar_coeffs[0]
        w0 = model.ma_coeffs[0]
        # start in the stationary distribution
        y0 = rng.standard_normal() * sd * abs(w0) / math.sqrt(1.0 - r * r)
        if steps == 1:
            return np.array([y0 + model.mean])
        x = rng.standard_normal(steps - 1) * (sd * w0)
        return kernels.ar1_filter(x, r, y0) + model.mean
    burn = model._burn_in()
    b, a = model.filter_coeffs()
    x = rng.standard_normal(steps + burn) * sd
    return signal.lfilter(b, a, x)[burn:] + model.mean


def generate_trajectory(model: ArmaModel, qubits: int, steps: int, master_seed: int,
                        trajectory_index: int, stream: int = 0) -> NoiseTrajectory:
    """Sample one independent angle series per qubit.

    Each row is deterministic in ``(master_seed, trajectory_index, qubit, stream)``.
    """
    if qubits < 1:
        raise ParameterError("qubits must be >= 1")
    if steps < 0:
        raise ParameterError("steps must be >= 0")
    angles = np.empty((qubits, steps))
    for q in range(qubits):
        angles[q] = _generate_stream(model, steps, stream_rng(master_seed, trajectory_index, q, stream))
    return NoiseTrajectory(angles, int(master_seed), int(trajectory_index), int(stream),
                           seed_info={"master_seed": int(master_seed),
                                      "trajectory_index": int(trajectory_index),
                                      "stream": int(stream)})


def analytic_psd(model: ArmaModel, omega):
    """Two-sided PSD of the series at angular frequency ``omega`` (rad/s).

    Normalized so that integrating over ``[-pi/dt, pi/dt]`` returns ``2 pi``
    times the variance, the same convention as ``sigma^2 / (theta^2 + omega^2)``
    for the continuous OU process.
    """
    w = np.asarray(omega, dtype=float) * model.dt
    z = np.exp(-1j * np.multiply.outer(w, np.arange(max(model.p, model.q) + 1)))
    num = z[..., : model.q + 1] @ np.asarray(model.ma_coeffs)
    den = 1.0 - z[..., 1: model.p + 1] @ np.asarray(model.ar_coeffs) if model.p else 1.0
    out = model.dt * model.innovation_std**2 * np.abs(num) ** 2 / np.abs(den) ** 2
    return float(out) if np.ndim(out) == 0 else out


def ou_lorentzian(params: OUParams, omega):
    """Continuous OU spectrum ``sigma^2 / (theta^2 + omega^2)``."""
    return params.sigma**2 / (params.theta**2 + np.asarray(omega, dtype=float) ** 2)


def noise_power_1q(params: OUParams, t_g: float = DEFAULT_GATE_TIME) -> float:
    """Integrated single-qubit noise power ``sigma^2 pi / theta``.

    Equal to ``sigma^2 pi alpha t_g`` with ``alpha = tau / t_g``; ``t_g`` only
    enters through that identity.
    """
    return params.sigma**2 * math.pi / params.theta


def total_power(n_qubits: int, p1q: float) -> float:
    return n_qubits * p1q


def integrated_power(p_tot: float, depth: int) -> float:
    """Time-integrated power (noise work) over ``depth`` gate times."""
    return depth * p_tot


def solve_alpha_for_power(p_tot: float, n_qubits: int, sigma_c: float,
                          t_g: float = DEFAULT_GATE_TIME) -> float:
    """Correlation time (in gate times) giving total power ``p_tot`` at fixed sigma."""
    if not (math.isfinite(sigma_c) and sigma_c > 0):
        raise ParameterError(f"sigma_c must be > 0, got {sigma_c!r}")
    _finite_positive("t_g", t_g)
    return p_tot / (math.pi * t_g * n_qubits * sigma_c**2)


def solve_sigma_for_power(p_tot: float, n_qubits: int, alpha_c: float,
                          t_g: float = DEFAULT_GATE_TIME) -> float:
    """Noise strength giving total power ``p_tot`` at fixed correlation time."""
    if not (math.isfinite(alpha_c) and alpha_c > 0):
        raise ParameterError(f"alpha_c must be > 0, got {alpha_c!r}")
    _finite_positive("t_g", t_g)
    return math.sqrt(p_tot / (math.pi * t_g * n_qubits * alpha_c))


def dephasing_gate(y: float, angle_convention: str = "half") -> np.ndarray:
    """Dephasing unitary for a sampled angle ``y``.

    ``half``: ``exp(-i y Z / 2)``; ``full``: ``diag(exp(-i y), exp(i y))``.
    """
    return rz_matrix(rz_angle(y, angle_convention))


def rz_angle(y: float, angle_convention: str = "half") -> float:
    """Map a sampled angle to the argument of ``exp(-i theta Z / 2)``."""
    if angle_convention == "half":
        return y
    if angle_convention == "full":
        return 2.0 * y
    raise ParameterError(f"angle_convention must be one of {ANGLE_CONVENTIONS}, got {angle_convention!r}")


def rz_matrix(theta: float) -> np.ndarray:
    h = 0.5 * theta
    return np.array([[np.exp(-1j * h), 0.0], [0.0, np.exp(1j * h)]], dtype=complex)


def sample_autocorrelation(x: np.ndarray, max_lag: int, mean: float | None = None) -> np.ndarray:
    """Autocorrelation at lags ``0..max_lag``; uses ``mean`` if known."""
    x = np.asarray(x, dtype=float)
    d = x - (x.mean() if mean is None else mean)
    c0 = d @ d
    return np.array([1.0] + [(d[:-k] @ d[k:]) / c0 for k in range(1, max_lag + 1)])


def welch_psd(x: np.ndarray, dt: float, nperseg: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """Two-sided Welch estimate on ``omega >= 0``, same normalization as :func:`analytic_psd`."""
    f, pxx = signal.welch(x, fs=1.0 / dt, nperseg=nperseg, return_onesided=True, detrend=False)
    # one-sided density doubles every bin except DC (and Nyquist for even nperseg)
    pxx = pxx.copy()
    pxx[1:-1] *= 0.5
    return 2.0 * np.pi * f, pxx


def stationary_check_stats(streams: Sequence[np.ndarray], mean: float, max_lag: int):
    """Pooled (variance, autocorrelation) over independent streams with a known mean."""
    num = np.zeros(max_lag + 1)
    cnt = np.zeros(max_lag + 1)
    for x in streams:
        d = np.asarray(x, dtype=float) - mean
        num[0] += d @ d
        cnt[0] += d.size
        for k in range(1, max_lag + 1):
            num[k] += d[:-k] @ d[k:]
            cnt[k] += d.size - k
    cov = num / cnt
    return cov[0], cov / cov[0]
