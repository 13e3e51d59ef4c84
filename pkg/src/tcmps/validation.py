"""Self-checks against independent references.

Each suite returns a :class:`SuiteReport`; ``run_all`` is what
``tcmps validate`` executes. The dense-oracle paths never call the fused MPS
kernels, so agreement between the two is a genuine cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import bound_check, delta_norm
from .circuit import bind_noise, qft_schedule, simulate, simulate_noisy
from .dense import DenseOracle, basis_state, dft_matrix
from .mps import inner, product_state, random_mps
from .noise import (OUParams, arma_from_ou, generate_trajectory, solve_sigma_for_power,
                    stationary_check_stats, welch_psd)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class SuiteReport:
    name: str
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(name, bool(passed), detail))

    def lines(self) -> list[str]:
        out = [f"[{'PASS' if self.ok else 'FAIL'}] {self.name}"]
        for c in self.checks:
            out.append(f"    {'ok ' if c.passed else 'BAD'} {c.name}: {c.detail}")
        return out


# -- noise statistics ------------------------------------------------------


def ar1_autocorr_sigma(omega: float, k: int, n: float) -> float:
    """Bartlett standard error of the lag-``k`` sample autocorrelation of an AR(1) series."""
    w2 = omega * omega
    var = ((1 + w2) * (1 - w2**k) / (1 - w2) - 2 * k * w2**k) / n
    return math.sqrt(max(var, 0.0))


def tail_slope(omega: np.ndarray, psd: np.ndarray, lo: float, hi: float) -> float:
    sel = (omega >= lo) & (omega <= hi) & (psd > 0)
    return float(np.polyfit(np.log(omega[sel]), np.log(psd[sel]), 1)[0])


def noise_statistics_suite(sigma: float = 0.1, theta: float = 1e4, dt: float = 1e-7,
                           steps: int = 10**6, streams: int = 64, seed: int = 0,
                           max_lag: int = 20, omega_scale: float = 1.0) -> SuiteReport:
    """Variance, autocorrelation, spectral tail and cross-stream independence.

    Statistics pool ``streams`` independent qubit streams of ``steps`` each.
    ``omega_scale`` multiplies the AR coefficient used for generation and
    exists only so the canaries can inject a wrong correlation time.
    """
    rep = SuiteReport(f"noise statistics ({streams} x {steps} steps)")
    ou = OUParams(sigma, theta, 0.0, dt)
    model = arma_from_ou(ou)
    if omega_scale != 1.0:
        r = min(0.999999, model.ar_coeffs[0] * omega_scale)
        model = type(model)((r,), model.ma_coeffs, model.innovation_std, dt, model.mean)
    traj = generate_trajectory(model, streams, steps, seed, 0)
    x = traj.angles
    omega = math.exp(-theta * dt)

    var, rho = stationary_check_stats(x, 0.0, max_lag)
    target = ou.stationary_variance
    rel = abs(var - target) / target
    rep.add("variance within 3% of sigma^2/(2 theta)", rel <= 0.03,
            f"sample {var:.6e}, analytic {target:.6e}, rel {rel:.4f}")

    worst = 0.0
    for k in range(1, max_lag + 1):
        se = ar1_autocorr_sigma(omega, k, streams * (steps - k))
        worst = max(worst, abs(rho[k] - omega**k) / se)
    rep.add("lag-k autocorrelation within 5 sigma of Omega^k (k <= 20)", worst <= 5.0,
            f"worst |z| = {worst:.2f}")

    w = None
    acc = None
    for row in x:
        w, p = welch_psd(row, dt)
        acc = p if acc is None else acc + p
    slope = tail_slope(w, acc / len(x), 10 * theta, 0.1 / dt)
    rep.add("periodogram tail slope -2 +/- 0.15", abs(slope + 2) <= 0.15, f"slope {slope:.4f}")

    # independence of the first two streams, effective sample size from the AR(1) memory
    c = float(np.dot(x[0], x[1]) / math.sqrt(np.dot(x[0], x[0]) * np.dot(x[1], x[1])))
    se = math.sqrt((1 + omega**2) / (1 - omega**2) / steps)
    rep.add("cross-stream correlation within 5 sigma of 0", abs(c) <= 5 * se,
            f"corr {c:.4e}, sigma {se:.2e}")
    return rep


# -- dense oracle equivalence -----------------------------------------------


def dense_amplitudes(n: int, ou: OUParams, n_traj: int, master_seed: int, eta: np.ndarray,
                     angle_convention: str = "half") -> np.ndarray:
    """``<U eta | U_l eta>`` per trajectory, gate by gate on a dense vector."""
    sched = qft_schedule(n)
    oracle = DenseOracle(n)
    ideal = oracle.run(sched, eta)
    model = arma_from_ou(ou)
    out = np.empty(n_traj, dtype=complex)
    for l in range(n_traj):
        traj = generate_trajectory(model, n, sched.depth, master_seed, l)
        noisy = oracle.run(bind_noise(sched, traj, angle_convention), eta)
        out[l] = np.vdot(ideal, noisy)
    return out


def mps_amplitudes(n: int, ou: OUParams, n_traj: int, master_seed: int, state,
                   cutoff: float, angle_convention: str = "half", sign_flip: bool = False) -> np.ndarray:
    sched = qft_schedule(n)
    model = arma_from_ou(ou)
    state = state.copy()
    state.cutoff = cutoff
    ideal = simulate(sched, state.copy())
    out = np.empty(n_traj, dtype=complex)
    for l in range(n_traj):
        ang = generate_trajectory(model, n, sched.depth, master_seed, l).angles
        if sign_flip:
            ang = -ang
        out[l] = inner(ideal, simulate_noisy(sched, ang, state.copy(), angle_convention))
    return out


def dense_equivalence_suite(n: int = 8, n_traj: int = 50, master_seed: int = 0, chi: int = 4,
                            input_seed: int = 0, sign_flip: bool = False) -> SuiteReport:
    """MPS amplitudes against the dense oracle, at the default cutoff and at cutoff 0."""
    rep = SuiteReport(f"dense-oracle equivalence (N={n}, {n_traj} trajectories)")
    ou = OUParams.from_alpha(0.3, 5.0)
    state = random_mps(n, chi, input_seed)
    ref = dense_amplitudes(n, ou, n_traj, master_seed, state.to_dense())
    for cutoff, tol in ((1e-14, 1e-8), (0.0, 1e-12)):
        got = mps_amplitudes(n, ou, n_traj, master_seed, state, cutoff, sign_flip=sign_flip)
        err = float(np.max(np.abs(got - ref)))
        rep.add(f"cutoff {cutoff:g}: max |a_mps - a_dense| <= {tol:g}", err <= tol, f"{err:.3e}")
    return rep


def qft_suite(max_dense: int = 6, mps_n: int = 12) -> SuiteReport:
    rep = SuiteReport("QFT correctness")
    worst = 0.0
    for n in range(1, max_dense + 1):
        u = DenseOracle(n).unitary(qft_schedule(n))
        worst = max(worst, float(np.max(np.abs(u - dft_matrix(n)))))
    rep.add(f"dense QFT equals DFT for N <= {max_dense}", worst <= 1e-10, f"max err {worst:.3e}")
    state = simulate(qft_schedule(mps_n), product_state("0" * mps_n))
    amps = state.to_dense()
    err = float(np.max(np.abs(amps - 2 ** (-mps_n / 2))))
    rep.add(f"MPS QFT of |0...0> is uniform at N = {mps_n}", err <= 1e-10, f"max err {err:.3e}")
    return rep


# -- bound chain ------------------------------------------------------------


@dataclass
class BoundInstance:
    n: int
    n_traj: int
    fidelity: float
    a_bar: complex
    delta_frobenius: float
    delta_spectral: float


def bound_instance(n: int, ou: OUParams, n_traj: int, master_seed: int, eta: np.ndarray,
                   angle_convention: str = "half") -> BoundInstance:
    """Everything in the bound chain from dense unitaries of one ensemble."""
    sched = qft_schedule(n)
    oracle = DenseOracle(n)
    u = oracle.unitary(sched)
    model = arma_from_ou(ou)
    noisy = [oracle.unitary(bind_noise(sched, generate_trajectory(model, n, sched.depth, master_seed, l),
                                       angle_convention))
             for l in range(n_traj)]
    ideal = u @ eta
    amps = np.array([np.vdot(ideal, v @ eta) for v in noisy])
    dn = delta_norm(u, noisy)
    return BoundInstance(n, n_traj, float(np.mean(np.abs(amps) ** 2)), complex(np.mean(amps)),
                         dn.frobenius, dn.spectral)


def random_bound_configs(count: int, seed: int = 0, max_n: int = 6):
    """Random (N, OU, n_traj, seed, eta) tuples covering weak to strong noise."""
    rng = np.random.default_rng(seed)
    for i in range(count):
        n = int(rng.integers(1, max_n + 1))
        p_tot = float(10 ** rng.uniform(-4, 1))
        alpha = float(10 ** rng.uniform(-1, 3))
        sigma = solve_sigma_for_power(p_tot, n, alpha)
        n_traj = int(rng.integers(2, 17))
        if rng.random() < 0.5:
            eta = basis_state(rng.integers(0, 2, n))
        else:
            eta = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
            eta /= np.linalg.norm(eta)
        yield n, OUParams.from_alpha(sigma, alpha), n_traj, int(rng.integers(2**31)), eta


def bound_suite(count: int = 100, seed: int = 0, max_n: int = 6, delta_scale: float = 1.0) -> SuiteReport:
    """``F >= |a_bar|^2``, ``|1 - a_bar| <= delta`` and ``I <= 2 delta - delta^2``.

    ``delta_scale`` shrinks delta for the canaries.
    """
    rep = SuiteReport(f"bound chain ({count} random configurations, N <= {max_n})")
    bad = []
    min_margin = math.inf
    for k, (n, ou, n_traj, s, eta) in enumerate(random_bound_configs(count, seed, max_n)):
        inst = bound_instance(n, ou, n_traj, s, eta)
        r = bound_check(inst.fidelity, inst.a_bar, inst.delta_frobenius * delta_scale, strict=False)
        min_margin = min(min_margin, r.variance_margin, r.amplitude_margin, r.infidelity_margin)
        if not r.ok:
            bad.append(f"#{k}: " + "; ".join(r.failures()))
    rep.add("all instances satisfy the chain", not bad,
            f"smallest margin {min_margin:.3e}" if not bad else " | ".join(bad[:3]))
    return rep


# -- canaries ---------------------------------------------------------------


def canary_suite() -> SuiteReport:
    """Deliberately broken inputs that the suites above must reject."""
    rep = SuiteReport("seeded-perturbation canaries")
    r = dense_equivalence_suite(n=6, n_traj=5, sign_flip=True)
    rep.add("flipped noise sign breaks dense equivalence", not r.ok,
            "detected" if not r.ok else "NOT detected")
    r = noise_statistics_suite(steps=2 * 10**5, streams=8, omega_scale=0.999)
    rep.add("wrong AR coefficient breaks noise statistics", not r.ok,
            "detected" if not r.ok else "NOT detected")
    r = bound_suite(count=20, delta_scale=0.25)
    rep.add("shrunken delta breaks the bound chain", not r.ok,
            "detected" if not r.ok else "NOT detected")
    return rep


def run_all(quick: bool = False) -> list[SuiteReport]:
    if quick:
        return [qft_suite(4, 8), dense_equivalence_suite(6, 10),
                noise_statistics_suite(), bound_suite(20)]
    return [qft_suite(), dense_equivalence_suite(), noise_statistics_suite(), bound_suite(),
            canary_suite()]
