"""Power-law fits of infidelity data, scale prediction and operator-norm bounds."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SATURATION_WARN = 0.9


class FitError(ValueError):
    pass


class BoundViolation(AssertionError):
    def __init__(self, report: "BoundReport"):
        super().__init__(f"bound chain violated: {report.failures()}")
        self.report = report


class SaturationWarning(UserWarning):
    """Prediction is in the regime where infidelity saturates towards 1."""


@dataclass
class PowerLawFit:
    """``I = prefactor * P**exponents[0] * D**exponents[1]``.

    ``std_errors`` is ``(d_prefactor, d_exponent, ...)``; ``covariance`` is
    over ``(log prefactor, exponents...)``.
    """

    prefactor: float
    exponents: tuple[float, ...]
    std_errors: tuple[float, ...]
    covariance: np.ndarray
    fit_domain: dict = field(default_factory=dict)

    @property
    def xi(self) -> float:
        return self.exponents[0]

    @property
    def upsilon(self) -> float:
        return self.exponents[1] if len(self.exponents) > 1 else 0.0

    @property
    def d_prefactor(self) -> float:
        return self.std_errors[0]

    @property
    def d_xi(self) -> float:
        return self.std_errors[1]

    @property
    def d_upsilon(self) -> float:
        return self.std_errors[2] if len(self.std_errors) > 2 else 0.0

    def evaluate(self, p, d=1.0, shift: float = 0.0):
        """Power law with every parameter moved by ``shift`` standard errors."""
        lam = self.prefactor + shift * self.d_prefactor
        xi = self.xi + shift * self.d_xi
        ups = self.upsilon + shift * self.d_upsilon
        return lam * np.power(p, xi) * np.power(d, ups)

    def to_dict(self) -> dict:
        return {"prefactor": self.prefactor, "exponents": list(self.exponents),
                "std_errors": list(self.std_errors),
                "covariance": np.asarray(self.covariance).tolist(),
                "fit_domain": self.fit_domain}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "PowerLawFit":
        return cls(float(d["prefactor"]), tuple(d["exponents"]), tuple(d["std_errors"]),
                   np.asarray(d.get("covariance", np.zeros((1, 1)))), dict(d.get("fit_domain", {})))

    @classmethod
    def from_json(cls, text: str) -> "PowerLawFit":
        return cls.from_dict(json.loads(text))


def _ols(x: np.ndarray, y: np.ndarray, sigma: np.ndarray | None):
    """Least squares ``y ~ x @ beta`` with the residual-scaled covariance."""
    n, k = x.shape
    w = np.ones(n) if sigma is None else 1.0 / np.asarray(sigma, dtype=float) ** 2
    sw = np.sqrt(w)
    xw, yw = x * sw[:, None], y * sw
    if np.linalg.matrix_rank(xw) < k:
        raise FitError("degenerate design matrix")
    beta, *_ = np.linalg.lstsq(xw, yw, rcond=None)
    resid = yw - xw @ beta
    dof = n - k
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.inv(xw.T @ xw)
    return beta, cov


def _prepare(points, ncols: int):
    arr = np.asarray([tuple(p)[:ncols] for p in points], dtype=float)
    if arr.ndim != 2 or arr.shape[1] < ncols:
        raise FitError("bad point format")
    return arr


def fit_power_law_1d(points: Iterable[Sequence[float]], weighted: bool = False) -> PowerLawFit:
    """Fit ``I = lambda P**xi`` to ``(P, I[, I_err])`` tuples on log-log axes."""
    pts = [tuple(p) for p in points]
    if len(pts) < 3:
        raise FitError("need at least 3 points")
    arr = np.asarray([(p[0], p[1], p[2] if len(p) > 2 else np.nan) for p in pts], dtype=float)
    pw, inf, err = arr.T
    if np.any(pw <= 0) or np.any(inf <= 0) or np.any(inf >= 1):
        raise FitError("need P > 0 and 0 < I < 1")
    if np.unique(pw).size < 2:
        raise FitError("need at least two distinct powers")
    x = np.column_stack([np.ones_like(pw), np.log(pw)])
    sigma = _log_sigma(inf, err) if weighted else None
    beta, cov = _ols(x, np.log(inf), sigma)
    lam = math.exp(beta[0])
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    dom = {"P": [float(pw.min()), float(pw.max())], "n_points": len(pts),
           "weighted": weighted, "dims": 1}
    return PowerLawFit(lam, (float(beta[1]),), (lam * se[0], float(se[1])), cov, dom)


def _log_sigma(inf, err):
    if np.any(~np.isfinite(err)) or np.any(err <= 0):
        raise FitError("weighted fits need positive I_err for every point")
    return err / inf


def fit_power_law_2d(points: Iterable[Sequence[float]], weighted: bool = False) -> PowerLawFit:
    """Fit ``I = Lambda P**Xi D**Upsilon`` to ``(P, D, I[, I_err])`` tuples."""
    pts = [tuple(p) for p in points]
    if len(pts) < 4:
        raise FitError("need at least 4 points")
    arr = np.asarray([(p[0], p[1], p[2], p[3] if len(p) > 3 else np.nan) for p in pts], dtype=float)
    pw, dd, inf, err = arr.T
    if np.any(pw <= 0) or np.any(dd <= 0) or np.any(inf <= 0) or np.any(inf >= 1):
        raise FitError("need P > 0, D > 0 and 0 < I < 1")
    if np.unique(dd).size < 2:
        raise FitError("all points share one depth; use fit_power_law_1d")
    x = np.column_stack([np.ones_like(pw), np.log(pw), np.log(dd)])
    sigma = _log_sigma(inf, err) if weighted else None
    beta, cov = _ols(x, np.log(inf), sigma)
    lam = math.exp(beta[0])
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    dom = {"P": [float(pw.min()), float(pw.max())], "D": [float(dd.min()), float(dd.max())],
           "N": [math.isqrt(int(dd.min())), math.isqrt(int(dd.max()))],
           "n_points": len(pts), "weighted": weighted, "dims": 2}
    return PowerLawFit(lam, (float(beta[1]), float(beta[2])),
                       (lam * se[0], float(se[1]), float(se[2])), cov, dom)


@dataclass
class Prediction:
    infidelity: float
    lower: float
    upper: float
    saturated: bool = False

    def __iter__(self):
        return iter((self.infidelity, self.lower, self.upper))


def predict_infidelity(fit: PowerLawFit, p: float, d: float = 1.0) -> Prediction:
    """Central value plus the all-minus / all-plus one-sigma parameter sets.

    Values are clamped to 1; a :class:`SaturationWarning` is raised when the
    central prediction exceeds 0.9, where the power law stops being reliable.
    """
    if p <= 0:
        raise FitError("P must be > 0")
    mid = float(fit.evaluate(p, d))
    lo = float(fit.evaluate(p, d, -1.0))
    hi = float(fit.evaluate(p, d, +1.0))
    sat = mid > SATURATION_WARN
    if sat:
        warnings.warn(f"predicted infidelity {mid:.3g} is in the saturation regime", SaturationWarning,
                      stacklevel=2)
    return Prediction(min(mid, 1.0), min(lo, 1.0), min(hi, 1.0), sat)


def estimate_p0(fit: PowerLawFit, target_infidelity: float, d: float = 1.0) -> float:
    """Total power at which the central fit reaches ``target_infidelity``."""
    if not 0.0 < target_infidelity < 1.0:
        raise FitError("target infidelity must be in (0, 1)")
    if not math.isfinite(fit.xi) or fit.xi <= 0:
        raise FitError(f"cannot invert a power law with exponent {fit.xi}")
    return (target_infidelity / (fit.prefactor * d**fit.upsilon)) ** (1.0 / fit.xi)


def table_rows(fit: PowerLawFit, d: float, p0: float, factors=(0.75, 1.0, 1.25)) -> list[dict]:
    """Prediction rows at multiples of a reference power."""
    rows = []
    for f in factors:
        pred = predict_infidelity(fit, f * p0, d)
        rows.append({"factor": f, "P": f * p0, "I_lower": pred.lower, "I_central": pred.infidelity,
                     "I_upper": pred.upper})
    return rows


# -- operator-norm bounds ------------------------------------------------


@dataclass
class DeltaNorm:
    frobenius: float
    spectral: float
    mean_unitary: np.ndarray


def delta_norm(ideal: np.ndarray, noisy_unitaries: Iterable[np.ndarray]) -> DeltaNorm:
    """Distance between ``ideal`` and the average of ``noisy_unitaries``."""
    acc = None
    n = 0
    for u in noisy_unitaries:
        acc = np.array(u, dtype=complex) if acc is None else acc + u
        n += 1
    if n == 0:
        raise ValueError("need at least one trajectory")
    mean = acc / n
    diff = ideal - mean
    return DeltaNorm(float(np.linalg.norm(diff, "fro")), float(np.linalg.norm(diff, 2)), mean)


def infidelity_bound(delta: float) -> float:
    """``1 - (1 - delta)**2 = 2 delta - delta**2`` for ``delta <= 1``, else 1.

    ``|a_bar| >= 1 - delta`` only bounds ``|a_bar|**2`` from below while
    ``1 - delta >= 0``.
    """
    return 1.0 - max(0.0, 1.0 - delta) ** 2


@dataclass
class BoundReport:
    fidelity: float
    a_bar: complex
    delta: float
    variance_margin: float  # F - |a_bar|^2
    amplitude_margin: float  # delta - |1 - a_bar|
    infidelity_margin: float  # bound - I

    @property
    def ok(self) -> bool:
        return not self.failures()

    def failures(self) -> list[str]:
        out = []
        if self.variance_margin < -1e-12:
            out.append(f"F < |a_bar|^2 by {-self.variance_margin:.3e}")
        if self.amplitude_margin < -1e-12:
            out.append(f"|1 - a_bar| > delta by {-self.amplitude_margin:.3e}")
        if self.infidelity_margin < -1e-9:
            out.append(f"I exceeds 2 delta - delta^2 by {-self.infidelity_margin:.3e}")
        return out


def bound_check(fidelity: float, a_bar: complex, delta: float, strict: bool = True) -> BoundReport:
    """Check ``F >= |a_bar|^2``, ``|1 - a_bar| <= delta`` and ``I <= 2 delta - delta^2``."""
    rep = BoundReport(
        fidelity=fidelity, a_bar=complex(a_bar), delta=delta,
        variance_margin=fidelity - abs(a_bar) ** 2,
        amplitude_margin=delta - abs(1.0 - a_bar),
        infidelity_margin=infidelity_bound(delta) - (1.0 - fidelity),
    )
    if strict and not rep.ok:
        raise BoundViolation(rep)
    return rep


# -- regime comparison ----------------------------------------------------


@dataclass
class CrossoverReport:
    fits: dict
    difference: float
    z_score: float
    significant: bool

    def lines(self) -> list[str]:
        out = [f"{name}: xi = {f.xi:.4f} +/- {f.d_xi:.4f}" for name, f in self.fits.items()]
        out.append(f"difference = {self.difference:.4f}, z = {self.z_score:.2f}, "
                   f"significant = {self.significant}")
        return out


def exponent_crossover_report(sweeps: dict, z_threshold: float = 2.0) -> CrossoverReport:
    """Compare 1-D exponents of the ``"alpha"`` (correlated) and ``"sigma"`` sweeps.

    ``sweeps`` maps regime name to ``(P, I[, I_err])`` points. The crossover
    is significant when ``xi_alpha - xi_sigma`` exceeds ``z_threshold`` joint
    standard errors.
    """
    fits = {k: fit_power_law_1d(v) for k, v in sweeps.items()}
    fa, fs = fits["alpha"], fits["sigma"]
    diff = fa.xi - fs.xi
    se = math.hypot(fa.d_xi, fs.d_xi)
    z = diff / se if se > 0 else (math.inf if diff > 0 else 0.0)
    return CrossoverReport(fits, diff, z, bool(z > z_threshold))
