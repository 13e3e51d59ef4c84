"""Command-line front end: ``tcmps {sweep,fit,predict,benchmark,sample,validate}``.

Exit codes: 0 success, 1 usage or configuration error, 2 validation failure.
The default worker count comes from ``TCMPS_WORKERS`` (1 if unset).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import warnings

import numpy as np

from . import __version__
from .analysis import (FitError, PowerLawFit, SaturationWarning, estimate_p0, fit_power_law_1d,
                       fit_power_law_2d, predict_infidelity)
from .circuit import qft_depth
from .ensemble import EnsembleConfig, return_probability_benchmark, run_ensemble
from .noise import (DEFAULT_GATE_TIME, OUParams, ParameterError, arma_from_ou, generate_trajectory,
                    solve_alpha_for_power, solve_sigma_for_power)

ENV_WORKERS = "TCMPS_WORKERS"
SWEEP_SCHEMA = "tcmps-sweep/1"
TABLE_SCHEMA = "tcmps-table/1"
HIST_SCHEMA = "tcmps-histogram/1"
PRED_SCHEMA = "tcmps-predict/1"
NOISE_SCHEMA = "tcmps-noise/1"
SWEEP_COLUMNS = ["N", "D", "P_tot", "regime", "F", "F_std", "I", "n_t", "seed"]
REGIMES = ("sigma", "alpha")

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION = 0, 1, 2


class ConfigError(ValueError):
    pass


# -- small helpers ------------------------------------------------------------


def num(x) -> str:
    """Shortest repr that round-trips a double."""
    return repr(float(x))


def atomic_write(path: str, text: str) -> None:
    """Write ``text`` to a temporary sibling and rename it over ``path``."""
    path = os.path.abspath(path)
    d = os.path.dirname(path)
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def header_line(schema: str, config: dict) -> str:
    return f"# {schema} {json.dumps(config, sort_keys=True, separators=(',', ':'))}\n"


def parse_header(line: str) -> tuple[str, dict]:
    if not line.startswith("# "):
        return "", {}
    schema, _, rest = line[2:].strip().partition(" ")
    try:
        return schema, json.loads(rest) if rest else {}
    except json.JSONDecodeError:
        return schema, {}


def default_workers() -> int:
    raw = os.environ.get(ENV_WORKERS, "").strip()
    if not raw:
        return 1
    try:
        w = int(raw)
    except ValueError:
        raise ConfigError(f"{ENV_WORKERS} must be an integer, got {raw!r}") from None
    if w < 1:
        raise ConfigError(f"{ENV_WORKERS} must be >= 1")
    return w


def load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


# -- configuration ------------------------------------------------------------

COMMON_DEFAULTS = {
    "chi": 4,
    "input": "random_mps",
    "input_seed": 0,
    "bits": None,
    "cutoff": 1e-14,
    "max_bond": None,
    "n_t": 100,
    "t_g_ns": 100.0,
    "regime": "sigma",
    "sigma_c": None,
    "alpha_c": None,
    "seed": 0,
    "workers": None,
    "angle_convention": "half",
    "mu": 0.0,
    "outputs": {},
}

SWEEP_DEFAULTS = dict(COMMON_DEFAULTS, n=None, power_min=None, power_max=None, power_points=5,
                      power_spacing="log")

BENCH_DEFAULTS = dict(COMMON_DEFAULTS, input="product", n=None, powers=None, fit=None,
                      target_infidelity=0.15, factors=[0.75, 1.0, 1.25], depth=None,
                      samples_per_traj=10000, top_k=30, noise_both_halves=False)


def _check_keys(raw: dict, defaults: dict, what: str) -> dict:
    unknown = sorted(set(raw) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown {what} config keys: {', '.join(unknown)}")
    cfg = dict(defaults)
    cfg.update(raw)
    return cfg


def _int(cfg, key, lo=None):
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key} must be an integer")
    if lo is not None and v < lo:
        raise ConfigError(f"{key} must be >= {lo}")
    return v


def _float(cfg, key, lo=None, strict=False):
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{key} must be a finite number")
    v = float(v)
    if lo is not None and (v <= lo if strict else v < lo):
        raise ConfigError(f"{key} must be {'>' if strict else '>='} {lo}")
    return v


def _resolve_common(cfg: dict) -> None:
    _int(cfg, "chi", 1)
    _int(cfg, "input_seed")
    _int(cfg, "n_t", 1)
    _int(cfg, "seed", 0)
    cfg["cutoff"] = _float(cfg, "cutoff", 0.0)
    cfg["t_g_ns"] = _float(cfg, "t_g_ns", 0.0, strict=True)
    cfg["mu"] = _float(cfg, "mu")
    if cfg["max_bond"] is not None:
        _int(cfg, "max_bond", 1)
    if cfg["workers"] is not None:
        _int(cfg, "workers", 1)
    if cfg["input"] not in ("random_mps", "product"):
        raise ConfigError("input must be 'random_mps' or 'product'")
    if cfg["angle_convention"] not in ("half", "full"):
        raise ConfigError("angle_convention must be 'half' or 'full'")
    if cfg["regime"] not in REGIMES:
        raise ConfigError(f"regime must be one of {REGIMES}")
    fixed = "alpha_c" if cfg["regime"] == "sigma" else "sigma_c"
    other = "sigma_c" if fixed == "alpha_c" else "alpha_c"
    if cfg[fixed] is None:
        raise ConfigError(f"regime {cfg['regime']!r} needs {fixed}")
    if cfg[other] is not None:
        raise ConfigError(f"regime {cfg['regime']!r} takes {fixed}, not {other}")
    cfg[fixed] = _float(cfg, fixed, 0.0, strict=True)
    if not isinstance(cfg["outputs"], dict):
        raise ConfigError("outputs must be an object")


def resolve_sweep_config(raw: dict) -> dict:
    cfg = _check_keys(raw, SWEEP_DEFAULTS, "sweep")
    _resolve_common(cfg)
    ns = cfg["n"]
    if ns is None:
        raise ConfigError("n is required")
    ns = [ns] if isinstance(ns, int) else ns
    if not isinstance(ns, list) or not ns or any(isinstance(v, bool) or not isinstance(v, int) or v < 1
                                                  for v in ns):
        raise ConfigError("n must be a positive integer or a nonempty list of them")
    cfg["n"] = ns
    if cfg["bits"] is not None:
        raise ConfigError("bits is only meaningful for a single-N benchmark; use input_seed")
    for key in ("power_min", "power_max"):
        if cfg[key] is None:
            raise ConfigError(f"{key} is required")
        cfg[key] = _float(cfg, key, 0.0)
    _int(cfg, "power_points", 1)
    if cfg["power_max"] < cfg["power_min"]:
        raise ConfigError("power_max must be >= power_min")
    if cfg["power_spacing"] not in ("log", "linear"):
        raise ConfigError("power_spacing must be 'log' or 'linear'")
    if cfg["power_spacing"] == "log" and cfg["power_min"] <= 0:
        raise ConfigError("log spacing needs power_min > 0")
    return cfg


def power_grid(cfg: dict) -> list[float]:
    lo, hi, k = cfg["power_min"], cfg["power_max"], cfg["power_points"]
    if k == 1:
        return [lo]
    grid = np.geomspace(lo, hi, k) if cfg["power_spacing"] == "log" else np.linspace(lo, hi, k)
    return [float(p) for p in grid]


def ou_for_power(cfg: dict, n: int, p_tot: float) -> OUParams:
    """OU parameters that put total power ``p_tot`` on ``n`` qubits in the configured regime."""
    t_g = cfg["t_g_ns"] * 1e-9
    if cfg["regime"] == "sigma":
        alpha = cfg["alpha_c"]
        sigma = solve_sigma_for_power(p_tot, n, alpha, t_g) if p_tot > 0 else 0.0
    else:
        sigma = cfg["sigma_c"]
        if p_tot > 0:
            alpha = solve_alpha_for_power(p_tot, n, sigma, t_g)
        else:
            # zero power: switch the noise off rather than sending the correlation time to zero
            sigma, alpha = 0.0, 1.0
    return OUParams.from_alpha(sigma, alpha, t_g, cfg["mu"], t_g)


def ensemble_config(cfg: dict, n: int, p_tot: float, **extra) -> EnsembleConfig:
    return EnsembleConfig(
        n_qubits=n, n_traj=cfg["n_t"], ou=ou_for_power(cfg, n, p_tot), master_seed=cfg["seed"],
        input_kind=cfg["input"], chi=cfg["chi"], input_seed=cfg["input_seed"],
        bits=cfg.get("bits"), t_g=cfg["t_g_ns"] * 1e-9, regime=cfg["regime"],
        cutoff=cfg["cutoff"], max_bond=cfg["max_bond"],
        angle_convention=cfg["angle_convention"], **extra)


def embedded_config(cfg: dict) -> dict:
    """Config echoed into outputs; the worker count is left out so files do not depend on it."""
    return {k: v for k, v in cfg.items() if k != "workers"}


def pick_workers(cli_value, cfg: dict) -> int:
    if cli_value is not None:
        if cli_value < 1:
            raise ConfigError("--workers must be >= 1")
        return cli_value
    if cfg.get("workers") is not None:
        return cfg["workers"]
    return default_workers()


# -- sweep ----------------------------------------------------------------------


def run_sweep(cfg: dict, workers: int = 1, progress=None) -> list:
    results = []
    for n in cfg["n"]:
        for p in power_grid(cfg):
            res = run_ensemble(ensemble_config(cfg, n, p), workers=workers)
            res.metadata["P_tot"] = p  # the grid value, not the round-tripped one
            results.append(res)
            if progress:
                progress(res)
    return results


def sweep_rows(results) -> list[list[str]]:
    rows = []
    for r in results:
        m = r.metadata
        rows.append([str(m["N"]), str(m["D"]), num(m["P_tot"]), m["regime"], num(r.fidelity_mean),
                     num(r.fidelity_std), num(r.infidelity), str(m["n_t"]), str(m["seed"])])
    return rows


def sweep_csv_text(cfg: dict, results) -> str:
    buf = io.StringIO()
    buf.write(header_line(SWEEP_SCHEMA, embedded_config(cfg)))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    w.writerows(sweep_rows(results))
    return buf.getvalue()


def sweep_json_text(cfg: dict, results) -> str:
    out = {"schema": SWEEP_SCHEMA, "config": embedded_config(cfg),
           "results": [r.to_dict() for r in results]}
    return json.dumps(out, indent=1, sort_keys=True) + "\n"


def read_sweep_csv(path: str) -> tuple[dict, list[dict]]:
    try:
        with open(path, newline="") as fh:
            first = fh.readline()
            schema, cfg = parse_header(first)
            if not schema:
                fh.seek(0)
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    missing = set(SWEEP_COLUMNS) - set(rows[0] if rows else SWEEP_COLUMNS)
    if missing:
        raise ConfigError(f"{path}: missing columns {sorted(missing)}")
    return cfg, rows


def cmd_sweep(args) -> int:
    cfg = resolve_sweep_config(load_json(args.config))
    outputs = dict(cfg["outputs"])
    if args.output:
        outputs["csv"] = args.output
    if not outputs.get("csv") and not outputs.get("json"):
        raise ConfigError("no output path: set outputs.csv in the config or pass -o")
    workers = pick_workers(args.workers, cfg)

    def progress(r):
        if not args.quiet:
            m = r.metadata
            print(f"N={m['N']} P_tot={m['P_tot']:.4g} I={r.infidelity:.6g} "
                  f"(F_std {r.fidelity_std:.3g})", file=sys.stderr)

    results = run_sweep(cfg, workers, progress)
    if outputs.get("csv"):
        atomic_write(outputs["csv"], sweep_csv_text(cfg, results))
    if outputs.get("json"):
        atomic_write(outputs["json"], sweep_json_text(cfg, results))
    return EXIT_OK


# -- fit ------------------------------------------------------------------------


def fit_rows(paths, regime=None, ns=None) -> tuple[list[dict], list[dict]]:
    rows, cfgs = [], []
    for p in paths:
        cfg, r = read_sweep_csv(p)
        cfgs.append(cfg)
        rows.extend(r)
    if regime:
        rows = [r for r in rows if r["regime"] == regime]
    if ns:
        rows = [r for r in rows if int(r["N"]) in ns]
    return cfgs, rows


def fit_from_rows(rows: list[dict], dims: str = "auto", weighted: bool = False) -> tuple[PowerLawFit, int]:
    """Fit sweep rows; rows with ``I`` outside ``(0, 1)`` or ``P_tot = 0`` are dropped."""
    pts = []
    dropped = 0
    for r in rows:
        p, i = float(r["P_tot"]), float(r["I"])
        if not (p > 0 and 0 < i < 1):
            dropped += 1
            continue
        err = float(r["F_std"]) / math.sqrt(int(r["n_t"]))
        pts.append((p, int(r["D"]), i, err))
    depths = {d for _, d, _, _ in pts}
    if dims == "auto":
        dims = "2" if len(depths) >= 2 else "1"
    if dims == "2":
        fit = fit_power_law_2d(pts, weighted)
    else:
        if len(depths) > 1:
            raise FitError("a 1-D fit needs rows from a single depth; filter with --n")
        fit = fit_power_law_1d([(p, i, e) for p, _, i, e in pts], weighted)
        if depths:
            (d,) = depths
            fit.fit_domain["D"] = [float(d), float(d)]
            fit.fit_domain["N"] = [math.isqrt(d)] * 2
    return fit, dropped


def cmd_fit(args) -> int:
    cfgs, rows = fit_rows(args.csv, args.regime, args.n)
    if not rows:
        raise ConfigError("no rows to fit")
    fit, dropped = fit_from_rows(rows, args.dims, args.weighted)
    kinds = sorted({c.get("input", "") for c in cfgs if c})
    regimes = sorted({r["regime"] for r in rows})
    fit.fit_domain.update({"input_kind": ",".join(kinds), "regime": ",".join(regimes),
                           "dropped_rows": dropped})
    text = fit.to_json() + "\n"
    if args.output:
        atomic_write(args.output, text)
    else:
        sys.stdout.write(text)
    names = ("Xi", "Upsilon") if len(fit.exponents) == 2 else ("xi",)
    parts = [f"{n} = {v:.4f} +/- {e:.4f}" for n, v, e in zip(names, fit.exponents, fit.std_errors[1:])]
    print(f"prefactor = {fit.prefactor:.6g} +/- {fit.d_prefactor:.3g}; " + ", ".join(parts), file=sys.stderr)
    return EXIT_OK


# -- predict --------------------------------------------------------------------


def domain_notes(fit: PowerLawFit, p: float, d: float) -> list[str]:
    dom = fit.fit_domain
    notes = []
    if "P" in dom and not dom["P"][0] <= p <= dom["P"][1]:
        notes.append("P outside fit domain")
    if "D" in dom and not dom["D"][0] <= d <= dom["D"][1]:
        notes.append("D outside fit domain")
    return notes


def prediction_rows(fit: PowerLawFit, depths, powers=None, target=None, factors=(1.0,)):
    """Rows of ``(N, D, P_tot, factor, lower, central, upper, saturated, note)``."""
    rows = []
    for n, d in depths:
        if target is not None:
            p0 = estimate_p0(fit, target, d)
            plist = [(f * p0, f) for f in factors]
        else:
            plist = [(p, "") for p in powers]
        for p, f in plist:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", SaturationWarning)
                pred = predict_infidelity(fit, p, d)
            notes = domain_notes(fit, p, d)
            if pred.saturated:
                notes.append("saturated")
            rows.append([n, d, p, f, pred.lower, pred.infidelity, pred.upper, pred.saturated,
                         "; ".join(notes)])
    return rows


def cmd_predict(args) -> int:
    try:
        fit = PowerLawFit.from_json(open(args.fit).read())
    except OSError as exc:
        raise ConfigError(f"cannot read {args.fit}: {exc.strerror}") from None
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{args.fit} is not a fit file: {exc}") from None
    depths = [(n, qft_depth(n)) for n in (args.n or [])] + [("", d) for d in (args.depth or [])]
    if not depths:
        raise ConfigError("give --n or --depth")
    if (args.power is None) == (args.target_infidelity is None):
        raise ConfigError("give exactly one of --power or --target-infidelity")
    if args.power is not None and any(p <= 0 for p in args.power):
        raise ConfigError("--power values must be > 0")
    rows = prediction_rows(fit, depths, args.power, args.target_infidelity, args.factors)
    buf = io.StringIO()
    buf.write(header_line(PRED_SCHEMA, {"fit": fit.to_dict(), "target_infidelity": args.target_infidelity}))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "D", "P_tot", "factor", "I_lower", "I_central", "I_upper", "saturated", "note"])
    for n, d, p, f, lo, mid, hi, sat, note in rows:
        w.writerow([n, d, num(p), f if f == "" else num(f), num(lo), num(mid), num(hi), int(sat), note])
        if note:
            print(f"warning: D={d} P={p:.4g}: {note}", file=sys.stderr)
    if args.output:
        atomic_write(args.output, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# -- benchmark ------------------------------------------------------------------


def resolve_bench_config(raw: dict) -> dict:
    cfg = _check_keys(raw, BENCH_DEFAULTS, "benchmark")
    _resolve_common(cfg)
    if cfg["input"] != "product":
        raise ConfigError("the benchmark needs input 'product'")
    if isinstance(cfg["n"], bool) or not isinstance(cfg["n"], int) or cfg["n"] < 1:
        raise ConfigError("n must be a positive integer")
    if cfg["bits"] is not None:
        if not isinstance(cfg["bits"], str) or len(cfg["bits"]) != cfg["n"] or set(cfg["bits"]) - {"0", "1"}:
            raise ConfigError("bits must be a 0/1 string of length n")
    _int(cfg, "samples_per_traj", 1)
    _int(cfg, "top_k", 1)
    if (cfg["powers"] is None) == (cfg["fit"] is None):
        raise ConfigError("give exactly one of powers or fit")
    if cfg["powers"] is not None:
        if not isinstance(cfg["powers"], list) or not cfg["powers"]:
            raise ConfigError("powers must be a nonempty list")
        cfg["powers"] = [_float({"p": p}, "p", 0.0) for p in cfg["powers"]]
    else:
        t = _float(cfg, "target_infidelity", 0.0, strict=True)
        if t >= 1:
            raise ConfigError("target_infidelity must be < 1")
        if not isinstance(cfg["factors"], list) or not cfg["factors"]:
            raise ConfigError("factors must be a nonempty list")
        cfg["factors"] = [_float({"f": f}, "f", 0.0, strict=True) for f in cfg["factors"]]
    if cfg["depth"] is not None:
        _int(cfg, "depth", 1)
    return cfg


def cmd_benchmark(args) -> int:
    raw = load_json(args.config)
    cfg = resolve_bench_config(raw)
    outputs = dict(cfg["outputs"])
    if args.output:
        outputs["histogram"] = args.output
    if not outputs:
        raise ConfigError("no output paths: set outputs.histogram / summary / table")
    workers = pick_workers(args.workers, cfg)
    n = cfg["n"]
    depth = cfg["depth"] or qft_depth(n)
    fit = None
    if cfg["fit"] is not None:
        fpath = cfg["fit"]
        try:
            fit = PowerLawFit.from_json(open(fpath).read())
        except OSError as exc:
            raise ConfigError(f"cannot read fit {fpath}: {exc.strerror}") from None
        p0 = estimate_p0(fit, cfg["target_infidelity"], depth)
        powers = [f * p0 for f in cfg["factors"]]
        emb = dict(embedded_config(cfg), fit_parameters=fit.to_dict(), P0=p0)
    else:
        powers = cfg["powers"]
        emb = embedded_config(cfg)

    hist = io.StringIO()
    hist.write(header_line(HIST_SCHEMA, emb))
    hw = csv.writer(hist, lineterminator="\n")
    hw.writerow(["P_tot", "rank", "bitstring", "count", "probability", "is_input"])
    table = io.StringIO()
    table.write(header_line(TABLE_SCHEMA, emb))
    tw = csv.writer(table, lineterminator="\n")
    tw.writerow(["P", "I_lower", "I_central", "I_sampled"])
    summary = {"schema": HIST_SCHEMA, "config": emb, "points": []}

    for p in powers:
        ecfg = ensemble_config(cfg, n, p, noise_both_halves=cfg["noise_both_halves"])
        res = return_probability_benchmark(ecfg, cfg["samples_per_traj"], workers)
        total = res.samples.total
        for rank, (bits, count) in enumerate(res.samples.most_common(cfg["top_k"]), start=1):
            hw.writerow([num(p), rank, bits, count, num(count / total), int(bits == res.input_bits)])
        lo = mid = ""
        if fit is not None:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", SaturationWarning)
                pred = predict_infidelity(fit, p, depth)
            lo, mid = num(pred.lower), num(pred.infidelity)
        tw.writerow([num(p), lo, mid, num(res.sampled_infidelity)])
        summary["points"].append({
            "P_tot": p, "I_sampled": res.sampled_infidelity, "I_exact": res.exact_infidelity,
            "F_std": res.exact.fidelity_std, "input_bits": res.input_bits, "samples": total,
            "n_t": cfg["n_t"]})
        if not args.quiet:
            print(f"P_tot={p:.4g} I_s={res.sampled_infidelity:.6g} I_exact={res.exact_infidelity:.6g}",
                  file=sys.stderr)

    if outputs.get("histogram"):
        atomic_write(outputs["histogram"], hist.getvalue())
    if outputs.get("table"):
        atomic_write(outputs["table"], table.getvalue())
    if outputs.get("summary"):
        atomic_write(outputs["summary"], json.dumps(summary, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


# -- sample (noise export) ------------------------------------------------------

NOISE_DEFAULTS = {"sigma": None, "alpha": None, "theta": None, "mu": 0.0, "dt": None,
                  "t_g": DEFAULT_GATE_TIME, "angle_convention": "half"}


def resolve_noise_config(raw: dict) -> OUParams:
    cfg = _check_keys(raw, NOISE_DEFAULTS, "noise")
    if cfg["sigma"] is None:
        raise ConfigError("sigma is required")
    if (cfg["alpha"] is None) == (cfg["theta"] is None):
        raise ConfigError("give exactly one of alpha or theta")
    if cfg["angle_convention"] not in ("half", "full"):
        raise ConfigError("angle_convention must be 'half' or 'full'")
    t_g = _float(cfg, "t_g", 0.0, strict=True)
    dt = t_g if cfg["dt"] is None else _float(cfg, "dt", 0.0, strict=True)
    try:
        if cfg["alpha"] is not None:
            return OUParams.from_alpha(float(cfg["sigma"]), float(cfg["alpha"]), t_g, float(cfg["mu"]), dt)
        return OUParams(float(cfg["sigma"]), float(cfg["theta"]), float(cfg["mu"]), dt)
    except (TypeError, ParameterError) as exc:
        raise ConfigError(str(exc)) from None


def cmd_sample(args) -> int:
    raw = load_json(args.config) if args.config else {}
    for key in ("sigma", "alpha", "theta", "mu", "dt", "angle_convention"):
        v = getattr(args, key)
        if v is not None:
            raw[key] = v
    if args.t_g_ns is not None:
        raw["t_g"] = args.t_g_ns * 1e-9
    ou = resolve_noise_config(raw)
    if args.qubits < 1 or args.steps < 0 or args.trajectories < 1:
        raise ConfigError("need qubits >= 1, steps >= 0, trajectories >= 1")
    model = arma_from_ou(ou)
    buf = io.StringIO()
    emb = {"ou": {"sigma": ou.sigma, "theta": ou.theta, "mu": ou.mu, "dt": ou.dt},
           "angle_convention": raw.get("angle_convention", "half"), "seed": args.seed,
           "qubits": args.qubits, "steps": args.steps, "trajectories": args.trajectories,
           "first_trajectory": args.first}
    buf.write(header_line(NOISE_SCHEMA, emb))
    w = csv.writer(buf, lineterminator="\n")
    multi = args.trajectories > 1
    w.writerow((["trajectory"] if multi else []) + ["qubit", "slot", "angle_rad"])
    for t in range(args.first, args.first + args.trajectories):
        traj = generate_trajectory(model, args.qubits, args.steps, args.seed, t)
        for q, row in enumerate(traj.angles):
            for i, y in enumerate(row.tolist()):
                w.writerow(([t] if multi else []) + [q, i, repr(y)])
    if args.output:
        atomic_write(args.output, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# -- validate -------------------------------------------------------------------


def cmd_validate(args) -> int:
    from .validation import run_all
    reports = run_all(quick=args.quick)
    for r in reports:
        print("\n".join(r.lines()))
    ok = all(r.ok for r in reports)
    print("validation " + ("passed" if ok else "FAILED"))
    return EXIT_OK if ok else EXIT_VALIDATION


# -- entry point ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tcmps", description="Stochastic-MPS simulation of time-correlated dephasing on the QFT.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sweep", help="run an (N, P_tot) grid of ensembles")
    s.add_argument("config", help="JSON sweep configuration")
    s.add_argument("-o", "--output", help="CSV output path (overrides outputs.csv)")
    s.add_argument("-w", "--workers", type=int, help=f"worker processes (default ${ENV_WORKERS} or 1)")
    s.add_argument("-q", "--quiet", action="store_true")
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("fit", help="fit I = L P^xi [D^ups] to sweep CSVs")
    f.add_argument("csv", nargs="+")
    f.add_argument("-o", "--output", help="fit JSON path (default stdout)")
    f.add_argument("--dims", choices=("auto", "1", "2"), default="auto")
    f.add_argument("--weighted", action="store_true", help="weight log residuals by 1/(I_err/I)^2")
    f.add_argument("--regime", choices=REGIMES)
    f.add_argument("--n", type=int, nargs="+", help="keep only these N")
    f.set_defaults(func=cmd_fit)

    pr = sub.add_parser("predict", help="evaluate a fit at new (N, P_tot)")
    pr.add_argument("fit")
    pr.add_argument("--n", type=int, nargs="+")
    pr.add_argument("--depth", type=int, nargs="+")
    pr.add_argument("--power", type=float, nargs="+")
    pr.add_argument("--target-infidelity", type=float)
    pr.add_argument("--factors", type=float, nargs="+", default=[1.0],
                    help="multiples of P0 when --target-infidelity is given")
    pr.add_argument("-o", "--output")
    pr.set_defaults(func=cmd_predict)

    b = sub.add_parser("benchmark", help="return-probability sampling benchmark")
    b.add_argument("config")
    b.add_argument("-o", "--output", help="histogram CSV path (overrides outputs.histogram)")
    b.add_argument("-w", "--workers", type=int)
    b.add_argument("-q", "--quiet", action="store_true")
    b.set_defaults(func=cmd_benchmark)

    sa = sub.add_parser("sample", help="export dephasing-angle trajectories as CSV")
    sa.add_argument("--config", help="JSON with sigma, alpha|theta, mu, dt, t_g, angle_convention")
    sa.add_argument("--sigma", type=float)
    sa.add_argument("--alpha", type=float)
    sa.add_argument("--theta", type=float)
    sa.add_argument("--mu", type=float)
    sa.add_argument("--dt", type=float)
    sa.add_argument("--t-g-ns", type=float)
    sa.add_argument("--angle-convention", choices=("half", "full"))
    sa.add_argument("--qubits", type=int, default=1)
    sa.add_argument("--steps", type=int, default=100)
    sa.add_argument("--seed", type=int, default=0)
    sa.add_argument("--first", type=int, default=0, help="first trajectory index")
    sa.add_argument("--trajectories", type=int, default=1)
    sa.add_argument("-o", "--output")
    sa.set_defaults(func=cmd_sample)

    v = sub.add_parser("validate", help="run the built-in self-checks")
    v.add_argument("--quick", action="store_true")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, FitError, ParameterError) as exc:
        print(f"tcmps: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
