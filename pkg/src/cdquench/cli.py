"""Command-line harness: spectrum and sweep reports as deterministic CSV.

Subcommands reproduce the standard experiments (fig1: excitation spectra per
cutoff and filter; fig2: excitation density over rate and cutoff), fit the
scaling exponents, dump two-level demo traces, and run the brute-force
oracle checks.  Every output embeds its fully resolved configuration in a
comment header and is byte-identical across repeated runs and worker counts.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import spinoracle
from .coefficients import CdConfig, CoeffMode, FilterKind
from .engine import (
    Composition,
    DriverConfig,
    QuenchProtocol,
    run_spectrum,
    sweep,
)
from .integrate import IntegrationError
from .twolevel import (
    DegeneracyError,
    LzParams,
    TwoLevelDriver,
    evolve_two_level,
    ground_state,
    state_fidelity,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ENGINE = 3
EXIT_ORACLE = 4

OUTDIR_ENV = "CDQUENCH_OUTDIR"

PAPER_N_SITES = 1600
DESK_N_SITES = 400
FIG1_CUTOFFS = (4, 8, 16, 32, 64)
FIG2_CUTOFFS = (0, 1, 2, 4, 8, 16, 32, 64)


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class ExperimentConfig:
    experiment: str
    n_sites: int = DESK_N_SITES
    g_initial: float = 10.0
    g_final: float = 0.0
    rate: float = 50.0
    rates: list = field(default_factory=list)
    cutoffs: list = field(default_factory=list)
    filter_kind: str = "dirichlet"
    coeff_mode: str = "exact"
    tol: float = 1e-10
    out: str = ""
    workers: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.n_sites < 2 or self.n_sites % 2:
            raise ConfigError("n-sites must be an even integer >= 2")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.filter_kind not in ("dirichlet", "raised_cosine"):
            raise ConfigError(f"unknown filter {self.filter_kind!r}")
        if self.coeff_mode not in ("exact", "analytic"):
            raise ConfigError(f"unknown coefficient mode {self.coeff_mode!r}")
        for m in self.cutoffs:
            if m < 0 or m > self.n_sites // 2:
                raise ConfigError(f"cutoff {m} outside [0, n_sites/2]")
        if any(r <= 0 for r in self.rates) or self.rate <= 0:
            raise ConfigError("rates must be positive")
        return self

    def filter_enum(self) -> FilterKind:
        return FilterKind(self.filter_kind)

    def coeff_enum(self) -> CoeffMode:
        return (CoeffMode.EXACT_FINITE_N if self.coeff_mode == "exact"
                else CoeffMode.ANALYTIC_LARGE_N)

    def protocol(self, rate=None) -> QuenchProtocol:
        return QuenchProtocol(self.g_initial, self.g_final,
                              self.rate if rate is None else rate)


# ---------------------------------------------------------------------------
# configuration resolution: defaults < config file < explicit flags
# ---------------------------------------------------------------------------

_FILE_KEYS = {
    "n_sites", "g_initial", "g_final", "rate", "rates", "cutoffs",
    "filter", "coeff_mode", "tol", "out", "workers", "paper_scale",
}


def _flatten_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    flat = {}
    for section in ("protocol", "drive", "chain"):
        flat.update(raw.pop(section, {}) or {})
    flat.update(raw)
    unknown = set(flat) - _FILE_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return flat


def _parse_int_list(values) -> list:
    if values is None:
        return []
    if isinstance(values, str):
        values = values.replace(",", " ").split()
    return [int(v) for v in values]


def _parse_float_list(values) -> list:
    if values is None:
        return []
    if isinstance(values, str):
        values = values.replace(",", " ").split()
    return [float(v) for v in values]


def resolve_config(args: argparse.Namespace, experiment: str,
                   default_rates, default_cutoffs) -> ExperimentConfig:
    merged = {}
    if getattr(args, "config", None):
        merged.update(_flatten_config_file(args.config))

    def pick(flag, default, key=None, cast=None):
        value = getattr(args, flag, None)
        if value is None:
            value = merged.get(key or flag)
        if value is None:
            return default
        return cast(value) if cast is not None else value

    paper = bool(getattr(args, "paper_scale", False) or
                 merged.get("paper_scale", False))
    default_n = PAPER_N_SITES if paper else DESK_N_SITES
    cfg = ExperimentConfig(
        experiment=experiment,
        n_sites=pick("n_sites", default_n, cast=int),
        g_initial=pick("gi", 10.0, "g_initial", float),
        g_final=pick("gf", 0.0, "g_final", float),
        rate=pick("rate", 50.0, cast=float),
        rates=pick("rates", None, cast=_parse_float_list)
        or list(default_rates),
        cutoffs=pick("cutoffs", None, cast=_parse_int_list)
        or list(default_cutoffs),
        filter_kind=pick("filter", "dirichlet", "filter").replace("-", "_"),
        coeff_mode=pick("coeff_mode", "exact"),
        tol=pick("tol", 1e-10, cast=float),
        out=pick("out", ""),
        workers=pick("workers", os.cpu_count() or 1, cast=int),
    )
    return cfg.validate()


# ---------------------------------------------------------------------------
# deterministic CSV / JSON output
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.16e}"


def _provenance(cfg: ExperimentConfig) -> dict:
    # Everything that determines the numbers; execution details (output
    # location, worker count) are excluded so output is byte-identical for
    # any worker count.
    meta = asdict(cfg)
    meta.pop("out")
    meta.pop("workers")
    return meta


def output_path(cfg_out: str, default_name: str) -> Path:
    base = Path(os.environ.get(OUTDIR_ENV, "."))
    if not cfg_out:
        path = base / default_name
    else:
        given = Path(cfg_out)
        if given.suffix in (".csv", ".json"):
            path = given if given.is_absolute() else base / given
        else:
            path = given / default_name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(path: Path, config: dict, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# cdquench {config.get('experiment', '')}\r\n")
        fh.write("# config: " + json.dumps(config, sort_keys=True) + "\r\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def write_json(path: Path | None, payload: dict):
    text = json.dumps(payload, sort_keys=True, indent=2)
    if path is None:
        print(text)
    else:
        path.write_text(text + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_fig1(args) -> int:
    cfg = resolve_config(args, "fig1", [], FIG1_CUTOFFS)
    paths = []
    for filter_kind in (FilterKind.DIRICHLET, FilterKind.RAISED_COSINE):
        rows = []
        for cutoff in cfg.cutoffs:
            driver = DriverConfig(Composition.H0_PLUS_H1, CdConfig(
                cutoff=cutoff, filter_kind=filter_kind,
                coeff_mode=cfg.coeff_enum()))
            result = run_spectrum(cfg.protocol(), driver, cfg.n_sites,
                                  tol=cfg.tol, workers=cfg.workers)
            for k, p in zip(result.k_grid, result.p_k):
                rows.append([_fmt(k), cutoff, filter_kind.value, _fmt(p),
                             _fmt(k * cutoff)])
        path = output_path(cfg.out, f"fig1_{filter_kind.value}.csv")
        meta = _provenance(cfg)
        meta["filter_kind"] = filter_kind.value
        write_csv(path, meta, ["k", "cutoff_m", "filter_kind", "p_k",
                               "k_times_m"], rows)
        paths.append(path)
    for path in paths:
        print(path)
    return EXIT_OK


def _run_sweep(cfg: ExperimentConfig, default_name: str,
               extra_columns=False) -> int:
    if not cfg.rates or not cfg.cutoffs:
        raise ConfigError("sweep requires non-empty rates and cutoffs")
    cells = sweep(cfg.protocol(cfg.rates[0]), cfg.rates, cfg.cutoffs,
                  cfg.filter_enum(), cfg.coeff_enum(), cfg.n_sites,
                  tol=cfg.tol, workers=cfg.workers)
    rows, failed = [], []
    for cell in cells:
        if cell.error is not None:
            failed.append(cell)
            continue
        row = [_fmt(cell.rate), cell.cutoff, cell.filter_kind.value,
               _fmt(cell.n_ex)]
        if extra_columns:
            row += [_fmt(cell.k_kz),
                    "inf" if math.isinf(cell.k_m) else _fmt(cell.k_m),
                    cell.branch]
        rows.append(row)
    columns = ["rate", "cutoff_m", "filter_kind", "n_ex"]
    if extra_columns:
        columns += ["k_kz", "k_m", "branch"]
    path = output_path(cfg.out, default_name)
    write_csv(path, _provenance(cfg), columns, rows)
    print(path)
    for cell in failed:
        print(f"error: rate={cell.rate} cutoff={cell.cutoff}: {cell.error}",
              file=sys.stderr)
    return EXIT_ENGINE if failed else EXIT_OK


def cmd_fig2(args) -> int:
    # Desk-scale default grid; pass --rates to reach deeper into the
    # slow-quench scaling regime (runtime grows like 1/rate).
    default_rates = np.logspace(-1.5, 2.0, 8).tolist()
    cfg = resolve_config(args, "fig2", default_rates, FIG2_CUTOFFS)
    return _run_sweep(cfg, "fig2.csv")


def cmd_sweep(args) -> int:
    cfg = resolve_config(args, "sweep", [50.0], [0, 16])
    return _run_sweep(cfg, "sweep.csv", extra_columns=True)


def read_csv_columns(path) -> dict:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(
            line for line in fh if not line.startswith("#")) if r]
    if not rows:
        raise ConfigError(f"{path}: empty CSV")
    header, data = rows[0], rows[1:]
    return {name: [row[i] for row in data] for i, name in enumerate(header)}


def fit_power_law(rates, values):
    """Least-squares line in log-log coordinates.

    Returns (exponent, prefactor, residual_norm)."""
    if len(rates) < 5:
        raise ConfigError(f"need >= 5 points in the fit window, got {len(rates)}")
    if any(v <= 0 for v in values) or any(r <= 0 for r in rates):
        raise ConfigError("power-law fit requires positive data")
    x = np.log(np.asarray(rates, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    return float(slope), float(math.exp(intercept)), float(
        np.sqrt(np.mean(residuals ** 2)))


def cmd_fit_scaling(args) -> int:
    table = read_csv_columns(args.infile)
    for needed in ("rate", "cutoff_m", "n_ex"):
        if needed not in table:
            raise ConfigError(f"{args.infile}: missing column {needed!r}")
    lo, hi = (args.window if args.window else (0.0, math.inf))
    picked = [(float(r), float(n)) for r, m, n in
              zip(table["rate"], table["cutoff_m"], table["n_ex"])
              if int(m) == args.cutoff and lo <= float(r) <= hi]
    picked.sort()
    exponent, prefactor, residual = fit_power_law(
        [r for r, _ in picked], [n for _, n in picked])
    payload = {
        "cutoff_m": args.cutoff,
        "exponent": exponent,
        "prefactor": prefactor,
        "window": [lo, hi if not math.isinf(hi) else None],
        "n_points": len(picked),
        "residual_norm": residual,
    }
    out = output_path(args.out, "fit_scaling.json") if args.out else None
    write_json(out, payload)
    return EXIT_OK


def cmd_lz_demo(args) -> int:
    delta, rate = args.delta, args.rate
    lam_i, lam_f = args.span
    samples = args.samples
    params = LzParams(delta=delta, lam_initial=lam_i, lam_final=lam_f,
                      rate=rate)
    times = np.linspace(0.0, params.duration, samples + 1)[1:]
    initial = ground_state(lam_i, delta)

    def trace(driver):
        # delta = 0 decouples the diabatic levels; the assisted drive is
        # undefined there and the instantaneous basis is singular at lam = 0.
        if delta == 0.0 and driver is TwoLevelDriver.ASSISTED:
            return [math.nan] * len(times)
        _, snaps = evolve_two_level(params, driver, initial, args.tol,
                                    sample_times=list(times))
        out = []
        for t, s in snaps:
            try:
                out.append(state_fidelity(ground_state(params.lam(t), delta), s))
            except DegeneracyError:
                out.append(math.nan)
        return out

    bare = trace(TwoLevelDriver.BARE)
    assisted = trace(TwoLevelDriver.ASSISTED)
    rows = [[_fmt(t), _fmt(params.lam(t)), _fmt(b), _fmt(a)]
            for t, b, a in zip(times, bare, assisted)]
    config = {"experiment": "lz_demo", "delta": delta, "rate": rate,
              "lam_initial": lam_i, "lam_final": lam_f, "tol": args.tol,
              "samples": samples}
    path = output_path(args.out or "", "lz_demo.csv")
    write_csv(path, config, ["t", "lam", "fidelity_bare", "fidelity_assisted"],
              rows)
    print(path)
    return EXIT_OK


ORACLE_THRESHOLDS = {
    "spectrum_dev": 1e-10,
    "h0_momentum_dev": 1e-10,
    "h1m_momentum_dev": 1e-10,
    "parity_dev": 1e-12,
    "cd_matrix_dev": 1e-8,
    "evolve_dev": 1e-8,
}


def oracle_checks(n_sites: int) -> dict:
    report = {}
    report["spectrum_dev"] = float(np.max(np.abs(
        spinoracle.even_spectrum(n_sites, 1.3)
        - spinoracle.momentum_even_spectrum(n_sites, 1.3))))
    report["h0_momentum_dev"] = spinoracle.verify_h0_momentum_form(n_sites, 1.7)
    report["h1m_momentum_dev"] = max(
        spinoracle.verify_h1m_momentum_form(n_sites, m)
        for m in range(1, n_sites // 2 + 1))
    parity = spinoracle.parity_commutator_norm(
        spinoracle.build_spin_h0(n_sites, 0.8), n_sites)
    for m in range(1, n_sites // 2 + 1):
        parity = max(parity, spinoracle.parity_commutator_norm(
            spinoracle.build_spin_h1m(n_sites, m), n_sites))
    report["parity_dev"] = parity
    if n_sites <= spinoracle.EVOLVE_CAP:
        report["cd_matrix_dev"] = max(
            spinoracle.cd_matrix_element_check(n_sites, g, rate=1.0)
            for g in (0.5, 2.0))
    if n_sites <= 8:
        devs = []
        protocol = QuenchProtocol(10.0, 0.0, 5.0)
        for cutoff in (0, 2):
            comp = Composition.H0_ONLY if cutoff == 0 else Composition.H0_PLUS_H1
            driver = DriverConfig(comp, CdConfig(cutoff=cutoff))
            n_full, _ = spinoracle.evolve_full(n_sites, protocol, driver,
                                               tol=1e-11)
            engine = run_spectrum(protocol, driver, n_sites, tol=1e-11)
            devs.append(abs(n_full - engine.n_ex))
        report["evolve_dev"] = max(devs)
    report["passed"] = all(
        report[key] <= bound for key, bound in ORACLE_THRESHOLDS.items()
        if key in report)
    return report


def cmd_oracle_check(args) -> int:
    sizes = args.sizes or []
    for n in sizes:
        if n > spinoracle.OPERATOR_CAP:
            raise ConfigError(
                f"n_sites = {n} exceeds oracle cap {spinoracle.OPERATOR_CAP}")
        if n < 2 or n % 2:
            raise ConfigError("oracle sizes must be even integers >= 2")
    reports = {}
    for n in sizes:
        reports[str(n)] = oracle_checks(n)
        status = "pass" if reports[str(n)]["passed"] else "FAIL"
        print(f"N={n}: {status} " + " ".join(
            f"{key}={value:.3e}" for key, value in reports[str(n)].items()
            if key != "passed"))
    payload = {"sizes": reports,
               "passed": all(r["passed"] for r in reports.values())}
    if args.out:
        write_json(output_path(args.out, "oracle_report.json"), payload)
    return EXIT_OK if payload["passed"] else EXIT_ORACLE


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_engine_flags(sub):
    sub.add_argument("--config", help="JSON config file; flags override it")
    sub.add_argument("--n-sites", dest="n_sites", type=int)
    sub.add_argument("--gi", type=float, help="initial transverse field")
    sub.add_argument("--gf", type=float, help="final transverse field")
    sub.add_argument("--rate", type=float, help="quench rate")
    sub.add_argument("--rates", nargs="*",
                     help="list of quench rates for sweeps")
    sub.add_argument("--cutoffs", nargs="*",
                     help="list of range cutoffs M")
    sub.add_argument("--filter", choices=["dirichlet", "raised-cosine",
                                          "raised_cosine"])
    sub.add_argument("--coeff-mode", dest="coeff_mode",
                     choices=["exact", "analytic"])
    sub.add_argument("--tol", type=float)
    sub.add_argument("--out", help="output file or directory")
    sub.add_argument("--workers", type=int)
    sub.add_argument("--paper-scale", dest="paper_scale", action="store_true",
                     help="use the full N=1600 chain instead of desk scale")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdquench",
        description="Assisted quench simulations of the transverse-field "
                    "Ising chain")
    subs = parser.add_subparsers(dest="command", required=True)

    fig1 = subs.add_parser("fig1", help="excitation spectra per cutoff/filter")
    _add_engine_flags(fig1)
    fig1.set_defaults(func=cmd_fig1)

    fig2 = subs.add_parser("fig2", help="excitation density vs rate and cutoff")
    _add_engine_flags(fig2)
    fig2.set_defaults(func=cmd_fig2)

    swp = subs.add_parser("sweep", help="generic (rate, cutoff) sweep")
    _add_engine_flags(swp)
    swp.set_defaults(func=cmd_sweep)

    fit = subs.add_parser("fit-scaling", help="log-log power-law fit")
    fit.add_argument("--in", dest="infile", required=True)
    fit.add_argument("--cutoff", type=int, default=0)
    fit.add_argument("--window", nargs=2, type=float,
                     help="rate window [lo, hi]")
    fit.add_argument("--out")
    fit.set_defaults(func=cmd_fit_scaling)

    lz = subs.add_parser("lz-demo", help="two-level fidelity traces")
    lz.add_argument("--delta", type=float, default=1.0)
    lz.add_argument("--rate", type=float, default=100.0)
    lz.add_argument("--span", nargs=2, type=float, default=[-20.0, 20.0])
    lz.add_argument("--samples", type=int, default=200)
    lz.add_argument("--tol", type=float, default=1e-10)
    lz.add_argument("--out")
    lz.set_defaults(func=cmd_lz_demo)

    oracle = subs.add_parser("oracle-check", help="brute-force verifications")
    oracle.add_argument("--sizes", nargs="*", type=int, default=[4, 6, 8])
    oracle.add_argument("--out")
    oracle.set_defaults(func=cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, spinoracle.OracleCapError) as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
