"""``etalon-forge`` command line: simulate, target, estimate, synthesize, verify.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 PR goal unmet
with the reflector inventory exhausted.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import config as configmod
from . import spectral, svg, synth, sysid, target
from .errors import (ConfigError, DomainError, EtalonError, InsufficientPeaksError,
                     OutOfReflectorsError, SearchSpaceTooLarge)
from .model import EtalonConfig, evaluate_profile
from .spectral import TransmissionProfile

log = logging.getLogger("etalon_forge")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_PR_UNMET = 4

COMMANDS = ("simulate", "target", "estimate", "synthesize", "verify")


@dataclass
class Run:
    cfg: configmod.RunConfig
    out: Path
    plot: bool
    threads: int

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / name


# ---------------------------------------------------------------------------
# shared pipeline steps


def etalon_from(cfg: configmod.RunConfig) -> EtalonConfig:
    e = cfg.section("etalon")
    return EtalonConfig.from_reflectivities(e["reflectivities"], e["x"], unit_length=e["unit_length"],
                                            lambda0=e["lambda0"], group_index=e["group_index"])


def nominal_fsr(et: EtalonConfig) -> float:
    """Comb spacing of the longest cavity; only used to size grids."""
    return et.lambda0 ** 2 / (2 * et.unit_length * max(et.x))


def design_center(cfg: configmod.RunConfig, et: EtalonConfig) -> float:
    """Design wavelength, optionally moved to where every odd multiple of x/M resonates."""
    if not cfg.section("grid")["align"]:
        return et.lambda0
    factor = cfg.section("target")["factor"]
    return spectral.snap_to_phase(et.lambda0, et.unit_length, math.pi * factor / math.gcd(*et.x))


def simulate_grid(cfg: configmod.RunConfig, et: EtalonConfig) -> spectral.SpectralGrid:
    g = cfg.section("grid")
    span = g["span_pm"] * 1e-12 if "span_pm" in g else g["fsr_count"] * nominal_fsr(et)
    return spectral.make_grid(design_center(cfg, et), span, g["count"])


def build_target(cfg: configmod.RunConfig):
    """``(base_profile, desired_profile)``; the base is None when the target comes from a CSV."""
    t = cfg.section("target")
    if "csv" in t:
        return None, spectral.read_profile_csv(cfg.input_path(t["csv"]))
    et = etalon_from(cfg)
    g = cfg.section("grid")
    factor = t["factor"]
    span = (factor + g["padding_fsr"]) * nominal_fsr(et)
    count = int(round(g["count"] * (factor + g["padding_fsr"]) / factor))
    center = design_center(cfg, et)
    base = evaluate_profile(et, spectral.make_grid(center, span, count))
    desired = target.enhance_fsr_target(base, factor, t["mask_floor"], t["rolloff"], center=center,
                                        lobe_depth=t["lobe_depth"])
    return base, desired


def _fit_kwargs(cfg):
    s = cfg.section("sysid")
    return dict(max_iter=s["max_iter"], tol=s["tol"], real=s["real"])


def estimate_profile(cfg: configmod.RunConfig, desired: TransmissionProfile, threads: int = 1):
    """Profile the synthesis scores against: the fitted model, or the target itself."""
    s = cfg.section("synth")
    if s["estimate"] == "target":
        return desired, None
    unit = cfg.section("etalon")["unit_length"]
    response = sysid.complexify_target(desired, unit)
    if "estimate_order" in s:
        model, report = sysid.fit_rational(response, s["estimate_order"], **_fit_kwargs(cfg))
    else:
        reports = sysid.order_sweep(response, cfg.section("sysid")["orders"], threads=threads,
                                    **_fit_kwargs(cfg))
        best = sysid.select_order(reports, cfg.section("sysid")["select_tolerance"])
        model, report = sysid.fit_rational(response, best.order, **_fit_kwargs(cfg))
    values = np.abs(model.response(desired.wavelengths)) ** 2
    return TransmissionProfile(desired.grid, values), report


def _plot(run: Run, name: str, profile: TransmissionProfile, title: str) -> None:
    if run.plot:
        svg.write_profile_svg(run.path(name), profile, title)


def _json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _finite(v):
    return v if v is not None and math.isfinite(v) else None


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(run: Run) -> int:
    et = etalon_from(run.cfg)
    profile = evaluate_profile(et, simulate_grid(run.cfg, et))
    spectral.write_profile_csv(run.path("profile.csv"), profile)
    _plot(run, "profile.svg", profile, f"x = {list(et.x)}")
    log.info("simulated %d samples for x=%s", profile.grid.count, et.x)
    return EXIT_OK


def cmd_target(run: Run) -> int:
    _, desired = build_target(run.cfg)
    spectral.write_profile_csv(run.path("target.csv"), desired)
    _plot(run, "target.svg", desired, "desired profile")
    return EXIT_OK


def cmd_estimate(run: Run) -> int:
    _, desired = build_target(run.cfg)
    if np.ptp(desired.intensity) == 0:
        print("etalon-forge: numerical failure: target profile is constant; nothing to identify",
              file=sys.stderr)
        return EXIT_NUMERIC
    unit = run.cfg.section("etalon")["unit_length"]
    response = sysid.complexify_target(desired, unit)
    reports = sysid.order_sweep(response, run.cfg.section("sysid")["orders"], threads=run.threads,
                                **_fit_kwargs(run.cfg))
    sysid.write_fit_reports_csv(run.path("fit_report.csv"), reports)
    ok = [r for r in reports if r.error is None]
    if not ok:
        log.error("every order failed to fit")
        return EXIT_NUMERIC
    best = sysid.select_order(reports, run.cfg.section("sysid")["select_tolerance"])
    log.info("selected order %d: fit %.4f%%", best.order, best.fit_percent)
    if run.plot:
        svg.write_fit_svg(run.path("fit_report.svg"), reports)
    return EXIT_OK


def _search_for(cfg, cavities: int) -> synth.SearchSpec:
    for entry in cfg.section("synth").get("search", []):
        if entry["cavities"] == cavities:
            ties = [tuple(a - 1 for a in t) for t in entry.get("ties", [])]
            return synth.SearchSpec(entry["ranges"], ties,
                                    entry.get("max_candidates", synth.MAX_CANDIDATES))
    raise ConfigError(f"no [[synth.search]] entry with cavities = {cavities}")


def cmd_synthesize(run: Run) -> int:
    cfg = run.cfg
    cfg.require("synth")
    s = cfg.section("synth")
    e = cfg.section("etalon")
    lobe_depth = cfg.section("target")["lobe_depth"]
    _, desired = build_target(cfg)
    estimate, report = estimate_profile(cfg, desired, run.threads)
    spectral.write_profile_csv(run.path("estimate.csv"), estimate)

    stack = tuple(e["reflectivities"])
    inventory = tuple(s["inventory"])
    stages = []
    code = EXIT_OK
    while True:
        n = len(stack) - 1
        spec = _search_for(cfg, n)
        ranked = synth.search_lengths(
            spec, stack, desired, estimate, unit_length=e["unit_length"],
            group_index=e["group_index"], threads=run.threads, gain_fit=s["gain_fit"],
            lobe_depth=lobe_depth)
        synth.write_candidates_csv(run.path(f"candidates_{n}cav.csv"), ranked,
                                   cfg.section("output").get("top"))
        best = ranked[0]
        log.info("%d cavities: best x=%s PR %.2f dB", n, best.x, best.pr_db)
        stages.append({
            "cavities": n,
            "reflectivities": [float(v) for v in stack],
            "candidates": len(ranked),
            "best_x": list(best.x),
            "pr_db": _finite(best.pr_db),
            "mse_vs_estimate": best.mse_vs_estimate,
            "mse_vs_target": best.mse_vs_target,
            "lengths_cm": [round(v, 2) for v in best.physical_lengths_cm],
        })
        if best.pr_db <= s["pr_goal"]:
            break
        try:
            refl, rest = synth.escalate(stack, inventory)
        except OutOfReflectorsError:
            log.warning("PR goal %.1f dB unmet and the reflector inventory is empty", s["pr_goal"])
            code = EXIT_PR_UNMET
            break
        stack, inventory = tuple(f.R for f in refl), rest

    final = stages[-1]
    if run.plot:
        et = EtalonConfig.from_reflectivities(stack, final["best_x"], unit_length=e["unit_length"])
        _plot(run, "design.svg", evaluate_profile(et, desired.grid), f"x = {final['best_x']}")
    _json(run.path("synth_summary.json"), {
        "pr_goal_db": s["pr_goal"],
        "goal_met": code == EXIT_OK,
        "estimate": s["estimate"],
        "estimate_order": None if report is None else report.order,
        "estimate_fit_percent": None if report is None else report.fit_percent,
        "stages": stages,
    })
    return code


def _design_from(cfg):
    v = cfg.section("verify")
    e = cfg.section("etalon")
    if "x" in v:
        x = tuple(v["x"])
    elif "design_csv" in v:
        rows = synth.read_candidates_csv(cfg.input_path(v["design_csv"]))
        if len(rows) < v["row"]:
            raise ConfigError(f"'verify.row' = {v['row']} but the design CSV has {len(rows)} rows")
        x = rows[v["row"] - 1]
    else:
        raise ConfigError("'verify' needs 'x' or 'design_csv'")
    if "reflectivities" in v:
        refl = v["reflectivities"]
    else:
        refl = list(e["reflectivities"])
        inventory = list(cfg.section("synth")["inventory"])
        while len(refl) < len(x) + 1 and inventory:
            refl = [f.R for f in synth.escalate(refl, inventory[:1])[0]]
            inventory.pop(0)
    if len(refl) != len(x) + 1:
        raise ConfigError(f"{len(x)} cavities need {len(x) + 1} reflectivities; "
                          "set 'verify.reflectivities'")
    return EtalonConfig.from_reflectivities(refl, x, unit_length=e["unit_length"],
                                            group_index=e["group_index"])


def cmd_verify(run: Run) -> int:
    cfg = run.cfg
    lobe_depth = cfg.section("target")["lobe_depth"]
    design = _design_from(cfg)
    base, desired = build_target(cfg)
    grid = desired.grid
    profile = evaluate_profile(design, grid)
    pr = spectral.peak_rejection(profile, lobe_depth=lobe_depth)
    peaks = spectral.find_peaks(profile, spectral.MAIN_PEAK_FLOOR, lobe_depth)

    windows = cfg.section("verify")["windows"]
    wide_grid = spectral.make_grid(grid.center, windows * (grid.span + grid.step),
                                   windows * grid.count)
    wide = evaluate_profile(design, wide_grid)
    try:
        fsr = spectral.measure_fsr(wide, spectral.MAIN_PEAK_FLOOR, lobe_depth)
    except InsufficientPeaksError:
        fsr = None
    base_fsr = None
    if base is not None:
        base_fsr = spectral.measure_fsr(base, spectral.MAIN_PEAK_FLOOR, lobe_depth)
    _json(run.path("metrics.json"), {
        "x": list(design.x),
        "reflectivities": [f.R for f in design.reflectors],
        "fsr_pm": None if fsr is None else fsr * 1e12,
        "base_fsr_pm": None if base_fsr is None else base_fsr * 1e12,
        "fsr_ratio": None if fsr is None or base_fsr is None else fsr / base_fsr,
        "pr_db": _finite(pr),
        "peaks": len(peaks),
        "mse_vs_target": spectral.mse(profile.normalized(), desired.normalized()),
    })
    _plot(run, "verify.svg", profile, f"x = {list(design.x)}")
    return EXIT_OK


HANDLERS = {
    "simulate": cmd_simulate,
    "target": cmd_target,
    "estimate": cmd_estimate,
    "synthesize": cmd_synthesize,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="etalon-forge",
                                description="Design multistage fibre Fabry-Perot etalons.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, metavar="PATH",
                   help="TOML run configuration ('example' loads the bundled one)")
    p.add_argument("--out", metavar="DIR", help="output directory (default: output.dir)")
    p.add_argument("--plot", action="store_true", help="also write SVG plots")
    p.add_argument("--threads", type=int, metavar="N", help="worker threads for scans and sweeps")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        path = configmod.example_path() if args.config == "example" else args.config
        cfg = configmod.load(path)
        out = Path(args.out if args.out else cfg.section("output")["dir"])
        threads = cfg.section("synth")["threads"] if args.threads is None else args.threads
        if threads < 1:
            raise ConfigError("--threads must be >= 1")
        run = Run(cfg, out, args.plot or cfg.section("output")["plot"], threads)
        return HANDLERS[args.command](run)
    except (ConfigError, SearchSpaceTooLarge, DomainError, OSError) as exc:
        print(f"etalon-forge: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EtalonError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"etalon-forge: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
