"""Command-line driver: ``bosonic-meter <subcommand> [--config FILE] ...``.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .bell import violation_scan
from .expectation import conditional_probability, joint_probability
from .kernels import compute_kernels
from .model import ModelError, ProbeSet, SpectralData, SystemSpec, power_law
from .onedim import OneDimModel, closed_kernels, export_spectral
from .oracle import TruncationError, run_suite
from .quadrature import QuadratureError, QuadratureSettings

EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

FIG1_G = 2.5
FIG1_POSITIONS = (0.0, 2.0)
FIG1_TIMES = (0.6, 0.7, 2.0, 3.0)

_MODEL_KEYS = {
    "onedim-gaussian": {"family", "g", "a", "c", "probes"},
    "ohmic": {"family", "coupling", "omega_c"},
    "power-law": {"family", "coupling", "s", "omega_c"},
}
_SYSTEM_KEYS = {"energies", "rho0", "rho0_imag", "psi", "psi_imag", "temperature"}
_RUN_KEYS = {
    "times", "t_max", "n_times", "rel_tol", "abs_tol", "probe", "u", "u_imag",
    "p_min", "p_max", "n_p", "t0_grid", "g_grid",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: dict
    system: dict
    run: dict

    def as_dict(self) -> dict:
        return {"model": self.model, "system": self.system, "run": self.run}


def _check_keys(section: str, table: dict, allowed: set):
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"[{section}] unknown key(s): {', '.join(unknown)}")


def _positive(section: str, table: dict, *keys):
    for key in keys:
        if key in table and not (isinstance(table[key], (int, float)) and table[key] > 0):
            raise ConfigError(f"[{section}] {key} must be a positive number")


def parse_config(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None
    _check_keys("top level", data, {"model", "system", "run"})
    model = dict(data.get("model", {"family": "onedim-gaussian", "g": FIG1_G}))
    family = model.get("family")
    if family not in _MODEL_KEYS:
        raise ConfigError(f"[model] family must be one of {sorted(_MODEL_KEYS)}, got {family!r}")
    _check_keys("model", model, _MODEL_KEYS[family])
    _positive("model", model, "g", "a", "c", "coupling", "s", "omega_c")
    system = dict(data.get("system", {}))
    _check_keys("system", system, _SYSTEM_KEYS)
    if "temperature" in system and not (
        isinstance(system["temperature"], (int, float)) and system["temperature"] >= 0
    ):
        raise ConfigError("[system] temperature must be >= 0")
    run = dict(data.get("run", {}))
    _check_keys("run", run, _RUN_KEYS)
    _positive("run", run, "rel_tol", "abs_tol", "n_times", "n_p")
    return RunConfig(model, system, run)


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return parse_config("")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


def build_system(cfg: RunConfig) -> SystemSpec:
    s = cfg.system
    energies = s.get("energies", [0.0, 0.0])
    T = float(s.get("temperature", 0.0))
    try:
        if "rho0" in s:
            rho = np.array(s["rho0"], dtype=complex)
            if "rho0_imag" in s:
                rho = rho + 1j * np.array(s["rho0_imag"], dtype=float)
            return SystemSpec(tuple(energies), rho, T)
        psi = np.array(s.get("psi", [1.0] * len(energies)), dtype=complex)
        if "psi_imag" in s:
            psi = psi + 1j * np.array(s["psi_imag"], dtype=float)
        return SystemSpec.pure(energies, psi, T)
    except (ModelError, ValueError) as exc:
        raise ConfigError(f"[system] {exc}") from None


def build_onedim(cfg: RunConfig) -> OneDimModel:
    m = cfg.model
    if m["family"] != "onedim-gaussian":
        raise ConfigError("this subcommand needs family = 'onedim-gaussian'")
    probes = m.get("probes", {"p0": 0.0})
    if not isinstance(probes, dict):
        raise ConfigError("[model] probes must be a table of label = position")
    return OneDimModel(g=m.get("g", FIG1_G), a=m.get("a", 1.0), c=m.get("c", 1.0),
                       probes=probes)


def build_spectral(cfg: RunConfig) -> tuple[SpectralData, ProbeSet]:
    m = cfg.model
    if m["family"] == "onedim-gaussian":
        model = build_onedim(cfg)
        return export_spectral(model), ProbeSet(model.labels)
    wc = m.get("omega_c", 1.0)
    s = 1.0 if m["family"] == "ohmic" else m.get("s", 1.0)
    return power_law(m.get("coupling", 1.0), s, wc), ProbeSet(())


def time_grid(cfg: RunConfig) -> np.ndarray:
    r = cfg.run
    if "times" in r:
        return np.array(sorted(float(t) for t in r["times"]))
    t_max = float(r.get("t_max", 5.0))
    if t_max < 0:
        raise ConfigError("[run] t_max must be >= 0")
    if t_max == 0:
        return np.array([0.0])
    return np.linspace(0.0, t_max, int(r.get("n_times", 51)))


def settings_from(cfg: RunConfig, tol: float | None) -> QuadratureSettings:
    r = cfg.run
    return QuadratureSettings(
        rel_tol=tol if tol is not None else r.get("rel_tol", 1e-9),
        abs_tol=r.get("abs_tol", 1e-12),
    )


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _tag(t: float) -> str:
    return format(t, "g").replace(".", "p")


def cmd_kernels(cfg, out: Path, settings, threads) -> list[str]:
    spectral, probes = build_spectral(cfg)
    T = float(cfg.system.get("temperature", 0.0))
    kern = compute_kernels(spectral, probes, time_grid(cfg), T, settings, threads=threads)
    header, rows = kern.to_rows()
    write_csv(out / "kernels.csv", header, rows)
    return ["kernels.csv"]


def _u(cfg, n: int) -> np.ndarray:
    u = np.array(cfg.run.get("u", [1.0] * n), dtype=complex)
    if "u_imag" in cfg.run:
        u = u + 1j * np.array(cfg.run["u_imag"], dtype=float)
    return u / np.linalg.norm(u)


def cmd_prob(cfg, out: Path, settings, threads) -> list[str]:
    model = build_onedim(cfg)
    spec = build_system(cfg)
    if spec.temperature != 0:
        raise ConfigError("the one-dimensional model is defined at T = 0")
    probe = cfg.run.get("probe", model.labels[0])
    if probe not in model.probes:
        raise ConfigError(f"[run] probe {probe!r} is not a model probe")
    times = time_grid(cfg)
    kern = closed_kernels(model, times, settings)
    u = _u(cfg, spec.n_levels)
    grid = None
    if "p_min" in cfg.run or "p_max" in cfg.run:
        grid = np.linspace(cfg.run.get("p_min", -6.0), cfg.run.get("p_max", 6.0),
                           int(cfg.run.get("n_p", 1025)))
    files = []
    for t in times:
        res = joint_probability(spec, kern, u, probe, grid, float(t))
        name = f"prob_t{_tag(float(t))}.csv"
        write_csv(out / name, ("p", "total", "separable", "interference"), res.rows())
        files.append(name)
    return files


def cmd_bell(cfg, out: Path, settings, threads) -> list[str]:
    model = build_onedim(cfg)
    spec = build_system(cfg)
    t0_grid = cfg.run.get("t0_grid", [1.0, 2.0, 3.0])
    g_grid = cfg.run.get("g_grid", [model.g])
    rows = violation_scan(model, spec, t0_grid, g_grid, threads=threads)
    write_csv(out / "bell_scan.csv", rows[0].HEADER, [r.as_tuple() for r in rows])
    return ["bell_scan.csv"]


PLOT_SCRIPT = '''"""Plot the conditional distributions written by `bosonic-meter fig1`."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
# (x1, (t, t')) -> files, one panel each
panels = {panels!r}


def read(name):
    with open(here / name) as fh:
        rows = list(csv.DictReader(fh))
    return {{k: [float(r[k]) for r in rows] for k in rows[0]}}


fig, axes = plt.subplots(2, 2, figsize=(10, 7))
for ax, ((x, times), names) in zip(axes.ravel(), panels.items()):
    for t, name in zip(times, names):
        d = read(name)
        ax.plot(d["p"], d["total"], label=f"t={{t:g}}")
        ax.plot(d["p"], d["separable"], "--", label=f"separable t={{t:g}}")
    ax.plot(d["p"], d["thermal"], ":", color="k", label="t=0")
    ax.set_title(f"x1={{x:g}}")
    ax.set_xlabel("p")
    ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(here / "fig1.png", dpi=150)
'''


def fig1_name(x: float, t: float) -> str:
    return f"fig1_x{_tag(x)}_t{_tag(t)}.csv"


def cmd_fig1(cfg, out: Path, settings, threads) -> list[str]:
    u = np.array([1.0, 1.0]) / np.sqrt(2.0)
    spec = SystemSpec.pure((0.0, 0.0), u)
    files = []
    for x in FIG1_POSITIONS:
        model = OneDimModel(g=FIG1_G, probes={"p1": x})
        kern = closed_kernels(model, (0.0, *FIG1_TIMES), settings)
        # branches sit near 2A = -3.1 at x1 = 0; +-8 keeps their tails
        grid = np.linspace(-8.0, 8.0, 1025)
        thermal = conditional_probability(spec, kern, u, "p1", grid, 0.0)
        for t in FIG1_TIMES:
            res = joint_probability(spec, kern, u, "p1", grid, t)
            scale = 1.0 / res.population
            name = fig1_name(x, t)
            write_csv(out / name, ("p", "total", "separable", "interference", "thermal"),
                      zip(grid, res.total * scale, res.separable * scale,
                          res.interference * scale, thermal))
            files.append(name)
    pairs = list(zip(FIG1_TIMES[::2], FIG1_TIMES[1::2]))
    panels = {(x, ts): [fig1_name(x, t) for t in ts] for x in FIG1_POSITIONS for ts in pairs}
    script = PLOT_SCRIPT.format(panels=panels)
    (out / "plot_fig1.py").write_text(script)
    files.append("plot_fig1.py")
    return files


def cmd_verify(cfg, out: Path, settings, threads, *, quick: bool):
    results = run_suite(quick=quick)
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status} {r.name}: deviation {r.deviation:.3e} (tol {r.tolerance:.0e})")
    print("\n".join(lines))
    write_csv(out / "verify.csv", ("check", "deviation", "tolerance", "passed"),
              [(r.name, r.deviation, r.tolerance, r.passed) for r in results])
    return ["verify.csv"], all(r.passed for r in results)


COMMANDS = {"kernels": cmd_kernels, "prob": cmd_prob, "bell": cmd_bell, "fig1": cmd_fig1}


def _threads(flag: int | None) -> int:
    env = os.environ.get("BOSONIC_METER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"BOSONIC_METER_THREADS must be an integer, got {env!r}") from None
    return max(1, flag or 1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bosonic-meter", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("subcommand", choices=[*COMMANDS, "verify"])
    parser.add_argument("--config", help="TOML file with [model], [system], [run]")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--tol", type=float, help="quadrature relative tolerance")
    parser.add_argument("--threads", type=int, help="worker threads")
    parser.add_argument("--quick", action="store_true", help="reduced verify suite")
    return parser


def write_manifest(out: Path, args, cfg: RunConfig, settings, threads, files):
    manifest: dict[str, Any] = {
        "tool": "bosonic-meter",
        "version": __version__,
        "subcommand": args.subcommand,
        "config": cfg.as_dict(),
        "quadrature": {"rel_tol": settings.rel_tol, "abs_tol": settings.abs_tol},
        "threads": threads,
        "quick": bool(args.quick),
        "files": files,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        settings = settings_from(cfg, args.tol)
        threads = _threads(args.threads)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    try:
        if args.subcommand == "verify":
            files, ok = cmd_verify(cfg, out, settings, threads, quick=args.quick)
            status = 0 if ok else EXIT_VERIFY
        else:
            files = COMMANDS[args.subcommand](cfg, out, settings, threads)
    except (ConfigError, ModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, TruncationError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_manifest(out, args, cfg, settings, threads, files)
    return status


if __name__ == "__main__":
    sys.exit(main())
