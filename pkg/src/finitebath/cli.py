"""``finitebath <command> [--config FILE] [--key value ...]``.

Settings come from defaults, then the config file, then ``--key value``
flags. The output directory is taken from ``--out``, else the
``FINITEBATH_OUT`` environment variable, else the config, else the default.
"""
from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as ex
from .bath import hamiltonian_table
from .config import COMMANDS, KEYS, RunConfig, build_config, parse_lines
from .dynamics import (
    default_initial_state,
    evolve_amplitudes,
    survival_and_energy,
    trace_table,
)
from .eigensolver import solve_arrowhead, solve_dense, spectrum_table
from .errors import FiniteBathError, NonConvergence
from .fitting import fit_report
from .io import write_csv, write_kv

ENV_OUT = "FINITEBATH_OUT"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # one diagnostic line instead of usage plus message
        self.exit(2, f"finitebath: error: {message}\n")


def _default_text(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, tuple):
        if len(v) > 4 and list(v) == list(range(v[0], v[-1] + 1)):
            return f"{v[0]}..{v[-1]}"
        return ",".join(str(x) for x in v)
    return str(v)


def _epilog() -> str:
    lines = ["presets:"]
    for name, p in ex.PRESETS.items():
        lines.append(f"  {name:<10} {p.description}")
    for name, (N, p) in ex.SWEEP_PRESETS.items():
        lines.append(f"  {name:<10} sweep of weights versus g, N={N}, p={p:g}")
    lines.append("")
    lines.append("config keys (defaults):")
    for key, (_, default, doc) in KEYS.items():
        shown = "required" if key == "command" else _default_text(default)
        lines.append(f"  {key:<14} {shown:<16} {doc}")
    lines.append("")
    lines.append(f"environment: {ENV_OUT} overrides the output directory")
    return "\n".join(lines)


def make_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="finitebath",
                 description="Exact dynamics of an oscillator coupled to a finite bath.",
                 epilog=_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("command", nargs="?", choices=COMMANDS,
                    help="what to run (may also be set in the config)")
    ap.add_argument("--config", metavar="FILE", help="key = value settings file")
    ap.add_argument("--version", action="version", version=f"finitebath {__version__}")
    for key in KEYS:
        if key == "command":
            continue
        ap.add_argument(f"--{key}", metavar="VALUE", default=argparse.SUPPRESS,
                        help=argparse.SUPPRESS)
    return ap


def load_config(argv=None, environ=None) -> RunConfig:
    """Merge config file, flags and environment into a validated config."""
    environ = os.environ if environ is None else environ
    args = vars(make_parser().parse_args(argv))
    raw = {}
    path = args.pop("config", None)
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise FiniteBathError(f"cannot read config {path}: {exc.strerror or exc}") from None
        raw.update(parse_lines(text))
    command = args.pop("command", None)
    if command is not None:
        raw["command"] = (command, 0)
    out_flag = args.pop("out", None)
    for key, value in args.items():
        raw[key] = (value, 0)
    if out_flag is not None:
        raw["out"] = (out_flag, 0)
    elif environ.get(ENV_OUT):
        raw["out"] = (environ[ENV_OUT], 0)
    return build_config(raw)


def _solve(cfg: RunConfig, h, vectors=False):
    if cfg.solver == "dense":
        return solve_dense(h, cfg.tol)
    return solve_arrowhead(h, cfg.tol, vectors=vectors)


def _grid(cfg: RunConfig) -> np.ndarray:
    return np.linspace(cfg.t_start, cfg.t_end, cfg.steps)


def _manifest(cfg: RunConfig, extra=()) -> list:
    return [("finitebath.version", __version__)] + [
        (f"config.{k}", v) for k, v in cfg.items()] + list(extra)


def cmd_build(cfg, out):
    write_csv(out / "hamiltonian.csv", *hamiltonian_table(cfg.bath_spec().build()))


def cmd_solve(cfg, out):
    h = cfg.bath_spec().build()
    write_csv(out / "hamiltonian.csv", *hamiltonian_table(h))
    write_csv(out / "spectrum.csv", *spectrum_table(_solve(cfg, h)))


def cmd_evolve(cfg, out):
    h = cfg.bath_spec().build()
    dec = _solve(cfg, h)
    times = _grid(cfg)
    write_csv(out / "trace.csv", *trace_table(survival_and_energy(dec, times)))
    if cfg.solver == "dense":
        # coherent amplitudes of every oscillator at each sample
        a0 = default_initial_state(h.size)
        rows = []
        for t in times:
            st = evolve_amplitudes(dec, a0, float(t))
            rows += [(float(t), k + 1, float(a.real), float(a.imag))
                     for k, a in enumerate(st.amplitudes)]
        write_csv(out / "amplitudes.csv", ["t", "oscillator", "re_alpha", "im_alpha"], rows)


def cmd_fit(cfg, out):
    dec = _solve(cfg, cfg.bath_spec().build())
    linear, lorentz, decay = ex.fit_bundle(dec)
    write_kv(out / "fits.txt", fit_report(linear, lorentz, decay))


def write_scenario(res: ex.ScenarioResult, cfg: RunConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    dec = res.decomposition
    write_csv(out / "spectrum.csv", *spectrum_table(dec))
    lor = res.lorentzian
    k = np.arange(1, dec.size + 1)
    fitted = lor(k) if lor is not None else [None] * dec.size
    write_csv(out / "weights.csv", ["k", "weight", "lorentzian"],
              [(int(i), float(w), None if f is None else float(f))
               for i, w, f in zip(k, dec.weights, fitted)])
    write_csv(out / "trace_short.csv", *trace_table(res.trace_short))
    write_csv(out / "trace_long.csv", *trace_table(res.trace_long))
    write_kv(out / "fits.txt", ex.scenario_report(res))
    seed = getattr(res.spec, "seed", None)
    write_kv(out / "manifest.txt", _manifest(cfg, [("scenario.label", res.label),
                                                   ("scenario.spec", repr(res.spec)),
                                                   ("scenario.seed", seed)]))


def cmd_scenario(cfg, out):
    if cfg.preset is not None:
        res = ex.run_preset(cfg.preset, cfg.tol)
    else:
        res = ex.run_scenario(cfg.bath_spec(), label="custom", tol=cfg.tol)
    write_scenario(res, cfg, out / res.label)


def cmd_sweep(cfg, out):
    N, p = ex.SWEEP_PRESETS.get(cfg.preset, (cfg.N, cfg.p))
    res = ex.sweep_weights_vs_coupling(N, p, cfg.g_grid, cfg.tol)
    write_csv(out / "sweep.csv", ["g", "k", "weight"], res.rows())


def cmd_ensemble(cfg, out):
    res = ex.ensemble_fluctuations(cfg.N_values, cfg.lo, cfg.hi, cfg.g, cfg.seeds,
                                   (cfg.window_start, cfg.window_end),
                                   step=cfg.ensemble_step, tol=cfg.tol,
                                   workers=cfg.workers)
    write_csv(out / "ensemble.csv", ["N", "seed", "mean_E1", "rms_E1"], res.per_seed)
    write_csv(out / "ensemble_summary.csv", ["N", "mean_E1", "mean_rms_E1"], res.summary)


COMMAND_TABLE = {
    "build": cmd_build,
    "solve": cmd_solve,
    "evolve": cmd_evolve,
    "fit": cmd_fit,
    "scenario": cmd_scenario,
    "sweep": cmd_sweep,
    "ensemble": cmd_ensemble,
}


def main(argv=None) -> int:
    try:
        cfg = load_config(argv)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonConvergence)
            COMMAND_TABLE[cfg.command](cfg, out)
    except (FiniteBathError, OSError, ValueError) as exc:
        msg = " ".join(str(exc).split())
        print(f"finitebath: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
