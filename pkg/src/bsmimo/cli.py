"""Command-line front end.

Every subcommand reads a JSON config (see :mod:`bsmimo.config`), writes
CSV/JSON outputs into ``--out`` and puts a ``<file>.json`` sidecar next to
each output.  The sidecar holds the resolved config and the package version,
and it can be passed back as ``--config`` to repeat the run.

Exit codes: 1 configuration, 2 input files, 3 numerical degeneracy,
4 internal error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .antenna import DipoleArraySpec, build_network, load_imported, write_network
from .capacity import ChannelConfig, ergodic_capacity_many, ideal_reference, tx_correlation
from .capacity import _psd_sqrt
from .config import RunConfig, load_config
from .errors import BsmimoError, ConfigError
from .network import LoadState, PortNetwork, return_loss_db, state_pair
from .optimizer import ReactanceGrid, export_contour, optimize_band, subband_quantize
from .optimizer import write_band_csv, write_contour_csv
from .pattern import basis_from_states, imbalance_db, make_grid, normalized_cross_correlation, power
from .waveform import (PulseShape, TransitionProfile, multiplex_timeseries, oob_power_ratio,
                       psd_estimate, pulse_shape, random_streams, state_sequence, state_values,
                       switching_events, unchanged_fraction, write_envelope, write_psd_csv)

COMMANDS = ("model", "analyze", "capacity", "optimize", "spectrum")


class _Run:
    """Shared state of one CLI invocation: config, output dir, sidecar writer."""

    def __init__(self, command: str, cfg: RunConfig, out: Path, threads: int):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        return self.out / name

    def sidecar(self, path: Path, **extra) -> None:
        meta = {
            "artifact": "bsmimo",
            "version": __version__,
            "command": self.command,
            "file": path.name,
            "config": self.cfg.to_dict(),
        }
        meta.update(extra)
        _write_json(Path(str(path) + ".json"), meta)
        self.written.append(path)

    def write_rows(self, name: str, header, rows, **extra) -> Path:
        p = self.path(name)
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_cell(v) for v in row])
        self.sidecar(p, **extra)
        return p

    def write_json(self, name: str, obj, **extra) -> Path:
        p = self.path(name)
        _write_json(p, obj)
        self.sidecar(p, **extra)
        return p


def _cell(v):
    if isinstance(v, (str, int, np.integer)) and not isinstance(v, bool):
        return str(v)
    return repr(float(v))


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- antenna ----------------------------------------------------------------------


def _network(cfg: RunConfig) -> PortNetwork:
    grid = make_grid(cfg.n_theta, cfg.n_phi)
    if cfg.antenna_kind == "analytic":
        a = cfg.analytic
        lam = 299792458.0 / a.f0_hz
        freqs = cfg.frequencies_hz or list(np.linspace(a.span[0], a.span[1], a.n_freq) * a.f0_hz)
        try:
            spec = DipoleArraySpec(
                element_length=(a.driven_length * lam, a.parasitic_length * lam),
                wire_radius=a.wire_radius * lam,
                spacing=a.spacing * lam,
                frequencies=tuple(freqs),
            )
        except ValueError as exc:
            raise ConfigError("antenna.analytic", str(exc)) from None
        return build_network(spec, grid)
    imp = cfg.imported
    return load_imported(imp.touchstone, imp.patterns, imp.normalization)


def _frequencies(cfg: RunConfig, net: PortNetwork) -> list[float]:
    if cfg.frequencies_hz is None:
        return [float(f) for f in net.frequencies]
    for f in cfg.frequencies_hz:
        try:
            net.freq_index(f)
        except KeyError:
            raise ConfigError("frequencies_hz", f"{f!r} Hz is not a sample of the antenna data") from None
    return list(cfg.frequencies_hz)


def _center_frequency(freqs, requested=None, field="frequency") -> float:
    if requested is None:
        return freqs[len(freqs) // 2]
    for f in freqs:
        if abs(f - requested) <= 1e-9 * requested:
            return f
    raise ConfigError(field, f"{requested!r} Hz is not one of the run frequencies")


def _check_ports(cfg: RunConfig, net: PortNetwork):
    if net.n_ports != 3:
        raise ConfigError("antenna", f"need a three-port network (driven + two parasitics), got {net.n_ports}")
    if cfg.active_port != 0:
        raise ConfigError("active_port", "only port 0 can be driven in the mirrored three-port layout")


def _solve_pair(net, f, cfg):
    state = LoadState(cfg.loads.loads)
    # analytic arrays are symmetric by construction; imported data only to file precision
    return state_pair(net, f, state, active_port=cfg.active_port, strict=cfg.antenna_kind == "analytic")


# -- subcommands ------------------------------------------------------------------


def cmd_model(run: _Run) -> None:
    net = _network(run.cfg)
    ts, pats = write_network(net, run.out, "antenna")
    run.sidecar(ts, kind="touchstone")
    for k, p in enumerate(pats):
        run.sidecar(p, kind="port pattern", port=k)
    rows = []
    for fi, f in enumerate(net.frequencies):
        z = net.z[fi]
        rows.append([f] + [v for i in range(net.n_ports) for j in range(i, net.n_ports)
                           for v in (z[i, j].real, z[i, j].imag)])
    head = ["f_hz"] + [f"{c}_z{i}{j}_ohm" for i in range(net.n_ports) for j in range(i, net.n_ports)
                       for c in ("re", "im")]
    run.write_rows("impedance.csv", head, rows)


def cmd_analyze(run: _Run) -> None:
    cfg = run.cfg
    net = _network(cfg)
    _check_ports(cfg, net)
    freqs = _frequencies(cfg, net)
    rows, cuts = [], []
    g = net.grid
    it = int(np.argmin(np.abs(g.theta - np.pi / 2)))
    for f in freqs:
        sa, sb = _solve_pair(net, f, cfg)
        basis = basis_from_states(sa.pattern, sb.pattern)
        rows.append([
            f, min(return_loss_db(sa.gamma), return_loss_db(sb.gamma)), imbalance_db(basis),
            power(sa.pattern), power(sb.pattern), basis.p_b1, basis.p_b2,
            normalized_cross_correlation(basis), sa.p_rad, sa.p_load, sa.p_mismatch,
        ])
        pats = (sa.pattern, sb.pattern, basis.b1, basis.b2)
        for ip, phi in enumerate(g.phi):
            vals = []
            for p in pats:
                with np.errstate(divide="ignore"):
                    vals.append(10 * np.log10(4 * np.pi * abs(p.e_theta[it, ip]) ** 2))
                    vals.append(10 * np.log10(4 * np.pi * abs(p.e_phi[it, ip]) ** 2))
            cuts.append([f, np.degrees(g.theta[it]), np.degrees(phi)] + vals)
    run.write_rows(
        "analyze.csv",
        ["f_hz", "rl_db", "imbalance_db", "p_g1", "p_g2", "p_b1", "p_b2",
         "cross_corr", "p_rad", "p_load", "p_mismatch"],
        rows,
        notes="rl_db is the worse of the two mirrored states; powers are fractions of incident power",
    )
    head = ["f_hz", "theta_deg", "phi_deg"] + [
        f"{p}_{c}_dbi" for p in ("g1", "g2", "b1", "b2") for c in ("co", "cross")]
    run.write_rows("cuts.csv", head, cuts,
                   notes="cut at the grid theta node nearest 90 deg; co = theta, cross = phi; realized gain")


def _channel(cfg: RunConfig, snr_db: float) -> ChannelConfig:
    ch = cfg.channel
    return ChannelConfig(float(snr_db), ch.n_channels, ch.n_noise, cfg.seed)


def cmd_capacity(run: _Run) -> None:
    cfg = run.cfg
    ideal = []
    for snr in cfg.channel.snr_db:
        est = ideal_reference(_channel(cfg, snr), threads=run.threads)
        ideal.append([snr, est.bits_per_symbol, est.std_error])
    run.write_rows("ideal.csv", ["snr_db", "capacity", "std_error"], ideal,
                   notes="two ideal uncoupled antennas (r_tx = I)")
    if cfg.channel.ideal_only:
        return
    net = _network(cfg)
    _check_ports(cfg, net)
    freqs = _frequencies(cfg, net)
    sq = []
    for f in freqs:
        sa, sb = _solve_pair(net, f, cfg)
        sq.append(_psd_sqrt(tx_correlation(basis_from_states(sa.pattern, sb.pattern)).r_tx))
    sq = np.array(sq)
    rows = []
    for snr in cfg.channel.snr_db:
        m, s = ergodic_capacity_many(sq, _channel(cfg, snr), threads=run.threads)
        rows.extend([f, snr, mi, si] for f, mi, si in zip(freqs, m, s))
    rows.sort(key=lambda r: (r[0], r[1]))
    run.write_rows("capacity.csv", ["f_hz", "snr_db", "capacity", "std_error"], rows)


def cmd_optimize(run: _Run) -> None:
    cfg = run.cfg
    net = _network(cfg)
    _check_ports(cfg, net)
    freqs = sorted(_frequencies(cfg, net))
    sw = cfg.sweep
    grid = ReactanceGrid.uniform(sw.x_min, sw.x_max, sw.n)
    ch = _channel(cfg, cfg.channel.snr_db[0])
    results = optimize_band(net, freqs, grid, ch, cfg.active_port, sw.series_resistance, run.threads)
    ideal = ideal_reference(ch, threads=run.threads)
    write_band_csv(run.path("band.csv"), results)
    run.sidecar(run.path("band.csv"), snr_db=ch.snr_db,
                ideal_capacity=ideal.bits_per_symbol, ideal_std_error=ideal.std_error)

    fc = _center_frequency(freqs, sw.contour_hz, "sweep.contour_hz")
    res_c = results[freqs.index(fc)]
    table = export_contour(res_c)
    write_contour_csv(run.path("contour.csv"), table)
    run.sidecar(run.path("contour.csv"), f_hz=fc, plateau_fraction=table.plateau_fraction)

    plans = {}
    for k in sw.subbands:
        if k > len(results):
            raise ConfigError("sweep.subbands", f"k = {k} exceeds the {len(results)} run frequencies")
        plan = subband_quantize(results, k)
        plans[str(k)] = json.loads(plan.to_json())
    run.write_json("subbands.json", plans, ideal_capacity=ideal.bits_per_symbol)


def cmd_spectrum(run: _Run) -> None:
    cfg = run.cfg
    wf = cfg.waveform
    net = _network(cfg)
    _check_ports(cfg, net)
    freqs = _frequencies(cfg, net)
    f = _center_frequency(freqs, wf.frequency_hz, "waveform.frequency_hz")
    sa, sb = _solve_pair(net, f, cfg)
    direction = tuple(np.radians(wf.direction_deg))
    values = state_values((sa.pattern, sb.pattern), direction, wf.polarization)
    shape = PulseShape(wf.rolloff, wf.span, wf.sps)
    fs = wf.symbol_rate_hz * wf.sps
    s1, s2 = random_streams(wf.n_symbols, cfg.seed)
    states = state_sequence(s1, s2)

    oob = []
    single = pulse_shape(s1, shape) * values[1]  # one state held throughout
    est = psd_estimate(single, fs, wf.nperseg, wf.overlap)
    write_psd_csv(run.path("psd_single.csv"), est)
    run.sidecar(run.path("psd_single.csv"), rbw_hz=est.rbw, peak_density=est.peak_density)
    oob.append(["single", 0.0, oob_power_ratio(est, wf.band_edge_hz)])
    for r in wf.ramps:
        prof = TransitionProfile.ramp(r)
        y = multiplex_timeseries(s1, s2, (sa.pattern, sb.pattern), direction, shape, prof, wf.polarization)
        est = psd_estimate(y, fs, wf.nperseg, wf.overlap)
        name = f"psd_ramp_{int(round(100 * r)):03d}.csv"
        write_psd_csv(run.path(name), est)
        run.sidecar(run.path(name), rbw_hz=est.rbw, peak_density=est.peak_density, ramp_fraction=r)
        oob.append([prof.kind, r, oob_power_ratio(est, wf.band_edge_hz)])
        if wf.dump_envelope:
            p = run.path(f"envelope_ramp_{int(round(100 * r)):03d}.bin")
            write_envelope(p, y, fs, extra={"artifact": "bsmimo", "version": __version__,
                                             "command": run.command, "config": cfg.to_dict()})
            run.written.append(p)
    run.write_rows("oob.csv", ["profile", "ramp_fraction", "oob_db"], oob,
                   band_edge_hz=wf.band_edge_hz, f_hz=f,
                   switching_events=switching_events(states),
                   unchanged_fraction=unchanged_fraction(states))


HANDLERS = {
    "model": cmd_model,
    "analyze": cmd_analyze,
    "capacity": cmd_capacity,
    "optimize": cmd_optimize,
    "spectrum": cmd_spectrum,
}


# -- entry point ------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; here 2 means bad input files
    def error(self, message):
        raise ConfigError("arguments", message)


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bsmimo", description="Switched-parasitic antenna simulation runs.")
    p.add_argument("--version", action="version", version=f"bsmimo {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "model": "build or ingest the antenna and export Touchstone + pattern files",
        "analyze": "return loss, basis powers and pattern cuts for fixed load states",
        "capacity": "ergodic BPSK capacity versus SNR",
        "optimize": "reactance sweeps, optimal loads per frequency and sub-band plans",
        "spectrum": "PSD of the switched envelope and out-of-band power",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", required=True, help="JSON run config (or an output sidecar)")
        sp.add_argument("--out", help="output directory (overrides output_dir in the config)")
        sp.add_argument("--seed", type=_u64, help="random seed (overrides the config)")
        sp.add_argument("--threads", type=_positive, default=1, help="worker threads (default 1)")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config, seed=args.seed, output_dir=args.out)
        if cfg.output_dir is None:
            raise ConfigError("--out", "output directory required (flag or output_dir in config)")
        out = Path(cfg.output_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError("--out", f"cannot create {out}: {exc.strerror}") from None
        run = _Run(args.command, cfg, out, args.threads)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            HANDLERS[args.command](run)
        for p in run.written:
            print(p)
        return 0
    except BsmimoError as exc:
        prefix = {1: "config error", 2: "input error", 3: "numerical error"}.get(exc.exit_code, "internal error")
        print(f"bsmimo: {prefix}: {exc}", file=sys.stderr)
        return exc.exit_code
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the internal-error code
        print(f"bsmimo: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
