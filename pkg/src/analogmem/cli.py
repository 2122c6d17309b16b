"""Command-line pipeline.

``channel.json`` is the hub artifact: ``estimate-channel``/``synth-channel``
write it, every other command reads it. Each command also writes
``manifest_<command>.json`` (config hash, seed, library versions, timestamp).
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from pathlib import Path

import numba
import numpy as np
import scipy

from . import __version__
from .capacity import blahut_arimoto, uniform_capacity
from .channel import ConditionalChannel, estimate_kde, read_measurements_csv, synth_pcm_channel
from .config import RunConfig, subseed
from .energy import EnergyModel, default_s_values, energy_sweep, min_energy_per_bit, write_frontier
from .errors import AnalogMemError, ArtifactMismatch, ConfigError
from .joint import SourceModel, coding_variants, effective_channel, is_monotone, write_effective_channel_csv
from .levels import capacity_surface, write_surface_csv
from .rate_distortion import comparison_report, write_report_csv

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _dump(obj, path):
    Path(path).write_text(json.dumps(obj, indent=1), encoding="utf-8")


def _write_manifest(out: Path, command: str, cfg: RunConfig, extra=None):
    doc = {
        "command": command,
        "config_hash": cfg.config_hash(),
        "channel_hash": cfg.channel_hash(),
        "seed": cfg.seed,
        "versions": {
            "analogmem": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
        },
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    if extra:
        doc.update(extra)
    _dump(doc, out / f"manifest_{command}.json")


def _row_effective_support(ch: ConditionalChannel) -> np.ndarray:
    """Perplexity 2^H of each row, in read cells."""
    m = ch.matrix
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(m > 0, m * np.log2(m), 0.0).sum(axis=1)
    return np.exp2(h)


def _build_channel(cfg: RunConfig) -> ConditionalChannel:
    v, r = cfg.grids.v_grid(), cfg.grids.r_grid()
    if cfg.channel.source == "synthetic":
        return synth_pcm_channel(cfg.channel.params(), v, r)
    meas = read_measurements_csv(cfg.channel.csv_path)
    bw = cfg.channel.bandwidth
    return estimate_kde(meas, v, r, bw if bw == "auto" else float(bw))


def _emit_channel(cfg, out, command):
    ch = _build_channel(cfg)
    ch.save(out / "channel.json", channel_hash=cfg.channel_hash())
    eff = _row_effective_support(ch)
    print(f"rows={ch.n_writes} columns={ch.n_reads}")
    for v, e in zip(ch.v_grid.tolist(), eff.tolist()):
        print(f"  v_wl={v:.4f} effective_support_cells={e:.1f}")
    _write_manifest(out, command, cfg)


def cmd_estimate_channel(cfg, out, args):
    _emit_channel(cfg, out, "estimate-channel")


def cmd_synth_channel(cfg, out, args):
    if cfg.channel.source != "synthetic":
        raise ConfigError("config describes a CSV channel; use estimate-channel")
    _emit_channel(cfg, out, "synth-channel")


def _load_channel(cfg, out, args) -> ConditionalChannel:
    path = Path(args.channel) if args.channel else out / "channel.json"
    ch = ConditionalChannel.load(path)
    doc = json.loads(path.read_text())
    stored = doc.get("channel_hash")
    if args.config and stored and stored != cfg.channel_hash():
        raise ArtifactMismatch(
            f"{path} was built from a different grid/channel config "
            f"(artifact {stored[:12]}, config {cfg.channel_hash()[:12]})"
        )
    return ch


def cmd_capacity(cfg, out, args):
    ch = _load_channel(cfg, out, args)
    c = cfg.capacity
    res = blahut_arimoto(ch, c.tol, c.max_iter, support_epsilon=c.support_epsilon)
    uni = uniform_capacity(ch, ba=res) if ch.n_writes > 0 else 0.0
    doc = res.to_dict()
    doc.update({
        "support_size": res.support_size,
        "uniform_capacity_bits": uni,
        "uniform_loss_fraction": (1.0 - uni / res.capacity_bits) if res.capacity_bits > 0 else 0.0,
    })
    _dump(doc, out / "capacity.json")
    print(f"capacity_bits={res.capacity_bits:.6f} support_size={res.support_size} "
          f"uniform_capacity_bits={uni:.6f} converged={res.converged}")
    _write_manifest(out, "capacity", cfg)


def cmd_levels(cfg, out, args):
    ch = _load_channel(cfg, out, args)
    lv = cfg.levels
    sched = lv.schedule(subseed(cfg.seed, "levels"))
    designs = capacity_surface(ch, lv.reads, lv.writes, sched, eval_tol=lv.eval_tol)
    write_surface_csv(designs, out / "levels.csv")
    for d in designs:
        print(f"n_writes={d.n_writes} n_reads={d.n_reads} capacity_bits={d.capacity_bits:.6f}")
    _write_manifest(out, "levels", cfg)


def _energy_model(cfg, ch) -> EnergyModel:
    e = cfg.energy
    if e.model == "table":
        return EnergyModel.table(e.table)
    return EnergyModel.parametric(ch.v_grid, e.a, e.b, e.c)


def cmd_energy(cfg, out, args):
    ch = _load_channel(cfg, out, args)
    e = cfg.energy
    em = _energy_model(cfg, ch)
    s_values = e.s_values if e.s_values is not None else default_s_values(ch, em, e.n_s)
    points = energy_sweep(ch, em, s_values, tol=e.tol)
    write_frontier(points, out / "energy_frontier.csv", out / "energy_inputs.json")
    best, saving = min_energy_per_bit(points)
    summary = {
        "max_capacity": {"lagrange_s": points[0].lagrange_s, "capacity_bits": points[0].capacity_bits,
                         "energy_per_bit_nj": points[0].energy_per_bit_nj,
                         "mean_voltage": points[0].mean_voltage(ch)},
        "max_efficiency": {"lagrange_s": best.lagrange_s, "capacity_bits": best.capacity_bits,
                           "energy_per_bit_nj": best.energy_per_bit_nj,
                           "mean_voltage": best.mean_voltage(ch)},
        "energy_per_bit_saving": saving,
    }
    _dump(summary, out / "energy_summary.json")
    print(f"min energy/bit {best.energy_per_bit_nj:.6g} nJ at s={best.lagrange_s:.6g}; saving {saving:.1%}")
    _write_manifest(out, "energy", cfg)


def _source(cfg) -> SourceModel:
    j = cfg.joint
    return SourceModel(j.mean, j.variance, j.n_points, j.span)


def _variants(cfg, ch, src):
    j = cfg.joint
    return coding_variants(
        src, ch, seed=subseed(cfg.seed, "joint"),
        max_rounds=j.max_rounds, tol=j.tol, n_random=j.n_random, power_weight=j.power_weight,
    )


def cmd_joint(cfg, out, args):
    ch = _load_channel(cfg, out, args)
    src = _source(cfg)
    results = _variants(cfg, ch, src)
    doc = {"source_grid": src.grid.tolist(), "read_cells": ch.cell_centers.tolist(), "variants": {}}
    for name, res in results.items():
        entry = res.to_dict()
        m = res.mapping.to_dict(src, ch)
        entry.update({k: m[k] for k in ("encoder_levels", "encoder_indices", "decoder_values")})
        entry["encoder_monotone"] = is_monotone(res.mapping.encoder)
        doc["variants"][name] = entry
        print(f"{name:>13}: mse={res.mse:.6g} snr_db={res.snr_db:.4f}")
        eff = effective_channel(src, ch, res.mapping, cfg.joint.n_bins)
        write_effective_channel_csv(eff, out / f"effective_channel_{name}.csv")
    _dump(doc, out / "joint.json")
    _write_manifest(out, "joint", cfg)


def cmd_rd(cfg, out, args):
    ch = _load_channel(cfg, out, args)
    src = _source(cfg)
    results = _variants(cfg, ch, src)
    r = cfg.rd
    caps = r.capacities
    if caps is None:
        c = cfg.capacity
        caps = [blahut_arimoto(ch, c.tol, c.max_iter).capacity_bits]
    points = comparison_report(
        list(results.values()), caps, r.quantizer_levels, src=src, rates=r.rates, hybrid=r.hybrid
    )
    write_report_csv(points, out / "rd.csv")
    for p in points:
        print(f"{p.label:>40}: rate={p.rate_devices_per_symbol:g} snr_db={p.snr_db:.4f}")
    _write_manifest(out, "rd", cfg)


COMMANDS = {
    "estimate-channel": (cmd_estimate_channel, "KDE estimate of P(R|V) from the configured CSV (or synthetic model) -> channel.json"),
    "synth-channel": (cmd_synth_channel, "build the synthetic PCM channel -> channel.json"),
    "capacity": (cmd_capacity, "Blahut-Arimoto capacity -> capacity.json"),
    "levels": (cmd_levels, "annealed read/write level surface -> levels.csv"),
    "energy": (cmd_energy, "capacity/energy frontier -> energy_frontier.csv"),
    "joint": (cmd_joint, "joint source-channel mappings -> joint.json"),
    "rd": (cmd_rd, "rate-distortion comparison -> rd.csv"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="analogmem", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON run config (defaults used when omitted)")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, help="global seed (overrides config)")
        p.add_argument("--channel", help="channel.json to read (default: <out>/channel.json)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2**64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg.seed = args.seed
        out = Path(args.out or cfg.output_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"cannot create output directory {out}: {e}") from None
        func(cfg, out, args)
    except AnalogMemError as e:
        print(f"analogmem {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except (FloatingPointError, ArithmeticError) as e:
        print(f"analogmem {args.command}: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
