"""Optimized discrete capacity over (n_writes, n_reads) on the synthetic channel."""

import argparse
import time

from analogmem.capacity import blahut_arimoto
from analogmem.channel import SynthPcmParams, linear_voltage_grid, synth_pcm_channel, uniform_resistance_grid
from analogmem.levels import AnnealSchedule, capacity_surface, write_surface_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=512, help="read-grid cells")
    ap.add_argument("--writes", type=int, nargs="+", default=[2, 4, 8, 16])
    ap.add_argument("--reads", type=int, nargs="+", default=[2, 4, 8, 16, 32, 64])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="levels.csv")
    args = ap.parse_args()

    ch = synth_pcm_channel(SynthPcmParams(), linear_voltage_grid(0.5, 3.0, 40), uniform_resistance_grid(3.0, 7.5, args.cells))
    analog = blahut_arimoto(ch)
    print(f"analog capacity {analog.capacity_bits:.4f} bits, support {analog.support_size}")
    t0 = time.perf_counter()
    designs = capacity_surface(ch, args.reads, args.writes, AnnealSchedule(seed=args.seed), analog=analog)
    write_surface_csv(designs, args.out)
    for d in designs:
        print(f"{d.n_writes:3d} x {d.n_reads:3d}: {d.capacity_bits:.4f} bits "
              f"({d.capacity_bits / analog.capacity_bits:.1%} of analog)")
    print(f"{time.perf_counter() - t0:.1f} s -> {args.out}")


if __name__ == "__main__":
    main()
