"""Capacity/energy frontier of the synthetic channel under a quadratic pulse-energy model."""

import argparse

from analogmem.channel import SynthPcmParams, linear_voltage_grid, synth_pcm_channel, uniform_resistance_grid
from analogmem.energy import EnergyModel, energy_sweep, min_energy_per_bit, write_frontier


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=512)
    ap.add_argument("--out", default="energy_frontier.csv")
    args = ap.parse_args()

    ch = synth_pcm_channel(SynthPcmParams(), linear_voltage_grid(0.5, 3.0, 40), uniform_resistance_grid(3.0, 7.5, args.cells))
    em = EnergyModel.parametric(ch.v_grid)
    points = energy_sweep(ch, em)
    write_frontier(points, args.out)
    best, saving = min_energy_per_bit(points)
    top = points[0]
    print(f"max capacity : {top.capacity_bits:.4f} bits, {top.energy_per_bit_nj:.4f} nJ/bit, "
          f"mean V {top.mean_voltage(ch):.3f}")
    print(f"max efficiency: {best.capacity_bits:.4f} bits, {best.energy_per_bit_nj:.4f} nJ/bit, "
          f"mean V {best.mean_voltage(ch):.3f}")
    print(f"energy/bit saving {saving:.1%} -> {args.out}")


if __name__ == "__main__":
    main()
