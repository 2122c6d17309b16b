"""SNR of the four block-length-1 coding variants against separate-coding baselines."""

import argparse

from analogmem.capacity import blahut_arimoto
from analogmem.channel import SynthPcmParams, linear_voltage_grid, synth_pcm_channel, uniform_resistance_grid
from analogmem.joint import SourceModel, coding_variants
from analogmem.rate_distortion import comparison_report, write_report_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=2001)
    ap.add_argument("--hybrid", choices=["fixed_rate", "entropy_coded"], default="fixed_rate")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="rd.csv")
    args = ap.parse_args()

    ch = synth_pcm_channel(SynthPcmParams(), linear_voltage_grid(0.5, 3.0, 40), uniform_resistance_grid(3.0, 7.5, args.cells))
    src = SourceModel()
    cap = blahut_arimoto(ch).capacity_bits
    results = coding_variants(src, ch, seed=args.seed)
    points = comparison_report(list(results.values()), [cap], src=src, hybrid=args.hybrid)
    write_report_csv(points, args.out)
    for p in points:
        print(f"{p.label:>36}: {p.snr_db:6.2f} dB")


if __name__ == "__main__":
    main()
