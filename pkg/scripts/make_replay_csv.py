"""Generate a replay dataset from the synthetic device model.

40 write voltages x 380 reads each (15,200 rows) by default, spread
round-robin over 100 devices.
"""

import argparse

import numpy as np

from analogmem.channel import SynthPcmParams, linear_voltage_grid, sample_measurements, write_measurements_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", help="CSV path to write")
    ap.add_argument("--n-voltages", type=int, default=40)
    ap.add_argument("--n-trials", type=int, default=380)
    ap.add_argument("--v-min", type=float, default=0.5)
    ap.add_argument("--v-max", type=float, default=3.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    v = linear_voltage_grid(args.v_min, args.v_max, args.n_voltages)
    meas = sample_measurements(SynthPcmParams(), v, args.n_trials, np.random.default_rng(args.seed))
    write_measurements_csv(meas, args.out)
    print(f"wrote {meas.resistance.size} rows to {args.out}")


if __name__ == "__main__":
    main()
