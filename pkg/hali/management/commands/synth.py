from hali.evaluation import derive_seeds
from hali.io import write_intervals_csv, write_signal_csv
from hali.management.base import HaliCommand, positive_int, snr_value
from hali.signal_core import (
    SyntheticSpec,
    add_noise,
    apply_missingness,
    generate_synthetic,
)


class Command(HaliCommand):
    help = "Generate a synthetic multi-harmonic signal, its noisy masked copy and the gap list"
    operation = "synth"
    defaults = {
        "fs": 4000.0,
        "duration": 1.0,
        "harmonics": 4,
        "pms": 0.1,
        "n_intervals": 3,
        "seed": 0,
        "prefix": "synthetic",
    }

    def add_arguments(self, parser):
        parser.add_argument("--fs", type=float, help="Sampling rate in Hz")
        parser.add_argument("--duration", type=float, help="Length in seconds")
        parser.add_argument("--harmonics", type=positive_int, help="Number of harmonics")
        parser.add_argument("--pms", type=float, help="Fraction of samples removed")
        parser.add_argument("--n-intervals", type=positive_int, help="Number of missing intervals")
        parser.add_argument("--snr", type=snr_value, help="SNR in dB; omit for a noiseless copy")
        parser.add_argument("--seed", type=int, help="Random seed")
        parser.add_argument("--prefix", help="Output path prefix")

    def run(self, **options):
        spec = SyntheticSpec(
            fs=options["fs"],
            duration=options["duration"],
            n_harmonics=options["harmonics"],
            snr_db=options["snr"],
            seed=options["seed"],
        )
        truth = generate_synthetic(spec)
        noise_seed, missing_seed = derive_seeds(spec.seed)
        noisy = add_noise(truth.clean, spec.snr_db, noise_seed)
        masked, intervals = apply_missingness(noisy, options["pms"], options["n_intervals"], missing_seed)

        prefix = options["prefix"]
        write_signal_csv("{}_truth.csv".format(prefix), truth.clean)
        write_signal_csv("{}_masked.csv".format(prefix), masked)
        write_intervals_csv("{}_intervals.csv".format(prefix), intervals)
        self.report("Wrote {0}_truth.csv, {0}_masked.csv and {0}_intervals.csv ({1} gaps)".format(
            prefix, len(intervals)))
