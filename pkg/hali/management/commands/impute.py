from django.core.management.base import CommandError

from hali import conf, constants
from hali.imputers import ImputerConfig
from hali.io import (
    read_intervals_csv,
    read_signal_csv,
    write_decomposition_csv,
    write_signal_csv,
)
from hali.management.base import HaliCommand, positive_int
from hali.pipeline import HaliParams, hali_impute
from hali.tfa import de_shape, dump_tfr_csv, stft


class Command(HaliCommand):
    help = "Impute the NaN gaps of a CSV signal by harmonic level interpolation"
    operation = "impute"

    def add_arguments(self, parser):
        parser.add_argument("--input", help="CSV with a 'value' column, gaps as NaN")
        parser.add_argument("--output", help="Where to write the imputed CSV")
        parser.add_argument("--fs", type=float, help="Sampling rate in Hz (required without a time column)")
        parser.add_argument("--intervals", help="CSV of start,length gaps; detected from NaN runs when omitted")
        parser.add_argument("--method", choices=constants.INITIAL_METHODS, help="Initial imputation method")
        parser.add_argument("--scheme", choices=sorted(constants.SCHEME_FLAGS), help="s = cubic spline, p = pchip")
        parser.add_argument("--min-gap", type=positive_int, help="Shorter gaps are filled linearly")
        parser.add_argument("--seed", type=int, help="Seed for the randomised length-scale heuristics")
        self.add_decomposition_arguments(parser)
        parser.add_argument("--prefix", help="Also write the decomposition CSVs under this prefix")
        parser.add_argument("--dump-tfr", help="Write |F|, the de-shape map and ridges to this CSV")

    def run(self, **options):
        if not options.get("input") or not options.get("output"):
            raise CommandError("impute needs --input and --output", returncode=constants.EXIT_INVALID_INPUT)
        signal = read_signal_csv(options["input"], options.get("fs"))
        intervals = read_intervals_csv(options["intervals"], signal.n) if options.get("intervals") else None
        params = HaliParams(
            min_gap=options.get("min_gap") or conf.HALI_MIN_GAP,
            imputer=ImputerConfig(
                method=options.get("method") or conf.HALI_DEFAULT_METHOD, seed=options.get("seed") or 0,
            ),
            decomposition=self.decomposition_params(options),
        )
        result = hali_impute(
            signal,
            intervals,
            K=options.get("components") or 1,
            scheme=options.get("scheme") or conf.HALI_DEFAULT_SCHEME,
            params=params,
        )
        write_signal_csv(options["output"], result.final)

        for record in result.records:
            if record.fell_back:
                self.stderr.write("interval {}: {} fell back to {}".format(
                    tuple(record.interval), record.requested, record.used))
        if result.degraded:
            self.stderr.write("result degraded: harmonic interpolation was not applied to every gap")
        if result.decomposition is not None and options.get("prefix"):
            write_decomposition_csv(options["prefix"], result.decomposition, result.final.times)
        if result.decomposition is not None and options.get("dump_tfr"):
            tfr = stft(result.initial, params.decomposition.cycles_in_window, params.decomposition.n_bins,
                       result.decomposition.period)
            ridges = [component.ridges[0] for component in result.decomposition.components]
            dump_tfr_csv(options["dump_tfr"], tfr, de_shape(tfr, params.decomposition.gamma), ridges)
        self.report("Imputed {} intervals into {}".format(len(result.intervals), options["output"]))
