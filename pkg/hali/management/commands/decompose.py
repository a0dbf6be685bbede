from django.core.management.base import CommandError

from hali import constants
from hali.exceptions import InvalidInputError
from hali.io import read_signal_csv, write_decomposition_csv
from hali.management.base import HaliCommand
from hali.tfa import de_shape, dump_tfr_csv, harmonic_decompose, stft


class Command(HaliCommand):
    help = "Write the harmonic amplitudes, phases and trend of a complete CSV signal"
    operation = "decompose"

    def add_arguments(self, parser):
        parser.add_argument("--input", help="CSV with a 'value' column and no gaps")
        parser.add_argument("--fs", type=float, help="Sampling rate in Hz (required without a time column)")
        self.add_decomposition_arguments(parser)
        parser.add_argument("--prefix", help="Output path prefix")
        parser.add_argument("--dump-tfr", help="Write |F|, the de-shape map and ridges to this CSV")

    def run(self, **options):
        if not options.get("input") or not options.get("prefix"):
            raise CommandError("decompose needs --input and --prefix", returncode=constants.EXIT_INVALID_INPUT)
        signal = read_signal_csv(options["input"], options.get("fs"))
        if signal.has_missing:
            raise InvalidInputError("{} has missing samples; run impute first".format(options["input"]))
        params = self.decomposition_params(options)
        decomposition = harmonic_decompose(signal, options.get("components") or 1, params)
        paths = write_decomposition_csv(options["prefix"], decomposition, signal.times)

        if options.get("dump_tfr"):
            tfr = stft(signal, params.cycles_in_window, params.n_bins, decomposition.period)
            ridges = [component.ridges[0] for component in decomposition.components]
            dump_tfr_csv(options["dump_tfr"], tfr, de_shape(tfr, params.gamma), ridges)
        self.report("Degrees {}; wrote {}".format(decomposition.degrees, ", ".join(paths)))
