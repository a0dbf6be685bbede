from hali import conf, constants
from hali.evaluation import (
    BenchmarkConfig,
    format_report_table,
    run_benchmark,
    run_corpus,
    write_raw_csv,
    write_report_csv,
)
from hali.management.base import (
    HaliCommand,
    float_list,
    positive_int,
    snr_list,
    text_list,
)
from hali.signal_core import SyntheticSpec


class Command(HaliCommand):
    help = "Run the synthetic benchmark, or score a corpus of real recordings, and write CSV and text reports"
    operation = "bench"
    defaults = {
        "signals": 100,
        "pms": (0.05, 0.10, 0.15, 0.20),
        "snr": (constants.NOISELESS, 20.0, 10.0),
        "methods": constants.INITIAL_METHODS,
        "schemes": ("s", "p"),
        "seed": 0,
        "fs": 4000.0,
        "duration": 1.0,
        "harmonics": 4,
        "n_intervals": 3,
        "components": 1,
        "report": "bench_report",
    }

    def add_arguments(self, parser):
        parser.add_argument("--signals", type=positive_int, help="Signals per cell")
        parser.add_argument("--pms", type=float_list, help="Comma-separated missing fractions")
        parser.add_argument("--snr", type=snr_list, help="Comma-separated SNRs in dB, 'none' for noiseless")
        parser.add_argument("--methods", type=text_list, help="Comma-separated initial methods")
        parser.add_argument("--schemes", type=text_list, help="Comma-separated schemes (s, p)")
        parser.add_argument("--seed", type=int, help="Master seed; signal i uses seed + i")
        parser.add_argument("--fs", type=float, help="Sampling rate in Hz")
        parser.add_argument("--duration", type=float, help="Signal length in seconds")
        parser.add_argument("--harmonics", type=positive_int, help="Harmonics per synthetic signal")
        parser.add_argument("--n-intervals", type=positive_int, help="Missing intervals per signal")
        parser.add_argument("--workers", type=positive_int, help="Worker processes")
        parser.add_argument("--corpus", help="Directory of <name>_truth.csv / <name>_masked.csv pairs to score "
                                              "instead of synthetic signals")
        parser.add_argument("--corpus-fs", type=float, help="Sampling rate of corpus files without a time column")
        self.add_decomposition_arguments(parser)
        parser.add_argument("--report", help="Report path prefix")

    def run(self, **options):
        config = BenchmarkConfig(
            n_signals=options["signals"],
            p_ms_levels=tuple(options["pms"]),
            snr_levels=tuple(options["snr"]),
            methods=tuple(options["methods"]),
            schemes=tuple(options["schemes"]),
            seed=options["seed"],
            synthetic=SyntheticSpec(
                fs=options["fs"], duration=options["duration"], n_harmonics=options["harmonics"],
            ),
            n_intervals=options["n_intervals"],
            components=options["components"],
            workers=options.get("workers") or conf.HALI_BENCH_WORKERS,
            decomposition=self.decomposition_params(options),
            corpus=options.get("corpus"),
        )
        report = run_corpus(config, options.get("corpus_fs")) if config.corpus else run_benchmark(config)
        prefix = options["report"]
        write_report_csv(report, "{}.csv".format(prefix))
        write_raw_csv(report, "{}_raw.csv".format(prefix))
        table = format_report_table(report)
        with open("{}.txt".format(prefix), "w", encoding="utf-8") as handle:
            handle.write(table)
        self.report(table)
