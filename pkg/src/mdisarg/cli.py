"""Command-line driver: ``mdisarg --study dark --list 8.5e-7,8.5e-8 --out dark.tsv``.

Exit codes: 0 success, 1 configuration error, 2 Monte Carlo validation
failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigError, DomainError
from .events import EventType
from .keyrate import GYS, ErrorCorrection, ExperimentParams
from .sweep import STUDY_KINDS, SweepConfig, run_study, validate_mc

log = logging.getLogger("mdisarg")

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mdisarg", description="MDI-SARG04 key-rate sweeps, studies and Monte Carlo validation.")
    p.add_argument("--eta", type=float, default=GYS.eta, help="detector efficiency")
    p.add_argument("--dark", type=float, default=GYS.dark, help="dark-count probability per detector per window")
    p.add_argument("--alpha", type=float, default=GYS.alpha, help="fibre loss in dB/km")
    p.add_argument("--mu", type=float, default=GYS.mu_a, help="mean photon number of both sources")
    p.add_argument("--fe", default="enzer", help="error correction: enzer | fixed:<v>")
    p.add_argument("--type", default="both", choices=("1", "2", "both"))
    p.add_argument("--L", default="0:200:1", help="distance grid min:max:step in km")
    p.add_argument("--study", default="none", choices=STUDY_KINDS)
    p.add_argument("--list", default="", help="comma-separated scenario values for the study")
    p.add_argument("--mu-opt", default="", help="optimize mu per point over lo:hi:steps")
    p.add_argument("--nmax", type=int, default=GYS.n_max, help="photon-number cutoff")
    p.add_argument("--mc-rounds", type=int, default=0, help="run Monte Carlo validation with this many rounds")
    p.add_argument("--depol", type=float, default=0.0, help="depolarizing probability for validation runs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=0.1, help="cutoff bisection tolerance in km")
    p.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")
    p.add_argument("--figure", type=Path, default=None, help="also render a PNG figure of the study")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _floats(text: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"bad {what} list {text!r}") from None


def config_from_args(args) -> SweepConfig:
    try:
        L_min, L_max, L_step = (float(x) for x in args.L.split(":"))
    except ValueError:
        raise ConfigError(f"--L must be min:max:step, got {args.L!r}") from None
    params = ExperimentParams(
        eta=args.eta, dark=args.dark, alpha=args.alpha, mu_a=args.mu, fe=ErrorCorrection.parse(args.fe), n_max=args.nmax
    )
    types = tuple(EventType) if args.type == "both" else (EventType(int(args.type)),)
    darks = etas = fe_modes = ()
    if args.study == "dark":
        darks = _floats(args.list, "dark-count")
    elif args.study == "eta":
        etas = _floats(args.list, "efficiency")
    elif args.study == "fe":
        fe_modes = tuple(ErrorCorrection.parse(x) for x in args.list.split(",") if x.strip())
    mu_opt = None
    if args.mu_opt:
        try:
            lo, hi, steps = args.mu_opt.split(":")
            mu_opt = (float(lo), float(hi), int(steps))
        except ValueError:
            raise ConfigError(f"--mu-opt must be lo:hi:steps, got {args.mu_opt!r}") from None
    return SweepConfig(
        L_min=L_min, L_max=L_max, L_step=L_step, params=params, types=types, study=args.study,
        darks=darks, etas=etas, fe_modes=fe_modes, mu_opt=mu_opt, seed=args.seed,
        mc_rounds=args.mc_rounds, depolarizing=args.depol, tolerance_km=args.tolerance, out=args.out,
    ).validate()


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = config_from_args(args)
        if config.mc_rounds:
            report = validate_mc(config)
            _emit(report.text, config.out)
            return EXIT_OK if report.passed else EXIT_VALIDATION
        text = run_study(config, figure=args.figure)
        if config.out is None:
            sys.stdout.write(text)
        else:
            log.info("wrote %s", config.out)
    except (ConfigError, DomainError) as exc:
        print(f"mdisarg: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"mdisarg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
