"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 scheme error or a failed
dichotomy check.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .config import load_config_file
from .criticality import CriticalityVerdict, classify
from .errors import ConfigurationError, SchemeError

EXIT_OK, EXIT_CONFIG, EXIT_SCHEME = 0, 1, 2


def _cmd_run(args) -> int:
    res = ex.run_config(load_config_file(args.config))
    sys.stdout.write(ex.summary_csv(res))
    return EXIT_OK


def _cmd_classify(args) -> int:
    v = classify(args.d, args.alpha1, args.alpha2)
    sys.stdout.write(ex.write_csv(CriticalityVerdict.COLUMNS, [v.as_row()]))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_config_file(args.config)
    grid = ex.parse_alpha_grid(Path(args.alpha_grid).read_text())
    rows = ex.experiment_sweep(cfg, grid, workers=args.workers)
    sys.stdout.write(ex.write_csv(ex.SWEEP_COLUMNS, rows))
    return EXIT_OK


def _cmd_virial(args) -> int:
    rep = ex.experiment_virial(load_config_file(args.config))
    rows = list(zip(rep.n, rep.max_defect, rep.strides, rep.verdicts))
    sys.stdout.write(ex.write_csv(("n", "max_rel_defect", "strides", "verdict"), rows))
    return EXIT_OK


def _cmd_eps(args) -> int:
    cfg = load_config_file(args.config)
    source = Path(args.eps_list)
    text = source.read_text() if source.is_file() else args.eps_list
    study = ex.experiment_epsilon(cfg, ex.parse_eps_list(text))
    sys.stdout.write((cfg.out_path / "eps_study.csv").read_text())
    return EXIT_OK if study.decreasing else EXIT_SCHEME


def _cmd_dichotomy(args) -> int:
    rep = ex.experiment_dichotomy(load_config_file(args.config_sub), load_config_file(args.config_super))
    sys.stdout.write(ex.write_csv(ex.DICHOTOMY_COLUMNS, rep.rows()))
    return EXIT_OK if rep.passed else EXIT_SCHEME


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crossattract", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configuration")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("classify", help="criticality of (alpha1, alpha2) in dimension d")
    p.add_argument("d", type=int)
    p.add_argument("alpha1", type=float)
    p.add_argument("alpha2", type=float)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("sweep", help="run a base configuration over an alpha grid")
    p.add_argument("config")
    p.add_argument("alpha_grid")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("virial", help="second-moment identity at two resolutions")
    p.add_argument("config")
    p.set_defaults(func=_cmd_virial)

    p = sub.add_parser("eps-study", help="convergence as the regularisation vanishes")
    p.add_argument("config")
    p.add_argument("eps_list", help="file or string of decreasing eps values")
    p.set_defaults(func=_cmd_eps)

    p = sub.add_parser("dichotomy", help="global existence vs blow-up")
    p.add_argument("config_sub")
    p.add_argument("config_super")
    p.set_defaults(func=_cmd_dichotomy)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemeError as exc:
        print(f"scheme error: {exc}", file=sys.stderr)
        return EXIT_SCHEME


if __name__ == "__main__":
    sys.exit(main())
