# -*- coding: utf-8 -*-
""" CLI to run Floquet chain experiments from spec files or named presets
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dtc_floquet import __version__
from dtc_floquet.errors import (
    DtcFloquetError,
    EngineCapabilityError,
    SpecValidationError,
    UnsupportedModelError,
    UnsupportedSizeError,
)
from dtc_floquet.experiment import ExperimentSpec, preset, preset_names, run_experiment

logger = logging.getLogger(__name__)

_CAPABILITY_ERRORS = (EngineCapabilityError, UnsupportedModelError, UnsupportedSizeError)


def apply_overrides(spec: ExperimentSpec, args: argparse.Namespace) -> ExperimentSpec:
    """Spec with the command line overrides applied and re-validated"""
    data: Dict[str, Any] = spec.to_dict()
    if getattr(args, "out_dirpath", None) is not None:
        data["output_dir"] = str(args.out_dirpath)
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    if getattr(args, "steps", None) is not None:
        data["steps"] = args.steps
    if getattr(args, "epsilon", None) is not None:
        data["model"]["epsilon"] = args.epsilon
    if getattr(args, "engine", None) is not None:
        data["engine"] = args.engine
    if getattr(args, "epsilons", None) is not None:
        data["analyses"] = ["sweep"]
        data["sweep"] = {
            "epsilons": args.epsilons,
            "n_realizations": args.realizations or data.get("sweep", {}).get("n_realizations", 1),
        }
    elif getattr(args, "realizations", None) is not None and "sweep" in data:
        data["sweep"]["n_realizations"] = args.realizations
    if getattr(args, "shots", None) is not None and "tomography" in data:
        data["tomography"]["shots_per_setting"] = args.shots
    if getattr(args, "exact", False) and "tomography" in data:
        data["tomography"]["shots_per_setting"] = None
    return ExperimentSpec.from_dict(data)


def _load_spec(args: argparse.Namespace) -> ExperimentSpec:
    if args.verb == "run":
        return ExperimentSpec.from_json(args.spec_filepath)
    if args.verb == "tomo":
        return preset("s4-tomography")
    if args.verb == "sweep":
        if args.spec_filepath is not None:
            return ExperimentSpec.from_json(args.spec_filepath)
        return preset(args.preset)
    return preset(args.name)


def run_cli(args: argparse.Namespace) -> Optional[Dict[str, Any]]:
    """Resolve the experiment of a verb, apply overrides and run it"""
    if args.verb == "preset" and (args.list or args.name is None):
        for name in preset_names():
            print(name)
        return None
    spec = apply_overrides(_load_spec(args), args)
    if args.verb == "sweep" and "sweep" not in spec.analyses:
        raise SpecValidationError({"sweep": "the sweep verb needs an epsilon grid (--epsilons)"})
    return run_experiment(spec, workers=args.workers)


# ---- CLI ----
# The functions defined in this section are wrappers around the main Python
# API allowing them to be called directly from the terminal as a CLI
# executable/script.


def _epsilon_list(value: str) -> List[float]:
    return [float(v) for v in value.split(",") if v]


def parse_args(args):
    """Parse command line parameters

    Args:
      args (List[str]): command line parameters as list of strings
          (for example  ``["--help"]``).

    Returns:
      :obj:`argparse.Namespace`: command line parameters namespace
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-o",
        "--out",
        dest="out_dirpath",
        help="Output directory, overrides output_dir",
        type=Path,
    )
    common.add_argument("--seed", dest="seed", help="Root seed", type=int)
    common.add_argument(
        "--workers",
        dest="workers",
        help="Worker count (default: DTC_FLOQUET_WORKERS or 1)",
        type=int,
    )
    common.add_argument("--steps", dest="steps", help="Number of Floquet periods", type=int)
    common.add_argument("--epsilon", dest="epsilon", help="Flip imperfection", type=float)
    common.add_argument(
        "--engine",
        dest="engine",
        help="Simulation engine",
        choices=["auto", "statevector", "fermion"],
    )
    common.add_argument(
        "-v",
        "--verbose",
        dest="loglevel",
        help="set loglevel to INFO",
        action="store_const",
        const=logging.INFO,
    )
    common.add_argument(
        "-vv",
        "--very-verbose",
        dest="loglevel",
        help="set loglevel to DEBUG",
        action="store_const",
        const=logging.DEBUG,
    )

    parser = argparse.ArgumentParser(description="Discrete time crystal experiments on a Floquet chain")
    parser.add_argument(
        "--version",
        action="version",
        version=f"dtc_floquet {__version__}",
    )
    verbs = parser.add_subparsers(dest="verb", required=True)

    run_parser = verbs.add_parser("run", parents=[common], help="Run an experiment spec file")
    run_parser.add_argument(dest="spec_filepath", help="Experiment spec (JSON)", type=Path)

    preset_parser = verbs.add_parser("preset", parents=[common], help="Run a named preset")
    preset_parser.add_argument(dest="name", help="Preset name", nargs="?")
    preset_parser.add_argument(
        "--list", dest="list", help="List the available presets", action="store_true"
    )

    sweep_parser = verbs.add_parser("sweep", parents=[common], help="Epsilon sweep (phase diagram)")
    sweep_parser.add_argument(
        dest="spec_filepath", help="Experiment spec (JSON)", type=Path, nargs="?"
    )
    sweep_parser.add_argument(
        "--preset", dest="preset", help="Preset used without a spec file", default="fig3-sweep"
    )
    sweep_parser.add_argument(
        "--epsilons", dest="epsilons", help="Comma separated epsilon grid", type=_epsilon_list
    )
    sweep_parser.add_argument(
        "--realizations", dest="realizations", help="Disorder realizations per point", type=int
    )

    tomo_parser = verbs.add_parser("tomo", parents=[common], help="Three-qubit process tomography")
    tomo_parser.add_argument("--shots", dest="shots", help="Shots per setting", type=int)
    tomo_parser.add_argument(
        "--exact", dest="exact", help="Use exact outcome frequencies", action="store_true"
    )
    return parser.parse_args(args)


def setup_logging(loglevel):
    """Setup basic logging

    Args:
      loglevel (int): minimum loglevel for emitting messages
    """
    logformat = "[%(asctime)s] %(levelname)s:%(name)s:%(message)s"
    logging.basicConfig(
        level=loglevel, stream=sys.stdout, format=logformat, datefmt="%Y-%m-%d %H:%M:%S"
    )


def main(args):
    """Wrapper allowing :func:`run_experiment` to be called with string arguments in a CLI fashion

    Exit status: 0 on success, 2 for spec, preset and configuration errors,
    3 when the engine cannot run the experiment, 1 for anything unexpected.

    Args:
      args (List[str]): command line parameters as list of strings
          (for example  ``["preset", "echo", "-o", "out"]``).
    """
    args = parse_args(args)
    setup_logging(args.loglevel)
    try:
        manifest = run_cli(args)
    except SpecValidationError as exc:
        for field, message in exc.field_errors.items():
            logger.error("%s: %s", field, message)
        sys.exit(2)
    except _CAPABILITY_ERRORS as exc:
        logger.error(exc)
        sys.exit(3)
    except DtcFloquetError as exc:
        logger.error(exc)
        sys.exit(2)
    except BaseException as err:
        logger.error(f"Unexpected {err=}, {type(err)=}")
        sys.exit(1)
    else:
        if manifest is not None:
            logger.info("Outputs of %s written: %s", manifest["spec"]["name"], manifest["outputs"])


def run():
    """Calls :func:`main` passing the CLI arguments extracted from :obj:`sys.argv`

    This function can be used as entry point to create console scripts with setuptools.
    """
    main(sys.argv[1:])


if __name__ == "__main__":
    run()
