import argparse
import os.path
import signal
import sys
from pathlib import Path

from schema import SchemaError

from spmhd.fem.linalg import SingularMatrixError, SolverError
from spmhd.fem.mesh import InvalidBoxError
from spmhd.logger import get_logger
from spmhd.parser.config_parser import ConfigError, ConfigParser, RunConfig, SchemaParser
from spmhd.simulation import ConvergenceStudy, Simulation
from spmhd.stepper import SchemeConfigError, StepFailureError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def is_valid_file(parser, arg):
    if not os.path.exists(arg):
        parser.error(arg + " does not exist.")
    else:
        return arg


def parse_levels(text: str):
    try:
        return [int(level) for level in text.split(',') if level.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("levels must be a comma separated list of integers, got " + text)


class Runner:
    """
    Executes one command and converts failures into exit codes.

    :param args: parsed command line arguments
    """

    def __init__(self, args):
        self.args = args
        self.logger = get_logger('info')
        signal.signal(signal.SIGTERM, self.sigterm_handler)

    def sigterm_handler(self, sig, frame):
        self.logger.warning("Terminated")
        sys.exit(EXIT_SOLVER)

    def load_config(self) -> RunConfig:
        config_file = Path(self.args.config_file)
        config = ConfigParser(config_file).config
        if getattr(self.args, 'output_folder', None):
            config = config.replace(output=str(Path(self.args.output_folder).absolute()))
        return config

    def preset_config(self) -> RunConfig:
        data = {
            'initial': 'preset3d-' + self.args.density,
            'scheme': self.args.scheme,
            'upwind': self.args.upwind,
            'subdivisions': self.args.subdivisions,
            'dt': self.args.dt,
            'T': self.args.T,
            'output': self.args.output_folder or 'output',
        }
        return RunConfig(SchemaParser.validate_schema(data), Path.cwd())

    def run(self) -> int:
        try:
            if self.args.command == 'run':
                config = self.load_config()
                Simulation(config, Path(self.args.config_file)).main()
            elif self.args.command == 'mms':
                config = self.load_config()
                ConvergenceStudy(config, self.args.levels).run()
            else:
                Simulation(self.preset_config()).main()
        except (ConfigError, SchemaError, SchemeConfigError, InvalidBoxError) as exc:
            self.logger.error("Configuration error: {e}".format(e=exc))
            return EXIT_CONFIG
        except (StepFailureError, SolverError, SingularMatrixError) as exc:
            self.logger.error("Solver failure: {e}".format(e=exc))
            return EXIT_SOLVER
        except OSError as exc:
            self.logger.error("IO failure: {e}".format(e=exc))
            return EXIT_IO
        return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Structure-preserving finite element solver for '
                                                 'inhomogeneous incompressible MHD')
    commands = parser.add_subparsers(dest='command')
    commands.required = True

    run = commands.add_parser('run', help='time integration described by a config file')
    run.add_argument('--config', dest='config_file', required=True, metavar='FILE',
                     help='config file and its path', type=lambda x: is_valid_file(parser, x))
    run.add_argument('-o', '--output', dest='output_folder', metavar='FOLDER',
                     help='folder where output files will be saved', type=str)

    mms = commands.add_parser('mms', help='convergence study of the 2D manufactured solution')
    mms.add_argument('--config', dest='config_file', required=True, metavar='FILE',
                     help='config file and its path', type=lambda x: is_valid_file(parser, x))
    mms.add_argument('--levels', type=parse_levels, default=None,
                     help='refinement exponents j, 2^j intervals per axis, e.g. 1,2,3')
    mms.add_argument('-o', '--output', dest='output_folder', metavar='FOLDER',
                     help='folder where output files will be saved', type=str)

    preset = commands.add_parser('preset3d', help='3D conservation experiment')
    preset.add_argument('--density', choices=('variable', 'constant'), default='variable')
    preset.add_argument('--scheme', choices=('A', 'B'), default='B')
    preset.add_argument('--upwind', action='store_true', help='smooth upwinding with c = 0.5, eps = 0.01')
    preset.add_argument('--subdivisions', type=int, default=2, help='cubes per axis')
    preset.add_argument('--dt', type=float, default=0.02)
    preset.add_argument('--T', type=float, default=1.0)
    preset.add_argument('-o', '--output', dest='output_folder', metavar='FOLDER',
                        help='folder where output files will be saved', type=str)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    sys.exit(Runner(args).run())


if __name__ == '__main__':
    main()
