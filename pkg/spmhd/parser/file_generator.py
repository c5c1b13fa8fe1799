import datetime
import os
from pathlib import Path
from shutil import copy
from typing import Optional

import pkg_resources
import yaml

from spmhd.parser.config_parser import RunConfig

time_format = "%Y-%m-%d %H:%M:%S"


def configuration_folder(output_path: Path) -> Path:
    return Path(output_path) / 'configuration'


class InputFilesCopier:
    """
    Stores the validated configuration, and the original file when there is one,
    in the configuration folder of the output.

    :param config: the validated configuration
    :param config_file: the file it was read from, if any
    """

    def __init__(self, config: RunConfig, config_file: Optional[Path] = None):
        self.config = config
        self.config_file = config_file
        self.configuration_folder = configuration_folder(config.output_path)

    def copy_input_files(self) -> Path:
        """Writes ``run_config.yaml`` and copies the original file next to it."""
        os.makedirs(str(self.configuration_folder), exist_ok=True)

        run_config = self.configuration_folder / 'run_config.yaml'
        with run_config.open(mode='w') as file:
            yaml.safe_dump(self.config.as_dict(), file)

        if self.config_file is not None:
            copy(str(self.config_file), str(self.configuration_folder / ('config' + Path(self.config_file).suffix)))
        return run_config


class GeneralReadmeGenerator:
    """
    Class which deals with generating a readme.
    :param config: the validated configuration of the run
    :param start_time: starting time of the run
    :param end_time: ending time of the run
    :param steps: number of accepted time steps
    :param mesh: the mesh the run used
    :param status: how the run ended
    :param max_increment: largest fixed-point increment of an accepted step
    """

    def __init__(self, config: RunConfig, start_time: datetime.datetime, end_time: datetime.datetime,
                 steps: int, mesh=None, status: str = 'finished', max_increment: Optional[float] = None):
        self.data = config.as_dict()
        self.start_time = start_time
        self.end_time = end_time
        self.steps = steps
        self.mesh = mesh
        self.status = status
        self.max_increment = max_increment
        self.readme_path = self.get_readme_path()
        try:
            self.version = pkg_resources.require('spmhd')[0].version
        except pkg_resources.DistributionNotFound:
            self.version = 'unknown (not installed)'

    def get_value(self, parameter: str) -> str:
        """
        Gets the value of a required parameter.
        :param parameter: to find the value of
        :return: human readable string
        """
        return "\n\n" + parameter + ": " + str(self.data[parameter])

    def checkbox(self, parameter: str) -> str:
        """
        Returns a string with a checkbox, checked if the flag is set.
        :param parameter: flag to evaluate
        :return: complete string with checkbox in it
        """
        case_checkbox = "[x]" if self.data.get(parameter) else "[ ]"
        return "\n\n- {checkbox} {para}".format(checkbox=case_checkbox, para=parameter)

    def get_readme_path(self) -> str:
        folder = configuration_folder(self.data['output'])
        os.makedirs(str(folder), exist_ok=True)
        return str(folder / 'general_readme.md')

    def write_readme(self):
        """
        Writes a readme about the current run.
        """
        with open(self.readme_path, 'w') as readme:
            readme.write("# Auto-generated README of a {scheme} run with initial data {initial}"
                         .format(scheme=self.data['scheme'], initial=self.data['initial']))

            readme.write(self.get_output_files())
            readme.write(self.get_mesh_information())
            readme.write(self.get_scheme_parameters())
            readme.write(self.get_options())
            readme.write(self.get_versioning())
            readme.write(self.get_time_information())

    def get_output_files(self) -> str:
        ret_str = "\n\n## Output files"
        return ret_str + ("\n\nThe invariant log is ```{out}/invariants.csv```, drifts are in "
                          "```{out}/drifts.csv``` and the configuration is in ```{out}/configuration```."
                          .format(out=self.data['output']))

    def get_mesh_information(self) -> str:
        ret_str = "\n\n## Mesh"
        ret_str += self.get_value('dim')
        ret_str += self.get_value('lower')
        ret_str += self.get_value('upper')
        ret_str += self.get_value('subdivisions')
        if self.mesh is not None:
            ret_str += ("\n\n{c} cells, {f} facets, maximum diameter h = {h:.6g}"
                        .format(c=self.mesh.num_cells, f=self.mesh.num_facets, h=self.mesh.h))
        return ret_str

    def get_scheme_parameters(self) -> str:
        ret_str = "\n\n## Scheme parameters"
        ret_str += self.get_value('scheme')
        ret_str += self.get_value('dt')
        ret_str += self.get_value('T')
        ret_str += self.get_value('fp_tol')
        ret_str += self.get_value('fp_maxiter')
        ret_str += self.get_value('fp_stagnation')
        if self.data.get('upwind'):
            ret_str += self.get_value('upwind_variant')
            ret_str += self.get_value('c')
            ret_str += self.get_value('eps')
        return ret_str + self.get_value('log_level')

    def get_options(self) -> str:
        ret_str = "\n\n## Options"
        ret_str += self.checkbox('upwind')
        ret_str += self.checkbox('constant_density')
        return ret_str + self.checkbox('snapshot_every')

    def get_versioning(self) -> str:
        return "\n\n## Versioning\n\nspmhd version: {version}".format(version=self.version)

    def get_time_information(self) -> str:
        ret_str = "\n\n## Information about this run"
        ret_str += ("\n\nRan {x} out of {y} time steps, status: {status}."
                    .format(x=self.steps, y=int(round(self.data['T'] / self.data['dt'])), status=self.status))
        if self.max_increment is not None:
            ret_str += ("\n\nLargest accepted fixed-point increment: {i:.3e} (fp_tol {t:.1e})."
                        .format(i=self.max_increment, t=self.data['fp_tol']))
        ret_str += ("\n\nStarted at {start} and finished at {end}."
                    .format(start=str(self.start_time.strftime(time_format)),
                            end=str(self.end_time.strftime(time_format))))
        return ret_str + ("\n\nThe duration of this run was {time}."
                          .format(time=str(self.end_time - self.start_time)))
