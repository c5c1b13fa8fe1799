"""
Runs configured experiments: a single time integration with its invariant log and
snapshots, and the manufactured-solution convergence study.
"""
import csv
from datetime import datetime
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd
import progressbar

from spmhd.diagnostics import InvariantRecord, drift, l2_error
from spmhd.fem.forms import FormCache
from spmhd.fem.mesh import build_box_mesh
from spmhd.fem.spaces import project_L2
from spmhd.logger import get_logger
from spmhd.mms import MmsCase, Preset3D, mms_2d, observed_orders
from spmhd.parser.config_parser import InvalidValueError, RunConfig
from spmhd.parser.file_generator import GeneralReadmeGenerator, InputFilesCopier
from spmhd.stepper import State, StepFailureError, Stepper
from spmhd.vtk_writer import write_vtk

CONSERVED = ('mass', 'rho2', 'energy', 'cross_helicity', 'magnetic_helicity')
ERROR_FIELDS = ('u', 'B', 'rho', 'p')


def format_value(value) -> str:
    """17 significant digits for reals, blank for missing values."""
    if value is None:
        return ''
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), '.17g')


def invariant_row(record: InvariantRecord) -> list:
    return [format_value(value) for value in record]


def drift_rows(records: Sequence[InvariantRecord]) -> list:
    header = ['t']
    columns = []
    for name in CONSERVED:
        absolute, relative = drift(records, name)
        header.extend([name + '_abs', name + '_rel'])
        columns.extend([absolute, relative])
    rows = [header]
    for index, record in enumerate(records):
        rows.append([format_value(record.t)] + [format_value(column[index]) for column in columns])
    return rows


def write_csv(path: Path, rows):
    """Writes the rows, the first one being the header."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open(mode='w', newline='') as f:
        writer = csv.writer(f)
        writer.writerows(rows)


def mms_initial_state(stepper: Stepper, case: MmsCase, t0: float = 0.0) -> State:
    """Initial state of the manufactured solution, B being the discrete curl of its potential."""
    return stepper.init_state(u0=case.u.at(t0), A0=case.potential.at(t0), rho0=case.rho.at(t0), t0=t0)


def mms_errors(case: MmsCase, state: State, cache: FormCache) -> Dict[str, float]:
    """
    L2 errors of ``state`` against the manufactured solution at ``state.t``. The
    discrete pressure of the conservative momentum equation approximates
    ``p + rho |u|^2``; it is compared with that field minus its mean.
    """
    t = state.t
    volume = cache.mesh.cell_volume
    reference = project_L2(cache.dg, case.modified_pressure.at(t), degree=8)
    mean = float(reference.values @ volume) / float(np.sum(volume))
    return {
        'u': l2_error(state.u, case.u, t),
        'B': l2_error(state.B, case.B, t),
        'rho': l2_error(state.rho, case.rho, t),
        'p': l2_error(state.p, lambda points, time: case.modified_pressure(points, time) - mean, t),
    }


def _progress_bar(log_level: str, max_value: int):
    if log_level == 'debug':
        return None
    widgets = [' [', progressbar.Timer(), ' - ', progressbar.SimpleProgress(), '] ',
               progressbar.Bar(), ' [', progressbar.ETA(), '] ', ]
    p_bar = progressbar.ProgressBar(max_value=max(max_value, 1), widgets=widgets)
    p_bar.start()
    return p_bar


class Simulation:
    """
    One time integration as described by a :class:`RunConfig`. Writes
    ``invariants.csv``, ``drifts.csv``, optional VTK snapshots and the
    configuration folder into the output path.

    :param config: validated configuration
    :param config_file: file the configuration was read from, copied to the output
    """

    def __init__(self, config: RunConfig, config_file: Optional[Path] = None):
        self.config = config
        self.config_file = config_file
        self.logger = get_logger(config['log_level'])

        self.output_path = config.output_path
        self.invariants_path = self.output_path / 'invariants.csv'
        self.drifts_path = self.output_path / 'drifts.csv'
        self.snapshot_path = self.output_path / 'snapshots'

        self.mesh = build_box_mesh(config.box())
        self.case = None
        self.preset = None
        forcing = None
        if config['initial'] == 'mms2d':
            self.case = mms_2d()
            forcing = self.case.forcing()
        elif config['initial'].startswith('preset3d'):
            self.preset = Preset3D(variable_density=config['initial'] == 'preset3d-variable')
        self.stepper = Stepper(self.mesh, config.scheme(), forcing)

        self.logger.info("Built {m}: {c} cells, h = {h:.6g}".format(m=self.mesh, c=self.mesh.num_cells,
                                                                     h=self.mesh.h))
        self.state = self.initial_state()
        self.records = []
        self.results_list = [list(InvariantRecord._fields)]
        self.steps = 0
        self.max_increment = None
        self.p_bar = None
        self.start_time = None

    def initial_state(self) -> State:
        initial = self.config['initial']
        stepper = self.stepper
        if self.case is not None:
            return mms_initial_state(stepper, self.case)
        if self.preset is not None:
            rho0 = self.preset.rho0.at(0.0) if self.preset.variable_density else 1.0
            return stepper.init_state(u0=self.preset.u0.at(0.0), A0=self.preset.A0.at(0.0), rho0=rho0)
        self.logger.debug("Initial data '{i}' with constant density {r}".format(i=initial, r=self.config['rho0']))
        return stepper.init_state(rho0=self.config['rho0'])

    def observe(self, k: int, t: float, state: State, record: InvariantRecord):
        """Stores the record of an accepted step and writes its snapshot when due."""
        self.records.append(record)
        self.results_list.append(invariant_row(record))
        self.steps = k
        if k > 0 and self.stepper.last_increment is not None:
            self.max_increment = max(self.max_increment or 0.0, self.stepper.last_increment)
        every = self.config['snapshot_every']
        if every and k % every == 0:
            write_vtk(state, self.stepper.cache, self.snapshot_path / 'state_{k:05d}.vtk'.format(k=k))
        if self.p_bar:
            self.p_bar.update(k)
        self.logger.debug("Step {k}, t = {t:.6g}, energy {e:.17g}, sweeps {s}".format(
            k=k, t=t, e=record.energy, s=record.fp_iters))

    def main(self) -> State:
        """Runs all steps, then writes the results. A failed step still flushes the rows so far."""
        num_steps = self.stepper.config.num_steps
        self.logger.info("Simulation will run for {n} steps with dt {dt}, scheme {s}."
                         .format(n=num_steps, dt=self.stepper.config.dt, s=self.stepper.config.variant))
        self.start_time = datetime.now()
        InputFilesCopier(self.config, self.config_file).copy_input_files()
        self.p_bar = _progress_bar(self.config['log_level'], num_steps)

        status = 'finished'
        try:
            self.state, _, _ = self.stepper.run(self.state, num_steps, observers=[self.observe])
        except StepFailureError as exc:
            status = 'failed after {n} steps'.format(n=self.steps)
            self.logger.error("Step failure: {e}".format(e=exc))
            raise
        finally:
            if self.p_bar:
                self.p_bar.finish()
            self.finish(status)

        if self.case is not None:
            errors = self.errors()
            self.logger.info("L2 errors at t = {t:.6g}: {e}".format(
                t=self.state.t, e=", ".join("{k} {v:.6e}".format(k=k, v=v) for k, v in errors.items())))
        return self.state

    def errors(self) -> Dict[str, float]:
        """Errors against the manufactured solution; only for ``initial = mms2d``."""
        if self.case is None:
            raise ValueError("Errors are only available for manufactured-solution runs")
        return mms_errors(self.case, self.state, self.stepper.cache)

    def finish(self, status: str = 'finished'):
        self.write_results(self.results_list)
        if self.records:
            write_csv(self.drifts_path, drift_rows(self.records))
        end_time = datetime.now()
        GeneralReadmeGenerator(self.config, self.start_time or end_time, end_time, self.steps,
                               self.mesh, status, self.max_increment).write_readme()
        self.logger.info("Results written to {p}".format(p=self.output_path))

    def write_results(self, results):
        """Writes the invariant log."""
        write_csv(self.invariants_path, results)


class ConvergenceStudy:
    """
    The 2D manufactured solution on a sequence of refinements ``2^j`` intervals per
    axis, reporting L2 errors at the final time and observed orders.

    :param config: validated configuration; mesh and initial data are overridden
    :param levels: refinement exponents, the configured ``levels`` by default
    :raise InvalidValueError: when the final time is not positive
    """

    def __init__(self, config: RunConfig, levels: Optional[Sequence[int]] = None):
        if not config['T'] > 0:
            raise InvalidValueError("A convergence study needs a positive final time 'T', got {t}".format(
                t=config['T']))
        self.config = config
        self.levels = list(config['levels'] if levels is None else levels)
        self.logger = get_logger(config['log_level'])
        self.case = mms_2d()
        self.table_path = config.output_path / 'convergence.csv'

    def run_level(self, level: int) -> dict:
        config = self.config.replace(dim=2, initial='mms2d', subdivisions=2 ** int(level))
        mesh = build_box_mesh(config.box())
        stepper = Stepper(mesh, config.scheme(), self.case.forcing())
        num_steps = stepper.config.num_steps
        self.logger.info("Level {j}: {c} cells, {n} steps".format(j=level, c=mesh.num_cells, n=num_steps))

        p_bar = _progress_bar(config['log_level'], num_steps)
        observers = [lambda k, t, state, record: p_bar.update(k)] if p_bar else []
        state, _, _ = stepper.run(mms_initial_state(stepper, self.case), num_steps, observers=observers)
        if p_bar:
            p_bar.finish()

        errors = mms_errors(self.case, state, stepper.cache)
        row = {'level': int(level), 'h': mesh.h, 't': state.t}
        row.update({'e_' + name: errors[name] for name in ERROR_FIELDS})
        return row

    def run(self) -> pd.DataFrame:
        frame = pd.DataFrame([self.run_level(level) for level in self.levels])
        if len(frame) > 1:
            for name in ERROR_FIELDS:
                frame['order_' + name] = pd.Series(observed_orders(list(frame['e_' + name])), dtype=float)

        self.table_path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(self.table_path, index=False, float_format='%.17g')
        self.logger.info("Convergence table written to {p}\n{t}".format(
            p=self.table_path, t=frame.to_string(index=False, float_format=lambda v: '{:.4e}'.format(v))))
        return frame
