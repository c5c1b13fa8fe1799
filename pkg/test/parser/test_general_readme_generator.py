from datetime import datetime
from pathlib import Path

import pytest
import yaml

from spmhd.fem.mesh import BoxSpec, build_box_mesh
from spmhd.parser.config_parser import parse_config
from spmhd.parser.file_generator import GeneralReadmeGenerator, InputFilesCopier, configuration_folder


@pytest.fixture
def rm_gen(mocker):
    mocker.patch.object(GeneralReadmeGenerator, "__init__", return_value=None)

    return GeneralReadmeGenerator(None, None, None, None)


@pytest.fixture
def config(tmpdir):
    return parse_config("scheme = A\ndt = 0.01\nT = 0.05\nupwind = on\noutput = out", Path(str(tmpdir)))


@pytest.fixture(scope="session")
def readme_file(tmpdir_factory):
    return tmpdir_factory.mktemp("data").join("general_readme.md")


def test_init(config):
    start = datetime(year=2021, month=6, day=1, second=1)
    end = datetime(year=2021, month=6, day=1, second=2)
    general_rm_gen = GeneralReadmeGenerator(config, start, end, 5)
    assert general_rm_gen.start_time == start
    assert general_rm_gen.end_time == end
    assert general_rm_gen.steps == 5
    assert general_rm_gen.status == 'finished'
    assert general_rm_gen.readme_path == str(config.output_path / 'configuration' / 'general_readme.md')
    assert Path(general_rm_gen.readme_path).parent.is_dir()


def test_verifies_written(rm_gen, readme_file, config):
    rm_gen.readme_path = readme_file
    rm_gen.data = config.as_dict()
    rm_gen.version = '1.0.0'
    rm_gen.steps = 5
    rm_gen.mesh = build_box_mesh(BoxSpec(subdivisions=2))
    rm_gen.status = 'finished'
    rm_gen.max_increment = 2e-13
    rm_gen.start_time = datetime(year=2021, month=6, day=1, second=1)
    rm_gen.end_time = datetime(year=2021, month=6, day=1, second=2)
    rm_gen.write_readme()
    with open(readme_file, 'r') as rm_file:
        text = rm_file.read()
    assert text.startswith("# Auto-generated README of a A run with initial data zero")
    assert "Ran 5 out of 5 time steps, status: finished." in text
    assert "8 cells, 16 facets" in text
    assert "\n\nc: 0.5" in text
    assert "spmhd version: 1.0.0" in text
    assert "Largest accepted fixed-point increment: 2.000e-13 (fp_tol 1.0e-12)." in text
    assert "fp_stagnation: 1000.0" in text


def test_get_value(rm_gen):
    rm_gen.data = {'parameter': 'value'}
    assert rm_gen.get_value('parameter') == "\n\nparameter: value"


@pytest.mark.parametrize("value, box", [(True, "[x]"), (False, "[ ]"), (3, "[x]"), (0, "[ ]")])
def test_checkbox(rm_gen, value, box):
    rm_gen.data = {'upwind': value}
    assert rm_gen.checkbox('upwind') == "\n\n- {box} upwind".format(box=box)


def test_scheme_parameters_without_upwind(rm_gen, config):
    rm_gen.data = config.replace(upwind='off').as_dict()
    text = rm_gen.get_scheme_parameters()
    assert "scheme: A" in text
    assert "upwind_variant" not in text


def test_time_information(rm_gen):
    rm_gen.data = {'T': 1.0, 'dt': 0.02}
    rm_gen.steps = 12
    rm_gen.status = 'failed after 12 steps'
    rm_gen.max_increment = None
    rm_gen.start_time = datetime(year=2021, month=6, day=1, minute=1)
    rm_gen.end_time = datetime(year=2021, month=6, day=1, minute=3)
    text = rm_gen.get_time_information()
    assert "Ran 12 out of 50 time steps, status: failed after 12 steps." in text
    assert "Started at 2021-06-01 00:01:00 and finished at 2021-06-01 00:03:00." in text
    assert "The duration of this run was 0:02:00." in text


def test_copy_input_files(tmpdir, config):
    original = Path(str(tmpdir)) / 'run.cfg'
    original.write_text("scheme = A\n")
    run_config = InputFilesCopier(config, original).copy_input_files()

    folder = configuration_folder(config.output_path)
    assert run_config == folder / 'run_config.yaml'
    assert (folder / 'config.cfg').read_text() == "scheme = A\n"
    with run_config.open() as file:
        assert yaml.safe_load(file) == config.as_dict()


def test_copy_without_original(config):
    run_config = InputFilesCopier(config).copy_input_files()
    assert run_config.is_file()
    assert sorted(p.name for p in run_config.parent.iterdir()) == ['run_config.yaml']


def test_time_information_reports_increment(rm_gen):
    rm_gen.data = {'T': 0.1, 'dt': 0.02, 'fp_tol': 1e-10}
    rm_gen.steps = 5
    rm_gen.status = 'finished'
    rm_gen.max_increment = 3.25e-11
    rm_gen.start_time = rm_gen.end_time = datetime(year=2021, month=6, day=1)
    text = rm_gen.get_time_information()
    assert "Largest accepted fixed-point increment: 3.250e-11 (fp_tol 1.0e-10)." in text
