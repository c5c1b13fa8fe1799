from pathlib import Path

import pytest
import yaml

from spmhd.parser.config_parser import (DEFAULTS, ConfigError, ConfigFileError, ConfigParser, InvalidValueError,
                                        MissingValueError, RunConfig, SchemaParser, UnknownKeyError,
                                        parse_config, read_entries)


@pytest.fixture
def config_text():
    return ("# small run\n"
            "dim = 2\n"
            "subdivisions = 2, 4\n"
            "scheme = b\n"
            "upwind = on\n"
            "c = 0.25\n"
            "dt = 0.01   # time step\n"
            "T = 0.1\n"
            "initial = mms2d\n"
            "output = results\n")


@pytest.fixture
def yaml_path(tmpdir):
    path = Path(str(tmpdir)) / 'config.yaml'
    with path.open(mode='w') as file:
        yaml.safe_dump({'initial': 'preset3d-constant', 'scheme': 'A', 'dt': 0.02, 'T': 0.04,
                        'subdivisions': 2, 'output': 'out'}, file)
    return path


def test_parse_config(config_text):
    config = parse_config(config_text)
    assert config['scheme'] == 'B'
    assert config['upwind'] is True
    assert config['subdivisions'] == [2, 4]
    assert config['initial'] == 'mms2d'
    assert config['constant_density'] is False
    assert config['fp_tol'] == DEFAULTS['fp_tol']
    assert config.dim == 2


def test_scheme_and_upwind(config_text):
    config = parse_config(config_text)
    scheme = config.scheme()
    assert scheme.variant == 'B'
    assert scheme.num_steps == 10
    assert scheme.upwind.c == 0.25
    assert scheme.upwind.variant == 'smooth'
    assert not parse_config("upwind = off").upwind().active
    assert scheme.fp_stagnation == 1e3
    assert parse_config("fp_stagnation = 1").scheme().fp_stagnation == 1.0


def test_box(config_text):
    box = parse_config(config_text).box()
    assert box.subdivisions.tolist() == [2, 4]
    assert box.lower.tolist() == [-1.0, -1.0]
    assert parse_config(config_text).box(subdivisions=8).subdivisions.tolist() == [8, 8]


def test_read_entries():
    data, lines = read_entries("\n# comment\nscheme = A\n\ndt=0.5\n")
    assert data == {'scheme': 'A', 'dt': '0.5'}
    assert lines == {'scheme': 3, 'dt': 5}


@pytest.mark.parametrize("text, error, message", [
    ("scheme = C", InvalidValueError, "line 1: 'scheme' should be one of the following: 'A', 'B'."),
    ("dt = 0.1\nc = 0.7", InvalidValueError, "line 2: 'c' must lie in [0, 0.5]."),
    ("dt = -1", InvalidValueError, "line 1: 'dt' must be positive."),
    ("dt = fast", InvalidValueError, "line 1: 'dt' must be a number."),
    ("dim = 4", InvalidValueError, "line 1: 'dim' should be 2 or 3."),
    ("fp_stagnation = 0.5", InvalidValueError, "line 1: 'fp_stagnation' must be at least 1."),
    ("upwind = maybe", InvalidValueError, "line 1: 'upwind' should be 'on' or 'off'."),
    ("T = 1\nfoo = 1", UnknownKeyError, "line 2: unknown key 'foo'"),
    ("dt 0.1", InvalidValueError, "line 1: expected 'key = value'"),
    ("dt = 0.1\ndt = 0.2", InvalidValueError, "line 2: 'dt' was already given on line 1"),
    ("dt =", MissingValueError, "line 1: no value given for 'dt'"),
])
def test_invalid_config(text, error, message):
    with pytest.raises(error) as exc:
        parse_config(text)
    assert str(exc.value).startswith(message)


@pytest.mark.parametrize("text", ["", "# only a comment\n\n"])
def test_empty_config_takes_defaults(text):
    config = parse_config(text)
    assert config.dim == 2
    assert config['scheme'] == 'B'
    assert config['T'] == 0.0
    assert config['fp_stagnation'] == 1e3
    assert config['constant_density'] is False


def test_dimension_from_initial_data():
    assert parse_config("initial = preset3d-variable").dim == 3
    assert parse_config("initial = preset3d-constant")['constant_density'] is True
    assert parse_config("initial = preset3d-variable")['constant_density'] is False
    assert parse_config("initial = mms2d").dim == 2


def test_conflicting_dimension():
    with pytest.raises(InvalidValueError) as exc:
        parse_config("dim = 3\ninitial = mms2d")
    assert str(exc.value).startswith("line 1: 'initial = mms2d' needs 'dim = 2'")


@pytest.mark.parametrize("text", [
    "subdivisions = 1, 2, 3",
    "dim = 3\nlower = 0, 0",
    "lower = 1\nupper = 1",
])
def test_invalid_box(text):
    with pytest.raises(InvalidValueError):
        parse_config(text)


def test_validate_entry():
    assert SchemaParser.validate_entry('log_level', 'DEBUG') == 'debug'
    assert SchemaParser.validate_entry('levels', '1, 2,3') == [1, 2, 3]
    assert SchemaParser.validate_entry('subdivisions', 4) == [4]
    assert SchemaParser.validate_entry('fp_maxiter', '20') == 20
    with pytest.raises(InvalidValueError):
        SchemaParser.validate_entry('fp_maxiter', '2.5')
    with pytest.raises(MissingValueError):
        SchemaParser.validate_entry('dt', None)


def test_replace_validates():
    config = parse_config("dt = 0.1")
    changed = config.replace(dt='0.05', initial='mms2d')
    assert changed['dt'] == 0.05
    assert changed.dim == 2
    assert config['dt'] == 0.1
    with pytest.raises(InvalidValueError):
        config.replace(dt=-1)


def test_equality():
    assert parse_config("dt = 0.1") == parse_config("dt=0.1\n")
    assert parse_config("dt = 0.1") != parse_config("dt = 0.2")


def test_output_path_resolved_against_base(tmpdir):
    base = Path(str(tmpdir))
    config = parse_config("output = results", base)
    assert config.output_path == base / 'results'
    assert config.as_dict()['output'] == str(base / 'results')
    assert parse_config("output = results").output_path == Path('results')


def test_yaml_config(yaml_path):
    parser = ConfigParser(yaml_path)
    config = parser.config
    assert config['initial'] == 'preset3d-constant'
    assert config.dim == 3
    assert config['constant_density'] is True
    assert config['scheme'] == 'A'
    assert config.scheme().num_steps == 2
    assert parser.output_path == yaml_path.parent / 'out'
    assert parser.levels == DEFAULTS['levels']


def test_text_config_file(tmpdir):
    path = Path(str(tmpdir)) / 'run.cfg'
    path.write_text("scheme = A\nT = 0.5\n")
    config = ConfigParser(path).config
    assert config['scheme'] == 'A'
    assert config['T'] == 0.5


def test_empty_yaml(tmpdir):
    path = Path(str(tmpdir)) / 'empty.yaml'
    path.write_text("")
    config = ConfigParser(path).config
    assert config.as_dict() == parse_config("", Path(str(tmpdir))).as_dict()


def test_malformed_yaml(tmpdir):
    path = Path(str(tmpdir)) / 'broken.yaml'
    path.write_text("scheme: B\ndt: [0.01\nT: 1\n")
    with pytest.raises(ConfigFileError) as error:
        ConfigParser(path)
    assert 'broken.yaml' in str(error.value)
    assert 'line' in str(error.value)
    assert isinstance(error.value, ConfigError)


@pytest.mark.parametrize("name", ['latin.cfg', 'latin.yaml'])
def test_config_file_not_utf8(tmpdir, name):
    path = Path(str(tmpdir)) / name
    path.write_bytes(b"scheme = B\n# r\xe9glage\xff\n")
    with pytest.raises(ConfigFileError) as error:
        ConfigParser(path)
    assert name in str(error.value)
    assert 'UTF-8' in str(error.value)


def test_yaml_must_be_mapping(tmpdir):
    path = Path(str(tmpdir)) / 'list.yaml'
    path.write_text("- dt\n- T\n")
    with pytest.raises(InvalidValueError):
        ConfigParser(path)


def test_yaml_unknown_key(tmpdir):
    path = Path(str(tmpdir)) / 'typo.yml'
    path.write_text("tiem: 1.0\n")
    with pytest.raises(UnknownKeyError):
        ConfigParser(path)


def test_round_trip_through_yaml(tmpdir, config_text):
    config = parse_config(config_text, Path(str(tmpdir)))
    path = Path(str(tmpdir)) / 'dumped.yaml'
    with path.open(mode='w') as file:
        yaml.safe_dump(config.as_dict(), file)
    assert ConfigParser(path).config.as_dict() == config.as_dict()
    assert isinstance(config, RunConfig)
