import copy
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import yaml
from schema import And, Or, Schema, SchemaError, Use

from spmhd.fem.forms import UpwindParameters
from spmhd.fem.mesh import BoxSpec, InvalidBoxError
from spmhd.stepper import SchemeConfig

INITIAL_DATA = ('mms2d', 'preset3d-variable', 'preset3d-constant', 'zero')
LOG_LEVELS = ('debug', 'info', 'warning', 'error', 'critical')

DEFAULTS = {
    'dim': 2,
    'lower': [-1.0],
    'upper': [1.0],
    'subdivisions': [4],
    'scheme': 'B',
    'upwind': False,
    'c': 0.5,
    'eps': 0.01,
    'upwind_variant': 'smooth',
    'dt': 0.02,
    'T': 0.0,
    'fp_tol': 1e-12,
    'fp_maxiter': 100,
    'fp_stagnation': 1e3,
    'initial': 'zero',
    'output': 'output',
    'snapshot_every': 0,
    'log_level': 'info',
    'levels': [1, 2, 3],
    'rho0': 1.0,
}


class Error(Exception):
    """Base class for exceptions in this module."""


class ConfigError(Error):
    """Raised for any invalid configuration."""


class ConfigFileError(ConfigError):
    """Raised when a configuration file cannot be decoded or parsed."""


class MissingValueError(ConfigError):
    """Raised when a key is given without a value."""


class InvalidValueError(ConfigError):
    """Raised when a value does not pass validation."""


class UnknownKeyError(ConfigError):
    """Raised when a key is not recognized."""


def _to_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ('on', 'true', 'yes', '1'):
        return True
    if text in ('off', 'false', 'no', '0'):
        return False
    raise ValueError(value)


def _list_of(kind):
    def convert(value) -> list:
        if isinstance(value, (list, tuple)):
            items = list(value)
        else:
            items = [item for item in str(value).split(',') if item.strip()]
        if not items:
            raise ValueError(value)
        return [kind(str(item).strip()) if isinstance(item, str) else kind(item) for item in items]
    return convert


def _integer(value) -> int:
    number = float(value)
    if number != int(number):
        raise ValueError(value)
    return int(number)


def _choice(name: str, options) -> And:
    return And(Use(lambda v: str(v).strip()), Use(str.lower), Or(*[o.lower() for o in options]),
               error="'{name}' should be one of the following: {options}.".format(
                   name=name, options=", ".join("'{o}'".format(o=o) for o in options)))


class SchemaParser:
    """
    Schemas of the single configuration entries. Every entry accepts strings (from
    ``key = value`` files) as well as native YAML values.
    """

    entries = {
        'dim': And(Use(_integer, error="'dim' must be an integer."),
                   Or(2, 3, error="'dim' should be 2 or 3.")),
        'lower': Use(_list_of(float), error="'lower' must be a number or a comma separated list of numbers."),
        'upper': Use(_list_of(float), error="'upper' must be a number or a comma separated list of numbers."),
        'subdivisions': And(Use(_list_of(_integer), error="'subdivisions' must be an integer or a comma "
                                                          "separated list of integers."),
                            Schema(lambda l: all(n >= 1 for n in l), error="'subdivisions' must be at least 1.")),
        'scheme': And(Use(lambda v: str(v).strip().upper()),
                      Or('A', 'B', error="'scheme' should be one of the following: 'A', 'B'.")),
        'upwind': Use(_to_bool, error="'upwind' should be 'on' or 'off'."),
        'c': And(Use(float, error="'c' must be a number."),
                 Schema(lambda c: 0.0 <= c <= 0.5, error="'c' must lie in [0, 0.5].")),
        'eps': And(Use(float, error="'eps' must be a number."),
                   Schema(lambda e: e > 0, error="'eps' must be positive.")),
        'upwind_variant': _choice('upwind_variant', ('smooth', 'abs')),
        'dt': And(Use(float, error="'dt' must be a number."),
                  Schema(lambda d: d > 0, error="'dt' must be positive.")),
        'T': And(Use(float, error="'T' must be a number."),
                 Schema(lambda t: t >= 0, error="'T' must not be negative.")),
        'fp_tol': And(Use(float, error="'fp_tol' must be a number."),
                      Schema(lambda t: t > 0, error="'fp_tol' must be positive.")),
        'fp_maxiter': And(Use(_integer, error="'fp_maxiter' must be an integer."),
                          Schema(lambda i: i > 0, error="'fp_maxiter' must be positive.")),
        'fp_stagnation': And(Use(float, error="'fp_stagnation' must be a number."),
                             Schema(lambda f: f >= 1, error="'fp_stagnation' must be at least 1.")),
        'initial': _choice('initial', INITIAL_DATA),
        'constant_density': Use(_to_bool, error="'constant_density' should be 'true' or 'false'."),
        'output': And(Use(lambda v: str(v).strip()), Schema(len, error="'output' must not be empty.")),
        'snapshot_every': And(Use(_integer, error="'snapshot_every' must be an integer."),
                              Schema(lambda i: i >= 0, error="'snapshot_every' must not be negative.")),
        'log_level': _choice('log_level', LOG_LEVELS),
        'levels': And(Use(_list_of(_integer), error="'levels' must be a comma separated list of integers."),
                      Schema(lambda l: all(j >= 0 for j in l), error="'levels' must not be negative.")),
        'rho0': And(Use(float, error="'rho0' must be a number."),
                    Schema(lambda r: r > 0, error="'rho0' must be positive.")),
    }

    @staticmethod
    def validate_entry(key: str, value, line: Optional[int] = None):
        """
        Validate one entry.

        :raise UnknownKeyError: for keys without a schema
        :raise InvalidValueError: when the value does not pass its schema
        """
        prefix = "line {n}: ".format(n=line) if line is not None else ""
        if key not in SchemaParser.entries:
            raise UnknownKeyError("{p}unknown key '{k}'; valid keys are {keys}".format(
                p=prefix, k=key, keys=", ".join(sorted(SchemaParser.entries))))
        if value is None or (isinstance(value, str) and not value.strip()):
            raise MissingValueError("{p}no value given for '{k}'".format(p=prefix, k=key))
        try:
            return SchemaParser.entries[key].validate(value)
        except SchemaError as exc:
            message = [m for m in exc.errors if m] or [str(exc.code)]
            raise InvalidValueError("{p}{m}".format(p=prefix, m=message[-1])) from exc

    @staticmethod
    def validate_schema(data: dict, lines: Optional[Dict[str, int]] = None) -> dict:
        """
        Validate every entry, fill in defaults and check the entries against each
        other.

        :param data: raw configuration entries
        :param lines: line number of every key, when read from text
        :return: the validated configuration
        """
        lines = lines or {}
        validated = {key: SchemaParser.validate_entry(key, value, lines.get(key)) for key, value in data.items()}

        def fail(key, message):
            prefix = "line {n}: ".format(n=lines[key]) if key in lines else ""
            raise InvalidValueError(prefix + message)

        result = copy.deepcopy(DEFAULTS)
        result.update(validated)
        initial = result['initial']
        if initial == 'mms2d':
            if 'dim' in validated and validated['dim'] != 2:
                fail('dim', "'initial = mms2d' needs 'dim = 2'")
            result['dim'] = 2
        elif initial.startswith('preset3d'):
            if 'dim' in validated and validated['dim'] != 3:
                fail('dim', "'initial = {i}' needs 'dim = 3'".format(i=initial))
            result['dim'] = 3
        if 'constant_density' not in validated:
            result['constant_density'] = initial == 'preset3d-constant'

        dim = result['dim']
        for key in ('lower', 'upper', 'subdivisions'):
            if len(result[key]) not in (1, dim):
                fail(key, "'{k}' needs 1 or {d} entries, got {n}".format(k=key, d=dim, n=len(result[key])))
        try:
            BoxSpec(result['lower'], result['upper'], result['subdivisions'], dim=dim)
        except InvalidBoxError as exc:
            fail('upper' if 'upper' in lines else 'lower', str(exc))
        return result


def parse_config(text: str, base: Optional[Path] = None) -> 'RunConfig':
    """
    Parse ``key = value`` lines. ``#`` starts a comment, blank lines are skipped.

    :param text: configuration text
    :param base: folder that a relative ``output`` is resolved against
    :return: the validated configuration
    """
    data, lines = read_entries(text)
    return RunConfig(SchemaParser.validate_schema(data, lines), base)


def read_entries(text: str) -> Tuple[dict, Dict[str, int]]:
    """Raw entries and the line each key was found on."""
    data = {}
    lines = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise InvalidValueError("line {n}: expected 'key = value', got '{l}'".format(n=number, l=line))
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise InvalidValueError("line {n}: missing key before '='".format(n=number))
        if key in data:
            raise InvalidValueError("line {n}: '{k}' was already given on line {m}".format(
                n=number, k=key, m=lines[key]))
        if not value:
            raise MissingValueError("line {n}: no value given for '{k}'".format(n=number, k=key))
        data[key] = value
        lines[key] = number
    return data, lines


class RunConfig:
    """
    Validated run configuration.

    :param data: output of :meth:`SchemaParser.validate_schema`
    :param base: folder that a relative output path is resolved against
    """

    def __init__(self, data: dict, base: Optional[Path] = None):
        self.data = data
        self.base = Path(base) if base is not None else None

    def __getitem__(self, key):
        return self.data[key]

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.data == other.data

    @property
    def dim(self) -> int:
        return self.data['dim']

    @property
    def output_path(self) -> Path:
        path = Path(self.data['output'])
        if self.base is not None and not path.is_absolute():
            path = self.base / path
        return path

    def box(self, subdivisions=None) -> BoxSpec:
        return BoxSpec(self.data['lower'], self.data['upper'],
                       self.data['subdivisions'] if subdivisions is None else subdivisions, dim=self.dim)

    def upwind(self) -> UpwindParameters:
        if not self.data['upwind']:
            return UpwindParameters.off()
        return UpwindParameters(self.data['c'], self.data['eps'], self.data['upwind_variant'])

    def scheme(self) -> SchemeConfig:
        return SchemeConfig(variant=self.data['scheme'], dt=self.data['dt'], T=self.data['T'],
                            upwind=self.upwind(), fp_tol=self.data['fp_tol'],
                            fp_maxiter=self.data['fp_maxiter'], fp_stagnation=self.data['fp_stagnation'],
                            constant_density=self.data['constant_density'])

    def replace(self, **changes) -> 'RunConfig':
        """Copy with some entries replaced; the replacements are validated too."""
        data = copy.deepcopy(self.data)
        for key, value in changes.items():
            data[key] = SchemaParser.validate_entry(key, value)
        return RunConfig(SchemaParser.validate_schema(data), self.base)

    def as_dict(self) -> dict:
        """Plain data for ``yaml.safe_dump``."""
        data = copy.deepcopy(self.data)
        data['output'] = str(self.output_path)
        return data

    def __repr__(self):
        return "RunConfig({d})".format(d=self.data)


class ConfigParser:
    """
    Loads a configuration file. ``.yaml`` and ``.yml`` files are read with PyYAML,
    anything else as ``key = value`` text.

    :param config_path: path to the configuration file
    :type config_path: Path
    """

    def __init__(self, config_path: Path):
        self.config_path = Path(config_path).absolute()
        if self.config_path.suffix.lower() in ('.yaml', '.yml'):
            data = self.load_yaml(self.config_path)
            self.config = RunConfig(SchemaParser.validate_schema(data), self.config_path.parent)
        else:
            self.config = parse_config(self.read_text(self.config_path), self.config_path.parent)

    @staticmethod
    def read_text(path: Path) -> str:
        """
        Reads a ``key = value`` file as UTF-8 text.

        :raise ConfigFileError: when the file is not valid UTF-8
        """
        try:
            return path.read_text(encoding='utf-8')
        except UnicodeDecodeError as exc:
            raise ConfigFileError("The configuration file {p} is not valid UTF-8 text (byte {b})".format(
                p=path, b=exc.start)) from exc

    @staticmethod
    def load_yaml(path: Path) -> dict:
        """
        Reads a yaml file with :code:`yaml.safe_load`. An empty file gives an empty
        mapping, so every entry takes its default.

        :param path: path to the yaml file to be loaded.
        :type path: Path
        :return: a dict representing the yaml file
        :rtype: dict
        :raise ConfigFileError: when the file is not valid UTF-8 or not valid YAML
        """
        try:
            with path.open(mode='r', encoding='utf-8') as file:
                data = yaml.safe_load(file)
        except UnicodeDecodeError as exc:
            raise ConfigFileError("The configuration file {p} is not valid UTF-8 text (byte {b})".format(
                p=path, b=exc.start)) from exc
        except yaml.YAMLError as exc:
            mark = getattr(exc, 'problem_mark', None)
            where = " at line {n}, column {c}".format(n=mark.line + 1, c=mark.column + 1) if mark else ""
            raise ConfigFileError("The configuration file {p} is not valid YAML{w}: {e}".format(
                p=path, w=where, e=getattr(exc, 'problem', None) or exc)) from exc
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise InvalidValueError("The configuration file {p} must hold a mapping".format(p=path))
        return data

    @property
    def output_path(self) -> Path:
        return self.config.output_path

    @property
    def levels(self) -> List[int]:
        return list(self.config['levels'])
