"""
Run configuration: defaults per command, a YAML (or JSON) file, and flags.

A file holds one or more YAML documents. Mappings set options; a
document or value tagged `!Model` describes the flow model:

    model: !Model {family: dipolar-drift, kappa: 6, alpha: 0.3}
"""
import logging

import yaml

from slitflow import classifier
from slitflow import ensemble
from slitflow.helpers import parse_complex
from slitflow.reports import FORMATS

log = logging.getLogger(__name__)

class ConfigError(Exception): pass

# PyYAML never calls __init__ when constructing a YAMLObject; the mapping
# is copied straight into the instance __dict__.

class Model(yaml.YAMLObject):
    """
    This class stores the flow model part of a configuration.
    """
    yaml_tag = '!Model'
    yaml_loader = yaml.SafeLoader

    fields = ('family', 'kappa', 'alpha', 'beta')

    def options(self):
        unknown = set(vars(self)) - set(self.fields)
        if unknown:
            raise ConfigError("Invalid model option: %s" % ', '.join(sorted(unknown)))
        return dict((k, v) for k, v in vars(self).items() if v is not None)


COMMANDS = ('classify', 'check-identities', 'simulate', 'verify-martingales',
            'gff-couple', 'cardy-zhan', 'sc-residual')
STOCHASTIC = ('simulate', 'verify-martingales', 'gff-couple', 'cardy-zhan')
DUMPS = ('flow', 'trace', 'hull')

DEFAULTS = {
    'family': classifier.CHORDAL_DRIFT,
    'kappa': 4.0,
    'alpha': 0.0,
    'beta': None,
    'T': 1.0,
    'dt': 1e-3,
    'n_paths': 1,
    'K': 4096,
    'mesh': 256,
    'master_seed': None,
    'threads': None,
    'out': None,
    'format': 'csv',
    'z': [1j],
    't_max': 30.0,
    'tolerance_sigma': 3.0,
    'dump': 'flow',
}

COMMAND_DEFAULTS = {
    'classify': {},
    'check-identities': {'kappa': 6.0},
    'simulate': {},
    'verify-martingales': {'T': 0.3, 'dt': 1e-4, 'n_paths': 10000,
                           'z': [1j, 1 + 2j, -0.5 + 1.5j]},
    'gff-couple': {'T': 0.5, 'n_paths': 5000},
    'cardy-zhan': {'kappa': 6.0, 'dt': 2e-4, 'n_paths': 20000,
                   'z': [1.5707963267948966j]},
    'sc-residual': {'kappa': 6.0, 'z': [0.5 + 0.5j, 2j]},
}

FLOATS = ('kappa', 'alpha', 'T', 'dt', 't_max', 'tolerance_sigma')
INTEGERS = ('n_paths', 'K', 'mesh', 'threads', 'master_seed')
POSITIVE = ('kappa', 'T', 'dt', 't_max', 'tolerance_sigma',
            'n_paths', 'K', 'mesh', 'threads')

# options that do not change results and stay out of artifact headers
NOT_RECORDED = ('threads', 'out')


def load(filename):
    """ Every YAML document of `filename`, in order """
    try:
        with open(filename) as stream:
            return list(yaml.safe_load_all(stream))
    except yaml.YAMLError as e:
        raise ConfigError("Error parsing config file %s: %s" % (filename, e))
    except OSError as e:
        raise ConfigError("Cannot read config file %s: %s" % (filename, e.strerror))


def _coerce(key, value):
    if value is None:
        return None
    try:
        if key in FLOATS or key == 'beta':
            return float(value)
        if key in INTEGERS:
            if isinstance(value, int) and not isinstance(value, bool):
                return value
            if isinstance(value, str) and value.strip().isdigit():
                return int(value)
            number = float(value)
            if number != int(number):
                raise ValueError("not an integer")
            return int(number)
        if key == 'z':
            if isinstance(value, str):
                value = [v for v in value.split(',') if v.strip()]
            elif not isinstance(value, list) or (len(value) == 2 and all(
                    isinstance(v, (int, float)) for v in value)):
                value = [value]
            return [parse_complex(v) for v in value]
    except (TypeError, ValueError) as e:
        raise ConfigError("Invalid value for %s: %r (%s)" % (key, value, e))
    return value


class RunConfig(object):

    valid_settings = ['command', 'model'] + sorted(DEFAULTS)

    def __init__(self, filename=None, **flags):
        """
        Arguments:
        - `filename`: optional YAML or JSON config file
        - `flags`: command-line values; None means not given
        """
        self.given = {}
        if filename is not None:
            self._parse_settings(load(filename))
        self.update(**flags)

    def update(self, **flags):
        for k, v in flags.items():
            if v is not None:
                self._set(k, v)

    def _set(self, key, value):
        if key not in self.valid_settings:
            raise ConfigError("Invalid config option: %s" % key)
        if key == 'model':
            self._parse_model(value)
        else:
            self.given[key] = value

    def _parse_rest(self, yaml_object):
        if yaml_object is None:
            return
        if not isinstance(yaml_object, dict):
            raise ConfigError("Config documents must be mappings, got %r" % (yaml_object,))
        for k, v in yaml_object.items():
            self._set(k, v)

    def _parse_model(self, model):
        if isinstance(model, Model):
            options = model.options()
        elif isinstance(model, dict):
            unknown = set(model) - set(Model.fields)
            if unknown:
                raise ConfigError("Invalid model option: %s" % ', '.join(sorted(unknown)))
            options = dict((k, v) for k, v in model.items() if v is not None)
        else:
            raise ConfigError("Invalid model: %r" % (model,))
        self.given.update(options)

    def _parse_settings(self, yaml_objects):
        for yaml_object in yaml_objects:
            if isinstance(yaml_object, Model):
                self._parse_model(yaml_object)
            else:
                self._parse_rest(yaml_object)

    def finalize(self, command=None):
        """
        Resolve defaults for `command` (or the configured one), coerce and
        validate every option, and set them as attributes. Returns self.
        """
        command = command or self.given.get('command')
        if command not in COMMANDS:
            raise ConfigError("Unknown command: %s" % command)
        values = dict(DEFAULTS)
        values.update(COMMAND_DEFAULTS[command])
        values.update(self.given)
        values['command'] = command
        if values['threads'] is None:
            values['threads'] = ensemble.default_threads()
        for k, v in values.items():
            setattr(self, k, _coerce(k, v))
        self.validate()
        return self

    def validate(self):
        for key in POSITIVE:
            if not getattr(self, key) > 0:
                raise ConfigError("%s must be positive, got %r" % (key, getattr(self, key)))
        if self.format not in FORMATS:
            raise ConfigError("Unknown format %r, use one of %s"
                              % (self.format, ', '.join(FORMATS)))
        if self.family not in classifier.FAMILIES:
            raise ConfigError("Unknown family %r, use one of %s"
                              % (self.family, ', '.join(classifier.FAMILIES)))
        if self.dump not in DUMPS:
            raise ConfigError("Unknown dump %r, use one of %s" % (self.dump, ', '.join(DUMPS)))
        if self.K > self.mesh ** 2:
            raise ConfigError("K = %d modes need a mesh of at least %d^2 cells"
                              % (self.K, int(self.K ** 0.5)))
        if not self.z:
            raise ConfigError("At least one point z is required")
        if self.command in STOCHASTIC and self.master_seed is None:
            raise ConfigError("%s is stochastic: a seed is required (--seed)" % self.command)
        if self.master_seed is not None and not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError("The seed must be an unsigned 64-bit integer")

    def recorded(self):
        """ The resolved options that determine the results """
        keys = ['command'] + [k for k in sorted(DEFAULTS)
                              if k not in NOT_RECORDED and k != 'master_seed']
        return dict((k, getattr(self, k)) for k in keys)
