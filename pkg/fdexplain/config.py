###
### configuration file (defaults for the command-line interface)
###

import dataclasses
import logging
import os
import platformdirs
import yaml
from fdexplain.model import ConfigurationError
from fdexplain.propagation import Run
from fdexplain.rules import Mode

logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)  # will be throttled by handler log level (file, console)

default_config_yaml = '''
# consistency for x = y + c: 'full' (arc consistency) or 'bounds' (x in min(y)+c..max(y)+c)
mode: full
# fair run: worklist, roundrobin, or random:<seed>
strategy: worklist
# `solve` stops at the first empty domain (a failure iteration)
stop_on_failure: true
# number of distinct fair runs compared by `check`
check_strategies: 20
# log file ('' for console only) and its level
log_file: ''
file_log_level: INFO
'''


@dataclasses.dataclass(frozen=True)
class Config:
    mode: Mode
    strategy: str
    stop_on_failure: bool
    check_strategies: int
    log_file: str
    file_log_level: str


def config_pathname():
    return os.path.join(platformdirs.user_config_dir('fdexplain'), 'config.yaml')


def load_config(path: str = '') -> Config:
    """Defaults overridden by `path`; '' means the per-user file, '-' means defaults only."""
    data = yaml.safe_load(default_config_yaml)
    if path == '':
        path = config_pathname()
        if not os.path.exists(path):
            path = '-'
    if path != '-':
        try:
            with open(path, 'r') as f:
                user_data = yaml.safe_load(f)
        except OSError as e:
            raise ConfigurationError(f"F81302 cannot read config file {path}: {e.strerror}")
        except yaml.YAMLError as e:
            raise ConfigurationError(f"F81303 config file {path} is not valid YAML: {e}")
        if user_data is None:
            user_data = dict()
        if not isinstance(user_data, dict):
            raise ConfigurationError(f"F81304 config file {path} must hold a mapping")
        unknown = set(user_data) - set(data)
        if unknown:
            raise ConfigurationError(f"F81305 unknown config keys: {', '.join(sorted(unknown))}")
        data.update(user_data)
        logger.debug(f"config loaded from {path}")
    return validate(data)


def validate(data: dict) -> Config:
    try:
        mode = Mode(data['mode'])
    except ValueError:
        raise ConfigurationError(f"F81310 mode must be 'full' or 'bounds', not {data['mode']!r}")
    Run.parse(str(data['strategy']))  # raises ConfigurationError
    if not isinstance(data['stop_on_failure'], bool):
        raise ConfigurationError("F81311 stop_on_failure must be true or false")
    k = data['check_strategies']
    if isinstance(k, bool) or not isinstance(k, int) or k < 2:
        raise ConfigurationError("F81312 check_strategies must be an integer of at least 2")
    if not isinstance(data['log_file'], str):
        raise ConfigurationError("F81313 log_file must be a path or ''")
    level = data['file_log_level']
    if not isinstance(logging.getLevelName(level), int):
        raise ConfigurationError(f"F81314 unknown log level {level!r}")
    return Config(mode, str(data['strategy']), data['stop_on_failure'], k, data['log_file'], level)
