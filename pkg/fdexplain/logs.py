###
### logging to console, file
###

import logging
import textwrap
import yaml


# defers rendering of domain families and removed values until a handler emits the record;
# long renderings are cut at `limit` characters
class r:
    # credit: https://stackoverflow.com/a/60072502
    def __init__(self, callback, arg1, limit=200):
        self._callback = callback
        self._arg1 = arg1
        self._limit = limit

    def __repr__(self):
        text = str(self._callback(self._arg1))
        if len(text) > self._limit:
            return text[: self._limit - 3] + '...'
        return text


# use only base logger name, e.g. 'fdexplain.propagation' → 'fdexplain'
class LoggerRootnameFilter(logging.Filter):
    def filter(self, record):
        record.rootname = record.name.rsplit('.', 1)[0]
        return True


console_yaml = '''
    version: 1
    disable_existing_loggers: false
    formatters:
        brief:
            # add '%(rootname)s ' to see where a message came from
            format: '%(levelname)-5s %(message)s'
        detailed:
            format: '%(asctime)s %(levelname)-5s %(rootname)s %(message)s'
            datefmt: '%Y-%m-%d_%H:%M:%S'
    filters:
        rootname:
            (): fdexplain.logs.LoggerRootnameFilter
    handlers:
        console:
            class: logging.StreamHandler
            formatter: brief
            filters: [rootname]
            stream: ext://sys.stderr  # stdout carries command results
    loggers:
        root:
            handlers: [console]
'''


def logging_config(
    console_log_level=logging.WARNING,
    file_log_level=logging.INFO,
    log_file='',
):
    """Return a dictConfig() dict; a rotating file handler is added only when log_file is set."""
    # docs: https://docs.python.org/3/library/logging.config.html
    config_data = yaml.safe_load(textwrap.dedent(console_yaml))
    config_data['handlers']['console']['level'] = logging.getLevelName(console_log_level)
    if log_file != '':
        config_data['handlers']['file'] = {
            'class': 'logging.handlers.TimedRotatingFileHandler',
            'formatter': 'detailed',
            'filters': ['rootname'],
            'level': logging.getLevelName(file_log_level),
            'filename': log_file,
            'when': 'midnight',
            'utc': True,
            'backupCount': 31,
        }
        config_data['loggers']['root']['handlers'].append('file')
    return config_data
