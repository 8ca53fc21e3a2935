"""Run configuration, CSV output, the invariant suite and the command line"""
from hevi_slice.cli_io.settings import RunConfig
from hevi_slice.cli_io.settings import parse_config
from hevi_slice.cli_io.writers import write_field_csv
from hevi_slice.cli_io.writers import write_timeseries

__all__ = ['RunConfig', 'parse_config', 'write_field_csv', 'write_timeseries']
