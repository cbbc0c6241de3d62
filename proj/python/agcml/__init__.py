"""Python access to the agcml simulation core and pipeline CLI."""

import json

from . import _agcml
from ._agcml import TOOL_VERSION, UsageError, combine_dbm, lqi_from_snr, status_of

__all__ = [
    "TOOL_VERSION",
    "UsageError",
    "combine_dbm",
    "config_hash",
    "default_config",
    "flip",
    "label",
    "lqi_from_snr",
    "run_cli",
    "status_of",
    "sweep",
]


def _text(config):
    if config is None:
        return ""
    if isinstance(config, str):
        return config
    return json.dumps(config)


def default_config():
    """Full default configuration as a dict."""
    return json.loads(_agcml.default_config())


def config_hash(config=None):
    return _agcml.config_hash(_text(config))


def label(wanted_dbm, blocker_dbm, offset_mhz, seed=0, config=None):
    """Label one configuration; agc_optim is None for the class X."""
    return _agcml.label(wanted_dbm, blocker_dbm, offset_mhz, seed, _text(config))


def sweep(config=None):
    return _agcml.sweep(_text(config))


def flip(config=None):
    return _agcml.flip(_text(config))


def run_cli(*args):
    """Run one CLI invocation in-process. Returns (exit_code, stdout, stderr)."""
    return _agcml.run_cli([str(a) for a in args])
