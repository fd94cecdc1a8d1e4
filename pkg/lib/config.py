"""
Configuration loader module.
Loads settings from config.json so run sizes and hyperparameters change without code changes.
"""

import json
import os

_config = None
_config_path = None

DEFAULT_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'config.json')


def load_config(path=None):
    """Load and cache configuration from config.json (or an explicit path)."""
    global _config, _config_path
    path = path or _config_path or DEFAULT_PATH
    if _config is None or path != _config_path:
        try:
            with open(path, 'r', encoding='utf-8') as f:
                _config = json.load(f)
        except OSError as err:
            raise RuntimeError('{} not found. Please create it from the config.json in the repository root'.format(path)) from err
        except ValueError as err:
            raise RuntimeError('{} is not valid JSON: {}'.format(path, err)) from err
        _config_path = path
    return _config


def reset_config():
    """Drop the cached configuration."""
    global _config, _config_path
    _config = None
    _config_path = None


def get_periods_config():
    """Get d_max defaults and the exact-check degree."""
    return load_config()['periods']


def get_features_config():
    """Get regression windows and s_int filter thresholds."""
    return load_config()['features']


def get_generation_config():
    """Get dataset sizes, dimension ranges and weight bounds."""
    return load_config()['generation']


def get_learn_config():
    """Get classifier hyperparameters and split fractions."""
    return load_config()['learn']


def get_asymptotics_config():
    """Get root-finder and cluster-bound settings."""
    return load_config()['asymptotics']


def get_pipeline_config():
    """Get seed, output directory and experiment settings."""
    return load_config()['pipeline']
