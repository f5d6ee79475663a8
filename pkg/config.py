"""
Configuration settings for the simultaneous assignment toolkit.
Every limit can be overridden through the environment or a .env file.
"""
import os
from typing import Dict, Any
from dotenv import load_dotenv

from errors import ConfigurationError

# Load environment variables from .env file
load_dotenv()

# Logging configuration
LOG_LEVEL = os.getenv('SAP_LOG_LEVEL', 'WARNING')
LOG_FORMAT = os.getenv('SAP_LOG_FORMAT', '%(asctime)s - %(name)s - %(levelname)s - %(message)s')
LOG_FILE = os.getenv('SAP_LOG_FILE', '')
LOG_MAX_SIZE = int(os.getenv('SAP_LOG_MAX_SIZE', '10')) * 1024 * 1024  # 10MB
LOG_BACKUP_COUNT = int(os.getenv('SAP_LOG_BACKUP_COUNT', '5'))

# Exact solver limits
BRUTE_FORCE_LIMIT = int(os.getenv('BRUTE_FORCE_LIMIT', '10000000'))
BNB_NODE_LIMIT = int(os.getenv('BNB_NODE_LIMIT', '200000'))

# Odd-set cut enumeration limits
BLOSSOM_ROW_LIMIT = int(os.getenv('BLOSSOM_ROW_LIMIT', '12'))
BLOSSOM_COLUMN_LIMIT = int(os.getenv('BLOSSOM_COLUMN_LIMIT', '24'))
BLOSSOM_CUT_LIMIT = int(os.getenv('BLOSSOM_CUT_LIMIT', '20000'))

# Strengthened relaxation budgets
LP1STAR_CUT_BUDGET = int(os.getenv('LP1STAR_CUT_BUDGET', '200'))
LP1STAR_SUBSET_BUDGET = int(os.getenv('LP1STAR_SUBSET_BUDGET', '64'))
LP1STAR_TREE_LIMIT = int(os.getenv('LP1STAR_TREE_LIMIT', '20000'))

# Cover construction limits
LAMINAR_COVER_MAX_K = int(os.getenv('LAMINAR_COVER_MAX_K', '8'))

# Performance settings
APPROX_WORKERS = int(os.getenv('APPROX_WORKERS', '1'))

# Development settings
DEBUG_MODE = os.getenv('DEBUG_MODE', 'false').lower() == 'true'
TESTING_MODE = os.getenv('TESTING_MODE', 'false').lower() == 'true'

_POSITIVE_SETTINGS = (
    'BRUTE_FORCE_LIMIT',
    'BNB_NODE_LIMIT',
    'BLOSSOM_ROW_LIMIT',
    'BLOSSOM_COLUMN_LIMIT',
    'BLOSSOM_CUT_LIMIT',
    'LP1STAR_TREE_LIMIT',
    'LAMINAR_COVER_MAX_K',
    'APPROX_WORKERS',
)


def get_config() -> Dict[str, Any]:
    """Get all configuration as a dictionary."""
    return {
        'log_level': LOG_LEVEL,
        'log_format': LOG_FORMAT,
        'log_file': LOG_FILE,
        'log_max_size': LOG_MAX_SIZE,
        'log_backup_count': LOG_BACKUP_COUNT,
        'brute_force_limit': BRUTE_FORCE_LIMIT,
        'bnb_node_limit': BNB_NODE_LIMIT,
        'blossom_row_limit': BLOSSOM_ROW_LIMIT,
        'blossom_column_limit': BLOSSOM_COLUMN_LIMIT,
        'blossom_cut_limit': BLOSSOM_CUT_LIMIT,
        'lp1star_cut_budget': LP1STAR_CUT_BUDGET,
        'lp1star_subset_budget': LP1STAR_SUBSET_BUDGET,
        'lp1star_tree_limit': LP1STAR_TREE_LIMIT,
        'laminar_cover_max_k': LAMINAR_COVER_MAX_K,
        'approx_workers': APPROX_WORKERS,
        'debug_mode': DEBUG_MODE,
        'testing_mode': TESTING_MODE,
    }


def validate_config() -> None:
    """
    Check that every numeric limit is usable.

    Raises:
        ConfigurationError: if a limit is not positive or a budget is negative
    """
    settings = get_config()
    for name in _POSITIVE_SETTINGS:
        value = settings[name.lower()]
        if value <= 0:
            raise ConfigurationError(f"{name} must be positive, got {value}")
    for name in ('LP1STAR_CUT_BUDGET', 'LP1STAR_SUBSET_BUDGET'):
        value = settings[name.lower()]
        if value < 0:
            raise ConfigurationError(f"{name} must not be negative, got {value}")
