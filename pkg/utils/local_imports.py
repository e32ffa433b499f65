"""
Central import file for the test suite.

Import this in your files to get all necessary dependencies:
    from utils.local_imports import *

This provides:
- pytest and hypothesis (given, settings, strategies as st)
- Common numeric modules (numpy as np, sympy)
- Framework utilities (Log, CommonMethods, allure, AppConstants)
- All fixtures are automatically available in tests (no need to import)
"""
import pytest
import numpy as np
import sympy
from typing import List, Dict, Optional, Any, Tuple
from hypothesis import given, settings, strategies as st, HealthCheck

# Framework utilities
from utils.logger import Log
from utils.common_methods import CommonMethods, AllureHelper as allure
from utils.app_constants import AppConstants


# Re-export everything
__all__ = [
    'pytest', 'np', 'sympy',
    'List', 'Dict', 'Optional', 'Any', 'Tuple',
    'given', 'settings', 'st', 'HealthCheck',
    'Log', 'CommonMethods', 'allure', 'AppConstants'
]
