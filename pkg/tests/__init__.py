"""
Test suite for the DOPING toolkit.
"""
