"""
Covariant quantum error correction: channels, codes, covariance measures,
QEC inaccuracy and the trade-off bounds.
"""

from quantum.channel import Channel, CPMap, U1Rep
from quantum.symmetry import U1Code, make_code, symmetry_report
from quantum.noise import LocalNoise, Sector, SectorRecovery, encode_sectors
from quantum.bound import BoundInputs, evaluate_bounds
from quantum.codes import RmParams, ThermoParams, rm_code, thermo_code

__all__ = [
    'Channel',
    'CPMap',
    'U1Rep',
    'U1Code',
    'make_code',
    'symmetry_report',
    'LocalNoise',
    'Sector',
    'SectorRecovery',
    'encode_sectors',
    'BoundInputs',
    'evaluate_bounds',
    'RmParams',
    'ThermoParams',
    'rm_code',
    'thermo_code'
]
