from coralsim.models.run import RunRecord
from coralsim.models.sweep import SweepRecord

__all__ = ['RunRecord', 'SweepRecord']
