import sys
from .debug import start_sub
__version__ = '1.0.0'
__all__ = ['start_sub']
