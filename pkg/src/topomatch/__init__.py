"""topomatch: fuzzy toponym matching and gazetteer candidate ranking.

A character-level siamese recurrent pair classifier trained on toponym
pairs, generators for balanced pair datasets (gazetteer- and OCR-derived),
exact L2 candidate ranking over vectorized gazetteers, classical edit
distance baselines, and an evaluation harness for both tasks.
"""

__version__ = "0.1.0"

from .errors import ConsistencyError, InputError, NumericError, TopomatchError

__all__ = ["ConsistencyError", "InputError", "NumericError", "TopomatchError", "__version__"]
