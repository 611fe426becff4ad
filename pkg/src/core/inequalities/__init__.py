"""
Inequalities Module - GNS-type and Poincare-Wirtinger-type checks over a seeded corpus.
"""

from .checks import InequalityReport, dilate, gns_check, pw_check, ratio_spread
from .corpus import (
    CORPUS_SIZE,
    CorpusField,
    build_corpus,
    cached_corpus,
    corpus_exists,
    default_corpus_domain,
    load_corpus,
    save_corpus,
)

__all__ = [
    'CORPUS_SIZE',
    'CorpusField',
    'InequalityReport',
    'build_corpus',
    'cached_corpus',
    'corpus_exists',
    'default_corpus_domain',
    'dilate',
    'gns_check',
    'load_corpus',
    'pw_check',
    'ratio_spread',
    'save_corpus',
]
