"""detoxkit: corpus curation, prompting and evaluation for multilingual
text detoxification."""

from .corpus import LANGUAGES, Lexicon, ParallelPair, ToxicSpan

__all__ = ["LANGUAGES", "Lexicon", "ParallelPair", "ToxicSpan"]
__version__ = "0.1.0"
