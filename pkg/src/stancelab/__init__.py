"""Stance analysis toolkit for policy document corpora."""

from .classifier import Label
from .corpus import Country, CorpusKind, Document, DocumentMeta
from .errors import StancelabError
from .segmenter import Sentence, sentence_id

__version__ = "0.1.0"

__all__ = [
    "Country",
    "CorpusKind",
    "Document",
    "DocumentMeta",
    "Label",
    "Sentence",
    "StancelabError",
    "sentence_id",
    "__version__",
]
