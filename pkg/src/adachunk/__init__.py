"""Document-aware chunking toolkit.

Chunks parsed Markdown documents with a portfolio of methods (page,
sentence, recursive split-then-merge, LLM-guided regex), regularizes
chunk sizes, scores chunkings with five intrinsic quality metrics, and
adaptively selects the best method per document.
"""

from adachunk.docmodel import (
    BlockSpan,
    Chunk,
    Chunking,
    Document,
    EntityPronounPair,
    SidecarError,
    interior_boundaries,
    load_document,
    validate_chunking,
)
from adachunk.tokens import TokenCounter, count_tokens, get_counter

__all__ = [
    "BlockSpan",
    "Chunk",
    "Chunking",
    "Document",
    "EntityPronounPair",
    "SidecarError",
    "TokenCounter",
    "count_tokens",
    "get_counter",
    "interior_boundaries",
    "load_document",
    "validate_chunking",
]

__version__ = "0.1.0"
