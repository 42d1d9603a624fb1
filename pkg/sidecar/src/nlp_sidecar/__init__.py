"""HTTP sidecar for sentence embeddings and coreference pairs, plus a
sidecar-file generator for markdown corpora."""

__version__ = "0.1.0"
