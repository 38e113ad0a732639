"""cotref: chain-of-thought referring-expression data curation, composite
benchmark building, and REC/RES evaluation."""

__version__ = "0.1.0"
