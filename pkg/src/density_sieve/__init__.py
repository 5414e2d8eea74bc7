"""density-sieve - density-zero subsequences of measurable covers."""

__version__ = "0.1.0"

__all__ = [
    "measure_sets",
    "index_sets",
    "cover_family",
    "extractor",
    "pideal",
    "counterexample",
    "verify",
    "cli",
]
