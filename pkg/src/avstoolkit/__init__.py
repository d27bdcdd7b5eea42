"""avstoolkit: interpretable ad-hoc video search tooling.

Subpackages cover the pipeline around precomputed representations:
bracketed-tree reading (`treebank`), multi-word concept-bank
construction (`concepts`), query/item vectors (`vectors`), exact top-k
retrieval in concept/embedding/fusion modes (`engine`), caption-dataset
mechanics (`dataset`), and sampled-judgment evaluation (`evaluation`).
"""

__version__ = "0.1.0"

from . import concepts, dataset, engine, evaluation, treebank, vectors  # noqa: F401
