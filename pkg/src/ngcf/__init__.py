"""Word/context class induction for N-gram language models.

Exchange clustering under a leaving-one-out likelihood criterion, a top-h
co-occurrence heuristic for near-linear scaling in the cluster count, and
evaluation of the resulting clustered models against a compact back-off
baseline by held-out perplexity.
"""

from . import corpus, criterion, exchange, heuristic, kernels, models

__all__ = ["corpus", "criterion", "exchange", "heuristic", "kernels",
           "models"]
__version__ = "0.1.0"
