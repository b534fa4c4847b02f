"""retrank: fused sparse/dense retrieval with a trainable global-local
attention ranker, an invertible document/term score transform, multi-task
training, IR/IE evaluation, and attention-based explanations."""

__version__ = "0.1.0"
