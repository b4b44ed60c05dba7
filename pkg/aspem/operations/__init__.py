# aspem/operations/__init__.py
"""
Module: operations

The algorithms behind every CLI subcommand:

- graph: ingestion, schema derivation and degrees
- incompatibility: gamma statistic and sub-aspect score tables
- selection: candidate aspect enumeration, threshold-based selection
- alias / training: noise sampling and per-aspect embedding training
- compose: node and edge embeddings from a bundle, embedding and bundle files
- evaluation / logreg / holdout: link prediction and classification harnesses
- pipeline: the end-to-end run and hyperparameter sweeps
- synthetic: seeded graphs with planted structure
"""
