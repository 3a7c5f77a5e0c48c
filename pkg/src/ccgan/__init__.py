"""Cluster-conditioned GAN workbench.

Turns a small unlabeled image collection into a class-conditioned dataset
(K-means++ / X-means over pluggable features), trains a compact conditional
GAN with a hand-written numpy backend, and compares generated sets against
training sets with a topology-based score built on witness-complex
persistence.
"""

__version__ = "0.1.0"

CONFIG_SCHEMA_VERSION = 1
