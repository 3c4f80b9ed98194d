"""PU learning with Hölder-divergence adversarial networks (HD-PAN).

Trains a classifier/discriminator pair on positive and unlabeled data,
measuring the gap between their Bernoulli outputs with a Hölder
pseudo-divergence (the KL-based PAN objective is included as a baseline).
"""

__version__ = "0.1.0"
