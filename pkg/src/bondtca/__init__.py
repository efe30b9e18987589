"""Transaction-cost analysis engine for corporate bond trade tapes.

The pipeline: parse and filter a trade tape, classify trade signs and
riskless principal trades, estimate bid-ask spreads and weekly responses,
build the regression design, fit regularized cost benchmarks, and estimate
transient price-impact kernels, with a synthetic market generator
providing ground truth for every estimator.
"""

__version__ = "0.1.0"
