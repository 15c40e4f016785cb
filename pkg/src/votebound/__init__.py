"""Self-certified weighted majority votes.

Learn ensemble weightings by minimizing PAC-Bayes risk certificates over
Dirichlet distributions on the voter-weight simplex, with closed-form and
Monte-Carlo training paths, informed- and uninformed-prior certificates,
and categorical-posterior baselines for comparison.
"""

__version__ = "0.1.0"
