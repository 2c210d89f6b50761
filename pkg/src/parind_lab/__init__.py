"""parind_lab: a numerical laboratory for parameter-independence audits.

The package verifies, at desk scale, the full inequality pipeline that rules out
nontrivial parameter-independent hidden-variable decompositions of quantum
probabilities: chained measurement families and their correlation measures,
embezzlement of entangled states with certified fidelity bounds, exact
half-subset combinatorics, perfect-correlation identities, measurement
couplings, and an audit harness that applies the chains to concrete
hidden-variable models.
"""

__version__ = "0.1.0"
