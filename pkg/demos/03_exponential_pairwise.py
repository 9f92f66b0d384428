"""
Pairwise exponential regret versus balanced regret
==================================================

For the exponential loss the pairwise risk of f(x) - f(x') factors as a
product of two class sums, while the balanced risk is their average.
Pairwise regret therefore grows like the square of balanced regret and no
constant factor can bound one by the other.  The end-to-end ranking bound
is unaffected.
"""

import numpy as np

from rankregret import FiniteDistribution
from rankregret.bounds import KOTLOWSKI, kotlowski_check

D = FiniteDistribution.from_arrays([0.5, 0.5], [0.8, 0.2])
k, m = KOTLOWSKI["exp"]

print(" s   pairwise   9/4*balanced   ratio   rank regret <= 3/sqrt2 sqrt(bal)")
for s in (0.25, 0.5, 1.0, 2.0, 3.0):
    pair, rank = kotlowski_check(D, "exp", np.array([-s, s]))
    bal = pair.rhs / k
    print(f"{s:4.2f}  {pair.lhs:9.4f}  {pair.rhs:12.4f}  {pair.lhs / bal:6.2f}   "
          f"{rank.lhs:.3f} <= {rank.rhs:.3f}")

# the factorisation, written out: A = sum mu eta e^{-f}, B = sum mu (1-eta) e^{f}
s = 1.0
f = np.array([-s, s])
A = D.weights @ (D.eta * np.exp(-f))
B = D.weights @ ((1 - D.eta) * np.exp(f))
p = D.p
print("\npairwise risk (A/p)(B/(1-p)) =", (A / p) * (B / (1 - p)))
print("balanced risk (A/p + B/(1-p))/2 =", (A / p + B / (1 - p)) / 2)
