"""
Certifying strongly proper losses
=================================

Grid certification of the loss catalog, the modulus of strong concavity
of each Bayes risk, and two losses that fail.
"""

import numpy as np

from rankregret import catalog, certify_proper, certify_strongly_proper, strong_concavity_modulus
from rankregret.losses import C_EXP, linear_loss

# every catalog loss passes at its stored constant
for ell in catalog():
    rep = certify_strongly_proper(ell.proper, ell.strong_properness)
    mod = strong_concavity_modulus(ell.proper.bayes_risk)
    print(f"{ell.name:10s} lambda={ell.strong_properness:g}  modulus={mod:.4f}  "
          f"min margin={rep.min_margin:+.2e}  {'pass' if rep.verdict else 'fail'}")

# -H'' of the exponential risk is 4 at eta = 1/2 and grows toward the ends,
# so asking for 16 fails; the witness sits near eta = 0
rep = certify_strongly_proper(C_EXP, 16.0)
print("\nexp at lambda=16:", rep.witness)

# the linear loss c(1,q) = 1-q, c(-1,q) = q rewards overconfidence
rep = certify_proper(linear_loss())
print("linear loss:", rep.witness)
eta = 0.9
q = np.array([eta, 1.0])
print("L(0.9, 0.9) =", eta * (1 - q[0]) + (1 - eta) * q[0],
      " L(0.9, 1) =", eta * (1 - q[1]) + (1 - eta) * q[1])
