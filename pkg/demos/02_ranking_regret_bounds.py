"""
Ranking regret against surrogate regret
=======================================

A two-point distribution, a reversed scorer, and the chain of bounds from
squared-loss regret down to ranking regret.
"""

import numpy as np

from rankregret import FiniteDistribution, get_loss
from rankregret.bounds import check_main_bound, main_bound_rhs
from rankregret.regret import (clemencon_regret, direct_ranking_regret, pairwise_zero_one_regret,
                               plugin_bound, ranking_error, surrogate_regret)

D = FiniteDistribution.from_arrays([0.5, 0.5], [0.8, 0.2])
sq = get_loss("sq")

# sq uses the link 2q - 1; scores -0.4, 0.4 mean estimates 0.3, 0.7 (reversed)
f = np.array([-0.4, 0.4])
print("ranking error, correct order :", ranking_error(D, [1, 0]))
print("ranking error, reversed      :", ranking_error(D, f))
print("regret, direct vs identity   :", direct_ranking_regret(D, f), clemencon_regret(D, f))
print("pairwise 0-1 regret          :", pairwise_zero_one_regret(D, f))

reg = surrogate_regret(D, sq, f).regret
print("\nsquared regret               :", reg)
print("bound sqrt2/(p(1-p)sqrt8)*sqrt:", main_bound_rhs(8, D.p, reg))
rep = check_main_bound(D, sq, f)
print("slack                        :", rep.slack)

# plug-in: ranking regret is at most the L1 estimation error over p(1-p)
rep = plugin_bound(D, [0.2, 0.8])
print("\nplug-in lhs, rhs             :", rep.lhs, rep.rhs)

# as estimates approach eta the surrogate regret and the bound shrink together
for s in (0.9, 0.5, 0.2, 0.05):
    q = (1 - s) * D.eta + s * np.array([0.1, 0.9])
    rep = check_main_bound(D, sq, sq.link(q))
    print(f"s={s:4.2f}  rank regret {rep.lhs:.3f}  bound {rep.rhs:.3f}")
