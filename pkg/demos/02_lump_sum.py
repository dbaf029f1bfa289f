"""Single-period portfolio choice against a stochastic benchmark.

An investor splits a lump sum between cash and a fund (vanilla or 2x
leveraged) for one quarter, trying to beat a 70/30 index/cash benchmark by a
fixed margin gamma.  We grid-search the allocation that minimizes the
quadratic shortfall and watch how the optimum moves with gamma.
"""
import numpy as np

from letflab import lump_sum, market
from letflab.rng import substream

scenario = lump_sum.LumpSumScenario(
    params=market.KOU_CALIBRATED,
    vetf=market.VETF_SPEC,
    letf=market.LETF_SPEC,
)

print("gamma   p* (vanilla)   p* (2x leveraged)")
for gamma in (0.5, 2.0, 5.0, 10.0):
    # fresh copies of the same substream = common random numbers throughout
    res_v = lump_sum.grid_search_ir_optimal("vetf", gamma, scenario,
                                            200_000, substream(0, 11))
    res_l = lump_sum.grid_search_ir_optimal("letf", gamma, scenario,
                                            200_000, substream(0, 11))
    print(f"{gamma:5.1f}   {res_v.p_star:12.3f}   {res_l.p_star:17.3f}")

print("\nThe leveraged investor needs roughly half the allocation of the "
      "vanilla investor\nfor small targets, and both optima grow with the "
      "outperformance target gamma\n(borrowing beyond p=1 carries a premium).")

# Payoff diagram: investor terminal wealth vs benchmark terminal wealth as a
# function of the realized quarterly index gross return.
lattice, letf_pay, vetf_pay, bench_pay = lump_sum.payoff_diagram(
    scenario, p_letf=0.704, p_vetf=1.216)
i = np.searchsorted(lattice, 1.0)
print(f"\nat a flat quarter (index gross {lattice[i]:.3f}): "
      f"benchmark {bench_pay[i]:.4f}, vanilla {vetf_pay[i]:.4f}, "
      f"leveraged {letf_pay[i]:.4f}")
