"""When M = max|bound| is not big enough.

The big-M rows bound the reaction energies by M too, and since epsilon is
fixed at 1 that caps the ratio between the largest and the smallest
energy a certificate may use. The ratio needed depends on S alone, so a
model with modest flux bounds can need a larger M than its bounds suggest.
"""

from llfba import BendersConfig, LooplessConfig, random_model, required_big_M, solve_llfba_bigm, solve_llfba_benders

model = random_model(4)
default = LooplessConfig().resolved_big_M(model)
needed = required_big_M(model)
print(f"largest flux bound (default M): {default:g}; M needed for the energies: {needed:g}")

print("big-M at default M :", solve_llfba_bigm(model).objective_value)
print("big-M at needed M  :", solve_llfba_bigm(model, LooplessConfig(big_M=needed)).objective_value)
sol, _ = solve_llfba_benders(model)
print("Benders (no M on the energies):", sol.objective_value)
print("energies of the Benders certificate:", sol.delta_mu.round(3))
