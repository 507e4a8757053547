"""The full transmission x environment table and its findings.

Roughly six seconds on one core. Pass ``workers`` to spread cells over
processes; the report is identical either way.
"""
# %%
from telesim.report import run_sweep

report = run_sweep()
print(report.to_markdown())

# %% DC gains side by side
for kind in ("rigid", "damped", "elastic", "combined", "electromechanical"):
    gains = []
    for env in ("freespace", "spring"):
        dc = report.cell(kind, env)["result"]["dc_gain_deg_per_mNm"]
        gains.append("undefined" if dc is None else f"{dc:.4g}")
    print(f"{kind:>18}: freespace {gains[0]:>12}, spring {gains[1]:>8} deg/mNm")

# %% Without a restoring stiffness the freespace plants are integrators, so
# their identified a0 is essentially zero and the DC gain blows up. The
# spring column settles near 1 deg/mNm, the spring compliance itself.
