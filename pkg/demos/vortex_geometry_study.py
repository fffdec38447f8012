"""Supersonic vortex: isoparametric versus superparametric geometry.

Runs the k=1 vortex on AR~1 meshes twice, once with k_G = k and once with
k_G = k + 1, and prints both convergence tables.  The isoparametric run
stalls near order 1.5; one extra geometry order restores order 2.
"""
import sys

from curved_dg.study import StudyConfig, render_table, run_study

levels = int(sys.argv[1]) if len(sys.argv) > 1 else 4
for policy in ("iso", "super"):
    cfg = StudyConfig(case="euler_vortex", k=[1], kg_policy=policy, ar=1.0, levels=levels)
    print(f"k_G policy: {policy}")
    print(render_table(run_study(cfg)))
