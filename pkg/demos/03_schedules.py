"""The three step-decay plans and the five ablation configurations.

Prints the learning-rate profile of S1/S2/S3, shows where the dropping flag
switches, and plots all three as step curves.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from infodrop.schedule import EXPERIMENT_TABLE, aid_active, build_schedule, experiment

for name, mode in (("S1", "off"), ("S2", "off"), ("S3", "off_on")):
    plan = build_schedule(name, mode)
    boundaries = [f"epoch {s}: lr {lr:g}" for s, lr in plan.lr_segments]
    print(f"{name}: {plan.total_epochs} epochs | " + " -> ".join(boundaries))

print("\nexperiment table:")
for exp_id, (sched, mode) in EXPERIMENT_TABLE.items():
    cfg = experiment(exp_id)
    marks = [aid_active(cfg, e) for e in range(cfg.plan.total_epochs)]
    if not any(marks):
        state = "dropping off throughout"
    elif all(marks):
        state = "dropping on throughout"
    else:
        state = f"dropping on from epoch {marks.index(True)}"
    print(f"  {exp_id}: schedule {sched}, {state}")

fig, ax = plt.subplots(figsize=(8, 4))
for name, mode in (("S1", "off"), ("S2", "off"), ("S3", "off_on")):
    plan = build_schedule(name, mode)
    epochs = np.arange(plan.total_epochs)
    ax.step(epochs, [plan.lr_at(int(e)) for e in epochs], where="post", label=name)
ax.set_yscale("log")
ax.set_xlabel("epoch")
ax.set_ylabel("learning rate")
ax.legend()
fig.tight_layout()
fig.savefig("schedules.svg")
print("\nwrote schedules.svg")
