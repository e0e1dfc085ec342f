"""A single-seed look at why information dropping needs the longer plan.

Trains the tiny regressor under E3 (long plan, dropping off) and E4 (long
plan, dropping on) with shared data and init, then plots the loss gap and
the occluded-keypoint accuracy crossover. One seed takes about a minute;
the acceptance suite repeats this over five seeds.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from infodrop.bench import run_experiments

curves = run_experiments(["E3", "E4"], seeds=[0])
e3, e4 = curves

epochs = np.arange(e3.train_loss.size)
fig, axes = plt.subplots(1, 3, figsize=(13, 4))
axes[0].plot(epochs, e3.train_loss, label="E3 (dropping off)")
axes[0].plot(epochs, e4.train_loss, label="E4 (dropping on)")
axes[0].set_title("train loss")
axes[1].plot(epochs, e3.test_pck, label="E3")
axes[1].plot(epochs, e4.test_pck, label="E4")
axes[1].set_title("test PCK (occluded test set)")
axes[2].plot(epochs, e3.test_pck_occluded, label="E3")
axes[2].plot(epochs, e4.test_pck_occluded, label="E4")
axes[2].set_title("occluded-keypoint PCK")
for ax in axes:
    ax.set_xlabel("epoch")
    ax.legend()
fig.tight_layout()
fig.savefig("training_dynamics.svg")

print(f"final train loss: E3 {e3.train_loss[-1]:.5f}, E4 {e4.train_loss[-1]:.5f}")
print(f"final overall PCK: E3 {e3.test_pck[-1]:.3f}, E4 {e4.test_pck[-1]:.3f}")
print(
    f"final occluded PCK: E3 {e3.test_pck_occluded[-1]:.3f}, "
    f"E4 {e4.test_pck_occluded[-1]:.3f}"
)
print("wrote training_dynamics.svg")
