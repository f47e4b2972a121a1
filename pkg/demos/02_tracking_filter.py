"""Track a moving target through noisy position fixes.

The estimator is the information-form Kalman filter: predict through the
double-integrator dynamics with the executed control, then condition on the
position observation. This demo drives the truth with a known weaving control
sequence and shows the posterior hugging it far below the raw noise floor.
"""

import numpy as np

from aifloop.ckm import AnalyticCkm
from aifloop.inference import infer_step, initial_belief, update
from aifloop.model import ReferenceTrajectory, make_dynamics, reference_at, step_truth
from aifloop.sensing import observe

rng = np.random.default_rng(7)
dyn = make_dynamics(dt=0.1, sigma_w=0.01)
ref = ReferenceTrajectory(np.array([0.0, 0.0]), np.array([40.0, 0.0]), 1.0, 0.1, 400)
field = AnalyticCkm(floor=(0.25, 0.25), bumps=(), gamma=2.0, k_ref=200)

s_true = reference_at(ref, 0)
belief = initial_belief(ref)

errors, obs_errors = [], []
u_prev = None
for t in range(400):
    obs = observe(s_true, 200, field, rng)
    belief = update(belief, obs) if t == 0 else infer_step(belief, u_prev, obs, dyn)

    errors.append(np.linalg.norm(belief.g.mean[:2] - s_true[:2]))
    obs_errors.append(np.linalg.norm(obs.y - s_true[:2]))

    # Known weaving control; the filter is told what was executed.
    u = np.array([0.05 * np.sin(0.05 * t), 0.08 * np.cos(0.03 * t)])
    s_true = step_truth(s_true, u, dyn, rng)
    u_prev = u

errors = np.array(errors)
obs_errors = np.array(obs_errors)
post_std = np.sqrt(np.diag(belief.g.cov)[:2])

print("tracking a weaving target for 400 steps, observation std 0.5 m per axis")
print(f"  raw observation error:   {obs_errors.mean():.3f} m mean")
print(f"  posterior position error:{errors[50:].mean():9.3f} m mean (after warm-up)")
print(f"  final posterior std:      {post_std} per axis")
print()
print("the filter runs ~{:.0f}x below the raw fixes by carrying velocity".format(
    obs_errors.mean() / errors[50:].mean()))
print("through the dynamics between observations.")
