"""Walk through the Gaussian algebra the whole package is built on.

Fusion (precision-weighted product), affine pushforward, and moment matching
of a mixture are the three operations the filter and the planner compose, so
seeing them on small numbers first makes the later demos readable.
"""

import numpy as np

from aifloop.gaussian import Gaussian, fuse, moment_match_mixture, push_affine

np.set_printoptions(precision=4, suppress=True)

# Two independent position estimates of the same point.
coarse = Gaussian(np.array([2.0, 0.0]), np.diag([4.0, 4.0]))
fine = Gaussian(np.array([3.0, 1.0]), np.diag([1.0, 1.0]))

fused = fuse(coarse, fine)
print("fusing two estimates of one position")
print(f"  coarse mean {coarse.mean}, variance diag {np.diag(coarse.cov)}")
print(f"  fine   mean {fine.mean}, variance diag {np.diag(fine.cov)}")
print(f"  fused  mean {fused.mean}, variance diag {np.diag(fused.cov)}")
print("  the fused mean sits 4x closer to the fine estimate (precision ratio 4:1)")
print()

# Push a position-velocity belief through one constant-velocity step.
dt = 0.5
a = np.array([[1.0, dt], [0.0, 1.0]])
belief = Gaussian(np.array([0.0, 2.0]), np.diag([0.1, 0.4]))
pushed = push_affine(belief, a, np.zeros(2), noise_cov=0.01 * np.eye(2))
print("pushing [position, speed] through half a second of drift")
print(f"  before: mean {belief.mean}, cov\n{belief.cov}")
print(f"  after:  mean {pushed.mean}, cov\n{pushed.cov}")
print("  position gained variance from the uncertain speed (the off-diagonal).")
print()

# Moment matching: a 2-component mixture collapsed to one Gaussian.
left = Gaussian(np.array([-1.0]), np.array([[0.2]]))
right = Gaussian(np.array([2.0]), np.array([[0.5]]))
mixed = moment_match_mixture([0.7, 0.3], [left, right])
print("moment matching a 70/30 mixture of N(-1, 0.2) and N(2, 0.5)")
print(f"  matched mean {mixed.mean[0]:+.4f} (exact: 0.7*(-1) + 0.3*2 = -0.1)")
print(f"  matched var  {mixed.cov[0, 0]:.4f} (inner spread + spread of the means)")

common = moment_match_mixture(
    [0.7, 0.3],
    [Gaussian(np.array([1.0]), np.array([[0.2]])), Gaussian(np.array([1.0]), np.array([[0.5]]))],
)
print("with a common mean the matched variance is just the weighted average:")
print(f"  {common.cov[0, 0]:.4f} = 0.7*0.2 + 0.3*0.5")
print()
print("the planner uses exactly this: goal messages mix per-allocation")
print("observation covariances around one desired position.")
