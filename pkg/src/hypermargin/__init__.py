"""Provably convergent large-margin classification in the Lorentz model."""

from .cert import (AdvExample, Z0Interval, b_alpha, feasible_z0_interval,
                   find_adversarial, find_adversarial_batch, robust_scores,
                   solve_cert_at)
from .geometry import (ball_to_halfplane, ball_to_lorentz, cosh_angle,
                       halfplane_to_ball, hat, lift, lorentz_distance,
                       lorentz_to_ball, minkowski, model_map,
                       normalize_hypothesis)
from .loss import (HyperbolicHinge, HyperbolicLogistic, SmoothedSquare,
                   estimate_r_alpha, eval_loss, grad_loss, make_loss)
from .margin import (LabeledSet, MarginReport, boundary_distance,
                     dataset_margin, decide, signed_margin, verify_separator)
from .perceptron import (PerceptronResult, run_adversarial_perceptron,
                         run_euclidean_perceptron, run_hyperbolic_perceptron)
from .synth import (DistortionReport, PathologyWitness, TreeMetric,
                    build_erm_pathology, euclidean_stress_embed,
                    gd_lower_bound_witness, measure_distortion,
                    sample_separable, sarkar_embed, shannon_lower_bound)
from .train import (NumericalError, TrainConfig, TrainTrace, default_step_size,
                    estimate_sigma_max, run_adversarial_gd, run_plain_gd)

__version__ = "0.1.0"
