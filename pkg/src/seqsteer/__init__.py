"""Exact simulation of steering and Bell-CHSH sharing under two-sided sequential weak measurements."""

__version__ = "0.1.0"

from .engine import (  # noqa: E402
    JointDistribution,
    Observer,
    ObserverChain,
    chsh_chain,
    chsh_value,
    correlation_observable,
    joint_distribution,
    pair_correlation,
    post_first_round_state,
    singlet,
    steering_chain,
    steering_value,
)
from .nonlocality import (  # noqa: E402
    NonlocalityResult,
    analytic_chsh_chain,
    analytic_chsh_two_sided,
    analytic_steering_first_pair,
    analytic_steering_second_pair,
    chsh_quantity,
    classical_bound,
    double_violation_window,
    steering_quantity,
)
from .settings import SettingFamily, chsh_settings, family_dodecahedron, family_icosahedron, family_xyz  # noqa: E402
