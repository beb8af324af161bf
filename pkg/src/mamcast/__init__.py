"""Movable-antenna multicast beamforming: channels, SCA/AO, two-user closed form, LoS branch-and-bound."""
from mamcast.channel import (
    PathComponent,
    PlacementSet,
    PositionGrid,
    ScenarioRng,
    UserChannelModel,
    channel_gain,
    channel_vector,
    sample_scenario,
    steering_vector,
)
from mamcast.convex_core import (
    Beamformer,
    min_snr,
    multicast_rate,
    sca_beamform,
    sca_beamform_subspace,
    solve_sca_subproblem,
)
from mamcast.los_bab import bab_search, build_coupling, exhaustive_search, los_rate
from mamcast.placement import ao_joint, best_single_position, optimize_positions
from mamcast.two_user import (
    greedy_placement,
    optimal_beamformer_two_user,
    two_user_geometry,
    two_user_rate,
)

__version__ = "0.1.0"
