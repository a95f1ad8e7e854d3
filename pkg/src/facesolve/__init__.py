"""facesolve: blendshape weight solving from sparse 3D markers.

Hybrid pipeline: region-based residual regressors (jaw-conditioned where it
matters) provide the raw solve; anchor-pose alignment absorbs day-to-day
shape drift; projected L-BFGS fine-tuning polishes artist-selected channels.
"""

from .errors import FaceSolveError, ParseError, ValidationError
from .rig import (
    Channel,
    Corrective,
    Region,
    Rig,
    clamp_weights,
    evaluate,
    evaluate_jacobian,
    load_rig,
    save_rig,
    validate_rig,
)
from .tracks import AnimationClip, MarkerTrack, WeightTrack
from .synthdata import (
    NoiseProfile,
    TrainingSet,
    augment,
    bake_markers,
    generate_one_hot_facs,
    generate_rom,
    median_heuristic_gamma,
    select_salient,
    simulate_shot,
)
from .features import delta_pose, extract, feature_dim, pairwise_direction, pairwise_distance
from .neural import (
    InputStandardizer,
    Network,
    NetworkArch,
    TrainConfig,
    forward,
    init_network,
    load_network,
    loss_and_grad,
    save_network,
)
from .optimize import (
    FinetuneSpec,
    MatchProblem,
    brute_force_match,
    finetune,
    finetune_detailed,
    objective,
    qp_match,
)
from .pipeline import (
    AnchorPose,
    RegionModel,
    SolveReport,
    SolverBundle,
    align_with_anchor,
    rmse,
    run_session,
    solve_jaw,
    solve_raw,
)
from .training import DEFAULT_REGION_SPECS, RegionSpec, train_bundle, train_region
from .demo import demo_noise_stds, demo_rig, demo_rig_document

__version__ = "0.1.0"
