"""tigload: cognitive-load analytics for multi-turn tool-use tasks.

Quantifies task difficulty from the structure of a tool-interaction graph
(intrinsic load) and from how the task is presented (extraneous load),
fits each agent's load-success decay profile from trial outcomes, checks
the fit's calibration statistically, synthesizes tasks at targeted load
levels, and routes tasks to agents by predicted accuracy.
"""

from tigload.model import (
    CALL,
    DATA,
    EXECUTION,
    QUERY,
    DepEdge,
    EntityRef,
    GraphNode,
    Query,
    TaskInstance,
    ToolGraph,
    ToolParam,
    ToolSpec,
    Violation,
    function_nodes,
    linearize,
    make_task,
    validate_graph,
    validate_task,
)
from tigload.intrinsic import (
    EdgeLoad,
    IntrinsicParams,
    IntrinsicReport,
    attentional_distance,
    edge_weight,
    interference,
    intrinsic_load,
)
from tigload.extraneous import (
    ExtraneousReport,
    QueryLoad,
    ScorerConfig,
    extraneous_load,
    score_query,
)
from tigload.total import (
    Bucketing,
    OmegaCalibration,
    TotalLoadRecord,
    accuracy_drop,
    calibrate_omega,
    tercile_buckets,
    total_load,
)
from tigload.fitting import (
    CalibrationBin,
    CognitiveProfile,
    FitOptions,
    HLResult,
    TrialRecord,
    calibration_bins,
    chi2_survival,
    fit_profile,
    hosmer_lemeshow,
    predict_accuracy,
)
from tigload.simulate import (
    SimAgent,
    SimOutcome,
    closed_form_success,
    generate_decay_trials,
    node_success_prob,
    simulate_success_count,
    simulate_task,
    simulate_trials,
    verify_additivity,
)
from tigload.taskgen import GenSpec, generate_graph, insert_edges, sweep
from tigload.router import RoutingDecision, RoutingPolicy, route

__version__ = "0.1.0"
