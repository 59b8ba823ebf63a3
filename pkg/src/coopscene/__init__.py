"""Cooperative-perception traffic scenes with natural-language spatial querying."""

from .backends import (
    BackendError,
    MockNoisyBackend,
    MockOracleBackend,
    MockScriptedBackend,
    RemoteBackend,
    backend_from_config,
)
from .bus import (
    CloudAggregator,
    FreshnessQueue,
    LinguisticScene,
    MessageBus,
    OiMessage,
    SceneConstructor,
    construct_scene,
    load_scenes,
    parse_scene,
    render_scene,
)
from .evaluation import (
    BackendUnreachable,
    GradeRecord,
    MetricsReport,
    compute_metrics,
    grade_numeric,
    run_eval,
)
from .perception import ObjectInfo, SensorSpec, perceive_av, perceive_rsu
from .pipeline import ChainPipeline, ChainResult, StageError, osp_answer
from .prompts import PromptSet
from .qagen import (
    QAPair,
    QuestionTemplate,
    TemplateSet,
    default_templates,
    generate_dataset,
    instantiate,
    load_dataset,
    load_templates,
    write_dataset,
)
from .relations import (
    AttributedGraph,
    EgoGraph,
    build_attributed_graph,
    build_graph,
    direction_angle,
    lane_relation,
    spatial_relation,
)
from .roadnet import Lane, LaneSection, NetworkError, Road, RoadNetwork, builtin_network, load_network, project
from .stack import ScenePipeline, run_scenes
from .toolbox import QueryParams, QueryResult, QueryTask, execute, select_objects
from .traffic import SimConfig, Snapshot, TrafficWorld, VehicleAgent

__version__ = "0.1.0"
