"""cubemap: isometric bit labels for partial-cube topologies and
multi-hierarchical enhancement of task-to-processor mappings."""

from .errors import CapacityError, CubemapError, IntegrityError
from .graph import (
    DisconnectedGraphError,
    Graph,
    GraphFormatError,
    Partition,
    TopologySpec,
    bfs_all_pairs,
    contract_blocks,
    generate_topology,
    parse_metis,
    parse_topology_spec,
    serialize_metis,
)
from .labels import (
    LabelLayout,
    LabelState,
    decode_mapping,
    dim_ga,
    extend_labels,
    permute_positions,
    unpermute,
)
from .mapping import greedy_allc, greedy_min, grow_partition, identity_mapping
from .objective import (
    ObjectiveValue,
    balance_check,
    coco,
    coco_from_distances,
    coco_plus,
    div,
    edge_cut,
    evaluate,
    swap_gain,
)
from .pcube import (
    NotPartialCubeError,
    PcubeLabeling,
    RejectReason,
    label_partial_cube,
    theta_class,
    verify_isometry,
)
from .timer import HierarchyLevel, TimerConfig, assemble, contract, run_hierarchy, run_timer, swap_phase

__version__ = "0.1.0"
