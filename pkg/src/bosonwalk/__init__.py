"""Shared-coin many-boson discrete-time quantum walks on finite graphs."""

from .coin import CoinMatrix, coin_from_array, coin_matrix
from .evolution import (
    RunResult,
    ShiftKernel,
    StepReport,
    apply_conditional_shift,
    run,
)
from .graphs import (
    GraphFormatError,
    GraphSpec,
    GraphValidationError,
    build_named,
    load_graph,
    save_graph,
    validate_decomposition,
)
from .observables import (
    CountingStatistics,
    ObservableRecord,
    ObservableSchedule,
    RegimeChangeReport,
    config_probability,
    counting_statistics,
    detect_regime_change,
    g2,
    g2_matrix,
    occupancy_weight,
    phase_space,
    phase_space_table,
    vertex_density,
    vertex_moment,
)
from .statespace import (
    AmplitudeTable,
    ConfigurationBasis,
    config_rank,
    config_unrank,
    effective_dimension,
    normalize,
    read_snapshot,
    space_dimension,
    write_snapshot,
)

__version__ = "0.1.0"
