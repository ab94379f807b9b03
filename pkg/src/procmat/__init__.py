"""Process-matrix toolkit: build, validate and falsify multi-party quantum processes."""

__version__ = "0.1.0"

from .tensor import (  # noqa: E402
    LabeledOperator,
    LabeledVector,
    SpaceLayout,
    choi_of_kraus,
    double_ket,
    partial_trace,
    permute_subsystems,
    tensor,
)
from .channels import (  # noqa: E402
    ChoiOperator,
    Instrument,
    cptp_affine_spanning_set,
    is_cptp,
    linear_combination_unitarity,
    random_cptp,
    random_unitary,
)
from .process import (  # noqa: E402
    Party,
    ProcessMatrix,
    ProcessVector,
    ValidityReport,
    can_signal,
    is_valid_process,
    is_valid_process_vector,
    markovian_unitary_process,
    probability,
    reduce_with_identity,
    superpose,
    switch3,
    switch4,
    trace_out_subsystem,
)
from .nogo import (  # noqa: E402
    NoGoContext,
    WitnessReport,
    find_violation,
    theorem_driver,
    verify_lemma_batch,
)
