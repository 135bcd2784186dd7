"""The sequential hidden-partition game: instances, protocols, forests, TVD."""

from .forest import ContradictionError, Forest, LabeledEdge, forest_potential
from .instance import Case, DihpInstance, dump_instance, gen_instance, load_instance
from .protocols import (
    AdaptiveSolver,
    BudgetViolation,
    ComponentGrowingDistinguisher,
    ForwardFirstProtocol,
    LabelBlindProtocol,
    Message,
    Protocol,
    RandomGuessProtocol,
    Transcript,
    TrivialProtocol,
    adaptive_solver,
    component_growing_distinguisher,
    dump_transcript,
    load_transcript,
    make_protocol,
    run_protocol,
)
