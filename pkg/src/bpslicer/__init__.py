"""Originator usage control for collaborative business processes by slicing."""
from .bpel import Assembler, ProcessModel, coordinator, load_process, parse_process
from .onthefly import asset_only_negotiations, effective_trace, on_the_fly_slice
from .policy import PolicyBundle, aggregate_qops, aggregate_rops, load_bundle, negotiate
from .scg import CallKind, DependencyKind, ServiceCallTuple, build_graph, indirect_dependency, to_dot
from .slicer import (
    ContextDevelopmentTuple,
    SliceReport,
    asset_slice,
    classify_development,
    request_slice,
    slice_trace,
)
from .trace import load_trace, parse_trace

__version__ = "0.1.0"
