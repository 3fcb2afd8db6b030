"""
Temporal non-volume-preserving flows for `xonsh` and the command line.

A model pairs two exactly invertible flows, one for the previous stage and
one for the next, with a linear-Gaussian transition between their latent
spaces. Log-likelihoods are exact, sampling is a single inverse pass, and
every gradient is hand-derived and checked against finite differences.

See https://xonsh.org/ for more information about `xonsh`.
"""

from xontrib.tnvp.types import (
    TnvpException,
    TnvpError,
    TnvpValueError,
    ShapeMismatchError,
    ConfigError,
    ArgumentError,
    NumericalError,
    NonFiniteError,
    CouplingOverflowError,
    TnvpIOError,
    DatasetFormatError,
    EmptyDatasetError,
    CheckpointError,
    BadMagicError,
    UnsupportedVersionError,
    TruncatedCheckpointError,
)
from xontrib.tnvp.utils import print_if
from xontrib.tnvp.params import ParameterStore, GradientRecord
from xontrib.tnvp.diff import (
    Differentiable,
    eval_with_gradients,
    finite_diff_gradient,
    numerical_jacobian,
)
from xontrib.tnvp.masks import BinaryMask
from xontrib.tnvp.resnet import ResidualNet, BoundedScale
from xontrib.tnvp.coupling import MappingUnit
from xontrib.tnvp.flow import FlowStack, make_default_stack
from xontrib.tnvp.transition import TemporalTransition
from xontrib.tnvp.model import (
    ModelSpec,
    PairBatch,
    TNVPModel,
    TemporalObjective,
    make_model,
    synthesize_chain,
)
from xontrib.tnvp.training import (
    TrainConfig,
    TrainReport,
    EvalMetrics,
    run_schedule,
    train_per_stage,
    evaluate,
)
from xontrib.tnvp.datasets import (
    StageSequenceDataset,
    generate_drift_dataset,
    load_dataset,
    save_dataset,
)
from xontrib.tnvp.checkpoint import load_checkpoint, save_checkpoint
from xontrib.tnvp.config import RunConfig
from xontrib.tnvp.table import TableView, Column
from xontrib.tnvp.invoker import Invoker, CommandInvoker, PrefixCommandInvoker
from xontrib.tnvp.decorators import command, prefix_command
from xontrib.tnvp.checks import run_checks
from xontrib.tnvp.main import (
    _load_xontrib_,
    _unload_xontrib_,
)
from xontrib.tnvp.cmds import (
    tnvp_train, tnvp_eval, tnvp_synthesize, tnvp_selfcheck, tnvp_generate,
)

__all__ = (  # noqa: RUF022
    "_load_xontrib_",
    "_unload_xontrib_",
    "tnvp_train",
    "tnvp_eval",
    "tnvp_synthesize",
    "tnvp_selfcheck",
    "tnvp_generate",
    "TnvpException",
    "TnvpError",
    "TnvpValueError",
    "ShapeMismatchError",
    "ConfigError",
    "ArgumentError",
    "NumericalError",
    "NonFiniteError",
    "CouplingOverflowError",
    "TnvpIOError",
    "DatasetFormatError",
    "EmptyDatasetError",
    "CheckpointError",
    "BadMagicError",
    "UnsupportedVersionError",
    "TruncatedCheckpointError",
    "print_if",
    "ParameterStore",
    "GradientRecord",
    "Differentiable",
    "eval_with_gradients",
    "finite_diff_gradient",
    "numerical_jacobian",
    "BinaryMask",
    "ResidualNet",
    "BoundedScale",
    "MappingUnit",
    "FlowStack",
    "make_default_stack",
    "TemporalTransition",
    "ModelSpec",
    "PairBatch",
    "TNVPModel",
    "TemporalObjective",
    "make_model",
    "synthesize_chain",
    "TrainConfig",
    "TrainReport",
    "EvalMetrics",
    "run_schedule",
    "train_per_stage",
    "evaluate",
    "StageSequenceDataset",
    "generate_drift_dataset",
    "load_dataset",
    "save_dataset",
    "load_checkpoint",
    "save_checkpoint",
    "RunConfig",
    "TableView",
    "Column",
    "Invoker",
    "CommandInvoker",
    "PrefixCommandInvoker",
    "command",
    "prefix_command",
    "run_checks",
)
