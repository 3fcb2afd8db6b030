from xontrib.tnvp.cmds.train import tnvp_train
from xontrib.tnvp.cmds.eval import tnvp_eval
from xontrib.tnvp.cmds.synthesize import tnvp_synthesize
from xontrib.tnvp.cmds.selfcheck import tnvp_selfcheck
from xontrib.tnvp.cmds.generate import tnvp_generate

__all__ = [
    "tnvp_eval",
    "tnvp_generate",
    "tnvp_selfcheck",
    "tnvp_synthesize",
    "tnvp_train",
]
