'''
The tnvp selfcheck command.
'''

from typing import IO

from xontrib.tnvp.checks import report, run_checks
from xontrib.tnvp.decorators import command, tnvp


@command(prefix=(tnvp, 'selfcheck'))
def tnvp_selfcheck(*, quick: bool = False, stdout: IO[str]) -> int:
    """
    Run the oracle suite; exit 0 iff every check passes.
    """
    return 0 if report(run_checks(quick), stdout) else 1
