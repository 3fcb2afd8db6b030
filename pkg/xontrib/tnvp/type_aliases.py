'''
Type aliases for tnvp, defined with `TypeAlias` from `typing` so they work
on python 3.10.
'''

from typing import Literal, TypeAlias

import numpy as np
import numpy.typing as npt

Tensor: TypeAlias = npt.NDArray[np.float64]
'''
A dense float64 array. The universal value carrier: observations, latents,
parameters and gradients are all `Tensor`s.
'''

Shape: TypeAlias = tuple[int, ...]

OpKind: TypeAlias = Literal['add', 'sub', 'mul', 'exp', 'neg']
'''
The elementwise operations.
'''

MaskStyle: TypeAlias = Literal['half', 'even-odd']
'''
How the first mask of a stack is laid out.

- `half`: the first ⌊D/2⌋ coordinates pass through.
- `even-odd`: coordinates 0, 2, 4, ... pass through.
'''

TransitionStructure: TypeAlias = Literal['full', 'diagonal']
'''
The structure of the latent transition weights.
'''

PhaseFlag: TypeAlias = Literal['pretrain_only', 'joint_only', 'both']
'''
Which phases of the two-step training schedule to run.
'''

DatasetKind: TypeAlias = Literal[
    'gaussian-drift',
    'rotating-moons',
    'mixture-morph',
    'linear-transition',
]
'''
The synthetic stage-sequence generators.
'''

NoiseSpec: TypeAlias = Literal['zero']|int
'''
Synthesis noise: `'zero'` for the mode, or an integer seed for a draw.
'''

# Json

JsonAtomic: TypeAlias = None|str|int|float|bool
"JSON Atomic Datatypes"

JsonArray: TypeAlias = list['JsonData']
"JSON Array"

JsonObject: TypeAlias = dict[str, 'JsonData']
"JSON Object"

JsonData: TypeAlias = JsonAtomic|JsonArray|JsonObject
"JSON Data"

# Invoker

KeywordArity: TypeAlias = Literal['+', '*', 0, 1, True, False]
'''
The number of arguments a keyword takes.

- `True`: Zero argument boolean flag, `True` if supplied
- `False`: Zero argument boolean flag, `False` if supplied
- `0`: Zero argument keyword, the flag name if supplied
- `1`: One argument follows the keyword.
- `+`: One or more arguments follow the keyword.
- `*`: Zero or more arguments follow the keyword.
'''

KeywordSpec: TypeAlias = tuple[KeywordArity, str]
'''
A keyword specification for a command: the arity, and the keyword argument
of the command function that receives the value.
'''

KeywordSpecs: TypeAlias = dict[str, KeywordSpec]
'''
Keyword specifications for a command, by flag name (without dashes).
'''

KeywordInputSpec: TypeAlias = str|KeywordArity|KeywordSpec
'''
Input for a keyword specification. If only a `KeywordArity` is supplied,
the keyword is assumed to be the same as the flag name. Otherwise, if
a string is supplied, the keyword is assumed to be the string and the
`KeywordArity` is assumed to be `True`.
'''

KeywordInputSpecs: TypeAlias = dict[str, KeywordInputSpec]
'''
Input to specify keyword specifications for a command. This is converted
to `KeywordSpecs` for use in the invoker.
'''
