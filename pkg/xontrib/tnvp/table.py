'''
Plain-text tables for command output.
'''

from dataclasses import dataclass, field
from typing import Any, Callable, Optional, TypeAlias
from collections.abc import Iterable, Mapping

import re

from xontrib.tnvp.types import TnvpValueError

_ANSI = re.compile(r'\x1b\[[0-9;]*m')


def visible_len(s: str) -> int:
    '''
    Length of `s` as displayed, ignoring ANSI colour codes.
    '''
    return len(_ANSI.sub('', s))


@dataclass
class Column:
    '''
    A column in a table.
    '''
    name: str
    key: Optional[str] = None
    '''
    The row key to display; defaults to `name`.
    '''
    heading: Optional[str] = None
    formatter: Optional[Callable[[Any], str]] = field(default=None, repr=False)
    align: str = '<'
    missing: str = ''
    ignore: bool = False
    '''
    Whether to ignore the column. Ignored columns are not collected or displayed.
    '''
    elements: list[Any] = field(default_factory=list, repr=False)
    _formatted: list[str] = field(default_factory=list, repr=False)

    @property
    def formatted(self) -> list[str]:
        '''
        Get the formatted elements.
        '''
        if not self._formatted:
            formatter = self.formatter or str
            self._formatted = [
                self.missing if e is None else formatter(e)
                for e in self.elements
            ]
        return self._formatted

    @property
    def title(self) -> str:
        return self.heading if self.heading is not None else self.name

    @property
    def width(self) -> int:
        return max([visible_len(self.title)] + [visible_len(e) for e in self.formatted])

    def cell(self, i: int) -> str:
        text = self.formatted[i]
        pad = ' ' * (self.width - visible_len(text))
        return text + pad if self.align == '<' else pad + text

    def reset(self):
        '''
        Reset the column.
        '''
        self.elements.clear()
        self._formatted.clear()


ColumnDict: TypeAlias = dict[str, Column]


class TableView:
    '''
    A table of rows, each a mapping from column key to value.

    Columns are sized to their widest cell (or heading) and separated by
    `cell_separator`.
    '''
    __columns: ColumnDict
    __rows: list[Mapping[str, Any]]

    def __init__(self, rows: Iterable[Mapping[str, Any]] = (),
                 columns: Optional[Iterable[Column]] = None,
                 cell_separator: str = '  ',
                 show_headings: bool = True):
        self.__rows = list(rows)
        if columns is None:
            keys: dict[str, None] = {}
            for row in self.__rows:
                keys.update(dict.fromkeys(row))
            columns = [Column(k) for k in keys]
        self.__columns = {}
        for c in columns:
            if c.name in self.__columns:
                raise TnvpValueError(f'Duplicate column: {c.name}')
            self.__columns[c.name] = c
        self.cell_separator = cell_separator
        self.show_headings = show_headings

    @property
    def columns(self) -> ColumnDict:
        return self.__columns

    def add_row(self, row: Mapping[str, Any]):
        self.__rows.append(row)

    def _collect(self) -> list[Column]:
        active = [c for c in self.__columns.values() if not c.ignore]
        for c in active:
            c.reset()
            key = c.key or c.name
            c.elements.extend(row.get(key) for row in self.__rows)
        return active

    def lines(self) -> list[str]:
        active = self._collect()
        out = []
        if self.show_headings:
            out.append(self.cell_separator.join(
                c.title.ljust(c.width) if c.align == '<' else c.title.rjust(c.width)
                for c in active
            ).rstrip())
        for i in range(len(self.__rows)):
            out.append(self.cell_separator.join(c.cell(i) for c in active).rstrip())
        return out

    def __str__(self):
        return '\n'.join(self.lines())

    def __len__(self) -> int:
        return len(self.__rows)
