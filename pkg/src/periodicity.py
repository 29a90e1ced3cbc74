"""
Eventual Periodicity

Detects (preperiod, period) pairs of finite symbol sequences. Results only
describe the examined window; they never prove periodicity of an infinite
sequence.
"""

import logging
from dataclasses import dataclass, field
from string import ascii_uppercase
from typing import Any, Dict, Hashable, Iterator, List, Optional, Sequence, Tuple

from .errors import ParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PeriodicityReport:
    """Minimal preperiod for every period q that fits twice into the window.

    Every p >= preperiod with p + 2q <= verified_window is also valid for q;
    `pairs` enumerates them.
    """

    verified_window: int
    candidates: Tuple[Tuple[int, int], ...]
    legend: Dict[str, Any] = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return bool(self.candidates)

    @property
    def preperiod(self) -> Optional[int]:
        return self.candidates[0][0] if self.candidates else None

    @property
    def period(self) -> Optional[int]:
        return self.candidates[0][1] if self.candidates else None

    def pairs(self) -> Iterator[Tuple[int, int]]:
        """All (p, q) with p + 2q <= window, minimal q first."""
        for p_min, q in self.candidates:
            for p in range(p_min, self.verified_window - 2 * q + 1):
                yield p, q

    def to_dict(self) -> Dict[str, Any]:
        return {
            "preperiod": self.preperiod,
            "period": self.period,
            "verified_window": self.verified_window,
            "window_relative": True,
            "candidates": [list(c) for c in self.candidates],
            "legend": self.legend,
        }


def minimal_preperiod(symbols: Sequence[Hashable], q: int) -> int:
    """Smallest p with s[i + q] == s[i] for all i >= p."""
    for i in range(len(symbols) - q - 1, -1, -1):
        if symbols[i] != symbols[i + q]:
            return i + 1
    return 0


def detect_eventual_periodicity(
    symbols: Sequence[Hashable], legend: Optional[Dict[str, Any]] = None
) -> PeriodicityReport:
    """
    Find every period q with a preperiod p such that p + 2q <= len(symbols).

    Args:
        symbols: finite sequence over a finite alphabet, length >= 2
        legend: optional description of the symbols, copied into the report

    Returns:
        PeriodicityReport, empty candidates if no pair fits
    """
    n = len(symbols)
    if n < 2:
        raise ParameterError(f"sequence must have length >= 2, got {n}")
    candidates: List[Tuple[int, int]] = []
    for q in range(1, n // 2 + 1):
        p = minimal_preperiod(symbols, q)
        if p + 2 * q <= n:
            candidates.append((p, q))
    if candidates:
        logger.debug(f"Window of {n} symbols: minimal (preperiod, period) = {candidates[0]}")
    else:
        logger.debug(f"Window of {n} symbols shows no eventual periodicity")
    return PeriodicityReport(n, tuple(candidates), dict(legend or {}))


def encode_symbols(sequence: Sequence[Hashable]) -> Tuple[str, Dict[str, Any]]:
    """Letters in order of first appearance plus the letter -> value legend."""
    letters: Dict[Hashable, str] = {}
    for item in sequence:
        if item not in letters:
            if len(letters) >= len(ascii_uppercase):
                raise ParameterError("more than 26 distinct symbols in the window")
            letters[item] = ascii_uppercase[len(letters)]
    word = "".join(letters[item] for item in sequence)
    legend = {letter: list(item) if isinstance(item, tuple) else item for item, letter in letters.items()}
    return word, legend
