from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class Verdict:
    """Outcome of one bound check.

    ``worst_margin`` is the smallest (bound - observed) found, in the units of
    the bound; negative means violated. ``worst_time`` is where it occurred.
    """

    name: str
    passed: bool
    worst_margin: float = 0.0
    worst_time: float = 0.0
    details: dict[str, Any] = field(default_factory=dict)

    def as_dict(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "worst_margin": float(self.worst_margin),
            "worst_time": float(self.worst_time),
            "details": {k: _plain(v) for k, v in self.details.items()},
        }


def _plain(value):
    if hasattr(value, "tolist"):
        return value.tolist()
    return value
