"""Query accounting shared by the simulators and the collision driver."""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass
class QueryLedger:
    """Monotone counters of oracle value-queries, split by phase.

    Attributes
    ----------
    setup_queries : int
        Queries spent loading the initial set ``S`` of each walk run.
    walk_queries : int
        Queries spent inside walk steps (one query and one erasing query each).
    classical_queries : int
        Queries spent by classical scans.
    grover_charged : int
        Queries charged for the emulated Grover tuple search.
    """

    setup_queries: int = 0
    walk_queries: int = 0
    classical_queries: int = 0
    grover_charged: int = 0

    @property
    def total(self) -> int:
        return (self.setup_queries + self.walk_queries
                + self.classical_queries + self.grover_charged)

    def _charge(self, field: str, amount: int) -> None:
        if amount < 0:
            raise ValueError("ledger counters are monotone; got negative charge")
        setattr(self, field, getattr(self, field) + int(amount))

    def charge_setup(self, amount: int) -> None:
        self._charge("setup_queries", amount)

    def charge_walk(self, amount: int) -> None:
        self._charge("walk_queries", amount)

    def charge_classical(self, amount: int) -> None:
        self._charge("classical_queries", amount)

    def charge_grover(self, amount: int) -> None:
        self._charge("grover_charged", amount)

    def absorb(self, other: "QueryLedger") -> None:
        """Add every counter of ``other`` into this ledger."""
        self.charge_setup(other.setup_queries)
        self.charge_walk(other.walk_queries)
        self.charge_classical(other.classical_queries)
        self.charge_grover(other.grover_charged)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["total"] = self.total
        return d
