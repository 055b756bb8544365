"""Bit-accounting link between a worker and the server."""

from dataclasses import dataclass, field

from .errors import BudgetExceeded


@dataclass
class LedgerEntry:
    iteration: int
    bits: int
    payload: bytes = None


@dataclass
class BitChannel:
    """Per-iteration hard budget.

    ``send`` records what crossed the link and raises
    :class:`BudgetExceeded` (carrying the ledger so far) the moment a single
    message exceeds ``budget_per_iteration`` bits.
    """

    budget_per_iteration: int
    keep_payloads: bool = False
    ledger: list = field(default_factory=list)

    def send(self, iteration, bits, payload=None):
        bits = int(bits)
        entry = LedgerEntry(int(iteration), bits, payload if self.keep_payloads else None)
        self.ledger.append(entry)
        if bits > self.budget_per_iteration:
            raise BudgetExceeded(
                f"iteration {iteration}: {bits} bits exceeds the budget of "
                f"{self.budget_per_iteration}",
                ledger=self.dump(),
            )
        return entry

    def dump(self):
        return [(e.iteration, e.payload, e.bits) for e in self.ledger]

    @property
    def total_bits(self):
        return sum(e.bits for e in self.ledger)

    @property
    def bits_per_iteration(self):
        return [e.bits for e in self.ledger]
