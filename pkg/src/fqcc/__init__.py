"""fqcc: fermion-to-qubit compilation and resource-reduction toolkit."""

__version__ = "0.1.0"

from .paulis import PauliString, PauliSum  # noqa: F401
