"""Semantic enrichment of abstract graphs and the spec round trip.

A provider turns a topology into a named machine, a machine into a prose
specification, and a specification back into a machine. ``MockProvider`` is
deterministic and exact; ``LlmProvider`` talks to a chat-completions endpoint.
"""

from __future__ import annotations

from typing import Protocol

from fsmforge.core import AbstractGraph, Interface, SemanticFsm, StateMapping
from fsmforge.semantics.spec_doc import SpecDocument, SpecFormatError
from fsmforge.semantics.mock import (
    MockProvider,
    ReconstructionError,
    mock_assign_semantics,
    mock_fsm_from_spec,
    mock_spec_from_fsm,
)
from fsmforge.semantics.llm import (
    AuthError,
    BudgetExhaustedError,
    LlmConfig,
    LlmProvider,
    NetworkError,
    ProviderError,
    UnparseableResponseError,
    llm_provider,
)


class SemanticsProvider(Protocol):
    name: str

    def assign_semantics(
        self, graph: AbstractGraph, seed: int, provenance: list | None = None
    ) -> tuple[SemanticFsm, StateMapping, str]: ...

    def spec_from_fsm(self, fsm: SemanticFsm, provenance: list | None = None) -> SpecDocument: ...

    def fsm_from_spec(
        self,
        spec: SpecDocument,
        mapping: StateMapping,
        iface: Interface,
        provenance: list | None = None,
    ) -> SemanticFsm: ...


__all__ = [
    "AuthError",
    "BudgetExhaustedError",
    "LlmConfig",
    "LlmProvider",
    "MockProvider",
    "NetworkError",
    "ProviderError",
    "ReconstructionError",
    "SemanticsProvider",
    "SpecDocument",
    "SpecFormatError",
    "UnparseableResponseError",
    "llm_provider",
    "mock_assign_semantics",
    "mock_fsm_from_spec",
    "mock_spec_from_fsm",
]
