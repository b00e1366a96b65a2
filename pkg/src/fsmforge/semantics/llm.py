"""Chat-completions backed provider.

Requests follow the OpenAI-compatible ``/chat/completions`` JSON protocol.
The transport is injectable so tests can stub the network.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
from dataclasses import dataclass
from importlib import resources
from typing import Callable

from fsmforge.core import AbstractGraph, Interface, SemanticFsm, StateMapping
from fsmforge.errors import FsmError
from fsmforge.semantics.spec_doc import SpecDocument, SpecFormatError
from fsmforge.yaml_io import FsmYamlError, parse_fsm_yaml, serialize_fsm_yaml

log = logging.getLogger(__name__)


class ProviderError(FsmError):
    code = "PROVIDER"


class NetworkError(ProviderError):
    code = "NETWORK"


class AuthError(ProviderError):
    code = "AUTH"


class UnparseableResponseError(ProviderError):
    code = "UNPARSEABLE"


class BudgetExhaustedError(ProviderError):
    code = "BUDGET"


# (url, headers, payload, timeout) -> (status, decoded json body)
Transport = Callable[[str, dict, dict, float], "tuple[int, dict]"]


def httpx_transport(url: str, headers: dict, payload: dict, timeout: float) -> tuple[int, dict]:
    import httpx

    try:
        resp = httpx.post(url, headers=headers, json=payload, timeout=timeout)
    except httpx.HTTPError as e:
        raise NetworkError(f"request to {url} failed: {e}") from e
    try:
        body = resp.json()
    except ValueError:
        body = {"raw": resp.text}
    return resp.status_code, body


@dataclass(frozen=True)
class LlmConfig:
    endpoint: str
    model: str
    token_env: str = "OPENAI_API_KEY"
    retries: int = 3
    max_in_flight: int = 4
    timeout: float = 300.0
    max_tokens: int | None = None


def load_prompt(name: str) -> str:
    return resources.files("fsmforge.semantics").joinpath("prompts", f"{name}.txt").read_text()


def fill(template: str, **slots: str) -> str:
    out = template
    for key, value in slots.items():
        out = out.replace("{" + key + "}", value)
    return out


_FENCE_RE = re.compile(r"```([A-Za-z0-9_-]*)[ \t]*\n(.*?)```", re.S)


def fenced_blocks(text: str) -> list[tuple[str, str]]:
    return [(m.group(1).lower(), m.group(2)) for m in _FENCE_RE.finditer(text)]


def extract_yaml(text: str) -> str:
    for lang, body in fenced_blocks(text):
        if lang in ("yaml", "yml", ""):
            return body
    raise UnparseableResponseError("response has no fenced YAML block")


class LlmProvider:
    name = "llm"

    def __init__(self, config: LlmConfig, transport: Transport | None = None, prompts: dict | None = None):
        self.config = config
        self.transport = transport or httpx_transport
        self._gate = threading.BoundedSemaphore(max(1, config.max_in_flight))
        self.prompts = {
            key: (prompts or {}).get(key) or load_prompt(key)
            for key in ("assign_semantics", "spec_from_fsm", "fsm_from_spec")
        }

    def _complete(self, kind: str, prompt: str, provenance: list | None) -> str:
        token = os.environ.get(self.config.token_env)
        if not token:
            raise AuthError(f"environment variable {self.config.token_env} is not set")
        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
        }
        if self.config.max_tokens:
            payload["max_tokens"] = self.config.max_tokens
        headers = {"Authorization": f"Bearer {token}", "Content-Type": "application/json"}
        url = self.config.endpoint.rstrip("/")
        if not url.endswith("/chat/completions"):
            url += "/chat/completions"
        with self._gate:
            status, body = self.transport(url, headers, payload, self.config.timeout)
        if provenance is not None:
            provenance.append({"kind": kind, "request": payload, "status": status, "response": body})
        if status in (401, 403):
            raise AuthError(f"endpoint rejected credentials (HTTP {status})")
        if status != 200:
            raise NetworkError(f"HTTP {status} from {url}")
        try:
            choice = body["choices"][0]
            content = choice["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise UnparseableResponseError("response lacks choices[0].message.content") from None
        if choice.get("finish_reason") == "length":
            raise BudgetExhaustedError(f"{kind}: output token budget exhausted")
        return content or ""

    def _with_retries(self, kind: str, prompt: str, parse, provenance):
        last = None
        for attempt in range(self.config.retries + 1):
            text = self._complete(kind, prompt, provenance)
            try:
                return parse(text)
            except (UnparseableResponseError, FsmYamlError, SpecFormatError, ValueError, KeyError) as e:
                last = e
                log.warning("%s: unparseable response (attempt %d): %s", kind, attempt + 1, e)
        raise UnparseableResponseError(
            f"{kind}: no parseable response after {self.config.retries + 1} attempts: {last}"
        )

    def assign_semantics(self, graph: AbstractGraph, seed: int, provenance=None):
        phases = "\n".join(
            f"phase {i}: entry={p.entry} exit={p.exit} members={list(p.members)}"
            for i, p in enumerate(graph.phases)
        )
        edges = "\n".join(f"{u} -> {v}" for u, v in sorted(graph.edges))
        prompt = fill(
            self.prompts["assign_semantics"],
            PHASES=f"reset state: {graph.reset_state}\n{phases}",
            EDGE_LIST=edges,
        )

        def parse(text):
            fsm = parse_fsm_yaml(extract_yaml(text))
            mapping_block = next((b for lang, b in fenced_blocks(text) if lang == "json"), None)
            if mapping_block is None:
                raise UnparseableResponseError("response has no fenced JSON state mapping")
            mapping = StateMapping.from_json_obj(json.loads(mapping_block))
            story = _FENCE_RE.sub("", text).strip()
            return fsm, mapping, story

        return self._with_retries("assign_semantics", prompt, parse, provenance)

    def spec_from_fsm(self, fsm: SemanticFsm, provenance=None) -> SpecDocument:
        prompt = fill(self.prompts["spec_from_fsm"], YAML=serialize_fsm_yaml(fsm))
        names = [*fsm.inputs, *fsm.outputs]

        def parse(text):
            doc = SpecDocument.from_markdown(text)
            missing = doc.missing_signals(names)
            if missing:
                raise UnparseableResponseError(f"I/O section omits {missing}")
            if not doc.requirements:
                raise UnparseableResponseError("empty requirements section")
            return doc

        return self._with_retries("spec_from_fsm", prompt, parse, provenance)

    def fsm_from_spec(self, spec: SpecDocument, mapping: StateMapping, iface: Interface, provenance=None):
        sig = "\n".join(
            [f"input {i} (1 bit)" for i in iface.inputs]
            + [f"output {o} ({w} bits)" for o, w in iface.outputs]
        )
        names = "\n".join(sorted(mapping.pairs.values()))
        prompt = fill(
            self.prompts["fsm_from_spec"],
            SPEC=spec.to_markdown(),
            STATE_MAPPING=names,
            IO_SIGNATURE=sig,
        )
        return self._with_retries(
            "fsm_from_spec", prompt, lambda text: parse_fsm_yaml(extract_yaml(text)), provenance
        )


def llm_provider(config: LlmConfig, transport: Transport | None = None) -> LlmProvider:
    return LlmProvider(config, transport)

