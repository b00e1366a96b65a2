from __future__ import annotations

import re
from dataclasses import dataclass

from fsmforge.errors import FsmError

IO_HEADING = "## Inputs and Outputs"
REQ_HEADING = "## Requirements"


class SpecFormatError(FsmError):
    pass


@dataclass(frozen=True)
class SpecDocument:
    """Natural-language specification: an I/O section and requirement paragraphs."""

    io_section: str
    requirements: tuple[str, ...]

    @property
    def word_count(self) -> int:
        return len(self.io_section.split()) + sum(len(r.split()) for r in self.requirements)

    def missing_signals(self, names) -> list[str]:
        """Declared names that do not appear verbatim in the I/O section."""
        return [n for n in names if not re.search(rf"(?<![A-Za-z0-9_]){re.escape(n)}(?![A-Za-z0-9_])", self.io_section)]

    def to_markdown(self) -> str:
        parts = [IO_HEADING, "", self.io_section.strip(), "", REQ_HEADING, ""]
        for r in self.requirements:
            parts += [r.strip(), ""]
        return "\n".join(parts)

    @classmethod
    def from_markdown(cls, text: str) -> SpecDocument:
        lines = text.splitlines()
        try:
            i_io = next(i for i, ln in enumerate(lines) if ln.strip().lower() == IO_HEADING.lower())
            i_req = next(i for i, ln in enumerate(lines) if ln.strip().lower() == REQ_HEADING.lower())
        except StopIteration:
            raise SpecFormatError(
                f"specification needs '{IO_HEADING}' and '{REQ_HEADING}' sections"
            ) from None
        if i_req < i_io:
            raise SpecFormatError("requirements section precedes the I/O section")
        io = "\n".join(lines[i_io + 1 : i_req]).strip()
        body = []
        for ln in lines[i_req + 1 :]:
            if ln.startswith("## "):
                break
            body.append(ln)
        paragraphs = [p.strip() for p in re.split(r"\n\s*\n", "\n".join(body)) if p.strip()]
        return cls(io, tuple(paragraphs))
