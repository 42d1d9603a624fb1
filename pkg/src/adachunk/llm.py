"""LLM clients and the delimiter-regex proposal step.

The HTTP client speaks a minimal JSON chat-completion contract:
POST {model, messages, temperature} -> {"text": ...}. A replay client
reads canned responses from a directory so corpus runs are deterministic
and testable offline.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import requests

REGEX_TAG_RE = re.compile(r"<regex>(.*?)</regex>", re.DOTALL)

_EXAMPLE_INPUT = """\
# Employee Handbook

## 1. Working hours

Standard working hours are 9 to 5.

## 2. Leave policy

Employees accrue 25 days of annual leave.
"""

_EXAMPLE_OUTPUT = r"\n## "

PROMPT_TEMPLATE = """\
<Task>
Your task is to split a long document into self-contained and logically complete chunks to be used in a Retrieval Augmented Generation (RAG) system. Given a document text, choose the best **unique** regular-expression to be used as a *delimiter* to split it into small chunks using the Python `re` engine and the `re.split` function.
</Task>

<Output requirements>
You **must** return only the answer in this format:
    <regex>regex pattern here</regex>
</Output requirements>

<Splitting guidelines>
    - The regex pattern **must** be valid.
    - The chunks should be self-contained, logically complete and not too large.
    - Do not split paragraphs.
    - Do not split tables, marked between <Table> </Table> tags.
    - Do not split figures, marked between <Figure> </Figure> tags.
    - Do not split lists of short elements.
    - Do not split titles from the text that follows them.
    - Do not split footnotes from their parent text.
</Splitting guidelines>

<Splitting example>
    <Example of input text>
{example_input}
    </Example of input text>

    <Expected answer>
        <regex>{example_output}</regex>
    </Expected answer>
</Splitting example>

Now, please apply this method to the following text between <Input> and </Input> markers:
<Input>{document_sample}</Input>
"""


class LLMTransportError(RuntimeError):
    """Transport-level failure talking to the LLM endpoint; retriable."""


class LLMClient(Protocol):
    def complete(self, messages: list[dict], *, temperature: float = 0.0, tag: str = "") -> str: ...


class HttpLLMClient:
    """Minimal chat-completion client with one retry on transport errors."""

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str | None = None,
        timeout_s: float = 120.0,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout_s = timeout_s
        self._session = session or requests.Session()

    def complete(self, messages: list[dict], *, temperature: float = 0.0, tag: str = "") -> str:
        payload = {"model": self.model, "messages": messages, "temperature": temperature}
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_exc: Exception | None = None
        for _ in range(2):
            try:
                resp = self._session.post(
                    self.base_url, json=payload, headers=headers, timeout=self.timeout_s
                )
                resp.raise_for_status()
                return resp.json()["text"]
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_exc = exc
        raise LLMTransportError(f"LLM request failed after retry: {last_exc}") from last_exc


class ReplayLLMClient:
    """Reads canned responses from ``<dir>/<tag>.txt``, falling back to
    ``<dir>/default.txt``."""

    def __init__(self, replay_dir: str | Path):
        self.replay_dir = Path(replay_dir)

    def complete(self, messages: list[dict], *, temperature: float = 0.0, tag: str = "") -> str:
        candidates = []
        if tag:
            candidates.append(self.replay_dir / f"{tag}.txt")
        candidates.append(self.replay_dir / "default.txt")
        for path in candidates:
            if path.exists():
                return path.read_text(encoding="utf-8")
        raise LLMTransportError(f"no replay transcript for tag {tag!r} in {self.replay_dir}")


@dataclass(frozen=True)
class RegexProposal:
    pattern: str
    raw_llm_output: str
    valid: bool


def _prefix_by_tokens(text: str, budget: int, counter) -> str:
    """Largest prefix of ``text`` holding at most ``budget`` tokens."""
    if counter.count(text) <= budget:
        return text
    lo, hi = 0, len(text)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if counter.count(text[:mid]) <= budget:
            lo = mid
        else:
            hi = mid - 1
    return text[:lo]


def build_regex_prompt(sample_text: str) -> str:
    return PROMPT_TEMPLATE.format(
        example_input=_EXAMPLE_INPUT,
        example_output=_EXAMPLE_OUTPUT,
        document_sample=sample_text,
    )


def propose_regex(llm: LLMClient, doc, cfg) -> RegexProposal:
    """Prompt the LLM with the document's leading sample and extract the
    pattern between <regex> tags. Missing tags or a non-compiling pattern
    yield ``valid=False`` rather than an exception."""
    sample = _prefix_by_tokens(doc.text, cfg.sample_budget, cfg.counter)
    prompt = build_regex_prompt(sample)
    raw = llm.complete([{"role": "user", "content": prompt}], tag=doc.id)
    m = REGEX_TAG_RE.search(raw)
    if not m:
        return RegexProposal(pattern="", raw_llm_output=raw, valid=False)
    pattern = m.group(1)
    try:
        re.compile(pattern, re.MULTILINE)
    except re.error:
        return RegexProposal(pattern=pattern, raw_llm_output=raw, valid=False)
    return RegexProposal(pattern=pattern, raw_llm_output=raw, valid=True)
