"""Completion backends: remote text completion, digest-keyed replay, rule table."""
from __future__ import annotations

import json
import os
import socket
import tempfile
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from ..errors import BackendTimeout, BackendUnreachable, TranscriptMiss
from .instruction import split_block
from .prompt import Prompt
from .rules import rule_plan_text

BACKEND_URL_ENV = "GIRAF_BACKEND_URL"
DEFAULT_TIMEOUT = 30.0


class CompletionBackend(Protocol):
    def complete(self, prompt: Prompt) -> str: ...


def complete(backend: CompletionBackend, prompt: Prompt) -> str:
    """Raw completion text for ``prompt``; never post-processed."""
    if prompt.temperature != 0:
        raise ValueError("temperature must be 0")
    return backend.complete(prompt)


@dataclass(frozen=True)
class ReplayBackend:
    """Serve completions recorded under ``<store>/<sha256 of prompt text>``."""

    store: Path

    def __post_init__(self):
        object.__setattr__(self, "store", Path(self.store))

    def path_for(self, prompt: Prompt) -> Path:
        return self.store / prompt.digest

    def complete(self, prompt: Prompt) -> str:
        p = self.path_for(prompt)
        try:
            return p.read_bytes().decode("utf-8")
        except FileNotFoundError:
            raise TranscriptMiss(prompt.digest) from None

    def __contains__(self, prompt: Prompt) -> bool:
        return self.path_for(prompt).is_file()


def write_transcript(store, prompt: Prompt, text: str) -> Path:
    """Store ``text`` for ``prompt`` atomically; returns the file path."""
    store = Path(store)
    store.mkdir(parents=True, exist_ok=True)
    target = store / prompt.digest
    fd, tmp = tempfile.mkstemp(dir=store, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(text.encode("utf-8"))
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return target


@dataclass(frozen=True)
class RemoteBackend:
    """POST ``{"prompt", "temperature", "max_tokens", "stop"}``, expect ``{"text"}`` back."""

    url: str | None = None
    timeout: float = DEFAULT_TIMEOUT

    def resolved_url(self) -> str:
        url = self.url or os.environ.get(BACKEND_URL_ENV)
        if not url:
            raise BackendUnreachable(f"no backend URL: set {BACKEND_URL_ENV}")
        return url

    def complete(self, prompt: Prompt) -> str:
        url = self.resolved_url()
        body = json.dumps(prompt.request_body()).encode("utf-8")
        req = urllib.request.Request(url, data=body, headers={"Content-Type": "application/json"}, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = resp.read()
        except (socket.timeout, TimeoutError):
            raise BackendTimeout(f"no reply from {url} within {self.timeout:g} s") from None
        except urllib.error.HTTPError as e:
            raise BackendUnreachable(f"{url} answered HTTP {e.code}") from None
        except urllib.error.URLError as e:
            if isinstance(e.reason, (socket.timeout, TimeoutError)):
                raise BackendTimeout(f"no reply from {url} within {self.timeout:g} s") from None
            raise BackendUnreachable(f"cannot reach {url}: {e.reason}") from None
        except OSError as e:
            raise BackendUnreachable(f"cannot reach {url}: {e}") from None
        try:
            text = json.loads(payload)["text"]
        except (ValueError, KeyError, TypeError):
            raise BackendUnreachable(f"{url} sent a malformed reply") from None
        if not isinstance(text, str):
            raise BackendUnreachable(f"{url} sent a non-string completion")
        return text


@dataclass(frozen=True)
class RulePlannerBackend:
    """Answer from the rule table, reading the prompt's final instruction block."""

    def complete(self, prompt: Prompt) -> str:
        lines = prompt.text.rstrip("\n").split("\n")
        try:
            _, speech, gesture = split_block(lines[-2:])
        except ValueError:
            return "say('I did not understand')\n"
        return rule_plan_text(speech, gesture)


@dataclass(frozen=True)
class RecordingBackend:
    """Forward to ``inner`` and save each reply into a replay store."""

    inner: CompletionBackend
    store: Path

    def complete(self, prompt: Prompt) -> str:
        text = self.inner.complete(prompt)
        write_transcript(self.store, prompt, text)
        return text


def make_backend(name: str, *, store=None, url: str | None = None, timeout: float = DEFAULT_TIMEOUT):
    if name == "rule":
        return RulePlannerBackend()
    if name == "replay":
        if store is None:
            raise ValueError("the replay backend needs a transcript store directory")
        return ReplayBackend(Path(store))
    if name == "remote":
        backend = RemoteBackend(url, timeout)
        backend.resolved_url()
        return backend
    raise ValueError(f"unknown backend {name!r} (choose rule, replay or remote)")
