"""Provider plumbing shared by every guidance request.

A provider either replays fixtures from disk or posts JSON to a live
endpoint. Fixtures live at ``<fixture_dir>/<kind>/<hash>.json`` (or
``.bin`` for image bytes), where the hash is the SHA-256 of the request key
serialized as canonical JSON, so key order never matters.
"""

from __future__ import annotations

import base64
import enum
import hashlib
import json
import os
import socket
import urllib.error
import urllib.request
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable

from ..errors import FixtureMiss, ProviderTimeout

ENV_MODE = "VOXEDIT_PROVIDER_MODE"
ENV_ENDPOINT = "VOXEDIT_PROVIDER_ENDPOINT"
ENV_TIMEOUT = "VOXEDIT_PROVIDER_TIMEOUT"
ENV_FIXTURES = "VOXEDIT_FIXTURE_DIR"


class ProviderMode(enum.Enum):
    FIXTURE = "fixture"
    LIVE = "live"


@dataclass(frozen=True)
class ProviderConfig:
    mode: ProviderMode = ProviderMode.FIXTURE
    endpoint: str | None = None
    fixture_dir: Path | None = None
    timeout: float = 30.0
    retries: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mode", ProviderMode(self.mode))
        if self.fixture_dir is not None:
            object.__setattr__(self, "fixture_dir", Path(self.fixture_dir))
        if self.mode is ProviderMode.FIXTURE and self.fixture_dir is None:
            raise ValueError("fixture mode needs fixture_dir")
        if self.mode is ProviderMode.LIVE and not self.endpoint:
            raise ValueError("live mode needs an endpoint")
        if self.timeout <= 0 or self.retries < 0:
            raise ValueError("timeout must be positive and retries non-negative")

    @classmethod
    def from_env(cls, env=None, **overrides) -> ProviderConfig:
        """Environment values, with explicit (config file) values taking precedence."""
        env = os.environ if env is None else env
        values = {
            "mode": env.get(ENV_MODE, "fixture"),
            "endpoint": env.get(ENV_ENDPOINT),
            "fixture_dir": env.get(ENV_FIXTURES),
            "timeout": float(env.get(ENV_TIMEOUT, 30.0)),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def request_hash(key: dict) -> str:
    return hashlib.sha256(canonical_json(key).encode()).hexdigest()


def bytes_sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


Transport = Callable[[str, dict, float], dict]


def http_transport(url: str, payload: dict, timeout: float) -> dict:
    body = json.dumps(payload).encode()
    req = urllib.request.Request(url, data=body, headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return json.loads(resp.read().decode())
    except (socket.timeout, TimeoutError) as exc:
        raise ProviderTimeout(f"{url} did not answer within {timeout}s") from exc
    except urllib.error.URLError as exc:
        if isinstance(exc.reason, (socket.timeout, TimeoutError)):
            raise ProviderTimeout(f"{url} did not answer within {timeout}s") from exc
        raise


def load_template(kind: str) -> str:
    return resources.files(__package__).joinpath("templates", f"{kind}.txt").read_text()


class Provider:
    """Dispatches keyed requests to fixtures or to a live endpoint."""

    def __init__(self, config: ProviderConfig, transport: Transport | None = None):
        self.config = config
        self.transport = transport or http_transport
        self.accessed: list[Path] = []

    def fixture_path(self, kind: str, key: dict, suffix: str = ".json") -> Path:
        return self.config.fixture_dir / kind / f"{request_hash(key)}{suffix}"

    def _fixture(self, kind: str, key: dict, suffix: str) -> Path:
        path = self.fixture_path(kind, key, suffix)
        if not path.is_file():
            raise FixtureMiss(f"no {kind} fixture for request {request_hash(key)[:12]} ({path})")
        self.accessed.append(path)
        return path

    def request(self, kind: str, key: dict, live_body: dict | None = None) -> dict:
        if self.config.mode is ProviderMode.FIXTURE:
            path = self._fixture(kind, key, ".json")
            return json.loads(path.read_text())
        body = {"kind": kind, "prompt": key.get("prompt", ""), "views": [], "extras": {}}
        body.update(live_body or {})
        body["extras"] = {**body.get("extras", {}), "key": key}
        return self._post(body)

    def request_bytes(self, kind: str, key: dict, live_body: dict | None = None) -> bytes:
        if self.config.mode is ProviderMode.FIXTURE:
            return self._fixture(kind, key, ".bin").read_bytes()
        resp = self.request(kind, key, live_body)
        return base64.b64decode(resp["image_b64"])

    def _post(self, body: dict) -> dict:
        last = None
        for _ in range(self.config.retries + 1):
            try:
                return self.transport(self.config.endpoint, body, self.config.timeout)
            except ProviderTimeout as exc:
                last = exc
        raise last


class FixtureRecorder:
    """Writes fixtures at the paths a :class:`Provider` will look them up."""

    def __init__(self, fixture_dir):
        self.root = Path(fixture_dir)

    def record(self, kind: str, key: dict, response: dict) -> Path:
        path = self.root / kind / f"{request_hash(key)}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(response, indent=2, sort_keys=True) + "\n")
        return path

    def record_bytes(self, kind: str, key: dict, data: bytes) -> Path:
        path = self.root / kind / f"{request_hash(key)}.bin"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        return path


class RecordingProvider(Provider):
    """Fixture provider that asks ``responder`` on a miss and stores the answer.

    ``responder(kind, key, live_body)`` returns a JSON object, or bytes for
    image requests. Used to build fixture sets for synthetic runs.
    """

    def __init__(self, fixture_dir, responder):
        super().__init__(ProviderConfig(ProviderMode.FIXTURE, fixture_dir=fixture_dir))
        self.responder = responder
        self.recorder = FixtureRecorder(fixture_dir)

    def request(self, kind, key, live_body=None):
        if not self.fixture_path(kind, key).is_file():
            self.recorder.record(kind, key, self.responder(kind, key, live_body or {}))
        return super().request(kind, key, live_body)

    def request_bytes(self, kind, key, live_body=None):
        if not self.fixture_path(kind, key, ".bin").is_file():
            self.recorder.record_bytes(kind, key, self.responder(kind, key, live_body or {}))
        return super().request_bytes(kind, key, live_body)
