"""Wire-protocol client for driving an external model server.

Protocol v1 is newline-delimited JSON over a byte stream (a subprocess's
stdio or a TCP connection), lockstep: one request in flight, replies
correlated by id. Binary tensor payloads are base64 of little-endian
float32 with an explicit shape field; latent and embedding arrays travel
as JSON numbers at float32 precision. See README for the message catalog.
"""

from __future__ import annotations

import base64
import json
import os
import selectors
import socket
import subprocess
from dataclasses import dataclass

import numpy as np

from .backend import BackendInfo, ImageTensor, as_embedding
from .core import as_latent, as_latent_batch
from .errors import BackendError, ConfigurationError, ProtocolError, TransportError


@dataclass
class BridgeConfig:
    """How to reach the server and how hard to push it."""

    transport: str  # "stdio" | "tcp"
    command: list[str] | None = None  # stdio: server command line
    address: tuple[str, int] | None = None  # tcp: (host, port)
    timeout_ms: int = 30_000
    max_batch: int = 256

    def __post_init__(self):
        if self.transport not in ("stdio", "tcp"):
            raise ConfigurationError(f"unknown transport {self.transport!r}")
        if self.transport == "stdio" and not self.command:
            raise ConfigurationError("stdio transport needs a server command line")
        if self.transport == "tcp" and not self.address:
            raise ConfigurationError("tcp transport needs an address")
        if self.timeout_ms <= 0:
            raise ConfigurationError(f"timeout must be > 0 ms, got {self.timeout_ms}")
        if self.max_batch < 1:
            raise ConfigurationError(f"max batch must be >= 1, got {self.max_batch}")


class _StdioChannel:
    def __init__(self, command: list[str]):
        try:
            self.proc = subprocess.Popen(
                command, stdin=subprocess.PIPE, stdout=subprocess.PIPE
            )
        except OSError as exc:
            raise TransportError(f"failed to launch server {command!r}: {exc}") from exc
        self._buf = b""
        self._sel = selectors.DefaultSelector()
        self._sel.register(self.proc.stdout, selectors.EVENT_READ)

    def send_line(self, line: str) -> None:
        try:
            self.proc.stdin.write(line.encode("utf-8") + b"\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise TransportError(f"server pipe closed: {exc}") from exc

    def recv_line(self, timeout_s: float) -> str:
        while b"\n" not in self._buf:
            if not self._sel.select(timeout=timeout_s):
                raise TransportError(f"timed out after {timeout_s:g}s waiting for reply")
            chunk = os.read(self.proc.stdout.fileno(), 65536)
            if not chunk:
                raise TransportError("server closed its output stream")
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return line.decode("utf-8")

    def close(self) -> None:
        self._sel.close()
        for stream in (self.proc.stdin, self.proc.stdout):
            try:
                stream.close()
            except OSError:
                pass
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()


class _TcpChannel:
    def __init__(self, address: tuple[str, int], timeout_s: float):
        try:
            self.sock = socket.create_connection(address, timeout=timeout_s)
        except OSError as exc:
            raise TransportError(f"failed to connect to {address}: {exc}") from exc
        self._buf = b""

    def send_line(self, line: str) -> None:
        try:
            self.sock.sendall(line.encode("utf-8") + b"\n")
        except OSError as exc:
            raise TransportError(f"socket send failed: {exc}") from exc

    def recv_line(self, timeout_s: float) -> str:
        self.sock.settimeout(timeout_s)
        while b"\n" not in self._buf:
            try:
                chunk = self.sock.recv(65536)
            except socket.timeout:
                raise TransportError(f"timed out after {timeout_s:g}s waiting for reply") from None
            except OSError as exc:
                raise TransportError(f"socket receive failed: {exc}") from exc
            if not chunk:
                raise TransportError("server closed the connection")
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return line.decode("utf-8")

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


class BridgeClient:
    """Lockstep protocol client; single-owner, one request in flight."""

    def __init__(self, config: BridgeConfig):
        self.config = config
        self._next_id = 1
        self._channel = self._connect()

    def _connect(self):
        if self.config.transport == "stdio":
            return _StdioChannel(list(self.config.command))
        return _TcpChannel(tuple(self.config.address), self.config.timeout_ms / 1000.0)

    def _reconnect(self) -> None:
        self._channel.close()
        self._channel = self._connect()

    def close(self) -> None:
        self._channel.close()

    def __enter__(self) -> "BridgeClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _request(self, op: str, payload: dict) -> dict:
        request_id = self._next_id
        self._next_id += 1
        message = {"id": request_id, "op": op, **payload}
        self._channel.send_line(json.dumps(message))
        line = self._channel.recv_line(self.config.timeout_ms / 1000.0)
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"reply is not valid JSON: {exc}") from exc
        if not isinstance(reply, dict):
            raise ProtocolError(f"reply must be a JSON object, got {type(reply).__name__}")
        if reply.get("id") != request_id:
            raise ProtocolError(
                f"stale or unknown reply id {reply.get('id')!r}, expected {request_id}"
            )
        if "ok" not in reply:
            raise ProtocolError("reply missing 'ok' field")
        if reply["ok"] is not True:
            raise BackendError(str(reply.get("error", "unspecified server error")))
        return reply

    def handshake(self) -> BackendInfo:
        """Exchange the info op and validate the advertised dimensions."""
        reply = self._request("info", {})
        for name in ("latent_dim", "embedding_dim", "image_shape", "name", "fused"):
            if name not in reply:
                raise ProtocolError(f"info reply missing field {name!r}")
        shape = reply["image_shape"]
        if not (isinstance(shape, list) and len(shape) == 3):
            raise ProtocolError(f"info image_shape must be a 3-element list, got {shape!r}")
        try:
            return BackendInfo(
                latent_dim=int(reply["latent_dim"]),
                embedding_dim=int(reply["embedding_dim"]),
                image_shape=tuple(int(s) for s in shape),
                backend_name=str(reply["name"]),
                supports_fused_generate_embed=bool(reply["fused"]),
                allows_concurrent_calls=bool(reply.get("concurrent", False)),
                extras={k: v for k, v in reply.items()
                        if k not in ("id", "ok", "latent_dim", "embedding_dim",
                                     "image_shape", "name", "fused", "concurrent")},
            )
        except ConfigurationError as exc:
            raise ProtocolError(f"info reply invalid: {exc}") from exc

    def generate_embed(self, zs) -> np.ndarray:
        """Fused generate+embed for a batch; chunked to the configured size.

        A whole-chunk transport failure is retried exactly once over a fresh
        connection, then becomes fatal.
        """
        batch = as_latent_batch(zs)
        outputs: list[np.ndarray] = []
        for start in range(0, batch.shape[0], self.config.max_batch):
            chunk = batch[start:start + self.config.max_batch]
            payload = {"latents": _wire_latents(chunk)}
            try:
                reply = self._request("generate_embed", payload)
            except TransportError:
                self._reconnect()
                reply = self._request("generate_embed", payload)
            rows = reply.get("embeddings")
            if not isinstance(rows, list) or len(rows) != chunk.shape[0]:
                raise ProtocolError(
                    f"generate_embed returned {0 if rows is None else len(rows)} "
                    f"embeddings for {chunk.shape[0]} latents"
                )
            outputs.append(np.asarray(rows, dtype=np.float64))
        return np.concatenate(outputs, axis=0)

    def generate(self, z) -> ImageTensor:
        zv = as_latent(z)
        reply = self._request("generate", {"latent": _wire_vector(zv)})
        for name in ("shape", "data_b64"):
            if name not in reply:
                raise ProtocolError(f"generate reply missing field {name!r}")
        return _decode_image(reply["shape"], reply["data_b64"])

    def embed(self, image: ImageTensor) -> np.ndarray:
        reply = self._request(
            "embed",
            {"shape": list(image.shape), "data_b64": _encode_f32(image.values)},
        )
        if "embedding" not in reply:
            raise ProtocolError("embed reply missing field 'embedding'")
        return as_embedding(reply["embedding"])


class BridgeBackend:
    """Backend adapter over a BridgeClient; info cached from the handshake."""

    def __init__(self, client: BridgeClient):
        self.client = client
        self._info = client.handshake()

    @classmethod
    def from_config(cls, config: BridgeConfig) -> "BridgeBackend":
        return cls(BridgeClient(config))

    def info(self) -> BackendInfo:
        return self._info

    def generate(self, z) -> ImageTensor:
        zv = as_latent(z, dim=self._info.latent_dim)
        image = self.client.generate(zv)
        if image.shape != self._info.image_shape:
            raise ProtocolError(
                f"server returned image shape {image.shape}, advertised "
                f"{self._info.image_shape}"
            )
        return image

    def embed(self, image: ImageTensor) -> np.ndarray:
        return as_embedding(self.client.embed(image), dim=self._info.embedding_dim)

    def generate_embed_batch(self, zs) -> np.ndarray:
        batch = as_latent_batch(zs, dim=self._info.latent_dim)
        out = self.client.generate_embed(batch)
        if out.shape != (batch.shape[0], self._info.embedding_dim):
            raise ProtocolError(
                f"server returned embeddings of shape {out.shape}, expected "
                f"{(batch.shape[0], self._info.embedding_dim)}"
            )
        return out

    def close(self) -> None:
        self.client.close()

    def __enter__(self) -> "BridgeBackend":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _wire_vector(v: np.ndarray) -> list[float]:
    """Float32-round a vector for the wire; JSON carries exact f32 decimals."""
    return [float(x) for x in np.asarray(v, dtype=np.float32)]


def _wire_latents(batch: np.ndarray) -> list[list[float]]:
    return [_wire_vector(row) for row in batch]


def _encode_f32(values: np.ndarray) -> str:
    return base64.b64encode(np.asarray(values, dtype="<f4").tobytes()).decode("ascii")


def _decode_image(shape, data_b64: str) -> ImageTensor:
    if not (isinstance(shape, list) and len(shape) == 3):
        raise ProtocolError(f"image shape must be a 3-element list, got {shape!r}")
    try:
        raw = base64.b64decode(data_b64, validate=True)
    except Exception as exc:
        raise ProtocolError(f"invalid base64 image payload: {exc}") from exc
    count = int(np.prod([int(s) for s in shape]))
    if len(raw) != 4 * count:
        raise ProtocolError(
            f"image payload holds {len(raw) // 4} f32 values, shape {shape} needs {count}"
        )
    values = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(
        [int(s) for s in shape]
    )
    return ImageTensor(values)
