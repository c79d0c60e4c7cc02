"""Scripted protocol-v1 server for conformance tests.

Serves the synthetic backend over stdio or TCP, with optional scripted
misbehaviors (wrong ids, omitted fields, hangs, early exits, canned
embeddings) so the bridge client's error paths can be exercised
deterministically. Run as ``python -m latentprobe.mockserver``.
"""

from __future__ import annotations

import argparse
import base64
import json
import socket
import sys
import time

import numpy as np

from .backend import ImageTensor
from .errors import LatentProbeError
from .synthetic import SyntheticBackend, SyntheticModel, sgn


class MockBehavior:
    """Knobs that make the server misbehave on purpose."""

    def __init__(self, wrong_id_op=None, omit_info_field=None, fail_op=None,
                 hang_op=None, exit_after=0, scripted_embedding=None,
                 sign_deviation=0.0):
        self.wrong_id_op = wrong_id_op
        self.omit_info_field = omit_info_field
        self.fail_op = fail_op
        self.hang_op = hang_op
        self.exit_after = exit_after
        self.scripted_embedding = scripted_embedding
        self.sign_deviation = sign_deviation


class MockServer:
    def __init__(self, backend: SyntheticBackend, behavior: MockBehavior | None = None):
        self.backend = backend
        self.behavior = behavior or MockBehavior()
        self.replies_sent = 0

    def handle_line(self, line: str) -> str | None:
        """Reply line for one request line; None means close the stream."""
        behavior = self.behavior
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ValueError("request must be a JSON object")
        except (json.JSONDecodeError, ValueError) as exc:
            return self._emit({"id": 0, "ok": False, "error": f"malformed request: {exc}"})
        request_id = request.get("id", 0)
        op = request.get("op")
        if behavior.hang_op == op:
            time.sleep(3600)
        if behavior.fail_op == op:
            return self._emit({"id": request_id, "ok": False,
                               "error": f"scripted failure for op {op!r}"})
        try:
            reply = self._dispatch(request_id, op, request)
        except LatentProbeError as exc:
            reply = {"id": request_id, "ok": False, "error": str(exc)}
        except Exception as exc:  # malformed payloads etc.
            reply = {"id": request_id, "ok": False, "error": f"bad request: {exc}"}
        if behavior.wrong_id_op == op:
            reply["id"] = request_id + 1000
        return self._emit(reply)

    def _emit(self, reply: dict) -> str | None:
        self.replies_sent += 1
        line = json.dumps(reply)
        if self.behavior.exit_after and self.replies_sent >= self.behavior.exit_after:
            # flush this reply, then die: exercises the client's retry-once rule
            return line + "\0EXIT"
        return line

    def _dispatch(self, request_id, op, request) -> dict:
        info = self.backend.info()
        if op == "info":
            reply = {
                "id": request_id, "ok": True,
                "latent_dim": info.latent_dim,
                "embedding_dim": info.embedding_dim,
                "image_shape": list(info.image_shape),
                "name": f"mock:{info.backend_name}",
                "fused": True,
                "concurrent": False,
            }
            if self.behavior.omit_info_field:
                reply.pop(self.behavior.omit_info_field, None)
            return reply
        if op == "generate_embed":
            latents = np.asarray(request["latents"], dtype=np.float64)
            if latents.ndim != 2 or latents.shape[1] != info.latent_dim:
                raise ValueError(f"latents must be (n, {info.latent_dim})")
            embeddings = [self._embedding_for(z) for z in latents]
            return {"id": request_id, "ok": True,
                    "embeddings": [[float(np.float32(x)) for x in e] for e in embeddings]}
        if op == "generate":
            z = np.asarray(request["latent"], dtype=np.float64)
            image = self.backend.generate(z)
            data = base64.b64encode(
                np.asarray(image.values, dtype="<f4").tobytes()
            ).decode("ascii")
            return {"id": request_id, "ok": True,
                    "shape": list(image.shape), "data_b64": data}
        if op == "embed":
            shape = [int(s) for s in request["shape"]]
            raw = base64.b64decode(request["data_b64"])
            values = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(shape)
            embedding = self.backend.embed(ImageTensor(values))
            return {"id": request_id, "ok": True,
                    "embedding": [float(np.float32(x)) for x in embedding]}
        return {"id": request_id, "ok": False, "error": f"unknown op {op!r}"}

    def _embedding_for(self, z: np.ndarray) -> np.ndarray:
        if self.behavior.scripted_embedding is not None:
            return np.asarray(self.behavior.scripted_embedding, dtype=np.float64)
        e = self.backend.generate_embed_batch(z[None, :])[0]
        if self.behavior.sign_deviation and np.array_equal(z, sgn(z)):
            e = e.copy()
            e[0] += self.behavior.sign_deviation
        return e


def _serve_stream(server: MockServer, rfile, wfile) -> bool:
    """Pump one request/reply stream; returns False when the process should exit."""
    for raw in rfile:
        line = raw.decode("utf-8").strip()
        if not line:
            continue
        reply = server.handle_line(line)
        if reply is None:
            return True
        if reply.endswith("\0EXIT"):
            wfile.write(reply[:-5].encode("utf-8") + b"\n")
            wfile.flush()
            return False
        wfile.write(reply.encode("utf-8") + b"\n")
        wfile.flush()
    return True


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="latentprobe-mockserver", description=__doc__)
    parser.add_argument("--synthetic", default="64,32,16,42",
                        help="model as D,m,k,seed (default 64,32,16,42)")
    parser.add_argument("--tcp", type=int, default=None, metavar="PORT",
                        help="serve on a TCP port instead of stdio")
    parser.add_argument("--wrong-id-op", default=None)
    parser.add_argument("--omit-info-field", default=None)
    parser.add_argument("--fail-op", default=None)
    parser.add_argument("--hang-op", default=None)
    parser.add_argument("--exit-after", type=int, default=0,
                        help="terminate after N replies")
    parser.add_argument("--scripted-embedding", default=None,
                        help="comma-separated constant embedding reply")
    parser.add_argument("--sign-deviation", type=float, default=0.0,
                        help="perturb embeddings of pure sign-pattern latents")
    args = parser.parse_args(argv)

    d, m, k, seed = (int(x) for x in args.synthetic.split(","))
    backend = SyntheticBackend(SyntheticModel(d, m, k, seed))
    scripted = None
    if args.scripted_embedding:
        scripted = [float(x) for x in args.scripted_embedding.split(",")]
    behavior = MockBehavior(
        wrong_id_op=args.wrong_id_op,
        omit_info_field=args.omit_info_field,
        fail_op=args.fail_op,
        hang_op=args.hang_op,
        exit_after=args.exit_after,
        scripted_embedding=scripted,
        sign_deviation=args.sign_deviation,
    )
    server = MockServer(backend, behavior)

    if args.tcp is not None:
        listener = socket.create_server(("127.0.0.1", args.tcp))
        # parent reads the chosen port from stdout when asking for port 0
        print(f"PORT {listener.getsockname()[1]}", flush=True)
        while True:
            conn, _ = listener.accept()
            with conn, conn.makefile("rb") as rfile, conn.makefile("wb") as wfile:
                keep_going = _serve_stream(server, rfile, wfile)
            if not keep_going:
                return 0
    else:
        keep = _serve_stream(server, sys.stdin.buffer, sys.stdout.buffer)
        return 0 if keep else 1


if __name__ == "__main__":
    sys.exit(main())
