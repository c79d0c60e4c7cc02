from __future__ import annotations

import shutil
import sys
from pathlib import Path

import numpy as np
import pytest

from latentprobe import SyntheticBackend, SyntheticModel, TargetIdentity

REPO_ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = Path(__file__).resolve().parent / "data"
SERVER_JS = REPO_ROOT / "server" / "dist" / "main.js"

# A comfortably-margined latent used as the planted search target throughout.
PLANTED_D8 = np.array([0.9, -0.7, 0.8, -0.6, 0.7, 0.9, -0.8, 0.6])


def mock_server_command(model: str = "8,32,16,42", *extra: str) -> list[str]:
    return [sys.executable, "-m", "latentprobe.mockserver", "--synthetic", model, *extra]


def ts_server_command(model: str = "8,32,16,42", *extra: str) -> list[str]:
    return ["node", str(SERVER_JS), "--synthetic", model, *extra]


def ts_server_available() -> bool:
    return SERVER_JS.exists() and shutil.which("node") is not None


_SERVER_BUILDERS = {"python-mock": mock_server_command, "typescript": ts_server_command}


@pytest.fixture(params=["python-mock", "typescript"])
def server_command(request):
    """Command-line builder for a protocol-v1 server, one per implementation."""
    if request.param == "typescript" and not ts_server_available():
        pytest.skip("model server not built; run: npm --prefix server install && "
                    "npm --prefix server run build")
    return _SERVER_BUILDERS[request.param]


@pytest.fixture
def synthetic_d8() -> SyntheticBackend:
    return SyntheticBackend(SyntheticModel(8, 32, 16, 42))


@pytest.fixture
def planted_target_d8(synthetic_d8) -> TargetIdentity:
    embedding = synthetic_d8.embed(synthetic_d8.generate(PLANTED_D8))
    return TargetIdentity(embedding[None, :])
