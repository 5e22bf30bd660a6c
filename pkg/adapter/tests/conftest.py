"""Shared adapter test fixtures."""

import pytest
from fastapi.testclient import TestClient

from citeward_adapter.app import create_app
from citeward_adapter.config import AdapterConfig


@pytest.fixture(scope="session")
def client():
    return TestClient(create_app(AdapterConfig()), raise_server_exceptions=False)
