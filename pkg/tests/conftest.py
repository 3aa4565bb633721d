# tests/conftest.py
import pytest
from loguru import logger

from simulator.params import ProtocolParams


@pytest.fixture
def log_records():
    """Loguru records emitted during the test, as dicts with ``level`` and ``message``."""
    records = []
    handler_id = logger.add(lambda message: records.append({"level": message.record["level"].name, "message": message.record["message"]}), level="DEBUG")
    yield records
    try:
        logger.remove(handler_id)
    except ValueError:
        pass


@pytest.fixture
def short_params() -> ProtocolParams:
    """N = 3 with short pulses so a full run takes a fraction of a second."""
    return ProtocolParams(n_parties=3, pulse_width=40.0, n_samples=101)
