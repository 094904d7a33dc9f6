import os
from pathlib import Path

import hypothesis
import numpy as np
import pytest

from ips.fingerprint import build_radio_map
from ips.stores.csv_store import load_store, records_to_fingerprints
from schemas.positioning_schema import Position, SimConfig

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=5)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parent.parent
FIELD_FINGERPRINTS = ROOT / "sample_data" / "field_fingerprints.csv"


@pytest.fixture
def field_path() -> Path:
    return FIELD_FINGERPRINTS


@pytest.fixture
def field_records():
    return load_store(FIELD_FINGERPRINTS)


@pytest.fixture
def field_map(field_records):
    return build_radio_map(records_to_fingerprints(field_records), 5)


@pytest.fixture
def small_sim_config() -> SimConfig:
    """8 x 8 m with corner APs, fast enough for per-test benchmarks"""
    return SimConfig(
        area=(8.0, 8.0),
        ap_positions=(
            Position(x=0.0, y=0.0),
            Position(x=8.0, y=0.0),
            Position(x=0.0, y=8.0),
            Position(x=8.0, y=8.0),
        ),
        test_samples=200,
        seed=7,
    )
