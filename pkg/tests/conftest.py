from pathlib import Path

import pytest

import feedsim as fs

REPO_ROOT = Path(__file__).resolve().parent.parent
REF_CONFIG_PATH = REPO_ROOT / "configs" / "amt10.json"


@pytest.fixture(scope="session")
def ref_config() -> fs.SystemConfig:
    """Ten-user network with the AMT-derived 5x5 confusion matrix."""
    return fs.load_config(REF_CONFIG_PATH)


@pytest.fixture(scope="session")
def ref_config_path() -> Path:
    return REF_CONFIG_PATH
