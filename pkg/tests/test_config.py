"""
Settings and run configuration layering.
"""

import pytest
from pydantic import ValidationError

from src.config import Settings, get_settings, reload_settings
from src.models.losses import ABLATION_PRESETS
from src.models.manifest import RunConfig


@pytest.fixture
def clean_settings():
    yield
    reload_settings()


def test_defaults():
    settings = Settings()
    weights = settings.get_loss_weight_config()
    assert weights["h"] == 4.0 * settings.depth_cap
    assert weights["b"] == 10.0
    assert settings.get_fit_config()["mask_refresh_period"] == 10


def test_environment_overrides(monkeypatch, clean_settings):
    monkeypatch.setenv("SEMDEPTH_DEPTH_CAP", "50")
    monkeypatch.setenv("SEMDEPTH_LAMBDA_ROAD", "0")
    monkeypatch.setenv("SEMDEPTH_LOG_LEVEL", "debug")
    settings = reload_settings()
    assert get_settings() is settings
    assert settings.depth_cap == 50.0
    assert settings.log_level == "DEBUG"
    assert settings.get_loss_weight_config()["h"] == 200.0
    assert settings.get_loss_weight_config()["lambda_road"] == 0.0


def test_invalid_settings():
    with pytest.raises(ValidationError):
        Settings(log_level="LOUD")
    with pytest.raises(ValidationError):
        Settings(mask_penalty_b=1.0)


def test_run_config_layers_file_and_preset():
    run = RunConfig.from_settings(
        Settings(), ablation="img+ss", overrides={"weights": {"lambda_ss": 0.5}, "terms": {"use_road": True}}
    )
    assert run.weights.lambda_ss == 0.5
    # the preset wins over the file
    assert run.terms == ABLATION_PRESETS["img+ss"]
    assert run.depth_cap == 80.0


def test_run_config_rejects_small_h():
    with pytest.raises(ValidationError):
        RunConfig.from_settings(Settings(), overrides={"weights": {"h": 100.0}})
    with pytest.raises(KeyError):
        RunConfig.from_settings(Settings(), ablation="everything")
