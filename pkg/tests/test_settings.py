from pathlib import Path

from src.core.settings import Settings, get_settings


def test_settings_loads_defaults() -> None:
    settings = get_settings()
    assert settings.app.name == "eh-finite-blocklength"
    assert settings.bounds.berry_esseen_constant == 0.5
    assert settings.numerics.gauss_hermite_order >= 64
    assert settings.simulation.default_seed == 12345
    assert settings.output.significant_digits == 12


def test_settings_interpolates_environment(tmp_path: Path, monkeypatch) -> None:
    config = tmp_path / "settings.yaml"
    config.write_text("app:\n  log_level: ${EHFBL_TEST_LEVEL:-WARNING}\nsimulation:\n  workers: ${EHFBL_TEST_WORKERS:-1}\n")
    monkeypatch.setenv("EHFBL_TEST_WORKERS", "3")
    settings = Settings.load(config)
    assert settings.app.log_level == "WARNING"
    assert settings.simulation.workers == 3
