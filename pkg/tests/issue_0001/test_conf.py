import os

import pytest

from shiftmpc.conf import ENVIRONMENT_VARIABLE
from shiftmpc.conf.loader import LazySettings, Settings
from shiftmpc.conf.utils import patch_conf, reload_config

asset_config_path = os.path.join(
    os.path.dirname(__file__),
    "assets",
    "settings.py",
)


def test_load_file():
    settings = Settings()
    # noinspection PyProtectedMember
    settings._load(asset_config_path)

    assert settings.FOO == "bar"
    assert settings.BAR == [1, 2, 3]


def test_lazy_load_file():
    settings = LazySettings(lambda: [asset_config_path])

    assert settings.FOO == "bar"
    assert settings.BAR == [1, 2, 3]


def test_set_lazy_settings():
    settings = LazySettings(lambda: [])
    settings.NEW_KEY = "new_value"
    assert settings.NEW_KEY == "new_value"


def test_load_missing_file():
    settings = Settings()
    file_path = "/does/not/exist/0c0e9a52-8f43-4bd6-9a4a-1f1e1fb0f3a7.py"

    with pytest.raises(IOError):
        # noinspection PyProtectedMember
        settings._load(file_path)


def test_read_missing_key():
    settings = Settings()

    with pytest.raises(AttributeError):
        assert settings.DOES_NOT_EXIST


def test_reload_config():
    from shiftmpc.conf import settings

    settings.NEWLY_SET = True
    assert settings.NEWLY_SET

    reload_config()

    with pytest.raises(AttributeError):
        assert settings.NEWLY_SET


def test_environment_file_overrides_defaults():
    previous = os.environ.get(ENVIRONMENT_VARIABLE)
    os.environ[ENVIRONMENT_VARIABLE] = asset_config_path
    reload_config()

    try:
        from shiftmpc.conf import settings

        assert settings.FOO == "bar"
        assert settings.QP_MAX_ITER == 17
        assert settings.QP_PRIMAL_TOL == 1e-8
    finally:
        os.environ[ENVIRONMENT_VARIABLE] = previous or ""
        reload_config()


def test_loads_default_conf():
    os.environ[ENVIRONMENT_VARIABLE] = ""
    reload_config()

    from shiftmpc.conf import settings

    assert isinstance(settings.DEBUG, bool)
    assert settings.SQP_WARM_MAX_ITER == 8
    assert settings.GALERKIN_TRUNCATION == 150


def test_patch_conf_does_not_leak():
    from shiftmpc.conf import settings

    with patch_conf({"NMAX_TOL": 0.5}):
        assert settings.NMAX_TOL == 0.5

    assert settings.NMAX_TOL == 1e-9


def test_tolerances_follow_settings():
    from shiftmpc.solvers import Tolerances

    with patch_conf({"QP_MAX_ITER": 3}):
        assert Tolerances().max_iter == 3

    assert Tolerances(max_iter=10).max_iter == 10
