"""配置模块测试"""

import json
import os
import tempfile

import pytest

from routh_reduction.utils.config import Config, ScenarioConfig, load_config
from routh_reduction.utils.errors import ConfigError


class TestConfig:
    """配置测试类"""

    def test_default_config(self):
        """测试默认配置"""
        config = Config()
        assert config.dt == 1e-3
        assert config.t1 == 5.0
        assert config.seed == 0
        assert config.fd_step is None
        assert config.log_level == "INFO"

    def test_config_from_env(self, monkeypatch):
        """测试从环境变量加载配置"""
        monkeypatch.setenv("RR_DT", "0.002")
        monkeypatch.setenv("RR_SEED", "7")
        monkeypatch.setenv("RR_FD_STEP", "1e-5")
        monkeypatch.setenv("RR_LOG_LEVEL", "DEBUG")

        config = Config.from_env()
        assert config.dt == 0.002
        assert config.seed == 7
        assert config.fd_step == 1e-5
        assert config.log_level == "DEBUG"

    def test_blank_step_is_automatic(self, monkeypatch):
        """空的差分步长环境变量视为自动步长"""
        monkeypatch.setenv("RR_FD_STEP", "  ")
        assert Config.from_env().fd_step is None

    def test_config_to_file(self):
        """测试保存配置到文件"""
        config = Config(n_samples=50, log_level="WARNING")

        with tempfile.NamedTemporaryFile(mode="w", suffix=".json", delete=False) as f:
            temp_path = f.name

        try:
            config.to_file(temp_path)

            # 验证文件内容
            loaded = Config.from_file(temp_path)
            assert loaded.n_samples == 50
            assert loaded.log_level == "WARNING"
        finally:
            os.unlink(temp_path)

    def test_config_from_file(self):
        """测试从文件加载配置"""
        with tempfile.NamedTemporaryFile(mode="w", suffix=".json", delete=False) as f:
            json.dump({"t1": 2.0, "log_level": "ERROR"}, f)
            temp_path = f.name

        try:
            config = Config.from_file(temp_path)
            assert config.t1 == 2.0
            assert config.log_level == "ERROR"
        finally:
            os.unlink(temp_path)

    def test_load_config_updates_global(self, tmp_path):
        """load_config 原地更新全局配置，文件优先于环境变量"""
        import importlib

        config_module = importlib.import_module("routh_reduction.utils.config")

        saved = dict(config_module.config.__dict__)
        path = tmp_path / "settings.json"
        path.write_text(json.dumps({"n_samples": 33}), encoding="utf-8")
        try:
            loaded = load_config(str(path))
            assert loaded is config_module.config
            assert config_module.config.n_samples == 33
        finally:
            for key, value in saved.items():
                setattr(config_module.config, key, value)


class TestScenarioConfig:
    """场景文件解析测试"""

    def test_parse_full_scenario(self):
        """解析全部支持的键，忽略注释与空行"""
        text = """
        # 重陀螺
        system = heavy-top
        params.omega_B = 0.01

        initial.q = 0, 1.0, 0
        initial.v = 0.5, 0, 5   # 自转
        run.t0 = 0
        run.t1 = 2.5
        run.dt = 0.001
        run.seed = 3
        run.mu = 2.5
        """
        scenario = ScenarioConfig.parse(text)
        assert scenario.system == "heavy-top"
        assert scenario.params == {"omega_B": 0.01}
        assert scenario.initial_q == [0.0, 1.0, 0.0]
        assert scenario.initial_v == [0.5, 0.0, 5.0]
        assert scenario.t1 == 2.5
        assert scenario.dt == 0.001
        assert scenario.seed == 3
        assert scenario.mu == [2.5]

    def test_missing_equals(self):
        """缺少等号的行报错"""
        with pytest.raises(ConfigError, match="第 1 行"):
            ScenarioConfig.parse("system heavy-top")

    def test_unknown_key(self):
        """未知键报错"""
        with pytest.raises(ConfigError, match="未知键"):
            ScenarioConfig.parse("run.horizon = 3")

    def test_bad_number(self):
        """非实数取值报错"""
        with pytest.raises(ConfigError, match="run.dt"):
            ScenarioConfig.parse("run.dt = fast")
        with pytest.raises(ConfigError, match="initial.q"):
            ScenarioConfig.parse("initial.q = 1, x")

    def test_missing_file(self, tmp_path):
        """场景文件不存在时报错"""
        with pytest.raises(ConfigError, match="不存在"):
            ScenarioConfig.from_file(str(tmp_path / "missing.txt"))
