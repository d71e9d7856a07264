"""日志模块测试"""

import logging

import pytest

from routh_reduction.utils.config import config
from routh_reduction.utils.logger import get_logger, log_duration, set_log_level


@pytest.fixture(autouse=True)
def restore_level():
    yield
    set_log_level(config.log_level)


class TestGetLogger:
    """获取日志记录器"""

    def test_handlers_not_duplicated(self):
        first = get_logger("routh_reduction.test_logger.dup")
        second = get_logger("routh_reduction.test_logger.dup")
        assert first is second
        assert len(first.handlers) == 1

    def test_level_from_config(self, monkeypatch):
        monkeypatch.setattr(config, "log_level", "warning")
        logger = get_logger("routh_reduction.test_logger.level")
        assert logger.level == logging.WARNING

    def test_log_file(self, monkeypatch, tmp_path):
        """配置了日志文件时同时写入文件"""
        path = tmp_path / "routh.log"
        monkeypatch.setattr(config, "log_file", str(path))
        logger = get_logger("routh_reduction.test_logger.file")
        assert len(logger.handlers) == 2
        logger.warning("写入文件")
        for handler in logger.handlers:
            handler.flush()
            handler.close()
        assert "写入文件" in path.read_text(encoding="utf-8")


class TestSetLogLevel:
    def test_applies_to_package_loggers_only(self):
        ours = get_logger("routh_reduction.test_logger.ours")
        other = logging.getLogger("some_other_package.test_logger")
        other.setLevel(logging.INFO)

        set_log_level("ERROR")
        assert ours.level == logging.ERROR
        assert all(handler.level == logging.ERROR for handler in ours.handlers)
        assert other.level == logging.INFO

    def test_unknown_level(self):
        with pytest.raises(AttributeError):
            set_log_level("LOUD")


class TestLogDuration:
    """代码块计时"""

    def test_elapsed_recorded(self, caplog):
        logger = get_logger("routh_reduction.test_logger.timing")
        with caplog.at_level(logging.INFO, logger=logger.name):
            with log_duration(logger, "全系统积分") as timing:
                sum(range(1000))
        assert timing["elapsed"] >= 0.0
        assert any("全系统积分: 用时" in record.getMessage() for record in caplog.records)

    def test_logged_on_error(self, caplog):
        """代码块抛出异常时仍记录耗时"""
        logger = get_logger("routh_reduction.test_logger.error")
        with caplog.at_level(logging.INFO, logger=logger.name):
            with pytest.raises(ValueError):
                with log_duration(logger, "失败的积分"):
                    raise ValueError("boom")
        assert any("失败的积分" in record.getMessage() for record in caplog.records)

    def test_custom_level_filtered(self, caplog):
        logger = get_logger("routh_reduction.test_logger.debug")
        with caplog.at_level(logging.INFO, logger=logger.name):
            with log_duration(logger, "细节", level=logging.DEBUG):
                pass
        assert not any("细节" in record.getMessage() for record in caplog.records)
