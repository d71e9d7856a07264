"""CLI 命令行入口模块"""


def routh_main() -> int:
    """懒加载 routh CLI 入口，避免 -m 执行时重复导入告警。"""
    from cli.routh import main

    return main()


__all__ = ["routh_main"]
