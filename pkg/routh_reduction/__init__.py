"""
Routh Reduction - 带对称性拉格朗日系统的 Routh 约化与重建

数值实现 Routhian 约化、内蕴约束系统、正则约化、轨迹重建与预辛检验，
并附带若干内置力学系统。
"""

import re
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

_DEV_VERSION = "0.0.0-dev"
_VERSION_PATTERN = re.compile(r'^\[project\][^\[]*?^version\s*=\s*["\']([^"\']+)["\']', re.MULTILINE | re.DOTALL)


def _resolve_version() -> str:
    """源码树中取 pyproject.toml 的版本号，否则取安装包元数据"""
    pyproject = Path(__file__).resolve().parent.parent / "pyproject.toml"
    if pyproject.is_file():
        found = _VERSION_PATTERN.search(pyproject.read_text(encoding="utf-8"))
        if found:
            return found.group(1)
    try:
        return version("routh-reduction")
    except PackageNotFoundError:
        return _DEV_VERSION


__version__ = _resolve_version()

from routh_reduction.core.lagrangian import LagrangianSystem, integrate_full  # noqa: E402
from routh_reduction.core.routh import integrate_reduced, reduce, regular_reduce  # noqa: E402
from routh_reduction.systems import get_system, list_systems  # noqa: E402

__all__ = [
    "LagrangianSystem",
    "get_system",
    "integrate_full",
    "integrate_reduced",
    "list_systems",
    "reduce",
    "regular_reduce",
    "__version__",
]
