"""
异常定义模块

库内所有可预期的失败都以 RouthError 子类抛出，CLI 据此映射退出码
"""

from typing import Any, Dict, Optional


class RouthError(Exception):
    """库异常基类"""


class ConfigError(RouthError):
    """配置或场景文件错误"""


class NumericalDomainError(RouthError):
    """差分过程中函数值非有限"""


class IntegrationBlowupError(RouthError):
    """积分过程中向量场返回非有限值"""

    def __init__(self, message: str, last_good_time: float):
        super().__init__(f"{message} (最后有效时刻 t={last_good_time:.6g})")
        self.last_good_time = last_good_time


class ChartSingularityError(RouthError):
    """状态进入坐标卡的奇异区域"""

    def __init__(self, message: str, time: Optional[float] = None):
        suffix = f" (t={time:.6g})" if time is not None else ""
        super().__init__(f"{message}{suffix}")
        self.time = time


class SingularLagrangianError(RouthError):
    """速度 Hessian 奇异，无法写成正规形式"""

    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (条件数 {condition:.3e})")
        self.condition = condition


class NotGRegularError(RouthError):
    """系统不是 G-正则的（锁定惯性或 ξ̃-Hessian 退化）"""


class NotInvariantError(RouthError):
    """拉格朗日量或力项不满足群不变性"""

    def __init__(self, message: str, report: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.report = report or {}


class ConstraintViolationError(RouthError):
    """初始状态不在约束子流形上"""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (残差 {residual:.3e})")
        self.residual = residual


class KappaSolveError(RouthError):
    """动量方程的 Newton 迭代未收敛"""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (残差 {residual:.3e}, 迭代 {iterations} 次)")
        self.residual = residual
        self.iterations = iterations


class GaugeAnchorError(RouthError):
    """重构锚点不投影到约化曲线的起点"""

    def __init__(self, message: str, mismatch: float):
        super().__init__(f"{message} (偏差 {mismatch:.3e})")
        self.mismatch = mismatch


class DiagnosticsMissingError(RouthError):
    """轨迹缺少所需的诊断通道"""

    def __init__(self, channel: str):
        super().__init__(f"轨迹缺少诊断通道: {channel}")
        self.channel = channel


class ComparisonError(RouthError):
    """两条轨迹无法比较（坐标卡不一致等）"""


class QuotientMismatchError(RouthError):
    """迷向子代数与商坐标卡的规范纤维不一致"""
