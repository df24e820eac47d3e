"""
Σ 定义域与 I 值
沿互异下标路径的 B 矩阵元乘积之比：
I(i, j, l, m) = b^{(l_1)}_{i_1 i_2} … b^{(l_k)}_{i_k i_{k+1}} / b^{(m_1)}_{j_1 j_2} … b^{(m_r)}_{j_r j_{r+1}}
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.config import EnumerationConfig, ToleranceConfig, get_settings, resolve_tolerances
from src.errors import EnumerationTooLarge
from src.invariants.singular_frame import BStack

logger = logging.getLogger(__name__)


class SigmaDomain(str, Enum):
    """Σ 的两种取法"""

    MATCHED = "matched"  # 首尾下标相同，分母非零（判定用）
    OPEN = "open"  # 首尾不约束，分子分母均非零（列表展示用）


class SigmaIndex(NamedTuple):
    """Σ 中的一个元素，下标与标签均从 1 开始"""

    i_path: Tuple[int, ...]
    j_path: Tuple[int, ...]
    l_labels: Tuple[int, ...]
    m_labels: Tuple[int, ...]

    def key(self) -> tuple:
        """规范排序键 (k, i, r, j, l, m)"""
        return (
            len(self.l_labels),
            self.i_path,
            len(self.m_labels),
            self.j_path,
            self.l_labels,
            self.m_labels,
        )


@dataclass(frozen=True, eq=False)
class SigmaTable:
    """按规范顺序排列的 Σ 元素及其 I 值"""

    domain: SigmaDomain
    entries: Tuple[SigmaIndex, ...]
    values: np.ndarray
    borderline: int = 0

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class _Walk:
    path: Tuple[int, ...]
    labels: Tuple[Tuple[int, ...], ...]
    values: np.ndarray


def _walks(stack: BStack, domain: SigmaDomain) -> List[_Walk]:
    """所有互异下标路径及其各标签组合下的乘积（路径按 (k, path) 字典序）"""
    n, N = stack.n, stack.N
    walks: List[_Walk] = []
    for k in range(1, n):
        labels = tuple(itertools.product(range(1, N + 1), repeat=k))
        for path in itertools.permutations(range(n), k + 1):
            if domain is SigmaDomain.MATCHED and stack.null_last and (n - 1) in path[1:-1]:
                continue
            values = np.ones(1, dtype=complex)
            for a, b in zip(path, path[1:]):
                values = np.multiply.outer(values, stack.mats[:, a, b]).ravel()
            walks.append(
                _Walk(path=tuple(p + 1 for p in path), labels=labels, values=values)
            )
    return walks


def check_enumeration_bound(
    n: int,
    N: int,
    limits: Optional[EnumerationConfig] = None,
    allow_large: bool = False,
) -> None:
    """完整枚举只在 n ≤ max_n、N ≤ max_labels 时默认开放"""
    limits = limits or get_settings().enumeration
    if allow_large:
        return
    if n > limits.max_n or N > limits.max_labels:
        raise EnumerationTooLarge(
            f"n={n}, N={N} 超过枚举上限 (n ≤ {limits.max_n}, N ≤ {limits.max_labels})，"
            f"需要 allow_large"
        )


def enumerate_sigma(
    stack: BStack,
    domain: SigmaDomain = SigmaDomain.MATCHED,
    tols: Optional[ToleranceConfig] = None,
    limits: Optional[EnumerationConfig] = None,
    allow_large: bool = False,
) -> SigmaTable:
    """
    枚举 Σ 并计算 I 值

    Args:
        stack: B_l 矩阵
        domain: MATCHED 要求 i_1 = j_1、i_{k+1} = j_{r+1}；OPEN 不约束首尾
        tols: 容差配置（τ_zero 判定分母非零）
        limits: 枚举规模上限
        allow_large: 是否放开规模上限

    Returns:
        规范顺序的 SigmaTable
    """
    tols = resolve_tolerances(tols)
    check_enumeration_bound(stack.n, stack.N, limits, allow_large)
    if stack.N == 0:
        return SigmaTable(domain=domain, entries=(), values=np.zeros(0, dtype=complex))

    walks = _walks(stack, domain)
    entries: List[SigmaIndex] = []
    chunks: List[np.ndarray] = []
    borderline = 0

    for a in walks:
        for b in walks:
            if domain is SigmaDomain.MATCHED and (
                a.path[0] != b.path[0] or a.path[-1] != b.path[-1]
            ):
                continue
            den_mag = np.abs(b.values)
            mask = np.broadcast_to(den_mag > tols.zero_tol, (len(a.values), len(b.values))).copy()
            if domain is SigmaDomain.OPEN:
                mask &= (np.abs(a.values) > tols.zero_tol)[:, None]
            if a.path == b.path:
                np.fill_diagonal(mask, False)
            rows, cols = np.nonzero(mask)
            if len(rows) == 0:
                continue
            borderline += int(np.count_nonzero(den_mag[cols] < 10 * tols.zero_tol))
            chunks.append(a.values[rows] / b.values[cols])
            entries.extend(
                SigmaIndex(a.path, b.path, a.labels[r], b.labels[c])
                for r, c in zip(rows.tolist(), cols.tolist())
            )

    if borderline:
        logger.warning(f"⚠️ Σ 中有 {borderline} 个分母模长接近 τ_zero，I 值可能不稳定")

    values = np.concatenate(chunks) if chunks else np.zeros(0, dtype=complex)
    logger.debug(f"Σ({domain.value}) 枚举完成: {len(entries)} 个元素")
    return SigmaTable(
        domain=domain, entries=tuple(entries), values=values, borderline=borderline
    )


def path_product(stack: BStack, path: Sequence[int], labels: Sequence[int]) -> complex:
    """沿 1 起下标路径的 b 乘积"""
    value = 1.0 + 0j
    for t, label in enumerate(labels):
        value *= stack.mats[label - 1, path[t] - 1, path[t + 1] - 1]
    return complex(value)


def evaluate_entries(stack: BStack, entries: Iterable[SigmaIndex]) -> np.ndarray:
    """在给定的 Σ 元素上逐个重算 I 值（分母为零处给 nan）"""
    out = []
    for idx in entries:
        den = path_product(stack, idx.j_path, idx.m_labels)
        num = path_product(stack, idx.i_path, idx.l_labels)
        out.append(num / den if den != 0 else complex("nan"))
    return np.asarray(out, dtype=complex)
