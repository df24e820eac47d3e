"""
相位求解
由 b 与 c 两组 B 矩阵求单位模相位 u_1..u_n, v_n，使 c_ij = u_i · conj(w_j) · b_ij，
其中 w_j = u_j（j < n 或 λ_n > 0），w_n = v_n（λ_n = 0）
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np

from src.config import ToleranceConfig, resolve_tolerances
from src.errors import DimensionMismatch, InconsistentPhases
from src.invariants.singular_frame import BStack

logger = logging.getLogger(__name__)

Node = Tuple[str, int]


@dataclass(frozen=True, eq=False)
class PhaseAssignment:
    """u_1..u_n 与 v_n（λ_n > 0 时 v_n = u_n）"""

    u: np.ndarray
    v_n: complex
    residual: float
    components: int

    @property
    def column_phases(self) -> np.ndarray:
        """W₂ 的对角线 (u_1..u_{n−1}, v_n)"""
        w = self.u.copy()
        w[-1] = self.v_n
        return w


def _column_node(j: int, n: int, null_last: bool) -> Node:
    return ("v", j) if (null_last and j == n - 1) else ("u", j)


def _constraint_graph(b: BStack, c: BStack, zero_tol: float) -> nx.Graph:
    """非零 b 元对应一条边，边上记录第一个 (l, i, j) 给出的比值 c/b"""
    n = b.n
    G = nx.Graph()
    G.add_nodes_from(("u", i) for i in range(n))
    if b.null_last:
        G.add_node(("v", n - 1))

    for l, i, j in zip(*np.nonzero(np.abs(b.mats) > zero_tol)):
        row, col = ("u", int(i)), _column_node(int(j), n, b.null_last)
        if row == col or G.has_edge(row, col):
            continue
        G.add_edge(row, col, row=row, ratio=c.mats[l, i, j] / b.mats[l, i, j], label=(int(l), int(i), int(j)))
    return G


def solve_phases(
    b: BStack, c: BStack, tols: Optional[ToleranceConfig] = None
) -> PhaseAssignment:
    """
    按连通分量求相位

    每个分量中排序最小的节点取 1，沿 BFS 树用边上的比值传播；
    最后对全部 (l, i, j) 验证 |c − u_i conj(w_j) b| ≤ τ_eq。

    Raises:
        InconsistentPhases: 存在残差超过 τ_eq 的约束
    """
    tols = resolve_tolerances(tols)
    if b.n != c.n or b.N != c.N:
        raise DimensionMismatch(f"B 组形状不同: ({b.N},{b.n}) vs ({c.N},{c.n})")
    n = b.n

    G = _constraint_graph(b, c, tols.zero_tol)
    phase: Dict[Node, complex] = {}
    components: List[set] = sorted(nx.connected_components(G), key=min)
    for comp in components:
        root = min(comp)
        phase[root] = 1.0 + 0j
        for parent, child in nx.bfs_edges(G, root, sort_neighbors=sorted):
            edge = G.edges[parent, child]
            ratio = edge["ratio"] / abs(edge["ratio"]) if edge["ratio"] != 0 else 1.0
            if edge["row"] == parent:
                phase[child] = phase[parent] / ratio
            else:
                phase[child] = phase[parent] * ratio

    u = np.array([phase[("u", i)] for i in range(n)], dtype=complex)
    v_n = phase[("v", n - 1)] if b.null_last else u[-1]
    w = u.copy()
    w[-1] = v_n

    predicted = u[None, :, None] * b.mats * np.conj(w)[None, None, :]
    residual = float(np.max(np.abs(predicted - c.mats))) if b.N else 0.0
    diag_residual = float(np.max(np.abs(b.diag - c.diag))) if n else 0.0
    residual = max(residual, diag_residual)
    if residual > tols.tol:
        raise InconsistentPhases(f"相位约束残差 {residual:.3e} 超过 τ_eq={tols.tol:.1e}")

    logger.debug(f"相位求解完成: {len(components)} 个连通分量, 残差 {residual:.3e}")
    return PhaseAssignment(u=u, v_n=complex(v_n), residual=residual, components=len(components))
