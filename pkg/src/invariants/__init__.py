"""
不变量模块
F 类（奇异值框架、Σ 枚举、相位求解、见证）与 G 类（投影对）不变量
"""
