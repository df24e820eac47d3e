"""
实例生成模块
Werner、d-可计算样例与随机 F/G 类态
"""
