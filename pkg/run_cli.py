#!/usr/bin/env python
"""
命令行启动脚本
"""

import sys
from pathlib import Path

# 添加项目根目录到Python路径
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from src.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
