"""
ResGS 命令行入口

等价于安装后的 `resgs` 命令，例如：
    python main.py make-synthetic --out data/desk
    python main.py train --data data/desk/manifest.json --preset resgs --out runs/resgs
"""

import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
