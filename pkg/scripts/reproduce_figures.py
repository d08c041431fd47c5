"""Write the spread-curve CSVs behind the ten credit-spread figures.

    python scripts/reproduce_figures.py [--out-dir figures] [--points 50] [--figures 1,4]

Each figure becomes a directory ``figure<N>/`` holding one CSV per swept
value (columns ``t,price,spread,interval``).  Nothing is plotted.
"""

import argparse
import sys
import time
from pathlib import Path

from hobinary.cli import FIGURES, main as cli_main


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--out-dir", default="figures")
    parser.add_argument("--points", type=int, default=50)
    parser.add_argument("--figures", default=",".join(map(str, FIGURES)))
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)
    for figure in (int(f) for f in args.figures.split(",")):
        start = time.perf_counter()
        target = Path(args.out_dir) / f"figure{figure}"
        code = cli_main(["spread-curve", "--figure", str(figure), "--points", str(args.points),
                         "--workers", str(args.workers), "--out-dir", str(target)])
        if code:
            return code
        print(f"figure {figure}: {FIGURES[figure][0]} sweep in {time.perf_counter() - start:.1f}s",
              file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
