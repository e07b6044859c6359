"""Run the identity battery on two grids and print the residual table.

Usage: python demos/identity_battery.py
"""

from axbl.battery import identity_battery
from axbl.spectral import GridSpec


def main():
    grids = [GridSpec(64, 8.0), GridSpec(128, 8.0)]
    tables = [identity_battery(g) for g in grids]
    print(f"{'identity':38s}" + "".join(f"{'n=' + str(g.n):>12s}" for g in grids) + "   tolerance")
    for rows in zip(*tables):
        vals = "".join(f"{r['value']:12.2e}" for r in rows)
        flags = "" if all(r["pass"] for r in rows) else "   <- fails on a grid"
        print(f"{rows[0]['identity']:38s}{vals}   {rows[0]['tolerance']}{flags}")


if __name__ == "__main__":
    main()
