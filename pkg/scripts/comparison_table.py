"""Print ζ_opt and the gain over the plain drive for the four drive configurations."""
import argparse

import numpy as np

from ringsense.core import SystemParams
from ringsense.sensitivity import comparison_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("powers", nargs="*", type=float, default=[12.4e-18, 12.4e-15, 1e-12, 1e-11], help="input powers in W")
    args = ap.parse_args()
    rep = comparison_suite(SystemParams(), np.array(args.powers))
    names = list(rep.zeta)
    print("power_W," + ",".join(f"zeta_{n},gain_db_{n}" for n in names))
    for i, P in enumerate(rep.powers):
        print(f"{P:.4e}," + ",".join(f"{rep.zeta[n][i]:.6e},{rep.enhancement_db[n][i]:.4f}" for n in names))


if __name__ == "__main__":
    main()
