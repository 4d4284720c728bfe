r"""The polarization identity for conical square functions.

For nice :math:`f, g` the double integral of
:math:`t^\beta\partial_t^\beta P_t f\,\overline{t^\beta\partial_t^\beta P_t g}`
over the cone, averaged over apices, equals a constant times
:math:`\langle f, g\rangle`.  This script evaluates both sides for a few
Laguerre expansions and prints their ratio.
"""

import os

from conetent.experiments import load_config, run_identity_check

CONFIGS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")


def show(name):
    rows = run_identity_check(load_config(os.path.join(CONFIGS, name)))
    print(name)
    for r in rows:
        ref = "" if r.reference is None else f"  reference {r.reference:.12g}"
        beta = r.descriptor.split("|")[1]
        print(f"  {beta:<9} {r.quantity:<8} {r.value:.12g}{ref}")


if __name__ == "__main__":
    show("identity-laguerre.json")
    show("identity-laguerre-orthogonal.json")
