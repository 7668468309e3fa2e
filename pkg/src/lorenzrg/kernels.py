"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-Python twin is
the reference implementation and the fallback.  Set LORENZRG_BACKEND=py or
=cy to force a backend (forcing cy raises if the extension is missing).
"""

import os

from . import _kernels_py

_forced = os.environ.get("LORENZRG_BACKEND", "").strip().lower()

if _forced == "py":
    impl = _kernels_py
    BACKEND = "python"
elif _forced == "cy":
    from . import _kernels_cy as impl  # noqa: F401

    BACKEND = "compiled"
else:
    try:
        from . import _kernels_cy as impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        impl = _kernels_py
        BACKEND = "python"

zeta = impl.zeta
zeta_d = impl.zeta_d
zeta_n = impl.zeta_n
zeta_dn = impl.zeta_dn
zeta_inv = impl.zeta_inv
zeta_zoom = impl.zeta_zoom
chain_eval = impl.chain_eval
chain_deriv = impl.chain_deriv
chain_nonlin = impl.chain_nonlin
chain_inv = impl.chain_inv
q_eval = impl.q_eval
q_deriv = impl.q_deriv
q_inv = impl.q_inv
q_zoom = impl.q_zoom
lz_eval = impl.lz_eval
lz_deriv = impl.lz_deriv
lz_inv_left = impl.lz_inv_left
lz_inv_right = impl.lz_inv_right
crossing_count = impl.crossing_count
displ_left = impl.displ_left
displ_right = impl.displ_right
displ_left_grid = impl.displ_left_grid
displ_right_grid = impl.displ_right_grid
backward_left = impl.backward_left
backward_right = impl.backward_right
first_return = impl.first_return
renorm_walk = impl.renorm_walk
