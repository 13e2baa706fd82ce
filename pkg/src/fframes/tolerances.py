"""Default numerical tolerances.

Every check in the package reads its threshold from this table so that
reports produced with the same configuration are comparable.  The CLI
accepts overrides per run (``"tolerances"`` in the experiment config).
"""

DEFAULTS = {
    # generic absolute comparison
    "compare": 1e-9,
    # ladder monotonicity |.|_s <= |.|_{s+1}
    "monotonicity": 1e-9,
    # least_norm_solve / tilde_norm feasibility
    "feasibility": 1e-9,
    # A_s == B_s counts as tight
    "tight": 1e-9,
    # full-sum expansion residuals
    "expansion": 1e-8,
    # g_i(f_j) == delta_ij
    "biorthogonality": 1e-10,
    # relative singular value cutoff for rank decisions
    "rank": 1e-10,
    # lower bound required of inf tilde(U f) / |f|_s in check_A3
    "a3_floor": 1.0 - 1e-9,
    # ties between sign branches (relative)
    "tie": 1e-12,
}


def resolve(overrides=None):
    """Return the default table updated with ``overrides``.

    Unknown keys are rejected so that a typo in a config file does not
    silently fall back to a default.
    """
    table = dict(DEFAULTS)
    for key, value in (overrides or {}).items():
        if key not in table:
            raise KeyError(f"unknown tolerance {key!r}")
        table[key] = float(value)
    return table
