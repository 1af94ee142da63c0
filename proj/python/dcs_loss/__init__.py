"""Denoising cosine-similarity loss: estimators, losses and the theory checks."""

import json

from ._dcs import (
    DcsError,
    blind_spot_mask,
    check_ids,
    cs_loss,
    dcs_approx_weight,
    dcs_loss,
    dcs_loss_approx,
    estimate_c,
    estimate_k,
    k_closed_form,
    mse_loss,
    n2v_loss,
    run_experiment_csv,
    tau_amn_mask,
    theorem2_bound,
)

__all__ = [
    "DcsError",
    "blind_spot_mask",
    "check_ids",
    "cs_loss",
    "dcs_approx_weight",
    "dcs_loss",
    "dcs_loss_approx",
    "estimate_c",
    "estimate_k",
    "k_closed_form",
    "mse_loss",
    "n2v_loss",
    "run_experiment_csv",
    "tau_amn_mask",
    "theorem2_bound",
    "verify",
]


def verify(check="all", seed=0):
    """Run a theory check (or all of them); returns a list of report dicts."""
    from ._dcs import verify_json

    return json.loads(verify_json(check, seed))
