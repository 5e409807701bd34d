import numpy as np


def check_fit(fit):
    """Hard solver invariants, applied to every fit the tests produce.

    The objective trace must never increase and every accepted iterate's
    surrogate must sit at or above the loss — zero tolerance on both.
    """
    trace = np.asarray(fit.objective_trace)
    assert np.all(np.isfinite(trace))
    assert np.all(np.diff(trace) <= 0.0), "objective trace increased"
    gaps = np.asarray(fit.surrogate_gaps)
    assert np.all(gaps >= 0.0), "surrogate fell below the loss at an accepted iterate"
    return fit
