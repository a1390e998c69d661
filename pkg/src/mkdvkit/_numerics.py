"""Small numerical helpers shared across modules."""

import numpy as np
from scipy.integrate import cumulative_simpson


def cumulative_simpson_complex(y, x, axis=0):
    """Running integral ∫_{x0}^{x} y, starting at 0; complex-safe wrapper of scipy's rule."""
    y = np.asarray(y)
    if np.iscomplexobj(y):
        return (cumulative_simpson(y.real, x=x, axis=axis, initial=0)
                + 1j * cumulative_simpson(y.imag, x=x, axis=axis, initial=0))
    return cumulative_simpson(y, x=x, axis=axis, initial=0)
