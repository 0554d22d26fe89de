"""Publication-style figures from kianc CSV results.

Consumes only the documented CSV schemas (convergence, sweep, perturb,
field); no in-process coupling to the simulation package. Input files are
never modified and rendering a figure twice produces the same image file.
"""

__version__ = "0.1.0"

from .plots import (
    FigureSpec,
    SchemaError,
    plot_convergence,
    plot_field_heatmap,
    plot_perturb,
    plot_sweep,
    read_csv,
    render,
)
