from .frame import ResultFrame, ResultFrameError
from .plots import plot_error_vs_m, plot_error_vs_nu

__all__ = ["ResultFrame", "ResultFrameError", "plot_error_vs_m", "plot_error_vs_nu"]
