# -*- coding: utf-8 -*-
# This software is under the MIT License

"""svctune python library.

This package selects the regularization parameter C of a logistic-loss SVC
by solving the bilevel cross-validation program with a smoothing Newton
method, next to a grid-search baseline.
"""

from .baselines import GridSpec, grid_search, solve_lower
from .commands import SvcTuneCmd
from .cv_driver import TuneResult, run_compare, run_grid, run_sncv
from .dataio import Dataset, DatasetError, SplitPlan, make_split, parse_libsvm
from .newton_solver import SolveReport, SolverConfig, SolverError, solve
from .sys_utils import VERSION as __version__

__all__ = (
    'Dataset',
    'DatasetError',
    'GridSpec',
    'SolveReport',
    'SolverConfig',
    'SolverError',
    'SplitPlan',
    'SvcTuneCmd',
    'TuneResult',
    'grid_search',
    'make_split',
    'parse_libsvm',
    'run_compare',
    'run_grid',
    'run_sncv',
    'solve',
    'solve_lower',
)
