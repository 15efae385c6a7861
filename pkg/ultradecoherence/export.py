''' Writers for result files

Tables are written as CSV with a header row and numbers in 17 significant
digits. Summary values follow the table as ``# key = value`` lines.

Functions
---------
write_table(frame, path, summary)
    Write a DataFrame as CSV.
write_plot_data(frame, path)
    Write a DataFrame as a gnuplot-compatible data file.
write_json(data, path)
    Write JSON atomically.
trajectories_to_frame(trajectories)
    Tabulate first-click trajectories.
'''

import json
import logging
import os

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


FLOAT_FORMAT = "%.17g"



def _format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


def write_table(frame: pd.DataFrame, path, summary: Mapping[str, object] = None) -> Path:
    ''' Write a table as CSV.

    Parameters
    ----------
    frame : DataFrame
    path : str or Path
    summary : dict, optional
        Values appended after the table as ``# key = value`` lines.

    Returns
    -------
    Path
    '''

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    if summary:
        with open(path, "a") as handle:
            for key, value in summary.items():
                handle.write("# {0} = {1}\n".format(key, _format_value(value)))
    logger.debug("Wrote %s (%d rows)", path, len(frame))
    return path


def write_plot_data(frame: pd.DataFrame, path) -> Path:
    '''Write the numeric columns as a whitespace separated file with a commented header.'''
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    numeric = frame.select_dtypes(include=[np.number, bool]).astype(float)
    np.savetxt(path, numeric.to_numpy(), fmt=FLOAT_FORMAT, header=" ".join(numeric.columns))
    return path


def write_json(data, path) -> Path:
    ''' Write JSON atomically.

    The data is written to a temporary file in the same directory, which
    is then moved into place.
    '''

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temporary = path.with_name(path.name + ".tmp")
    with open(temporary, "w") as handle:
        json.dump(data, handle, indent=2, sort_keys=True, default=_format_value)
        handle.write("\n")
    os.replace(temporary, path)
    return path


def trajectories_to_frame(trajectories: Sequence) -> pd.DataFrame:
    ''' Tabulate trajectories.

    Returns
    -------
    DataFrame
        Columns seed_index, censored, t_click and to_level; t_click is
        empty and to_level is -1 for censored trajectories.
    '''

    return pd.DataFrame({
        "seed_index": [trajectory.index for trajectory in trajectories],
        "censored": [int(not trajectory.events) for trajectory in trajectories],
        "t_click": [trajectory.t_click if trajectory.events else np.nan for trajectory in trajectories],
        "to_level": [trajectory.to_level for trajectory in trajectories],
    })
