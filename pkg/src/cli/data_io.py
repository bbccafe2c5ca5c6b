"""
CSV ingestion and output for the command line tool.

read_scores(path) - one score per line, optional 'score' header.
read_feature_row(path) - scores of one test feature over the labels, optional weight column.
read_score_matrix(path) - header of label grid values, one accessible point per row.
read_accessible_data(path) - feature columns and a label column of accessible records.
read_label_grid(path) - one label per line.
write_grid(frame, path, seed) - experiment records as CSV after a seed comment line.
write_report(report, stream) - a pydantic report as JSON.
"""

import sys

import numpy as np
import pandas as pd

from ..errors import DataError

SEED_COMMENT = "# seed="


def _read_table(path):
    try:
        table = pd.read_csv(path, header=None, dtype=str, skip_blank_lines=True, skipinitialspace=True)
    except pd.errors.EmptyDataError as error:
        raise DataError(f"{path} is empty") from error

    # A first row that is not numeric is a header
    first = pd.to_numeric(table.iloc[0], errors="coerce")
    if first.isna().any():
        table = table.iloc[1:]
    if table.empty:
        raise DataError(f"{path} has no data rows")

    try:
        values = table.apply(pd.to_numeric).to_numpy(dtype=float)
    except ValueError as error:
        raise DataError(f"{path} holds a value that is not a number: {error}") from error
    if np.isnan(values).any():
        raise DataError(f"{path} has missing values")
    return values


def read_scores(path):
    """
    Read accessible non-conformity scores

    Args:
        path, str: CSV file with one score per line

    Returns:
        np.ndarray: The scores in file order
    """
    values = _read_table(path)
    if values.shape[1] != 1:
        raise DataError(f"{path} must have a single score column, found {values.shape[1]}")
    return values[:, 0]


def read_feature_row(path):
    """
    Read the scores R(x, y_j) of one test feature

    Args:
        path, str: CSV with a score column and an optional weight column

    Returns:
        tuple: (scores, weights), weights is None for the counting measure
    """
    values = _read_table(path)
    if values.shape[1] == 1:
        return values[:, 0], None
    if values.shape[1] == 2:
        return values[:, 0], values[:, 1]
    raise DataError(f"{path} must have a score column and at most a weight column")


def read_score_matrix(path):
    """
    Read scores of accessible points over a label grid

    Args:
        path, str: CSV whose header row holds the label grid values

    Returns:
        tuple: (label_grid, scores) with scores of shape k x G
    """
    try:
        table = pd.read_csv(path, skipinitialspace=True)
    except pd.errors.EmptyDataError as error:
        raise DataError(f"{path} is empty") from error
    if table.empty:
        raise DataError(f"{path} has no data rows")

    try:
        label_grid = np.array([float(label) for label in table.columns])
        scores = table.apply(pd.to_numeric).to_numpy(dtype=float)
    except ValueError as error:
        raise DataError(f"{path} holds a value that is not a number: {error}") from error
    if np.isnan(scores).any():
        raise DataError(f"{path} has missing values")
    return label_grid, scores


def read_accessible_data(path):
    """
    Read accessible (feature..., label) records

    Args:
        path, str: CSV with a header row, the 'label' column (the last column when no
            column is called label) holds the labels and every other column a feature

    Returns:
        tuple: (features, labels), features of shape k x d
    """
    try:
        table = pd.read_csv(path, skipinitialspace=True)
    except pd.errors.EmptyDataError as error:
        raise DataError(f"{path} is empty") from error
    if table.empty:
        raise DataError(f"{path} has no data rows")
    if table.shape[1] < 2:
        raise DataError(f"{path} needs at least one feature column and a label column")

    label_column = "label" if "label" in table.columns else table.columns[-1]
    try:
        labels = pd.to_numeric(table[label_column]).to_numpy(dtype=float)
        features = table.drop(columns=[label_column]).apply(pd.to_numeric).to_numpy(dtype=float)
    except ValueError as error:
        raise DataError(f"{path} holds a value that is not a number: {error}") from error
    if np.isnan(labels).any() or np.isnan(features).any():
        raise DataError(f"{path} has missing values")
    return features, labels


def read_label_grid(path):
    """
    Read a label grid, one label per line
    """
    values = _read_table(path)
    if values.shape[1] != 1:
        raise DataError(f"{path} must have a single label column, found {values.shape[1]}")
    return values[:, 0]


def write_grid(frame, path=None, seed=None):
    """
    Write experiment records, to stdout when no path is given

    Args:
        frame, pd.DataFrame: Records of run_grid
        path, str or file: Destination, a path or an open text stream
        seed, int: Master seed, written first as a '# seed=' comment line
    """
    if isinstance(path, str):
        with open(path, "w", newline="") as handle:
            _write_records(frame, handle, seed)
    else:
        _write_records(frame, sys.stdout if path is None else path, seed)


def _write_records(frame, stream, seed):
    if seed is not None:
        stream.write(f"{SEED_COMMENT}{seed}\n")
    frame.to_csv(stream, index=False, lineterminator="\n")


def write_report(report, stream=None):
    stream = sys.stdout if stream is None else stream
    stream.write(report.model_dump_json(indent=2))
    stream.write("\n")
