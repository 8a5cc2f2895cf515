"""File persistence helpers."""

from .atomic import dumps_json, read_json, write_json_atomic, write_text_atomic
from .tables import (
    read_data_matrix_csv,
    read_trajectory_csv,
    write_data_matrix_csv,
    write_plot_data,
    write_table_csv,
    write_trajectory_csv,
)

__all__ = [
    "dumps_json",
    "read_data_matrix_csv",
    "read_json",
    "read_trajectory_csv",
    "write_data_matrix_csv",
    "write_json_atomic",
    "write_plot_data",
    "write_table_csv",
    "write_text_atomic",
    "write_trajectory_csv",
]
