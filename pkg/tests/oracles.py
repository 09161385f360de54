"""Hand-transcribed reference data shared by several test modules."""

# the printed octonion table, row e_i times column e_j, as signed indices
OCTONION_TABLE = [
    [-0, 4, 5, -2, -3, -7, 6],
    [-4, -0, 6, 1, 7, -3, -5],
    [-5, -6, -0, -7, 1, 2, 4],
    [2, -1, 7, -0, -6, 5, -3],
    [3, -7, -1, 6, -0, -4, 2],
    [7, 3, -2, -5, 4, -0, -1],
    [-6, 5, -4, 3, -2, 1, -0],
]


def table_entry(i, j):
    """(sign, index) of e_i e_j read off the printed table."""
    v = OCTONION_TABLE[i - 1][j - 1]
    if i == j:
        return (-1, 0)
    return (1 if v > 0 else -1, abs(v))
