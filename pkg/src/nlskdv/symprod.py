"""Elementary symmetric polynomials of short real lists.

The characteristic polynomial of the coupled sound-speed problem is a signed
combination of elementary symmetric polynomials e_k of rescaled diagonal
entries, so these need to be available for every order k = 0..N at once.
Evaluation uses the Newton-triangle recurrence

    e_k(x_1..x_n) = e_k(x_1..x_{n-1}) + x_n * e_{k-1}(x_1..x_{n-1}),

which is O(N*k) and numerically stable for the O(1)-O(1e2) magnitudes that
occur here.  Subset enumeration is only ever used as a test oracle.
"""

import numpy as np

__all__ = ["elem_sym", "elem_sym_all"]


def _as_list(values) -> np.ndarray:
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 1:
        raise ValueError("expected a 1-d list of reals")
    if vals.size and not np.all(np.isfinite(vals)):
        raise ValueError("list entries must be finite")
    return vals


def elem_sym_all(values) -> np.ndarray:
    """All elementary symmetric polynomials e_0..e_N of a list of N reals.

    Entry k is the sum over all k-subsets of products of entries; e_0 = 1
    (empty product), so the result always has length N + 1.
    """
    vals = _as_list(values)
    n = vals.size
    e = np.zeros(n + 1)
    e[0] = 1.0
    for i in range(n):
        # descending order so e[j-1] is still the previous row's value
        for j in range(i + 1, 0, -1):
            e[j] += vals[i] * e[j - 1]
    return e


def elem_sym(values, k: int) -> float:
    """Elementary symmetric polynomial e_k of a list of reals.

    e_0 = 1 for any list (including the empty one) and e_k = 0 for k > N.
    """
    if k < 0:
        raise ValueError("order k must be non-negative")
    vals = _as_list(values)
    n = vals.size
    if k == 0:
        return 1.0
    if k > n:
        return 0.0
    # same triangle as elem_sym_all, truncated at order k
    e = np.zeros(k + 1)
    e[0] = 1.0
    for i in range(n):
        for j in range(min(i + 1, k), 0, -1):
            e[j] += vals[i] * e[j - 1]
    return float(e[k])
