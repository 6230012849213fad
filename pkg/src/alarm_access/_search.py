"""Batched grid + golden-section maximisation of two-parameter objectives.

Every exponent in the bounds is a max over (rho, lambda) or (rho, rho1) of a
smooth function that is undefined (scored ``-inf``) outside a convex domain.
Thousands of such problems are solved at once, so the search is written
against arrays of parameters rather than one problem at a time.
"""

import numpy as np

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

# elements per grid chunk (batch * x * y)
_CHUNK = 2_000_000


def _clean(values):
    return np.where(np.isnan(values), -np.inf, values)


def _evaluate(objective, x, y, params):
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        return _clean(objective(x, y, *params))


def _golden(f, lo, hi, iters):
    """Maximise ``f`` on ``[lo, hi]`` elementwise; returns ``(arg, value)``."""
    a, b = lo.copy(), hi.copy()
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        left = fc >= fd
        # keep [a, d] where the left probe wins, [c, b] otherwise
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - GOLDEN * (b - a)
        new_d = a + GOLDEN * (b - a)
        probe = np.where(left, new_c, new_d)
        fp = f(probe)
        c, d, fc, fd = (
            np.where(left, probe, d),
            np.where(left, c, probe),
            np.where(left, fp, fd),
            np.where(left, fc, fp),
        )
    take_c = fc >= fd
    return np.where(take_c, c, d), np.where(take_c, fc, fd)


def grid_max(objective, params, x_grid, y_grid):
    """Exhaustive maximum over the product grid for each problem in the batch.

    Returns ``(best, i, j)`` with grid indices of the maximiser.
    """
    params = [np.asarray(p, dtype=float) for p in params]
    batch = params[0].shape[0]
    x_grid = np.asarray(x_grid, dtype=float)
    y_grid = np.asarray(y_grid, dtype=float)
    nx, ny = x_grid.size, y_grid.size
    best = np.full(batch, -np.inf)
    flat = np.zeros(batch, dtype=np.int64)
    step = max(1, _CHUNK // (nx * ny))
    xs = x_grid[None, :, None]
    ys = y_grid[None, None, :]
    for start in range(0, batch, step):
        sl = slice(start, start + step)
        chunk = [p[sl, None, None] for p in params]
        vals = _evaluate(objective, xs, ys, chunk).reshape(len(chunk[0]), nx * ny)
        flat[sl] = np.argmax(vals, axis=1)
        best[sl] = vals[np.arange(vals.shape[0]), flat[sl]]
    return best, flat // ny, flat % ny


def grid_refine_max(objective, params, x_grid, y_grid, refine_iters, y_pad=1):
    """Grid search followed by nested golden-section refinement.

    The best ``y`` is first profiled at every ``x`` grid point; the outer
    golden search then runs over ``x`` between the neighbours of the best
    profile point. For each outer probe the inner maximisation over ``y``
    re-scans the whole ``y`` grid and then refines within ``y_pad`` cells of
    the best column, so ridges along which the optimal ``y`` moves quickly
    with ``x`` are followed. The result is never below the grid maximum.

    Args:
        objective: ``f(x, y, *params)`` broadcasting over its arguments;
            NaN marks points outside the domain.
        params: sequence of 1-d arrays, one entry per problem.
        x_grid, y_grid: increasing 1-d grids.
        refine_iters: golden-section iterations per dimension (0 = grid only).
        y_pad: half-width, in grid cells, of the inner bracket.
    """
    params = [np.asarray(p, dtype=float) for p in params]
    x_grid = np.asarray(x_grid, dtype=float)
    y_grid = np.asarray(y_grid, dtype=float)
    best, i, _ = grid_max(objective, params, x_grid, y_grid)
    if refine_iters <= 0 or best.size == 0:
        return best
    ok = np.isfinite(best)
    if not ok.any():
        return best
    sub = [p[ok] for p in params]
    i = i[ok]
    nx, ny = x_grid.size, y_grid.size
    rows = np.arange(i.size)

    def inner(x):
        scan = _evaluate(objective, x[:, None], y_grid[None, :], [p[:, None] for p in sub])
        j = np.argmax(scan, axis=1)
        top = scan[rows, j]
        if ny == 1:
            return top
        f = lambda y: _evaluate(objective, x, y, sub)
        y_lo = y_grid[np.maximum(j - y_pad, 0)]
        y_hi = y_grid[np.minimum(j + y_pad, ny - 1)]
        return np.maximum(top, _golden(f, y_lo, y_hi, refine_iters)[1])

    if nx == 1:
        refined = inner(np.full(i.shape, x_grid[0]))
    else:
        # profile over x with y already optimised, so a ridge too narrow for
        # the coarse y grid still steers the outer bracket
        profile = np.stack([inner(np.full(i.shape, x)) for x in x_grid], axis=1)
        i = np.argmax(profile, axis=1)
        x_lo = x_grid[np.maximum(i - 1, 0)]
        x_hi = x_grid[np.minimum(i + 1, nx - 1)]
        refined = np.maximum(profile[rows, i], _golden(inner, x_lo, x_hi, refine_iters)[1])
    out = best.copy()
    out[ok] = np.maximum(best[ok], refined)
    return out
