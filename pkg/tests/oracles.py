"""Brute-force reference implementations used to pin the fast code.

Everything here is deliberately naive: quadratic loops, scalar math, no
shared code with the package beyond plain numbers.  Each oracle states
the contract it checks; the real implementations must match these cell
for cell and pair for pair.
"""
import heapq
import math

SQRT2 = math.sqrt(2.0)


def half_away(x: float) -> int:
    if x >= 0.0:
        return int(math.floor(x + 0.5))
    return -int(math.floor(-x + 0.5))


def band_cost(d: float, source: int, r_ins: float, r_infl: float, alpha: float) -> int:
    """Inflation band value at center distance d from one source cell."""
    if d == 0.0:
        return source
    if d <= r_ins:
        return source - 1
    if d <= r_infl:
        return half_away((source - 1) * math.exp(-alpha * (d - r_ins)))
    return 0


def inflate_all_pairs(grid, resolution, r_ins, r_infl, alpha):
    """Max band contribution over every (cell, source) pair.

    grid is a list of rows of ints in [0, 255]; every cell >= 1 acts as a
    source.  Distance is sqrt of the integer squared cell offset times
    resolution, which fixes which side of a band boundary a borderline
    cell lands on; the only discontinuous boundary is r_infl.
    """
    h, w = len(grid), len(grid[0])
    sources = [
        (x, y, grid[y][x]) for y in range(h) for x in range(w) if grid[y][x] >= 1
    ]
    out = [[0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            best = grid[y][x]
            for sx, sy, sv in sources:
                d = math.sqrt((x - sx) ** 2 + (y - sy) ** 2) * resolution
                c = band_cost(d, sv, r_ins, r_infl, alpha)
                if c > best:
                    best = c
            out[y][x] = best
    return out


def proxemic_point(dx, dy, heading, speed, c_h, sigma0, beta):
    """Comfort-field value at offset (dx, dy) from the human (world frame)."""
    ch, sh = math.cos(heading), math.sin(heading)
    xp = ch * dx + sh * dy
    yp = -sh * dx + ch * dy
    sx = sigma0 * (1.0 + beta * speed) if xp >= 0.0 else sigma0
    raw = c_h * math.exp(-(xp * xp / (2.0 * sx * sx) + yp * yp / (2.0 * sigma0 * sigma0)))
    if raw < 1.0:
        return 0
    return half_away(raw)


def cmp_pair(a1: int, b1: int, a2: int, b2: int) -> int:
    """Sign of (a1 - a2) + (b1 - b2) * sqrt(2), exactly."""
    da, db = a1 - a2, b1 - b2
    if da == 0 and db == 0:
        return 0
    if da >= 0 and db >= 0:
        return 1
    if da <= 0 and db <= 0:
        return -1
    if da > 0:
        return 1 if da * da > 2 * db * db else -1
    return -1 if da * da > 2 * db * db else 1


def edge_pair(straight: bool, ca: int, cb: int, p: int, q: int):
    """Scaled edge cost (a, b) meaning (a + b*sqrt(2)) / (510 q) cells."""
    if straight:
        return 510 * q + p * (ca + cb), 0
    return p * (ca + cb), 510 * q


def path_pair(cells, grid, p, q):
    """Exact scaled cost of a concrete cell sequence."""
    a = b = 0
    for (x0, y0), (x1, y1) in zip(cells, cells[1:]):
        straight = (x0 == x1) or (y0 == y1)
        ea, eb = edge_pair(straight, grid[y0][x0], grid[y1][x1], p, q)
        a += ea
        b += eb
    return a, b


def dijkstra_pairs(grid, start, goal, p: int, q: int):
    """Min scaled path cost from start to goal as an exact (a, b) pair.

    Forward search (the implementation roots at the goal), float heap
    keys for pop order, exact pairs for improvement decisions.  For the
    grid sizes these tests use, distinct pair values are separated by
    far more than the float key's rounding error, so pop order is the
    true order.  Returns None when the goal is unreachable; the start
    cell being impassable is the caller's concern.
    """
    h, w = len(grid), len(grid[0])
    sx, sy = start
    gx, gy = goal
    if grid[gy][gx] >= 254:
        return None
    if (sx, sy) == (gx, gy):
        return (0, 0)
    dist = {(sx, sy): (0, 0)}
    heap = [(0.0, (sx, sy))]
    done = set()
    while heap:
        _, cell = heapq.heappop(heap)
        if cell in done:
            continue
        done.add(cell)
        if cell == (gx, gy):
            return dist[cell]
        x, y = cell
        ca = grid[y][x]
        da, db = dist[cell]
        for dxy in ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)):
            nx, ny = x + dxy[0], y + dxy[1]
            if not (0 <= nx < w and 0 <= ny < h):
                continue
            cb = grid[ny][nx]
            if cb >= 254:
                continue
            straight = dxy[0] == 0 or dxy[1] == 0
            ea, eb = edge_pair(straight, ca, cb, p, q)
            na, nb = da + ea, db + eb
            old = dist.get((nx, ny))
            if old is None or cmp_pair(na, nb, old[0], old[1]) < 0:
                dist[(nx, ny)] = (na, nb)
                heapq.heappush(heap, (na + nb * SQRT2, (nx, ny)))
    return None


def random_cost_grid(rng, max_side: int = 15):
    """Small random grid mixing free, permeable, and impassable cells."""
    w = rng.randint(2, max_side)
    h = rng.randint(2, max_side)
    grid = []
    for _ in range(h):
        row = []
        for _ in range(w):
            r = rng.random()
            if r < 0.45:
                row.append(0)
            elif r < 0.75:
                row.append(rng.randint(1, 253))
            elif r < 0.85:
                row.append(254)
            else:
                row.append(255)
        grid.append(row)
    return grid
