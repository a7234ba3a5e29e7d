"""Small dense linear algebra over any scalar type (floats or jets)."""

from itertools import permutations


def _parity(perm):
    sign, seen = 1, [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def det(M):
    n = len(M)
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    total = None
    for perm in permutations(range(n)):
        term = M[0][perm[0]]
        for i in range(1, n):
            term = term * M[i][perm[i]]
        term = term if _parity(perm) > 0 else -term
        total = term if total is None else total + term
    return total


def _minor(M, i, j):
    return [[M[r][c] for c in range(len(M)) if c != j] for r in range(len(M)) if r != i]


def inverse(M):
    """Adjugate inverse; adequate for the n <= 4 matrices used here."""
    n = len(M)
    d = det(M)
    if n == 1:
        return [[1.0 / d]]
    inv_d = 1.0 / d
    return [
        [(det(_minor(M, j, i)) if (i + j) % 2 == 0 else -det(_minor(M, j, i))) * inv_d for j in range(n)]
        for i in range(n)
    ]


def matvec(M, v):
    out = []
    for row in M:
        acc = row[0] * v[0]
        for a, b in zip(row[1:], v[1:]):
            acc = acc + a * b
        out.append(acc)
    return out


def dot(u, v):
    acc = u[0] * v[0]
    for a, b in zip(u[1:], v[1:]):
        acc = acc + a * b
    return acc


def quad(M, u, v=None):
    return dot(u, matvec(M, u if v is None else v))
