from functools import lru_cache
import sys


@lru_cache(maxsize=None)
def paths(r, c):
    if r == 0 or c == 0:
        return 1
    return paths(r - 1, c) + paths(r, c - 1)


a, b = map(int, input().split())
print(paths(a, b))
