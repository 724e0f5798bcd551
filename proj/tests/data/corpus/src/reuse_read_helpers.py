import sys

tokens = sys.stdin.read().split()
pos = 0


def read_int():
    global pos
    value = tokens[pos]
    pos += 1
    return int(value)


def read_pair(scale):
    a = read_int()
    b = read_int()
    t = a + scale
    print(t * 2)
    return a, b


def read_triple(factor):
    x = read_int()
    y = read_int()
    u = x + factor
    print(u * 2)
    z = read_int()
    return x, y, z


print(read_pair(1), read_triple(3))
