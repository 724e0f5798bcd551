def left(xs):
    s = 0
    for x in xs:
        s += x
    return s


def right(ys):
    t = 0
    for y in ys:
        t += y
    return t * 2


v = list(map(int, input().split()))
print(left(v), right(v))
