def scan(values):
    found = -1
    for i, v in enumerate(values):
        if v < 0:
            found = i
            break
        print(v)
    return found


def scan2(values):
    found = -1
    for i, v in enumerate(values):
        if v < 0:
            found = i
            break
        print(v)
    return found


def counter():
    count = 0

    def inc():
        nonlocal count
        count += 1
        return count

    inc()
    inc()
    return count


def counter2():
    total = 0

    def inc():
        nonlocal total
        total += 1
        return total

    inc()
    inc()
    return total


def two_outputs(p):
    q = p + 1
    r = p + 2
    return q * r


def two_outputs2(p):
    q = p + 1
    r = p + 2
    return q - r


vals = list(map(int, input().split()))
print(scan(vals), scan2(vals[::-1]), counter(), counter2(), two_outputs(3), two_outputs2(4))
