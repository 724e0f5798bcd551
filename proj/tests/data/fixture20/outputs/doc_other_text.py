def mean(xs):
    """Average value."""
    return sum(xs) / len(xs)


print(mean(list(map(int, input().split()))))
