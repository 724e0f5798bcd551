def mean(xs):
    return sum(xs) / len(xs)


print(mean(list(map(int, input().split()))))
