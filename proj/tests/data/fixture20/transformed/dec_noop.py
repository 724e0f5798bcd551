import functools


def cost(i):
    return 0 if i == 0 else cost(i - 1) + i % 3


print(cost(int(input())))
