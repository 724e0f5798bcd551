# running maximum
def best(xs):
    run = top = 0
    for x in xs:
        run += x
        top = max(top, run)
    return top


print(best(map(int, input().split())))
