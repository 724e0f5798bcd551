def area(w, h):
    return w * h


print(area(*map(int, input().split())))
