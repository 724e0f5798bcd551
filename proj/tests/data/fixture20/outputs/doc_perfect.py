def area(w, h):
    """Rectangle area."""
    return w * h


print(area(*map(int, input().split())))
