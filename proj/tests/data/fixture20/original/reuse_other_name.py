def show(a):
    b = a * 3
    print(b + 1)


def tell(c):
    d = c * 3
    print(d + 1)


show(int(input()))
tell(5)
