s = input().split()
a = int(s[0])
b = int(s[1])
step = a
bound = b
numofsock = 1
count = 0
while numofsock < bound:
    numofsock -= 1
    numofsock += step
    count += 1
print(count)
