N, K = map(int, input().split())
total = 0
for i in range(N):
    total += i % K
print(total)
