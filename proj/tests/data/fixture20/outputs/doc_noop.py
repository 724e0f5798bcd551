s = input()
print(sum(ch in "aeiou" for ch in s))
