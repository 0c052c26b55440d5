# Annotated examples: lists and dictionaries.

# Build a shopping list and total its prices.
prices = {"bread": 2.40, "milk": 1.10, "eggs": 3.20}
basket = ["bread", "eggs", "bread"]

total = 0.0
for item in basket:
    # Dictionary lookup by key; raises KeyError for unknown items.
    total = total + prices[item]
print(f"basket total: {total:.2f}")

# Count how often each item occurs in the basket.
counts = {}
for item in basket:
    # get returns 0 when the key is missing, so the first
    # occurrence starts the count at 1.
    counts[item] = counts.get(item, 0) + 1
print(counts)  # {'bread': 2, 'eggs': 1}

# Keep only items cheaper than 3, using a list comprehension.
cheap = [item for item in prices if prices[item] < 3]

# Remove duplicates from a list while keeping order.
seen = set()
unique_basket = []
for item in basket:
    if item not in seen:
        seen.add(item)
        unique_basket.append(item)

# Unpack dictionary items in a loop.
for item, price in prices.items():
    print(item, "costs", price)
