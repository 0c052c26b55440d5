# Annotated examples: defining and calling functions.

def celsius_to_fahrenheit(celsius):
    """Convert a temperature from Celsius to Fahrenheit."""
    return celsius * 9 / 5 + 32


def describe(temperature, unit="C"):
    # Default parameter value: unit is "C" unless the caller says otherwise.
    return f"{temperature}{unit}"


def min_and_max(values):
    """Return the smallest and largest value as a tuple."""
    smallest = values[0]
    largest = values[0]
    for value in values:
        if value < smallest:
            smallest = value
        if value > largest:
            largest = value
    return smallest, largest


# Calling with positional and keyword arguments.
print(celsius_to_fahrenheit(21))
print(describe(72, unit="F"))

# Tuple return values unpack into separate variables.
low, high = min_and_max([4, -2, 9, 3])
print(low, high)


def apply_discount(price, percent):
    """Return the price after a percentage discount.

    Early return keeps the edge case out of the main path.
    """
    if percent <= 0:
        return price
    return price * (1 - percent / 100)
