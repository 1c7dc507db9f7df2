def fmt(x: float) -> str:
    """Nine significant digits, keeping a decimal point on whole numbers."""
    s = f"{float(x):.9g}"
    if s.lstrip("-").isdigit():
        s += ".0"
    return s
