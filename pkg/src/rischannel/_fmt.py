"""Fixed-precision number formatting shared by the CSV writers."""


def num(x, digits=6) -> str:
    v = round(float(x), digits)
    if v == 0.0:
        v = 0.0  # drop the sign of negative zero
    return f"{v:.{digits}f}"


def hz(f) -> str:
    f = float(f)
    return str(int(f)) if f.is_integer() else repr(f)
