"""Binary operators shared by the mini-Java parser and the attribute constraints.

Groups are listed from lowest to highest precedence; every operator is
left-associative.
"""

OPERATORS = [
    ["||"],
    ["&&"],
    ["==", "!="],
    ["<", "<=", ">", ">="],
    ["+", "-"],
    ["*", "/"],
]

OPERATOR_NAMES = [op for group in OPERATORS for op in group]

OPERATOR_PREC = {op: level for level, group in enumerate(OPERATORS) for op in group}

# Longest first, so "<=" wins over "<" and "==" over "=".
SYMBOLS = sorted(
    set(OPERATOR_NAMES) | {"=", "(", ")", "{", "}", ";"},
    key=len,
    reverse=True,
)


def normalize_ws(text):
    return " ".join(text.split())


def join_parts(*parts):
    return " ".join(part for part in parts if part)


def top_level_symbols(text):
    """(index, symbol) pairs for every symbol outside parentheses."""
    found = []
    depth = 0
    i = 0
    while i < len(text):
        symbol = next((s for s in SYMBOLS if text.startswith(s, i)), None)
        if symbol is None:
            i += 1
            continue
        if symbol == "(":
            depth += 1
        elif symbol == ")":
            depth = max(depth - 1, 0)
        elif depth == 0:
            found.append((i, symbol))
        i += len(symbol)
    return found


def split_at_first(text, symbol):
    """Split at the first top-level occurrence of ``symbol``; None if absent."""
    for index, found in top_level_symbols(text):
        if found == symbol:
            return text[:index].strip(), text[index + len(symbol):].strip()
    return None


def split_at_operator(text):
    """Split at the rightmost occurrence of the lowest-precedence top-level operator.

    Returns ``(op, left, right)`` or None when the text has no binary
    operator at top level.
    """
    candidates = [(i, s) for i, s in top_level_symbols(text) if s in OPERATOR_PREC]
    if not candidates:
        return None
    lowest = min(OPERATOR_PREC[s] for _, s in candidates)
    index, op = [c for c in candidates if OPERATOR_PREC[c[1]] == lowest][-1]
    left, right = text[:index].strip(), text[index + len(op):].strip()
    if not left or not right:
        return None
    return op, left, right
