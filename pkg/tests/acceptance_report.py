"""Collects one pass/fail line per acceptance criterion for the run summary."""

RESULTS = []


def record(number, title, passed, detail):
    line = (f"[criterion {number:2d}] {'PASS' if passed else 'FAIL'}: "
            f"{title} - {detail}")
    RESULTS.append(line)
    print(line)
    return passed
