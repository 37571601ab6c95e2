#!/usr/bin/env python3
"""
Test runner for covqec.
Discovers the unittest suites under tests/ and runs them, optionally
without the classes marked slow (dense SDP runs).
"""

import os
import sys
import unittest
import logging
from typing import Iterator, List, Optional

# Keep solver and stage logs out of the test report
logging.basicConfig(level=logging.CRITICAL)


def _iter_cases(suite: unittest.TestSuite) -> Iterator[unittest.TestCase]:
    for item in suite:
        if isinstance(item, unittest.TestSuite):
            yield from _iter_cases(item)
        else:
            yield item


def is_slow(case: unittest.TestCase) -> bool:
    """True for cases whose class carries the pytest `slow` marker"""
    marks = getattr(type(case), "pytestmark", [])
    if not isinstance(marks, list):
        marks = [marks]
    return any(getattr(mark, "name", None) == "slow" for mark in marks)


def build_suite(pattern: Optional[str] = None, fast: bool = False) -> unittest.TestSuite:
    """
    Discover the suite under tests/

    Args:
        pattern: Optional file pattern, e.g. "test_bound*.py"
        fast: Leave out the slow classes

    Returns:
        unittest.TestSuite: the selected cases
    """
    loader = unittest.TestLoader()
    discovered = loader.discover('tests', pattern=pattern or 'test*.py')
    cases = [case for case in _iter_cases(discovered) if not (fast and is_slow(case))]
    return unittest.TestSuite(cases)


def run_tests(pattern: Optional[str] = None, fast: bool = False) -> bool:
    """
    Run the test suite.

    Args:
        pattern: Optional pattern to filter tests
        fast: Skip the slow classes

    Returns:
        True if all tests passed, False otherwise
    """
    sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))
    os.environ.setdefault("COVQEC_SEED", "0")
    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(build_suite(pattern, fast))
    return result.wasSuccessful()


def list_tests(fast: bool = False) -> List[str]:
    """
    List all available tests without running them.

    Returns:
        List of test case names, slow ones suffixed with [slow]
    """
    names = []
    for case in _iter_cases(unittest.TestLoader().discover('tests')):
        if fast and is_slow(case):
            continue
        names.append(f"{case.id()} [slow]" if is_slow(case) else case.id())
    return sorted(names)


if __name__ == "__main__":
    import argparse

    parser = argparse.ArgumentParser(description='Run covqec tests')
    parser.add_argument('--pattern', '-p', help='Pattern to filter test files')
    parser.add_argument('--list', '-l', action='store_true', help='List available tests')
    parser.add_argument('--fast', '-f', action='store_true', help='Skip the slow SDP classes')
    parser.add_argument('--verbose', '-v', action='store_true', help='Show solver logs')

    args = parser.parse_args()

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    if args.list:
        tests = list_tests(args.fast)
        print(f"Available tests ({len(tests)}):")
        for test in tests:
            print(f"  {test}")
    else:
        scope = " (fast)" if args.fast else ""
        pattern_msg = f" (pattern: {args.pattern})" if args.pattern else ""
        print(f"Running covqec tests{scope}{pattern_msg}...")
        sys.exit(0 if run_tests(args.pattern, args.fast) else 1)
